"""Plane-wave superpositions solving the source-free Maxwell equations.

A mode with ``sign = -1`` oscillates as ``exp(i(k.x - w t))`` and one with
``sign = +1`` as ``exp(i(k.x + w t))``, where ``w = c|k|``.  Faraday's law then
fixes the magnetic polarisation to ``-sign * (k x pol) / w``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import (ConfigError, DomainError, PhysicalConstants, PreconditionError,
                   SpacetimeGrid, VectorField3)

TRANSVERSE_TOL = 1e-12


@dataclass(frozen=True)
class PlaneWaveMode:
    """One plane-wave term ``amplitude * pol * exp(i(k.x + sign*w*t))``.

    ``maxwell=True`` marks a transverse mode usable as a Maxwell field; the
    transversality is then enforced.  Wave-only modes accept any polarisation.
    """

    k: np.ndarray
    pol: np.ndarray
    sign: int = -1
    amplitude: complex = 1.0
    maxwell: bool = True

    def __post_init__(self) -> None:
        k = np.array(self.k, dtype=float).reshape(3)
        pol = np.array(self.pol, dtype=complex).reshape(3)
        k.flags.writeable = False
        pol.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "pol", pol)
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if self.sign not in (-1, 1):
            raise PreconditionError(f"sign must be -1 or +1, got {self.sign!r}")
        if not np.all(np.isfinite(k)) or not np.all(np.isfinite(pol)) \
                or not np.isfinite(self.amplitude):
            raise PreconditionError("mode data must be finite")
        if not np.any(k):
            raise DomainError("wavevector must be nonzero")
        if self.maxwell and not self.is_transverse():
            raise PreconditionError("Maxwell mode polarisation must be transverse to k")

    def is_transverse(self, tol: float = TRANSVERSE_TOL) -> bool:
        scale = np.linalg.norm(self.k) * max(np.linalg.norm(self.pol), 1e-300)
        return abs(np.dot(self.pol, self.k)) <= tol * scale

    def omega(self, consts: PhysicalConstants) -> float:
        return consts.c * float(np.linalg.norm(self.k))

    def to_json(self) -> dict:
        return {"k": [float(v) for v in self.k],
                "pol_re": [float(v) for v in self.pol.real],
                "pol_im": [float(v) for v in self.pol.imag],
                "sign": int(self.sign),
                "amp_re": self.amplitude.real, "amp_im": self.amplitude.imag}

    @classmethod
    def from_json(cls, d: dict) -> "PlaneWaveMode":
        keys = {"k", "pol_re", "pol_im", "sign", "amp_re", "amp_im"}
        if set(d) != keys:
            raise ConfigError(f"mode record must have exactly the keys {sorted(keys)}")
        pol = np.array(d["pol_re"], dtype=float) + 1j * np.array(d["pol_im"], dtype=float)
        probe = cls(d["k"], pol, int(d["sign"]), complex(d["amp_re"], d["amp_im"]),
                    maxwell=False)
        return replace(probe, maxwell=probe.is_transverse())


def save_modes(path: str | Path, modes: Iterable[PlaneWaveMode]) -> None:
    Path(path).write_text(json.dumps([m.to_json() for m in modes], indent=1) + "\n")


def load_modes(path: str | Path) -> list[PlaneWaveMode]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise ConfigError("mode file must contain a JSON array")
    return [PlaneWaveMode.from_json(d) for d in data]


def _synthesize(modes: Sequence[PlaneWaveMode], grid: SpacetimeGrid,
                consts: PhysicalConstants) -> np.ndarray:
    if not modes:
        raise PreconditionError("mode list is empty; pass a zero-amplitude mode for a zero field")
    t = grid.times()[:, None, None, None]
    x, y, z = (a[None] for a in grid.mesh())
    out = np.zeros((3, *grid.shape), dtype=complex)
    for m in modes:
        phase = np.exp(1j * (m.k[0] * x + m.k[1] * y + m.k[2] * z + m.sign * m.omega(consts) * t))
        out += (m.amplitude * m.pol)[:, None, None, None, None] * phase[None]
    return out


def synthesize_E(modes: Sequence[PlaneWaveMode], grid: SpacetimeGrid,
                 consts: PhysicalConstants) -> VectorField3:
    """Sample the superposition of ``modes`` on ``grid``."""
    return VectorField3(grid, _synthesize(modes, grid, consts))


def induced_B(mode: PlaneWaveMode, consts: PhysicalConstants) -> PlaneWaveMode:
    """Magnetic partner of a transverse electric mode."""
    if not mode.is_transverse():
        raise PreconditionError("induced_B requires a transverse (Maxwell) mode")
    pol_B = -mode.sign * np.cross(mode.k, mode.pol) / mode.omega(consts)
    return PlaneWaveMode(mode.k, pol_B, mode.sign, mode.amplitude, maxwell=True)


def synthesize_fields(modes: Sequence[PlaneWaveMode], grid: SpacetimeGrid,
                      consts: PhysicalConstants) -> tuple[VectorField3, VectorField3]:
    """Electric field of ``modes`` and the induced magnetic field."""
    return (synthesize_E(modes, grid, consts),
            synthesize_E([induced_B(m, consts) for m in modes], grid, consts))


def split_transverse(modes: Sequence[PlaneWaveMode]
                     ) -> tuple[list[PlaneWaveMode], list[PlaneWaveMode]]:
    """Split each polarisation into parts perpendicular and parallel to ``k``."""
    transverse, longitudinal = [], []
    for m in modes:
        k = m.k
        par = np.dot(m.pol, k) / np.dot(k, k) * k
        perp = m.pol - par
        # the projection is orthogonal up to roundoff; remove the residue
        perp = perp - np.dot(perp, k) / np.dot(k, k) * k
        transverse.append(PlaneWaveMode(k, perp, m.sign, m.amplitude, maxwell=True))
        longitudinal.append(PlaneWaveMode(k, par, m.sign, m.amplitude, maxwell=False))
    return transverse, longitudinal


def conjugate_partner(mode: PlaneWaveMode) -> PlaneWaveMode:
    """Mode whose sum with ``mode`` is real: ``(-k, conj pol, -sign, conj amplitude)``."""
    return PlaneWaveMode(-mode.k, np.conj(mode.pol), -mode.sign, np.conj(mode.amplitude),
                         maxwell=mode.maxwell)


def real_superposition(modes: Sequence[PlaneWaveMode]) -> list[PlaneWaveMode]:
    """Append conjugate partners so the synthesized field is real."""
    return [*modes, *(conjugate_partner(m) for m in modes)]

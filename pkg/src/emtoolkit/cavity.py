"""Spherical-cavity eigenmodes, fundamental fields and their energy spectrum.

Mode functions on the ball ``|x| <= r0``::

    gamma_{l,m,k} = Y_{l,m} * tau_{l,k},   tau_{l,k}(r) = k sqrt(2/pi) j_l(k r)
    delta_{l,m,k} = gamma_{l,m,k} / c_{l,k}

with ``k r0`` a zero of ``j_l``, so the deltas are orthonormal on the ball.

A fundamental solution is supported on one ``(l0, k0)``.  Its current is
``J = sum_m gamma_m (U_m e^{-iwt} + V_m e^{iwt})`` with
``U_m = alpha A i^l0 conj(W_m)``, ``V_m = beta A i^l0 conj(W_m)``,
``A = sqrt(2/pi) k0^2 / (4 pi)`` and ``w = c k0``; the electric field solves
``dE/dt = -J / eps0``.  ``W`` are the spherical-harmonic coefficients of the
unit direction vector.  They vanish unless ``l = 1``, so the parametric
reading :func:`parametric_w` exists for other ``l0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import (ConfigError, DomainError, PhysicalConstants, PreconditionError, ScalarField,
                   SpacetimeGrid, VectorField3)
from .fields import laplacian
from .quadrature import BallRule, ball_rule, sphere_rule
from .specfun import (ModeIndex, ZeroTable, bessel_J_half, bessel_poly_P, bessel_poly_Q,
                      bessel_zeros, norm_constant, spherical_bessel_j, spherical_bessel_jp,
                      spherical_harmonic, spherical_harmonic_dtheta)

ZERO_TOL = 1e-10
W_ROUNDOFF = 1e-12


# ---------------------------------------------------------------------------
# coordinates and mode functions

def to_spherical(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(r, theta, phi)`` of Cartesian points with shape ``(..., 3)``."""
    p = np.asarray(points, float)
    r = np.linalg.norm(p, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_t = np.where(r > 0, p[..., 2] / np.where(r > 0, r, 1.0), 1.0)
    theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
    phi = np.arctan2(p[..., 1], p[..., 0])
    return r, theta, phi


def _j(l: int, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, float)
    out = np.full(s.shape, 1.0 if l == 0 else 0.0)
    pos = s > 0
    if pos.any():
        out[pos] = spherical_bessel_j(l, s[pos])
    return out


def _tau(l: int, k: float, r) -> np.ndarray:
    return k * math.sqrt(2.0 / math.pi) * _j(l, k * np.asarray(r, float))


def mode_gamma(mode: ModeIndex, r, theta, phi):
    """``Y_{l,m}(theta, phi) * tau_{l,k}(r)``; ``r = 0`` uses the regular limit."""
    r = np.asarray(r, float)
    if np.any(r < 0):
        raise DomainError("r must be non-negative")
    return spherical_harmonic(mode.l, mode.m, theta, phi) * _tau(mode.l, mode.k, r)


def mode_delta(mode: ModeIndex, r, theta, phi, r0: float):
    """Normalised cavity mode ``gamma / c_{l,k}``; ``k r0`` must be a zero of ``j_l``."""
    return mode_gamma(mode, r, theta, phi) / norm_constant(mode.l, mode.k, r0)


def mode_gamma_gradient(mode: ModeIndex, points: np.ndarray) -> np.ndarray:
    """Cartesian gradient of ``gamma`` at points with ``r > 0`` off the polar axis.

    Returns shape ``(3, N)``.
    """
    r, th, ph = to_spherical(points)
    if np.any(r <= 0) or np.any(np.sin(th) <= 0):
        raise DomainError("gradient evaluation needs r > 0 and 0 < theta < pi")
    l, m, k = mode.l, mode.m, mode.k
    Y = spherical_harmonic(l, m, th, ph)
    dY = spherical_harmonic_dtheta(l, m, th, ph)
    tau_r = k * math.sqrt(2.0 / math.pi) * spherical_bessel_j(l, k * r)
    dtau = k * k * math.sqrt(2.0 / math.pi) * spherical_bessel_jp(l, k * r)
    st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
    g_r = dtau * Y
    g_t = tau_r / r * dY
    g_p = tau_r / r * 1j * m * Y / st
    return np.stack([
        g_r * st * cp + g_t * ct * cp - g_p * sp,
        g_r * st * sp + g_t * ct * sp + g_p * cp,
        g_r * ct - g_t * st,
    ])


@dataclass(frozen=True)
class EigenCheck:
    abs_residual: float
    rel_residual: float


def laplacian_eigen_check(mode: ModeIndex, grid: SpacetimeGrid, scale: complex = 1.0,
                          center=(0.0, 0.0, 0.0)) -> EigenCheck:
    """Stencil residual of ``laplacian(gamma) + k^2 gamma`` on a Cartesian sample.

    Boundary nodes and nodes within ``2h`` of ``center`` are excluded.  The
    relative residual divides by ``max|k^2 gamma|`` over the same nodes.
    """
    spatial = SpacetimeGrid(grid.origin, grid.n, grid.h)
    pts = spatial.points() - np.asarray(center, float)
    r, th, ph = to_spherical(pts)
    gamma = (scale * mode_gamma(mode, r, th, ph)).reshape(spatial.shape)
    lap = laplacian(ScalarField(spatial, gamma)).values
    resid = np.abs(lap + mode.k**2 * gamma)[0]
    ref = np.abs(mode.k**2 * gamma)[0]
    keep = np.zeros(spatial.n, dtype=bool)
    keep[1:-1, 1:-1, 1:-1] = True
    keep &= r.reshape(spatial.n) > 2.0 * grid.h
    if not keep.any():
        raise PreconditionError("no interior nodes outside the exclusion ball")
    peak = float(ref[keep].max())
    worst = float(resid[keep].max())
    return EigenCheck(worst, worst / peak if peak > 0 else math.inf)


# ---------------------------------------------------------------------------
# direction-vector coefficients

@dataclass(frozen=True)
class WCoefficients:
    """Spherical-harmonic coefficients ``W(l, m)`` of the unit direction vector."""

    l_max: int
    W: Mapping[tuple[int, int], np.ndarray]
    parametric: bool = False

    def get(self, l: int, m: int) -> np.ndarray:
        return self.W.get((l, m), np.zeros(3, dtype=complex))

    def beta(self, l: int) -> float:
        return float(sum(np.sum(np.abs(self.get(l, m)) ** 2) for m in range(-l, l + 1)))

    @property
    def betas(self) -> dict[int, float]:
        return {l: self.beta(l) for l in range(self.l_max + 1)}

    def total(self) -> float:
        return float(sum(np.sum(np.abs(v) ** 2) for v in self.W.values()))


def w_coefficients(l_max: int, n_theta: int = 64, n_phi: int = 128) -> WCoefficients:
    """``W(l, m) = integral over the unit sphere of n * conj(Y_{l,m})``."""
    if l_max < 1:
        raise ConfigError(f"l_max must be at least 1, got {l_max}")
    if n_theta < l_max + 2 or n_phi < 2 * l_max + 4:
        raise ConfigError(
            f"quadrature ({n_theta}, {n_phi}) too coarse for l_max={l_max}; need "
            f"n_theta >= {l_max + 2} and n_phi >= {2 * l_max + 4}")
    rule = sphere_rule(n_theta, n_phi)
    dirs = rule.directions
    W = {}
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            Y = spherical_harmonic(l, m, rule.theta, rule.phi)
            w = dirs @ (np.conj(Y) * rule.weights)
            # entries at quadrature roundoff are exact zeros
            w.real[np.abs(w.real) < W_ROUNDOFF] = 0.0
            w.imag[np.abs(w.imag) < W_ROUNDOFF] = 0.0
            W[(l, m)] = w
    return WCoefficients(l_max, W)


def parametric_w(l0: int, beta: float, direction=(0.0, 0.0, 1.0)) -> WCoefficients:
    """Coefficients with ``beta_{l0} = beta`` carried by ``m = 0`` alone.

    The phase ``i^(l0 - 1)`` makes the assembled fundamental field real.
    """
    if not beta > 0:
        raise PreconditionError(f"parametric beta must be positive, got {beta!r}")
    e = np.asarray(direction, float)
    e = e / np.linalg.norm(e)
    return WCoefficients(l0, {(l0, 0): math.sqrt(beta) * e * (1j) ** (l0 - 1)}, parametric=True)


# ---------------------------------------------------------------------------
# configuration and amplitudes

@dataclass(frozen=True)
class CavityConfig:
    r0: float
    consts: PhysicalConstants
    l_max: int = 3
    zeros_per_l: int = 10
    tables: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.r0 > 0:
            raise PreconditionError(f"r0 must be positive, got {self.r0!r}")
        if self.l_max < 0 or self.zeros_per_l < 1:
            raise PreconditionError("need l_max >= 0 and zeros_per_l >= 1")
        object.__setattr__(self, "tables", {
            l: bessel_zeros(l, self.r0, self.zeros_per_l) for l in range(self.l_max + 1)})

    def k(self, l: int, n: int) -> float:
        return self.tables[l][n]


def _require_cavity_key(l0: int, k0: float, r0: float) -> None:
    if l0 < 0 or not k0 > 0:
        raise DomainError(f"invalid mode key (l0={l0}, k0={k0})")
    val = abs(spherical_bessel_j(l0, k0 * r0))
    if val >= ZERO_TOL:
        raise PreconditionError(f"k0*r0 = {k0 * r0!r} is not a zero of j_{l0} (|j| = {val:.2e})")


@dataclass(frozen=True)
class ModeAmplitudes:
    """Spectral amplitudes ``(alpha, beta)`` keyed by ``(l0, k0)``."""

    r0: float
    consts: PhysicalConstants
    entries: Mapping[tuple[int, float], tuple[complex, complex]]

    def __post_init__(self) -> None:
        clean = {}
        for (l0, k0), (a, b) in self.entries.items():
            _require_cavity_key(int(l0), float(k0), self.r0)
            clean[(int(l0), float(k0))] = (complex(a), complex(b))
        object.__setattr__(self, "entries", clean)

    def f(self, key) -> complex:
        return self.entries[key][0] * key[1] / self.consts.c

    def g(self, key) -> complex:
        return -self.entries[key][1] * key[1] / self.consts.c

    def single(self) -> tuple[tuple[int, float], complex, complex]:
        if len(self.entries) != 1:
            raise PreconditionError(
                f"expected a single (l0, k0) entry, found {len(self.entries)}; "
                "aggregate multi-mode spectra with energy_spectrum")
        (key, (a, b)), = self.entries.items()
        return key, a, b


def amplitude_relations(f: complex, g: complex, k: float, consts: PhysicalConstants
                        ) -> tuple[complex, complex]:
    """Scales of ``F = F_scale k/|k|`` and ``G = G_scale k/|k|`` from ``(f, g)``."""
    if not k > 0:
        raise DomainError("k must be positive")
    return consts.c * f, -consts.c * g


def amplitude_relations_inverse(F_scale: complex, G_scale: complex, k: float,
                                consts: PhysicalConstants) -> tuple[complex, complex]:
    if not k > 0:
        raise DomainError("k must be positive")
    return F_scale / consts.c, -G_scale / consts.c


def coefficient_vectors(f: complex, g: complex, k_vec, consts: PhysicalConstants
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Vector amplitudes ``F = c f k/|k|`` and ``G = -c g k/|k|``."""
    k_vec = np.asarray(k_vec, float)
    kn = float(np.linalg.norm(k_vec))
    if kn == 0:
        raise DomainError("wavevector must be nonzero")
    return consts.c * f * k_vec / kn, -consts.c * g * k_vec / kn


def project_coefficients(F, G, k_vec, consts: PhysicalConstants) -> tuple[complex, complex]:
    """``f = (k . F)/(c|k|)``, ``g = -(k . G)/(c|k|)``."""
    k_vec = np.asarray(k_vec, float)
    kn = float(np.linalg.norm(k_vec))
    if kn == 0:
        raise DomainError("wavevector must be nonzero")
    return (complex(np.dot(k_vec, F)) / (consts.c * kn),
            -complex(np.dot(k_vec, G)) / (consts.c * kn))


# ---------------------------------------------------------------------------
# charge

def ball_fourier_integral(k: float, r0: float) -> float:
    """Integral of ``exp(i k.x)`` over the ball of radius ``r0`` (``|k| = k``)."""
    if not (k > 0 and r0 > 0):
        raise DomainError("k and r0 must be positive")
    s = k * r0
    if s < 1e-3:
        return 4.0 * math.pi / 3.0 * r0**3 * (1.0 - s * s / 10.0 + s**4 / 280.0)
    return (2.0 * math.pi * r0 / k) ** 1.5 * float(bessel_J_half(1, s))


def _charge_factor(k0: float, r0: float, consts: PhysicalConstants) -> float:
    # Q = (alpha - beta) * factor
    return (2.0 * math.pi * r0) ** 1.5 / consts.c * 4.0 * math.pi * k0**1.5 \
        * float(bessel_J_half(1, k0 * r0))


@dataclass(frozen=True)
class ChargeResult:
    """Total charge of a fundamental solution and its initial rate of change.

    ``stationary`` is False when ``alpha != -beta``; then ``rate`` is nonzero
    (unless ``J_{3/2}(k0 r0) = 0``).
    """

    Q: complex
    rate: complex
    stationary: bool

    def require_stationary(self) -> "ChargeResult":
        if not self.stationary:
            raise PreconditionError(f"charge is not stationary: dQ/dt(0) = {self.rate!r}")
        return self


def charge_Q(amps: ModeAmplitudes, r0: Optional[float] = None,
             consts: Optional[PhysicalConstants] = None) -> ChargeResult:
    r0 = amps.r0 if r0 is None else r0
    consts = consts or amps.consts
    (l0, k0), a, b = amps.single()
    factor = _charge_factor(k0, r0, consts)
    Q = (a - b) * factor
    # d/dt of the plane-wave density at t = 0 carries -i w (alpha + beta)
    rate = -1j * consts.c * k0 * (a + b) * factor
    stationary = abs(a + b) <= 1e-12 * max(abs(a), abs(b), 1e-300)
    return ChargeResult(Q, rate, stationary)


def alpha_from_Q(Q: float, l0: int, k0: float, r0: float, consts: PhysicalConstants
                 ) -> tuple[float, float, float, float]:
    """Stationary amplitudes ``(alpha, beta, f, g)`` of charge ``Q``."""
    _require_cavity_key(l0, k0, r0)
    J32 = float(bessel_J_half(1, k0 * r0))
    if abs(J32) < 1e-10:
        raise PreconditionError(
            f"J_3/2(k0 r0) = {J32:.2e} vanishes (l0 = {l0} lattice): the charge does not "
            "determine alpha")
    alpha = Q * consts.c / (8.0 * math.pi * (2.0 * math.pi * r0) ** 1.5 * k0**1.5 * J32)
    beta = -alpha
    f = alpha * k0 / consts.c
    return alpha, beta, f, -beta * k0 / consts.c


# ---------------------------------------------------------------------------
# fundamental solutions

def _w_for(l0: int, W: Optional[WCoefficients]) -> WCoefficients:
    return W if W is not None else w_coefficients(max(l0, 1))


@dataclass(frozen=True)
class FundamentalMode:
    """Field, current and charge density of one fundamental solution."""

    l0: int
    k0: float
    r0: float
    alpha: complex
    beta: complex
    W: WCoefficients
    consts: PhysicalConstants

    def __post_init__(self) -> None:
        _require_cavity_key(self.l0, self.k0, self.r0)

    @classmethod
    def from_charge(cls, Q: float, l0: int, k0: float, r0: float, consts: PhysicalConstants,
                    W: Optional[WCoefficients] = None) -> "FundamentalMode":
        a, b, _, _ = alpha_from_Q(Q, l0, k0, r0, consts)
        return cls(l0, k0, r0, a, b, _w_for(l0, W), consts)

    @property
    def omega(self) -> float:
        return self.consts.c * self.k0

    @property
    def norm_constant(self) -> float:
        return norm_constant(self.l0, self.k0, self.r0)

    def _A(self) -> float:
        return math.sqrt(2.0 / math.pi) * self.k0**2 / (4.0 * math.pi)

    def UV(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        base = self._A() * (1j) ** self.l0 * np.conj(self.W.get(self.l0, m))
        return self.alpha * base, self.beta * base

    def _ms(self):
        return [m for m in range(-self.l0, self.l0 + 1) if np.any(self.W.get(self.l0, m))]

    def _gammas(self, points: np.ndarray):
        r, th, ph = to_spherical(points)
        return {m: mode_gamma(ModeIndex(self.l0, m, self.k0), r, th, ph) for m in self._ms()}

    def current(self, points: np.ndarray, times) -> np.ndarray:
        """``J`` with shape ``(3, nt, N)``."""
        times = np.atleast_1d(np.asarray(times, float))
        ep, em = np.exp(-1j * self.omega * times), np.exp(1j * self.omega * times)
        out = np.zeros((3, times.size, len(points)), dtype=complex)
        for m, g in self._gammas(points).items():
            U, V = self.UV(m)
            coef = U[:, None] * ep[None] + V[:, None] * em[None]
            out += coef[:, :, None] * g[None, None, :]
        return out

    def electric(self, points: np.ndarray, times) -> np.ndarray:
        """``E`` with shape ``(3, nt, N)``; zero outside the ball."""
        points = np.atleast_2d(np.asarray(points, float))
        times = np.atleast_1d(np.asarray(times, float))
        w = self.omega
        ep, em = np.exp(-1j * w * times), np.exp(1j * w * times)
        out = np.zeros((3, times.size, len(points)), dtype=complex)
        for m, g in self._gammas(points).items():
            U, V = self.UV(m)
            # integrate dE/dt = -J/eps0 with no static part
            coef = -(U[:, None] * ep[None] / (-1j * w) + V[:, None] * em[None] / (1j * w)) \
                / self.consts.epsilon0
            out += coef[:, :, None] * g[None, None, :]
        inside = np.linalg.norm(points, axis=1) <= self.r0 * (1 + 1e-12)
        return out * inside

    def div_current(self, points: np.ndarray, times) -> np.ndarray:
        """``div J`` with shape ``(nt, N)`` (points off the polar axis, ``r > 0``)."""
        times = np.atleast_1d(np.asarray(times, float))
        ep, em = np.exp(-1j * self.omega * times), np.exp(1j * self.omega * times)
        out = np.zeros((times.size, len(points)), dtype=complex)
        for m in self._ms():
            grad = mode_gamma_gradient(ModeIndex(self.l0, m, self.k0), points)
            U, V = self.UV(m)
            out += np.outer(ep, U @ grad) + np.outer(em, V @ grad)
        return out

    def initial_density(self, points: np.ndarray) -> np.ndarray:
        """Plane-wave density at ``t = 0``: ``(alpha - beta) (k0/c) 4 pi k0^2 j_0(k0 r)``."""
        r = np.linalg.norm(np.atleast_2d(points), axis=1)
        return (self.alpha - self.beta) * self.k0 / self.consts.c * 4.0 * math.pi \
            * self.k0**2 * _j(0, self.k0 * r)

    def density(self, points: np.ndarray, times) -> np.ndarray:
        """Charge density continued from ``initial_density`` by the continuity equation."""
        times = np.atleast_1d(np.asarray(times, float))
        w = self.omega
        # integral_0^t of e^{-iwt'} and e^{iwt'}
        ip = (np.exp(-1j * w * times) - 1.0) / (-1j * w)
        im = (np.exp(1j * w * times) - 1.0) / (1j * w)
        out = np.tile(self.initial_density(points).astype(complex), (times.size, 1))
        for m in self._ms():
            grad = mode_gamma_gradient(ModeIndex(self.l0, m, self.k0), points)
            U, V = self.UV(m)
            out -= np.outer(ip, U @ grad) + np.outer(im, V @ grad)
        return out

    def energy(self, t) -> np.ndarray:
        """Closed-form electric energy in the ball at times ``t``."""
        t = np.asarray(t, float)
        a, b = self.alpha, self.beta
        c_lk = self.norm_constant
        pref = c_lk**2 * self._A() ** 2 * self.W.beta(self.l0) \
            / (2.0 * self.consts.epsilon0 * (self.consts.c * self.k0) ** 2)
        osc = abs(a) ** 2 + abs(b) ** 2 - 2.0 * np.real(a * np.conj(b) * np.exp(-2j * self.omega * t))
        return pref * osc


def synthesize_fundamental_E(Q: float, l0: int, k0: float, r0: float, consts: PhysicalConstants,
                             grid, W: Optional[WCoefficients] = None, times=(0.0,)):
    """Electric field of the fundamental solution carrying charge ``Q``.

    ``grid`` is a :class:`BallRule` (returns an array ``(3, nt, N)`` at
    ``times``) or a :class:`SpacetimeGrid` (returns a VectorField3, zero
    outside the ball, at the grid's times).
    """
    mode = FundamentalMode.from_charge(Q, l0, k0, r0, consts, W)
    if isinstance(grid, SpacetimeGrid):
        vals = mode.electric(grid.points(), grid.times())
        return VectorField3(grid, vals.reshape(3, *grid.shape))
    return mode.electric(grid.points, times)


def field_energy(E_values: np.ndarray, rule: BallRule, consts: PhysicalConstants) -> np.ndarray:
    """``(eps0/2) * integral |E|^2`` over the ball for each time level."""
    dens = np.sum(np.abs(E_values) ** 2, axis=0)
    return 0.5 * consts.epsilon0 * rule.integrate(dens)


# energy constant: Q^2 beta / (8192 pi^8 eps0 r0) * J^2_{l0+3/2} / J^2_{3/2}
ENERGY_DENOMINATOR = 8192.0


def _energy_scale(Q: float, l0: int, k0: float, r0: float, consts: PhysicalConstants,
                  W: WCoefficients) -> float:
    alpha_from_Q(Q, l0, k0, r0, consts)  # preconditions
    ratio = (float(bessel_J_half(l0 + 1, k0 * r0)) / float(bessel_J_half(1, k0 * r0))) ** 2
    return Q * Q * W.beta(l0) / (ENERGY_DENOMINATOR * math.pi**8 * consts.epsilon0 * r0) * ratio


def energy_instant(Q: float, l0: int, k0: float, r0: float, t, consts: PhysicalConstants,
                   W: Optional[WCoefficients] = None):
    """Electric energy of the fundamental solution at time ``t``."""
    W = _w_for(l0, W)
    out = _energy_scale(Q, l0, k0, r0, consts, W) * (1.0 + np.cos(2.0 * consts.c * k0 * np.asarray(t, float)))
    return float(out) if np.ndim(out) == 0 else out


def energy_mean(Q: float, l0: int, k0: float, r0: float, consts: PhysicalConstants,
                W: Optional[WCoefficients] = None) -> float:
    """Cycle average of :func:`energy_instant`."""
    return _energy_scale(Q, l0, k0, r0, consts, _w_for(l0, W))


# ---------------------------------------------------------------------------
# spectra

@dataclass(frozen=True)
class SpectrumRow:
    l0: int
    n: int
    m: int
    k0: float
    mean_energy: float
    beta_reading: str
    beta: float


@dataclass(frozen=True)
class EnergySpectrum:
    Q: float
    rows: tuple[SpectrumRow, ...]


def energy_spectrum(Q: float, l0_set: Iterable[int], r0: float, consts: PhysicalConstants,
                    n_values: Sequence[int], param_beta: Optional[float] = None,
                    W: Optional[WCoefficients] = None) -> EnergySpectrum:
    """Cycle-mean energies for each ``l0`` and zero index ``n``.

    Every ``l0`` gets rows with the computed coefficients; when ``param_beta``
    is given, ``l0 != 1`` also gets rows with that external value.
    """
    l0_set = sorted(set(l0_set))
    W = W or w_coefficients(max(max(l0_set), 1))
    rows = []
    nmax = max(n_values)
    for l0 in l0_set:
        table = bessel_zeros(l0, r0, nmax)
        readings = [("computed", W)]
        if param_beta is not None and l0 != 1:
            readings.append(("parametric", parametric_w(l0, param_beta)))
        for label, w in readings:
            for n in sorted(n_values):
                k0 = table[n]
                rows.append(SpectrumRow(l0, n, 2 * n + l0, k0,
                                        energy_mean(Q, l0, k0, r0, consts, w), label,
                                        w.beta(l0)))
    rows.sort(key=lambda r: (r.l0, r.beta_reading, r.k0))
    return EnergySpectrum(Q, tuple(rows))


@dataclass(frozen=True)
class BalmerRow:
    n: int
    m: int
    k0: float
    mean_energy: float
    difference: float          # <U>(n_ref) - <U>(n)
    model_difference: float    # 1/(m_ref^2 - m^2) asymptote
    ratio: float               # difference / next difference
    model_ratio: float
    inverse_square_ratio: float
    rel_deviation: float       # |ratio / model_ratio - 1|


@dataclass(frozen=True)
class BalmerTable:
    l0: int
    n_ref: int
    m_ref: int
    rows: tuple[BalmerRow, ...]

    def max_rel_deviation(self) -> float:
        """Worst deviation over rows with a ratio; NaN propagates (0/0 ratios fail)."""
        vals = [r.rel_deviation for r in self.rows if r is not self.rows[-1]]
        if not vals:
            return math.nan
        return math.nan if any(math.isnan(v) for v in vals) else max(vals)


def _poly_coeff(coeffs: tuple[int, ...], j: int) -> int:
    return coeffs[j] if j < len(coeffs) else 0


def balmer_model_coefficient(l0: int) -> float:
    """``2 a0 a2 / b^2`` of the large-``k`` expansion of ``J^2_{l0+3/2}/J^2_{3/2}``.

    Even ``l0`` uses the ``Q_{l0}`` coefficients over ``Q_0``, odd ``l0`` the
    ``P_{l0+1}`` coefficients over ``P_1``.
    """
    if l0 % 2 == 0:
        q = bessel_poly_Q(l0)
        return 2.0 * _poly_coeff(q, 0) * _poly_coeff(q, 2) / _poly_coeff(bessel_poly_Q(0), 0) ** 2
    p = bessel_poly_P(l0 + 1)
    return 2.0 * _poly_coeff(p, 1) * _poly_coeff(p, 3) / _poly_coeff(bessel_poly_P(1), 1) ** 2


def balmer_differences(Q: float, l0: int, r0: float, consts: PhysicalConstants,
                       W: Optional[WCoefficients], zero_indices: Sequence[int],
                       threshold: int = 20) -> BalmerTable:
    """Energy differences against the first index, with the asymptotic model.

    The model difference is ``scale * coeff / (r0^2 (k_ref^2 - k^2))`` with
    ``k = pi m / (2 r0)``, ``m = 2n + l0``; ``scale`` is the energy prefactor
    without the Bessel ratio.  Ratios compare consecutive differences, so the
    prefactor cancels; the inverse-square column uses
    ``(1/m_ref^2 - 1/m^2)`` instead.
    """
    idx = list(zero_indices)
    if len(idx) < 3:
        raise PreconditionError("need at least three zero indices")
    if min(idx) < threshold:
        raise PreconditionError(f"zero indices must be >= {threshold} for the asymptotic regime")
    W = _w_for(l0, W)
    table = bessel_zeros(l0, r0, max(idx))
    energies = [energy_mean(Q, l0, table[n], r0, consts, W) for n in idx]
    scale = Q * Q * W.beta(l0) / (ENERGY_DENOMINATOR * math.pi**8 * consts.epsilon0 * r0)
    coeff = balmer_model_coefficient(l0)
    ms = [2 * n + l0 for n in idx]
    kk = [math.pi * m / (2.0 * r0) for m in ms]
    diffs = [energies[0] - e for e in energies]
    model = [0.0] + [scale * coeff / (r0 * r0 * (kk[0] ** 2 - k * k)) if k != kk[0] else math.nan
                     for k in kk[1:]]

    def ratio(a, b):
        return a / b if b != 0 else math.nan

    rows = []
    for i in range(1, len(idx)):
        nxt = i + 1 if i + 1 < len(idx) else None
        if nxt is None:
            r = mr = isr = math.nan
        else:
            r = ratio(diffs[i], diffs[nxt])
            mr = ratio(ms[0] ** 2 - ms[nxt] ** 2, ms[0] ** 2 - ms[i] ** 2)
            isr = ratio(1 / ms[0] ** 2 - 1 / ms[i] ** 2, 1 / ms[0] ** 2 - 1 / ms[nxt] ** 2)
        dev = abs(r / mr - 1.0) if nxt is not None else math.nan
        rows.append(BalmerRow(idx[i], ms[i], table[idx[i]], energies[i], diffs[i], model[i],
                              r, mr, isr, dev))
    return BalmerTable(l0, idx[0], ms[0], tuple(rows))


# ---------------------------------------------------------------------------
# basis projection

def basis_projection_errors(f: Callable[[np.ndarray], np.ndarray], r0: float, l_max: int,
                            n_list: Sequence[int], rule: Optional[BallRule] = None
                            ) -> list[float]:
    """L2 error of projecting ``f`` onto the first ``N`` radial modes per ``(l, m)``.

    ``f`` maps Cartesian points ``(M, 3)`` to values.  One error per ``N``.
    """
    rule = rule or ball_rule(r0, 48, 24, 48)
    pts = rule.points
    fv = np.asarray(f(pts), dtype=complex)
    r, th, ph = rule.r, rule.theta, rule.phi
    nmax = max(n_list)
    errors = []
    contributions = {}
    for l in range(l_max + 1):
        table = bessel_zeros(l, r0, nmax)
        for m in range(-l, l + 1):
            Y = spherical_harmonic(l, m, th, ph)
            for n in range(1, nmax + 1):
                k = table[n]
                d = Y * _tau(l, k, r) / norm_constant(l, k, r0)
                coef = rule.integrate(fv * np.conj(d))
                contributions[(l, m, n)] = coef * d
    for N in n_list:
        approx = sum(v for (l, m, n), v in contributions.items() if n <= N)
        errors.append(float(np.sqrt(rule.integrate(np.abs(fv - approx) ** 2).real)))
    return errors

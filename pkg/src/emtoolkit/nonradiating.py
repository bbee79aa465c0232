"""Curl-free wave sources and Lorentz-boost checks.

A charge density that solves the homogeneous wave equation, released from rest,
together with ``J = -(1/(eps0 mu0)) * integral_0^t grad(rho) ds`` gives a source
pair with ``curl J = 0`` and ``grad(rho)/eps0 + mu0 dJ/dt = 0``.  The boost helpers
transform such pairs (and fields) component-wise at fixed event labels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import RegularGridInterpolator

from .core import (PhysicalConstants, PreconditionError, ScalarField, ShapeError,
                   SpacetimeGrid, VectorField3, check_same_grid)
from .fields import curl_array, d_axis, grad, max_norm


# ---------------------------------------------------------------------------
# boosts

@dataclass(frozen=True)
class BoostParams:
    """Velocity of the moving frame; ``gamma`` is derived."""

    v: np.ndarray
    consts: PhysicalConstants

    def __post_init__(self) -> None:
        v = np.array(self.v, dtype=float).reshape(3)
        v.flags.writeable = False
        object.__setattr__(self, "v", v)
        speed = float(np.linalg.norm(v))
        if not np.all(np.isfinite(v)) or speed >= self.consts.c:
            raise PreconditionError(f"boost speed {speed!r} must be below c = {self.consts.c!r}")

    @classmethod
    def from_beta(cls, beta, consts: PhysicalConstants) -> "BoostParams":
        """Build from a velocity given as a fraction of ``c``."""
        return cls(np.asarray(beta, dtype=float) * consts.c, consts)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v))

    @property
    def gamma(self) -> float:
        beta = self.speed / self.consts.c
        return 1.0 / math.sqrt((1.0 - beta) * (1.0 + beta))

    @property
    def direction(self) -> np.ndarray:
        s = self.speed
        return self.v / s if s > 0 else np.zeros(3)


def _vec(x):
    return x.values if isinstance(x, VectorField3) else np.asarray(x)


def _sca(x):
    return x.values if isinstance(x, ScalarField) else np.asarray(x)


def _split(vec: np.ndarray, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Parallel and perpendicular parts of a component-first vector array."""
    along = np.tensordot(n, vec, axes=(0, 0))
    par = n.reshape(3, *([1] * (vec.ndim - 1))) * along
    return par, vec - par


def _bcast(v: np.ndarray, like: np.ndarray) -> np.ndarray:
    return v.reshape(3, *([1] * (like.ndim - 1)))


def _cross(v: np.ndarray, field: np.ndarray) -> np.ndarray:
    return np.cross(np.broadcast_to(_bcast(v, field), field.shape), field, axis=0)


def boost_source(rho, J, boost: BoostParams, consts: Optional[PhysicalConstants] = None):
    """Charge and current seen from the moving frame, at the same event labels.

    Accepts fields or plain arrays (``J`` component-first); returns the same kind.
    """
    consts = consts or boost.consts
    r, j = _sca(rho), _vec(J)
    g, v = boost.gamma, boost.v
    j_par, j_perp = _split(j, boost.direction)
    r_new = g * (r - np.tensordot(v, j, axes=(0, 0)) / consts.c**2)
    j_new = g * (j_par - _bcast(v, j) * r) + j_perp
    if isinstance(rho, ScalarField):
        return ScalarField(rho.grid, r_new), VectorField3(J.grid, j_new)
    return r_new, j_new


def boost_fields(E, B, boost: BoostParams, consts: Optional[PhysicalConstants] = None):
    """Electric and magnetic fields seen from the moving frame."""
    consts = consts or boost.consts
    e, b = _vec(E), _vec(B)
    g, v, n = boost.gamma, boost.v, boost.direction
    e_par, e_perp = _split(e, n)
    b_par, b_perp = _split(b, n)
    e_new = e_par + g * (e_perp + _cross(v, b))
    b_new = b_par + g * (b_perp - _cross(v, e) / consts.c**2)
    if isinstance(E, VectorField3):
        return VectorField3(E.grid, e_new), VectorField3(B.grid, b_new)
    return e_new, b_new


def compose_velocities(u, v, consts: PhysicalConstants) -> np.ndarray:
    """Velocity of a body moving at ``v`` in a frame that itself moves at ``u``.

    Relativistic addition ``u (+) v``; for collinear ``u`` and ``v`` the result
    is the velocity of the composed boost.
    """
    u, v = np.asarray(u, float), np.asarray(v, float)
    c2 = consts.c**2
    uu = float(np.dot(u, u))
    if uu == 0.0:
        return v.copy()
    g = 1.0 / math.sqrt(1.0 - uu / c2)
    uv = float(np.dot(u, v))
    return (u + v / g + (g / (1.0 + g)) * uv / c2 * u) / (1.0 + uv / c2)


@dataclass(frozen=True)
class BoostedCurlReport:
    """Outcome of the boosted curl identity check (interior max-norms)."""

    residual: float
    boosted_curl: float
    rhs: float
    rest_curl: float


def boosted_curl_identity(rho: ScalarField, J: VectorField3, boost: BoostParams,
                          consts: Optional[PhysicalConstants] = None) -> BoostedCurlReport:
    """Compare the primed curl of the boosted current with its closed form.

    The primed gradient is ``grad + (gamma - 1) n (n . grad) + gamma v/c^2 d/dt``
    with ``n`` the boost direction.  The closed form is
    ``gamma v x (grad rho + c^-2 dJ/dt)``.
    """
    consts = consts or boost.consts
    grid = check_same_grid(rho, J)
    if grid.nt < 3:
        raise ShapeError("the boosted curl needs nt >= 3")
    _, Jp = boost_source(rho, J, boost, consts)
    g, v, n = boost.gamma, boost.v, boost.direction
    h, dt = grid.h, grid.dt

    # D[a][b] = d_a J'_b for a in x, y, z
    Jv = Jp.values
    D = np.stack([np.stack([d_axis(Jv[b], h, a + 1) for b in range(3)]) for a in range(3)])
    Dt = np.stack([d_axis(Jv[b], dt, 0) for b in range(3)])
    along = np.tensordot(n, D, axes=(0, 0))  # (n . grad) J'_b
    Dp = (D + (g - 1.0) * n[:, None, None, None, None, None] * along[None]
          + g / consts.c**2 * v[:, None, None, None, None, None] * Dt[None])
    lhs = np.stack([Dp[1, 2] - Dp[2, 1], Dp[2, 0] - Dp[0, 2], Dp[0, 1] - Dp[1, 0]])

    inner = grad(rho).values + np.stack([d_axis(J.values[b], dt, 0) for b in range(3)]) / consts.c**2
    rhs = g * _cross(v, inner)
    return BoostedCurlReport(
        residual=max_norm(lhs - rhs, vector=True),
        boosted_curl=max_norm(lhs, vector=True),
        rhs=max_norm(rhs, vector=True),
        rest_curl=max_norm(curl_array(J.values, h), vector=True),
    )


def transform_events(t, x, boost: BoostParams) -> tuple[np.ndarray, np.ndarray]:
    """Lorentz map of event coordinates ``(t, x)`` into the moving frame.

    ``x`` has a trailing axis of length 3.
    """
    c2 = boost.consts.c**2
    g, v, n = boost.gamma, boost.v, boost.direction
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    x_par = (x @ n)[..., None] * n
    t_new = g * (t - (x @ v) / c2)
    x_new = x + (g - 1.0) * x_par - g * t[..., None] * v
    return t_new, x_new


def resample_to_frame(field, boost: BoostParams, target: SpacetimeGrid,
                      fill_value: float = np.nan):
    """Re-sample a field given at source-frame events onto moving-frame grid nodes.

    Each target node ``(t', x')`` is mapped back to source coordinates and the
    source samples are interpolated linearly.  Component values are not
    transformed; combine with :func:`boost_source` or :func:`boost_fields`.
    Nodes outside the source box receive ``fill_value``.
    """
    inverse = BoostParams(-boost.v, boost.consts)
    src = field.grid
    tt = target.times()[:, None, None, None]
    xs = np.stack(target.mesh(), axis=-1)[None]
    t_src, x_src = transform_events(np.broadcast_to(tt, target.shape), np.broadcast_to(
        xs, (*target.shape, 3)), inverse)
    query = np.concatenate([t_src[..., None], x_src], axis=-1).reshape(-1, 4)
    axes = (src.times(), *src.axes())

    def interp(values: np.ndarray) -> np.ndarray:
        re = RegularGridInterpolator(axes, values.real, bounds_error=False, fill_value=fill_value)
        im = RegularGridInterpolator(axes, values.imag, bounds_error=False, fill_value=fill_value)
        return (re(query) + 1j * im(query)).reshape(target.shape)

    if isinstance(field, VectorField3):
        return VectorField3(target, np.stack([interp(c) for c in field.values]))
    return ScalarField(target, interp(field.values))


# ---------------------------------------------------------------------------
# wave sources

def _boundary_ratio(values: np.ndarray) -> float:
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return 0.0
    faces = [values[0], values[-1], values[:, 0], values[:, -1], values[:, :, 0], values[:, :, -1]]
    return max(float(np.max(np.abs(f))) for f in faces) / peak


def evolve_rho(rho0: ScalarField, consts: PhysicalConstants, grid: SpacetimeGrid,
               decay_tol: Optional[float] = 1e-6) -> ScalarField:
    """Spectral solution of the wave equation from ``rho0`` with zero initial rate.

    Each discrete Fourier mode of the first time level of ``rho0`` is multiplied
    by ``cos(c |k| t)`` at the times of ``grid``.  The box is treated as
    periodic; ``decay_tol`` bounds the boundary-to-peak ratio (``None`` skips the
    check, e.g. for exactly periodic data).
    """
    if tuple(rho0.grid.n) != tuple(grid.n) or rho0.grid.h != grid.h \
            or rho0.grid.origin != grid.origin:
        raise ShapeError("rho0 and the target grid must share the spatial layout")
    initial = rho0.values[0]
    if decay_tol is not None:
        ratio = _boundary_ratio(initial)
        if ratio > decay_tol:
            raise PreconditionError(
                f"rho0 boundary/peak ratio {ratio:.3e} exceeds {decay_tol:.1e}; "
                "periodic wrap-around would contaminate the evolution")
        if ratio > 1e-12:
            warnings.warn(f"rho0 boundary/peak ratio {ratio:.3e}: small wrap-around error",
                          RuntimeWarning, stacklevel=2)
    kx, ky, kz = (2.0 * np.pi * np.fft.fftfreq(n, d=grid.h) for n in grid.n)
    kmag = np.sqrt(kx[:, None, None] ** 2 + ky[None, :, None] ** 2 + kz[None, None, :] ** 2)
    spectrum = np.fft.fftn(initial)
    out = np.empty(grid.shape, dtype=complex)
    for i, t in enumerate(grid.times()):
        out[i] = np.fft.ifftn(spectrum * np.cos(consts.c * kmag * t))
    if np.isrealobj(initial) or not np.any(initial.imag):
        out = out.real
    return ScalarField(grid, out)


def build_J(rho: ScalarField, consts: PhysicalConstants) -> VectorField3:
    """Current ``-(1/(eps0 mu0)) * integral_0^t grad(rho) ds`` by cumulative trapezoid."""
    if rho.grid.t0 != 0.0:
        raise PreconditionError(f"charge history must start at t = 0, starts at {rho.grid.t0!r}")
    if rho.grid.nt < 2:
        raise ShapeError("build_J needs at least two time levels")
    g = grad(rho).values
    integral = cumulative_trapezoid(g, dx=rho.grid.dt, axis=1, initial=0.0)
    return VectorField3(rho.grid, -integral / consts.mu0_eps0)


@dataclass(frozen=True)
class WaveSource:
    rho: ScalarField
    J: VectorField3
    r0_ref: Optional[float] = None


def make_wave_source(rho0: ScalarField, grid: SpacetimeGrid, consts: PhysicalConstants,
                     decay_tol: Optional[float] = 1e-6, r0_ref: Optional[float] = None
                     ) -> WaveSource:
    rho = evolve_rho(rho0, consts, grid, decay_tol)
    return WaveSource(rho, build_J(rho, consts), r0_ref)


def relation_star_residual(rho: ScalarField, J: VectorField3, consts: PhysicalConstants) -> float:
    """Interior max-norm of ``grad(rho)/eps0 + mu0 dJ/dt``."""
    check_same_grid(rho, J)
    dJ = np.stack([d_axis(J.values[b], J.grid.dt, 0) for b in range(3)])
    return max_norm(grad(rho).values / consts.epsilon0 + consts.mu0 * dJ, vector=True)


def continuity_residual(rho: ScalarField, J: VectorField3) -> float:
    """Interior max-norm of ``d rho/dt + div J``."""
    check_same_grid(rho, J)
    h = J.grid.h
    divJ = sum(d_axis(J.values[i], h, i + 1) for i in range(3))
    return max_norm(d_axis(rho.values, rho.grid.dt, 0) + divJ)


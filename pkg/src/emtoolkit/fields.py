"""Finite-difference vector calculus and Maxwell residual checks.

First derivatives use second-order central differences in the interior and
second-order one-sided differences on boundary nodes.  Residual norms are
taken over interior spacetime nodes only.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import (PhysicalConstants, ScalarField, ShapeError, SpacetimeGrid, VectorField3,
                   check_same_grid)

# axis layout of scalar arrays: (t, x, y, z)
_T_AXIS = 0


def d_axis(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """First derivative of an array along ``axis``."""
    if values.shape[axis] < 3:
        raise ShapeError(f"need at least 3 samples along axis {axis}")
    return np.gradient(values, spacing, axis=axis, edge_order=2)


def d2_axis(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """Second derivative along ``axis``: 3-point centre, 4-point one-sided edges."""
    n = values.shape[axis]
    if n < 3:
        raise ShapeError(f"need at least 3 samples along axis {axis}")
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
    if n >= 4:
        out[0] = 2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]
        out[-1] = 2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]
    else:
        out[0], out[-1] = out[1], out[-2]
    return np.moveaxis(out / spacing**2, 0, axis)


def _d_space(values: np.ndarray, h: float, i: int) -> np.ndarray:
    # spatial axis i of a (t, x, y, z) array
    return d_axis(values, h, i + 1)


def grad(f: ScalarField) -> VectorField3:
    h = f.grid.h
    return VectorField3(f.grid, np.stack([_d_space(f.values, h, i) for i in range(3)]))


def div(F: VectorField3) -> ScalarField:
    h = F.grid.h
    return ScalarField(F.grid, sum(_d_space(F.values[i], h, i) for i in range(3)))


def curl_array(values: np.ndarray, h: float) -> np.ndarray:
    fx, fy, fz = values
    return np.stack([
        _d_space(fz, h, 1) - _d_space(fy, h, 2),
        _d_space(fx, h, 2) - _d_space(fz, h, 0),
        _d_space(fy, h, 0) - _d_space(fx, h, 1),
    ])


def curl(F: VectorField3) -> VectorField3:
    return VectorField3(F.grid, curl_array(F.values, F.grid.h))


def _laplacian_array(values: np.ndarray, h: float) -> np.ndarray:
    return sum(d2_axis(values, h, a) for a in (1, 2, 3))


def laplacian(F):
    """Compact-stencil Laplacian of a scalar or vector field."""
    if isinstance(F, VectorField3):
        return VectorField3(F.grid, np.stack([_laplacian_array(c, F.grid.h) for c in F.values]))
    return ScalarField(F.grid, _laplacian_array(F.values, F.grid.h))


def d_dt(F):
    if F.grid.nt < 3:
        raise ShapeError("time derivatives need nt >= 3")
    axis = 1 if isinstance(F, VectorField3) else 0
    return type(F)(F.grid, d_axis(F.values, F.grid.dt, axis))


def dalembertian(F, consts: PhysicalConstants):
    """``laplacian(F) - mu0 eps0 d^2F/dt^2``."""
    if F.grid.nt < 3:
        raise ShapeError("the d'Alembertian needs nt >= 3")
    lap = laplacian(F)
    axis = 1 if isinstance(F, VectorField3) else 0
    return type(F)(F.grid, lap.values - consts.mu0_eps0 * d2_axis(F.values, F.grid.dt, axis))


# ---------------------------------------------------------------------------
# norms

def interior(values: np.ndarray, vector: bool = False) -> np.ndarray:
    """Drop boundary nodes on every spacetime axis with at least 3 samples."""
    lead = 1 if vector else 0
    index = [slice(None)] * lead
    for n in values.shape[lead:]:
        index.append(slice(1, -1) if n >= 3 else slice(None))
    return values[tuple(index)]


def max_norm(values: np.ndarray, vector: bool = False) -> float:
    """Max over interior nodes of the pointwise (Euclidean) magnitude."""
    inner = interior(values, vector)
    if vector:
        inner = np.sqrt(np.sum(np.abs(inner) ** 2, axis=0))
    return float(np.max(np.abs(inner))) if inner.size else 0.0


@dataclass(frozen=True)
class MaxwellResidual:
    gauss_E: float
    gauss_B: float
    faraday: float
    ampere: float

    def as_dict(self) -> dict:
        return asdict(self)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.gauss_E, self.gauss_B, self.faraday, self.ampere)


def maxwell_residual(E: VectorField3, B: VectorField3, rho: ScalarField, J: VectorField3,
                     consts: PhysicalConstants) -> MaxwellResidual:
    """Max-norm residuals of the four Maxwell equations at interior nodes."""
    check_same_grid(E, B, rho, J)
    if E.grid.nt < 3:
        raise ShapeError("Maxwell residuals need nt >= 3")
    dEdt, dBdt = d_dt(E).values, d_dt(B).values
    return MaxwellResidual(
        gauss_E=max_norm(div(E).values - rho.values / consts.epsilon0),
        gauss_B=max_norm(div(B).values),
        faraday=max_norm(curl(E).values + dBdt, vector=True),
        ampere=max_norm(curl(B).values - consts.mu0 * J.values - consts.mu0_eps0 * dEdt,
                        vector=True),
    )


def source_dalembertian_identity(E: VectorField3, B: VectorField3, rho: ScalarField,
                                 J: VectorField3, consts: PhysicalConstants
                                 ) -> tuple[float, float]:
    """Residuals of the sourced wave equations for E and B."""
    check_same_grid(E, B, rho, J)
    res_E = (dalembertian(E, consts).values - grad(rho).values / consts.epsilon0
             - consts.mu0 * d_dt(J).values)
    res_B = dalembertian(B, consts).values + consts.mu0 * curl(J).values
    return max_norm(res_E, vector=True), max_norm(res_B, vector=True)


def poynting(E: VectorField3, B: VectorField3, consts: PhysicalConstants
             ) -> tuple[VectorField3, ScalarField]:
    """Poynting vector ``E x B / mu0`` and its divergence."""
    check_same_grid(E, B)
    S = VectorField3(E.grid, np.cross(E.values, B.values, axis=0) / consts.mu0)
    return S, div(S)


def convergence_order(hs, residuals) -> float:
    """Least-squares slope of ``log(residual)`` against ``log(h)``."""
    hs = np.asarray(hs, dtype=float)
    res = np.asarray(residuals, dtype=float)
    if hs.size < 2 or hs.size != res.size:
        raise ShapeError("need matching sequences of at least two spacings and residuals")
    if np.any(res <= 0):
        raise ShapeError("residuals must be positive to fit an order")
    slope, _ = np.polyfit(np.log(hs), np.log(res), 1)
    return float(slope)


def refine_grid(grid: SpacetimeGrid, factor: int) -> SpacetimeGrid:
    """Same physical box with ``h`` and ``dt`` divided by ``factor``."""
    n = tuple((k - 1) * factor + 1 for k in grid.n)
    nt = (grid.nt - 1) * factor + 1
    return SpacetimeGrid(grid.origin, n, grid.h / factor, grid.dt / factor, nt, grid.t0)

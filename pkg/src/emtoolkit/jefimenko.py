"""Retarded potentials and Jefimenko fields from localized sources.

Sources are represented by quadrature nodes (cell centres of a uniform grid,
weight ``h^3``) together with a way to evaluate ``rho``, ``J`` and their time
derivatives at arbitrary retarded times.  Two implementations exist:

* :class:`SourceHistory` stores sampled frames and interpolates linearly in time.
* :class:`AnalyticSource` evaluates a closed-form model exactly.

The cell containing the field point is handled by averaging the kernel over a
sphere of volume ``h^3``: direction-weighted kernels average to zero and
``1/R`` averages to ``3/(2a)`` with ``a = (3/(4 pi))^(1/3) h``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (CoverageError, PhysicalConstants, PreconditionError, ScalarField,
                   ShapeError, SpacetimeGrid, VectorField3, check_same_grid)
from .fields import d_axis

_CHUNK_PAIRS = 400_000


def causal_time_derivative(values: np.ndarray, dt: float, axis: int = 0) -> np.ndarray:
    """Second-order time derivative that only looks backwards from frame 2 on.

    Frames 0 and 1 use forward and central stencils respectively, since no
    earlier samples exist.
    """
    v = np.moveaxis(np.asarray(values), axis, 0)
    n = v.shape[0]
    out = np.zeros_like(v)
    if n == 2:
        out[:] = (v[1] - v[0]) / dt
    elif n >= 3:
        out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
        out[1] = (v[2] - v[0]) / (2.0 * dt)
        out[2:] = (3.0 * v[2:] - 4.0 * v[1:-1] + v[:-2]) / (2.0 * dt)
    return np.moveaxis(out, 0, axis)


class RetardedSource:
    """Quadrature nodes plus retarded-time evaluation of the source terms."""

    positions: np.ndarray       # (N, 3)
    h: float
    t_start: float
    t_end: float
    is_real: bool

    @property
    def cell_volume(self) -> float:
        return self.h**3

    def retarded(self, t_r: np.ndarray):
        """Return ``(rho, rho_dot, J, J_dot)`` at nodes for times ``t_r``.

        ``t_r`` has shape ``(P, N)``.  Each scalar term, and each of the three
        components of ``J`` and ``J_dot``, is an array broadcastable to that
        shape, or ``None`` when it vanishes identically.
        """
        raise NotImplementedError


class SourceHistory(RetardedSource):
    """Sampled charge and current history on a uniform grid.

    Parameters
    ----------
    rho, J : sampled source fields on a common grid.
    rho_dot, J_dot : optional time derivatives; computed with
        :func:`causal_time_derivative` when omitted.
    support_radius : nodes farther than this from ``center`` are dropped.
    center : defaults to the grid centre.
    continuity_tol : bound on ``max|rho_dot + div J|`` relative to
        ``max|rho_dot|``; ``None`` skips the check.
    decay_tol : bound on the largest dropped or boundary value relative to the
        peak, for both ``rho`` and ``J``; ``None`` skips the check.
    static : treat the source as time independent; only the first frame is used
        and every retarded time is covered.
    """

    def __init__(self, rho: ScalarField, J: VectorField3, rho_dot: Optional[ScalarField] = None,
                 J_dot: Optional[VectorField3] = None, support_radius: Optional[float] = None,
                 center=None, continuity_tol: Optional[float] = 0.2,
                 decay_tol: Optional[float] = 1e-6, static: bool = False):
        grid = check_same_grid(rho, J)
        self.grid = grid
        self.rho, self.J = rho, J
        self.static = static
        if static:
            zero_s = np.zeros(grid.shape)
            self.rho_dot = rho_dot or ScalarField(grid, zero_s)
            self.J_dot = J_dot or VectorField3(grid, np.zeros((3, *grid.shape)))
        else:
            self.rho_dot = rho_dot or ScalarField(
                grid, causal_time_derivative(rho.values, grid.dt, 0))
            self.J_dot = J_dot or VectorField3(
                grid, causal_time_derivative(J.values, grid.dt, 1))
        check_same_grid(rho, self.rho_dot, self.J_dot)
        axes = grid.axes()
        self.center = np.array(center if center is not None else [0.5 * (a[0] + a[-1]) for a in axes],
                               dtype=float)
        pts = grid.points()
        dist = np.linalg.norm(pts - self.center, axis=1)
        self.support_radius = float(support_radius) if support_radius is not None else math.inf
        keep = dist <= self.support_radius
        if not keep.any():
            raise PreconditionError("no source nodes inside the support radius")
        if continuity_tol is not None and grid.nt >= 3 and not static:
            self._check_continuity(continuity_tol)
        if decay_tol is not None:
            self._check_decay(keep, decay_tol)

        nt = grid.nt
        flat = lambda a: a.reshape(nt, -1)[:, keep]
        vals = [flat(rho.values), flat(self.rho_dot.values)]
        vals += [flat(J.values[i]) for i in range(3)] + [flat(self.J_dot.values[i]) for i in range(3)]
        self.is_real = all(not np.any(v.imag) for v in vals)
        dtype = float if self.is_real else complex
        self._data = np.stack([v.real if self.is_real else v for v in vals]).astype(dtype)
        self._nonzero = [bool(np.any(row)) for row in self._data]
        self.positions = pts[keep]
        self.h = grid.h
        self.t_start = grid.t0
        self.t_end = grid.t0 + (nt - 1) * grid.dt

    def _check_continuity(self, tol: float) -> None:
        h = self.grid.h
        divJ = sum(d_axis(self.J.values[i], h, i + 1) for i in range(3))
        rate = d_axis(self.rho.values, self.grid.dt, 0)
        inner = (slice(1, -1),) * 4
        scale = max(float(np.max(np.abs(rate[inner]))), float(np.max(np.abs(divJ[inner]))))
        if scale == 0.0:
            return
        res = float(np.max(np.abs(rate[inner] + divJ[inner]))) / scale
        if res > tol:
            raise PreconditionError(f"continuity residual {res:.3e} (relative) exceeds {tol:.1e}")

    def _check_decay(self, keep: np.ndarray, tol: float) -> None:
        nt = self.grid.nt
        boundary = np.ones(self.grid.n, dtype=bool)
        boundary[1:-1, 1:-1, 1:-1] = False
        outside = (~keep) | boundary.ravel()
        mags = {"rho": np.abs(self.rho.values).reshape(nt, -1),
                "J": np.sqrt(np.sum(np.abs(self.J.values) ** 2, axis=0)).reshape(nt, -1)}
        for name, mag in mags.items():
            peak = float(mag.max())
            if peak == 0.0:
                continue
            edge = float(mag[:, outside].max()) / peak
            if edge > tol:
                raise PreconditionError(
                    f"|{name}| at the support boundary is {edge:.3e} of its peak (tolerance {tol:.1e})")

    def retarded(self, t_r: np.ndarray):
        d = self._data
        if self.static or self.grid.nt == 1:
            vals = [row[0] if nz else None for row, nz in zip(d, self._nonzero)]
        else:
            u = (t_r - self.t_start) / self.grid.dt
            idx = np.floor(u).astype(np.intp)
            np.clip(idx, 0, self.grid.nt - 2, out=idx)
            frac = u - idx
            col = np.arange(t_r.shape[-1])
            vals = [(1.0 - frac) * row[idx, col] + frac * row[idx + 1, col] if nz else None
                    for row, nz in zip(d, self._nonzero)]
        return vals[0], vals[1], vals[2:5], vals[5:8]

    def covers(self, t_min: float, t_max: float) -> bool:
        if self.static:
            return True
        eps = 1e-9 * self.grid.dt
        return t_min >= self.t_start - eps and t_max <= self.t_end + eps


# ---------------------------------------------------------------------------
# closed-form source models

@dataclass(frozen=True)
class GaussianCharge:
    """Static Gaussian ball of total charge ``q``."""

    q: float
    sigma: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def _g(self, x, y, z):
        c = self.center
        r2 = (x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2
        return np.exp(-0.5 * r2 / self.sigma**2) / ((2 * np.pi) ** 1.5 * self.sigma**3)

    def evaluate(self, t, x, y, z):
        rho = self.q * self._g(x, y, z) + 0.0 * t
        zero = np.zeros_like(rho)
        return rho, zero, (zero, zero, zero), (zero, zero, zero)

    def potential(self, r, consts: PhysicalConstants):
        from scipy.special import erf
        r = np.asarray(r, float)
        return self.q / (4 * np.pi * consts.epsilon0 * r) * erf(r / (math.sqrt(2) * self.sigma))

    def field_magnitude(self, r, consts: PhysicalConstants):
        """Radial electric field of the Gaussian ball."""
        from scipy.special import erf
        r = np.asarray(r, float)
        s = self.sigma
        inner = erf(r / (math.sqrt(2) * s)) - math.sqrt(2 / math.pi) * (r / s) * np.exp(-0.5 * r**2 / s**2)
        return self.q / (4 * np.pi * consts.epsilon0 * r**2) * inner


@dataclass(frozen=True)
class OscillatingDipole:
    """Gaussian polarisation ``P = p0 d g(x) cos(w t)`` with ``rho = -div P``, ``J = dP/dt``.

    The pair satisfies the continuity equation exactly.
    """

    p0: float
    sigma: float
    omega: float
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def evaluate(self, t, x, y, z):
        c, s = self.center, self.sigma
        d = np.asarray(self.direction, float)
        d = d / np.linalg.norm(d)
        dx, dy, dz = x - c[0], y - c[1], z - c[2]
        g = np.exp(-0.5 * (dx * dx + dy * dy + dz * dz) / s**2) / ((2 * np.pi) ** 1.5 * s**3)
        proj = (d[0] * dx + d[1] * dy + d[2] * dz) * g / s**2
        w = self.omega
        cos, sin = np.cos(w * t), np.sin(w * t)
        rho = self.p0 * proj * cos
        rho_dot = -self.p0 * w * proj * sin
        jmag = -self.p0 * w * g * sin
        jdot = -self.p0 * w * w * g * cos
        return rho, rho_dot, tuple(di * jmag for di in d), tuple(di * jdot for di in d)


def sample_model(model, grid: SpacetimeGrid) -> tuple[ScalarField, VectorField3]:
    """Sample ``(rho, J)`` of a closed-form model on a grid."""
    t = grid.times()[:, None, None, None]
    x, y, z = (a[None] for a in grid.mesh())
    rho, _, J, _ = model.evaluate(t, x, y, z)
    shape = grid.shape
    return (ScalarField(grid, np.broadcast_to(rho, shape)),
            VectorField3(grid, np.stack([np.broadcast_to(c, shape) for c in J])))


class AnalyticSource(RetardedSource):
    """Closed-form model integrated with the nodes of a spatial grid.

    ``nodes`` supplies positions and spacing; its time axis is ignored.
    """

    def __init__(self, model, nodes: SpacetimeGrid, support_radius: Optional[float] = None,
                 center=None):
        pts = nodes.points()
        center = np.asarray(center if center is not None else getattr(model, "center", (0, 0, 0)),
                            float)
        if support_radius is not None:
            pts = pts[np.linalg.norm(pts - center, axis=1) <= support_radius]
        self.model = model
        self.positions = pts
        self.h = nodes.h
        self.t_start, self.t_end = -math.inf, math.inf
        self.is_real = True
        self.support_radius = support_radius if support_radius is not None else math.inf

    def retarded(self, t_r: np.ndarray):
        x, y, z = (self.positions[:, i][None, :] for i in range(3))
        rho, rho_dot, J, J_dot = self.model.evaluate(t_r, x, y, z)
        return rho, rho_dot, list(J), list(J_dot)

    def covers(self, t_min: float, t_max: float) -> bool:
        return True


# ---------------------------------------------------------------------------
# synthesis

_WANT = ("V", "A", "E", "B")


def _chunk(src: RetardedSource, pts: np.ndarray, t: float, consts: PhysicalConstants,
           want: frozenset) -> dict:
    c = consts.c
    pos = src.positions
    dx = pts[:, 0:1] - pos[None, :, 0]
    dy = pts[:, 1:2] - pos[None, :, 1]
    dz = pts[:, 2:3] - pos[None, :, 2]
    R = np.sqrt(dx * dx + dy * dy + dz * dz)
    self_cell = R < 1e-9 * src.h
    t_r = t - R / c
    if not src.covers(float(t_r.min()), t):
        raise CoverageError(
            f"source history [{src.t_start!r}, {src.t_end!r}] does not cover retarded times "
            f"[{float(t_r.min())!r}, {t!r}]")
    rho, rho_dot, J, J_dot = src.retarded(t_r)
    has_self = bool(self_cell.any())
    if has_self:
        R[self_cell] = np.inf
    inv = 1.0 / R                                   # zero at the self cell
    w = src.cell_volume
    pe = w / (4.0 * np.pi * consts.epsilon0)
    pb = w * consts.mu0 / (4.0 * np.pi)
    if has_self:
        a = (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0) * src.h
        inv_avg = inv.copy()
        inv_avg[self_cell] = 1.5 / a                # ball average of 1/R
    else:
        inv_avg = inv
    n_p = pts.shape[0]

    def dot(u, v):
        # sum over sources of u*v; u may be None (identically zero) or (N,)
        if u is None:
            return np.zeros(n_p, dtype=float)
        if np.ndim(u) == 1:
            return v @ u
        return np.einsum("pn,pn->p", u, v)

    out = {}
    if "V" in want:
        out["V"] = pe * dot(rho, inv_avg)
    if "A" in want:
        out["A"] = pb * np.stack([dot(J[k], inv_avg) for k in range(3)])
    inv2 = inv * inv
    if "E" in want:
        # (rho/R^2 + rho_dot/(c R)) * Rvec/R - J_dot/(c^2 R)
        comps = []
        for k, d in enumerate((dx, dy, dz)):
            term = -dot(J_dot[k], inv_avg) / c**2
            if rho is not None:
                term = term + dot(rho, inv2 * inv * d)
            if rho_dot is not None:
                term = term + dot(rho_dot, inv2 * d) / c
            comps.append(term)
        out["E"] = pe * np.stack(comps)
    if "B" in want:
        # (J/R^2 + J_dot/(c R)) x Rvec/R
        inv3 = inv2 * inv
        ds = (dx, dy, dz)
        B = [np.zeros(n_p), np.zeros(n_p), np.zeros(n_p)]
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            # B_i = C_j d_k - C_k d_j
            for comp, sgn, d in ((j, 1.0, ds[k]), (k, -1.0, ds[j])):
                if J[comp] is not None:
                    B[i] = B[i] + sgn * dot(J[comp], inv3 * d)
                if J_dot[comp] is not None:
                    B[i] = B[i] + sgn * dot(J_dot[comp], inv2 * d) / c
        out["B"] = pb * np.stack(B)
    return out


def synthesize_at(src: RetardedSource, points: np.ndarray, times, consts: PhysicalConstants,
                  want=_WANT, workers: Optional[int] = None) -> dict:
    """Evaluate potentials and fields at arbitrary points and times.

    Returns a dict with any of ``V`` ``(nt, P)``, ``A``, ``E``, ``B`` ``(3, nt, P)``.
    """
    points = np.atleast_2d(np.asarray(points, float))
    times = np.atleast_1d(np.asarray(times, float))
    want = frozenset(want)
    unknown = want - set(_WANT)
    if unknown:
        raise ShapeError(f"unknown outputs {sorted(unknown)}")
    nsrc = src.positions.shape[0]
    per = max(1, _CHUNK_PAIRS // nsrc)
    dtype = float if src.is_real else complex
    out = {}
    for key in want:
        shape = (times.size, points.shape[0]) if key == "V" else (3, times.size, points.shape[0])
        out[key] = np.zeros(shape, dtype=dtype)
    jobs = [(it, sl) for it in range(times.size)
            for sl in (slice(i, min(i + per, points.shape[0]))
                       for i in range(0, points.shape[0], per))]

    def run(job):
        it, sl = job
        res = _chunk(src, points[sl], float(times[it]), consts, want)
        for key, val in res.items():
            if key == "V":
                out[key][it, sl] = val
            else:
                out[key][:, it, sl] = val

    workers = workers or min(4, os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, jobs))
    else:
        for job in jobs:
            run(job)
    return out


def _on_grid(src, eval_grid: SpacetimeGrid, consts, want, workers):
    res = synthesize_at(src, eval_grid.points(), eval_grid.times(), consts, want, workers)
    shape = eval_grid.shape
    fields = {}
    for key, val in res.items():
        if key == "V":
            fields[key] = ScalarField(eval_grid, val.reshape(shape))
        else:
            fields[key] = VectorField3(eval_grid, val.reshape(3, *shape))
    return fields


def retarded_potentials(src: RetardedSource, eval_grid: SpacetimeGrid, consts: PhysicalConstants,
                        workers: Optional[int] = None) -> tuple[ScalarField, VectorField3]:
    """Scalar and vector retarded potentials on ``eval_grid``."""
    f = _on_grid(src, eval_grid, consts, ("V", "A"), workers)
    return f["V"], f["A"]


def jefimenko_E(src: RetardedSource, eval_grid: SpacetimeGrid, consts: PhysicalConstants,
                workers: Optional[int] = None) -> VectorField3:
    return _on_grid(src, eval_grid, consts, ("E",), workers)["E"]


def jefimenko_B(src: RetardedSource, eval_grid: SpacetimeGrid, consts: PhysicalConstants,
                workers: Optional[int] = None) -> VectorField3:
    return _on_grid(src, eval_grid, consts, ("B",), workers)["B"]


def jefimenko_fields(src: RetardedSource, eval_grid: SpacetimeGrid, consts: PhysicalConstants,
                     workers: Optional[int] = None, potentials: bool = False) -> dict:
    """``E`` and ``B`` (and optionally ``V``, ``A``) in one pass over the sources."""
    want = ("E", "B", "V", "A") if potentials else ("E", "B")
    return _on_grid(src, eval_grid, consts, want, workers)

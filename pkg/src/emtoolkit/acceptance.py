"""Acceptance suite shared by the test-suite and the ``selftest`` subcommand.

Each ``criterion_N`` returns a :class:`CriterionResult`; none of them raise on
a failed check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import cavity, fields, freespace, jefimenko, nonradiating, specfun
from .core import SpacetimeGrid, VectorField3, ScalarField, natural_units, sample_scalar
from .quadrature import ball_rule, gauss_legendre

ORDER_RANGE = (1.8, 2.2)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f} s)"


def _timed(number: int, name: str, body: Callable[[], tuple[bool, str]],
           budget: float | None = None) -> CriterionResult:
    start = time.perf_counter()
    ok, detail = body()
    took = time.perf_counter() - start
    if budget is not None and took > budget:
        ok = False
        detail += f"; runtime {took:.2f} s exceeds {budget} s"
    return CriterionResult(number, name, bool(ok), detail, took)


def _in_order_range(order: float) -> bool:
    return ORDER_RANGE[0] <= order <= ORDER_RANGE[1]


def _fmt_orders(orders) -> str:
    return "[" + ", ".join(f"{o:.3f}" for o in orders) + "]"


# ---------------------------------------------------------------------------

def criterion_1() -> CriterionResult:
    def body():
        k0 = specfun.bessel_zeros(0, 1.0, 20).zeros
        err0 = float(np.max(np.abs(np.asarray(k0) - math.pi * np.arange(1, 21))))
        offs = []
        for l in range(4):
            z50 = specfun.bessel_zeros(l, 1.0, 50)[50]
            offs.append(abs(z50 - math.pi * (50 + l / 2)))
        ok = err0 < 1e-10 and max(offs) < 0.05 * math.pi
        return ok, f"max |k_n - n pi| = {err0:.1e}; 50th-zero offsets {_fmt_orders(offs)}"
    specfun._zeros_unit.cache_clear()
    return _timed(1, "Bessel zeros", body, budget=1.0)


def criterion_2() -> CriterionResult:
    def body():
        r0 = 1.0
        rule = ball_rule(r0)
        basis = []
        for l in range(4):
            table = specfun.bessel_zeros(l, r0, 3)
            for m in range(-l, l + 1):
                for n in (1, 2, 3):
                    mode = specfun.ModeIndex(l, m, table[n])
                    basis.append(cavity.mode_delta(mode, rule.r, rule.theta, rule.phi, r0))
        B = np.array(basis)
        gram = (B * rule.weights) @ np.conj(B).T
        err = float(np.max(np.abs(gram - np.eye(len(basis)))))
        return err < 1e-6, f"{len(basis)} modes, max |G - I| = {err:.2e}"
    return _timed(2, "Orthonormality", body, budget=30.0)


def criterion_3() -> CriterionResult:
    def body():
        r0 = 1.3
        pairs = []
        for l in (0, 1, 2, 3):
            t = specfun.bessel_zeros(l, r0, 2)
            pairs.append((l, t[1]))
            if l < 2:
                pairs.append((l, t[2]))
        r, w = gauss_legendre(64, 0.0, r0)
        worst = 0.0
        for l, k in pairs:
            num = float(np.sum(specfun.tau(l, k, r) ** 2 * r**2 * w))
            exact = specfun.radial_norm_sq(l, k, r0)
            worst = max(worst, abs(num - exact) / exact)
        return worst < 1e-8, f"{len(pairs)} pairs, max rel diff {worst:.2e}"
    return _timed(3, "Lommel norm", body)


def criterion_4() -> CriterionResult:
    def body():
        consts = natural_units()
        sigma = 1.0
        grid = SpacetimeGrid.centered(6 * sigma, 48)
        model = jefimenko.GaussianCharge(1.0, sigma)
        rho, J = jefimenko.sample_model(model, grid)
        src = jefimenko.SourceHistory(rho, J, static=True)
        ax = grid.axes()[0][::4]
        ev = SpacetimeGrid((ax[0],) * 3, (len(ax),) * 3, grid.h * 4)
        out = jefimenko.jefimenko_fields(src, ev, consts)
        E = out["E"].values[:, 0].reshape(3, -1)
        p = ev.points()
        r = np.linalg.norm(p, axis=1)
        sel = r > 3 * sigma
        Ea = model.field_magnitude(r[sel], consts)[None] * p[sel].T / r[sel]
        err = float(np.max(np.linalg.norm(E[:, sel] - Ea, axis=0) / np.linalg.norm(Ea, axis=0)))
        bmax = float(np.max(np.abs(out["B"].values)))
        return err < 0.01 and bmax == 0.0, \
            f"max rel E error {err:.2e} at {int(sel.sum())} nodes outside 3 sigma; max|B| = {bmax}"
    return _timed(4, "Jefimenko static limit", body, budget=120.0)


def criterion_5() -> CriterionResult:
    def body():
        consts = natural_units()
        sigma, omega = 0.3, 2.0
        model = jefimenko.OscillatingDipole(1.0, sigma, omega, (0, 0, 1))
        n_src = int(round(2 * 6 * sigma / (sigma / 1.5))) + 1
        src = jefimenko.AnalyticSource(model, SpacetimeGrid.centered(6 * sigma, n_src))
        hs, res = [], []
        side = 0.3
        for n in (5, 9, 17):
            h = side / (n - 1)
            g = SpacetimeGrid((2.0, 0.2, -0.4), (n, n, n), h, dt=h, nt=3, t0=1.0)
            out = jefimenko.jefimenko_fields(src, g, consts)
            rho_e, J_e = jefimenko.sample_model(model, g)
            res.append(fields.maxwell_residual(out["E"], out["B"], rho_e, J_e, consts).as_tuple())
            hs.append(h)
        res = np.array(res)
        orders = [fields.convergence_order(hs, res[:, i]) for i in range(4)]
        ok = all(_in_order_range(o) for o in orders)
        return ok, f"orders (gauss_E, gauss_B, faraday, ampere) = {_fmt_orders(orders)}"
    return _timed(5, "Jefimenko dynamic", body)


def _gaussian_rho0(grid: SpacetimeGrid, sigma: float) -> ScalarField:
    g0 = SpacetimeGrid(grid.origin, grid.n, grid.h)
    return sample_scalar(g0, lambda t, x, y, z: np.exp(-(x * x + y * y + z * z) / (2 * sigma**2)))


def _wave_source(n: int, half: float, sigma: float, dt: float, nt: int):
    consts = natural_units()
    grid = SpacetimeGrid.centered(half, n, dt=dt, nt=nt)
    rho0 = _gaussian_rho0(grid, sigma)
    return nonradiating.make_wave_source(rho0, grid, consts, decay_tol=1e-6), consts


def criterion_6() -> CriterionResult:
    def body():
        import warnings
        T = 0.8  # last interior time level sits at T
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            # relation (*) is purely temporal: refine dt on a fixed spatial grid
            dts, star = [], []
            for dt in (0.1, 0.05, 0.025):
                ws, consts = _wave_source(33, 6.0, 1.0, dt, int(round(T / dt)) + 2)
                dts.append(dt)
                star.append(nonradiating.relation_star_residual(ws.rho, ws.J, consts))
            # continuity mixes the spatial stencil in: refine h and dt = h/2 together
            hts, cont = [], []
            for n in (25, 49, 97):
                dt = 12.0 / (n - 1) / 2
                ws, consts = _wave_source(n, 6.0, 1.0, dt, int(round(T / dt)) + 2)
                hts.append(dt)
                cont.append(nonradiating.continuity_residual(ws.rho, ws.J))
        o_s = fields.convergence_order(dts, star)
        o_c = fields.convergence_order(hts, cont)
        ok = _in_order_range(o_c) and _in_order_range(o_s)
        return ok, f"relation order {o_s:.3f} (dt refinement), continuity order {o_c:.3f} (dt = h/2)"
    return _timed(6, "Wave-source construction", body)


def criterion_7() -> CriterionResult:
    def body():
        import warnings
        T = 0.4
        sources = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for dt in (0.05, 0.025, 0.0125):
                sources.append((dt, *_wave_source(33, 6.0, 1.0, dt, int(round(T / dt)) + 2)))
        lines, ok = [], True
        for beta in (0.1, 0.5, 0.9):
            worst, curls, dts = 0.0, [], []
            for dt, ws, consts in sources:
                boost = nonradiating.BoostParams.from_beta((beta, 0, 0), consts)
                rep = nonradiating.boosted_curl_identity(ws.rho, ws.J, boost, consts)
                scale = boost.gamma * boost.speed * fields.max_norm(
                    fields.grad(ws.rho).values, vector=True)
                worst = max(worst, rep.residual / scale)
                curls.append(rep.boosted_curl / scale)
                dts.append(dt)
            # the boosted curl is the O(dt^2) remainder of relation (*)
            order = fields.convergence_order(dts, curls)
            ok &= worst < 1e-10 and _in_order_range(order)
            lines.append(f"v={beta}c: residual {worst:.1e}, curl {curls[-1]:.1e} (order {order:.2f})")
        # synthetic pair with grad(rho) + c^-2 dJ/dt = (0, 0, G(z))
        _, ws, consts = sources[0]
        grid = ws.rho.grid
        _, _, z = grid.mesh()
        G = np.exp(-z**2 / 2.0)
        t = grid.times()[:, None, None, None]
        Jz = consts.c**2 * t * G[None]
        J = VectorField3(grid, np.stack([np.zeros(grid.shape)] * 2 + [Jz]))
        rho = ScalarField.zeros(grid)
        boost = nonradiating.BoostParams.from_beta((0.5, 0, 0), consts)
        rep = nonradiating.boosted_curl_identity(rho, J, boost, consts)
        sep = rep.boosted_curl / max(rep.residual, 1e-300)
        ok &= sep >= 1e3
        lines.append(f"synthetic: curl {rep.boosted_curl:.2e} vs residual {rep.residual:.1e}")
        return ok, "; ".join(lines)
    return _timed(7, "Boost identity", body)


def criterion_8() -> CriterionResult:
    def body():
        consts = natural_units()
        rng = np.random.default_rng(8)
        ks = [np.array([1.0, 0.5, -0.3]), np.array([-0.4, 0.9, 0.6]), np.array([0.2, -0.7, 1.1])]
        raw = []
        for k in ks:
            pol = rng.normal(size=3) + 1j * rng.normal(size=3)
            raw.append(freespace.PlaneWaveMode(k, pol, -1, 1.0, maxwell=False))
        transverse, longitudinal = freespace.split_transverse(raw)
        modes = freespace.real_superposition(transverse)
        hs, res, floors, curls = [], [], [], []
        for n in (9, 17, 33):
            h = 2.0 / (n - 1)
            g = SpacetimeGrid((0.0, 0.0, 0.0), (n, n, n), h, dt=h / 2, nt=5)
            E, B = freespace.synthesize_fields(modes, g, consts)
            zero_s, zero_v = ScalarField.zeros(g), VectorField3.zeros(g)
            res.append(fields.maxwell_residual(E, B, zero_s, zero_v, consts).as_tuple())
            hs.append(h)
            R = freespace.synthesize_E(longitudinal, g, consts)
            curls.append(fields.max_norm(fields.curl(R).values, vector=True))
            floors.append(sum(np.linalg.norm(m.pol) * abs(m.amplitude) * np.linalg.norm(m.k) ** 3
                              for m in longitudinal) * h * h / 6.0)
        res = np.array(res)
        orders = []
        for i in range(4):
            if np.all(res[:, i] < 1e-12):
                orders.append(math.nan)  # exact on this stencil
            else:
                orders.append(fields.convergence_order(hs, res[:, i]))
        ok = all(math.isnan(o) or _in_order_range(o) for o in orders)
        ok &= all(c <= f for c, f in zip(curls, floors))
        o_curl = fields.convergence_order(hs, curls)
        ok &= _in_order_range(o_curl)
        return ok, (f"Maxwell orders {_fmt_orders(orders)}; remainder curl/floor "
                    f"{_fmt_orders([c / f for c, f in zip(curls, floors)])}, order {o_curl:.3f}")
    return _timed(8, "Free-space modes", body)


def criterion_9() -> CriterionResult:
    def body():
        consts = natural_units()
        r0 = 1.0
        rule = ball_rule(r0)
        worst, parts = 0.0, []
        cases = [(0, 2, cavity.parametric_w(0, 1.0)), (2, 1, cavity.parametric_w(2, 2.0))]
        for l0, n, W in cases:
            k0 = specfun.bessel_zeros(l0, r0, n)[n]
            for t in (0.0, 0.37):
                E = cavity.synthesize_fundamental_E(1.0, l0, k0, r0, consts, rule, W, times=[t])
                num = float(cavity.field_energy(E, rule, consts)[0])
                ref = cavity.energy_instant(1.0, l0, k0, r0, t, consts, W)
                worst = max(worst, abs(num - ref) / ref)
            parts.append(f"l0={l0} (parametric beta)")
        # l0 = 1 with computed coefficients: alpha is not fixed by Q there
        W1 = cavity.w_coefficients(1)
        k1 = specfun.bessel_zeros(1, r0, 1)[1]
        mode = cavity.FundamentalMode(1, k1, r0, 0.7, -0.7, W1, consts)
        for t in (0.0, 0.37):
            E = mode.electric(rule.points, [t])
            num = float(cavity.field_energy(E, rule, consts)[0])
            ref = float(mode.energy(t))
            worst = max(worst, abs(num - ref) / ref)
        parts.append("l0=1 (computed beta, alpha=0.7)")
        return worst < 0.02, f"max rel diff {worst:.2e} over {', '.join(parts)}"
    return _timed(9, "Energy closed form", body)


def criterion_10() -> CriterionResult:
    def body():
        consts = natural_units()
        table = cavity.balmer_differences(1.0, 0, 1.0, consts, cavity.parametric_w(0, 1.0),
                                          range(20, 41))
        dev = table.max_rel_deviation()
        diffs = max(abs(r.difference) for r in table.rows)
        ok = dev < 0.02  # NaN compares False
        return ok, (f"l0=0: max |difference| = {diffs:.1e}, max rel deviation of ratio "
                    f"from 1/(m0^2-m1^2) model = {dev}")
    return _timed(10, "Balmer ratios", body, budget=5.0)


def criterion_11() -> CriterionResult:
    def body():
        consts = natural_units()
        r0 = 1.0
        rule = ball_rule(r0, 48, 32, 64)
        W1 = cavity.w_coefficients(1)
        modes = [cavity.FundamentalMode(1, specfun.bessel_zeros(1, r0, 1)[1], r0, 1.0, -1.0, W1,
                                        consts)]
        for l0 in (0, 2):
            k0 = specfun.bessel_zeros(l0, r0, 1)[1]
            modes.append(cavity.FundamentalMode.from_charge(
                1.0, l0, k0, r0, consts, cavity.parametric_w(l0, 1.0)))
        worst = 0.0
        for m in modes:
            period = 2 * math.pi / m.omega
            ts = np.linspace(0.0, period, 129)
            Q = rule.integrate(m.density(rule.points, ts))
            worst = max(worst, float(np.max(np.abs(np.gradient(Q, ts)))))
        k0 = specfun.bessel_zeros(0, r0, 1)[1]
        W = cavity.parametric_w(0, 1.0)
        u1 = cavity.energy_mean(1.5, 0, k0, r0, consts, W)
        u2 = cavity.energy_mean(3.0, 0, k0, r0, consts, W)
        scale_err = abs(u2 / u1 - 4.0)
        ok = worst < 1e-10 and scale_err <= 4 * np.finfo(float).eps
        return ok, f"max |dQ/dt| = {worst:.2e} over 3 modes; |U(2Q)/U(Q) - 4| = {scale_err:.1e}"
    return _timed(11, "Conservation", body)


def criterion_12() -> CriterionResult:
    def body():
        rng = np.random.default_rng(12)
        worst = 0.0
        for _ in range(20):
            k, r0 = rng.uniform(0.1, 10.0), rng.uniform(0.1, 3.0)
            ref = 4 * math.pi / k**3 * (math.sin(k * r0) - k * r0 * math.cos(k * r0))
            val = cavity.ball_fourier_integral(k, r0)
            worst = max(worst, abs(val - ref) / max(abs(ref), 1e-300))
        return worst < 1e-12, f"max rel diff {worst:.1e} at 20 random (k, r0)"
    return _timed(12, "Ball Fourier integral", body)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 13)}


def run_all(selected=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for i in (selected or sorted(CRITERIA)):
        res = CRITERIA[i]()
        if echo:
            echo(res.line())
        results.append(res)
    return results

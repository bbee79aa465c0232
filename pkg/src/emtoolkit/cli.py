"""Command-line interface: ``emtoolkit <subcommand> [options]``.

Numbers in CSV output use Python's shortest round-trip ``repr`` so a value
read back with ``float()`` is bit-identical.  Exit codes: 0 success, 1 failed
self-test, 2 configuration/schema error, 3 numerical non-convergence,
4 precondition violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .config import ENV_VAR, RunConfig, pick
from .core import (ConfigError, ConvergenceError, PreconditionError, ScalarField, SpacetimeGrid,
                   VectorField3, load_field, save_field, units_by_name)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_PRECONDITION = 0, 1, 2, 3, 4


# ---------------------------------------------------------------------------
# formatting helpers

def fmt(x) -> str:
    """Shortest round-trip text for a number (complex keeps ``repr`` form)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        return repr(x.real) if x.imag == 0 else repr(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n"


@contextmanager
def _output(path: Optional[str]):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _vec3(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers: {text!r}") from exc
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers: {text!r}")
    return vals


def parse_index_range(text: str) -> list[int]:
    """``"20..30"`` (inclusive), ``"1,4,7"`` or a single integer."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split(".."))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad index range {text!r}; use A..B or a comma list") from exc


def _int_list(text: str) -> list[int]:
    return parse_index_range(text)


# ---------------------------------------------------------------------------
# subcommands

def cmd_zeros(args, cfg: RunConfig) -> int:
    from .specfun import bessel_zeros

    l = pick(args.l, cfg, "zeros", "l", default=0)
    count = pick(args.count, cfg, "zeros", "count", default=5)
    r0 = pick(args.r0, cfg, "zeros", "r0", default=1.0)
    table = bessel_zeros(l, r0, count)
    res = table.residuals()
    rows = [(l, n, table[n], res[n - 1]) for n in range(1, count + 1)]
    with _output(args.out) as fh:
        fh.write(csv_text(["l", "n", "k", "residual"], rows))
    return EXIT_OK


def cmd_modes(args, cfg: RunConfig) -> int:
    from .cavity import mode_delta
    from .quadrature import ball_rule
    from .specfun import ModeIndex, bessel_zeros, norm_constant, radial_norm_sq

    l = pick(args.l, cfg, "modes", "l", default=0)
    m = pick(args.m, cfg, "modes", "m", default=0)
    n = pick(args.n, cfg, "modes", "n", default=1)
    r0 = pick(args.r0, cfg, "modes", "r0", default=1.0)
    if abs(m) > l:
        raise PreconditionError(f"|m| must not exceed l (l={l}, m={m})")
    k = bessel_zeros(l, r0, n)[n]
    mode = ModeIndex(l, m, k)
    rule = ball_rule(r0, cfg.get("quadrature", "n_r", default=64),
                     cfg.get("quadrature", "n_theta", default=64),
                     cfg.get("quadrature", "n_phi", default=128))
    d = mode_delta(mode, rule.r, rule.theta, rule.phi, r0)
    report = {
        "l": l, "m": m, "n": n, "r0": r0, "k": k,
        "norm_constant": norm_constant(l, k, r0),
        "radial_norm_sq": radial_norm_sq(l, k, r0),
        "quadrature_norm": float(rule.integrate(np.abs(d) ** 2).real),
        "boundary_max": float(np.max(np.abs(mode_delta(
            mode, np.full(8, r0), np.linspace(0.1, 3.0, 8), np.linspace(-3, 3, 8), r0)))),
    }
    with _output(args.out) as fh:
        fh.write(json_text(report))
    return EXIT_OK


def cmd_spectrum(args, cfg: RunConfig) -> int:
    from .cavity import balmer_differences, energy_spectrum, parametric_w, w_coefficients

    consts = units_by_name(pick(args.units, cfg, "units", default="natural"))
    Q = pick(args.Q, cfg, "spectrum", "Q", default=1.0)
    r0 = pick(args.r0, cfg, "spectrum", "r0", default=1.0)
    l0_set = args.l0 if args.l0 is not None else cfg.get("spectrum", "l0", default=[0])
    if not all(isinstance(v, int) and v >= 0 for v in l0_set):
        raise ConfigError("spectrum.l0 must list non-negative integers")
    n_spec = pick(args.n, cfg, "spectrum", "n", default="1..5")
    n_values = parse_index_range(n_spec)
    if min(n_values) < 1:
        raise ConfigError("zero indices start at 1")
    beta = pick(args.beta, cfg, "spectrum", "beta")
    if beta is None and any(l0 != 1 for l0 in l0_set):
        # computed coefficients vanish off l = 1; fall back to a labelled external value
        beta = 1.0
    W = w_coefficients(max(max(l0_set), 1))
    spec = energy_spectrum(Q, l0_set, r0, consts, n_values, param_beta=beta, W=W)

    out = io.StringIO()
    if args.plot_data:
        out.write(csv_text(["l0", "beta_reading", "m", "mean_energy"],
                           [(r.l0, r.beta_reading, r.m, r.mean_energy) for r in spec.rows]))
    else:
        out.write(csv_text(["l0", "n", "m", "k0", "mean_energy", "beta_reading", "beta"],
                           [(r.l0, r.n, r.m, r.k0, r.mean_energy, r.beta_reading, r.beta)
                            for r in spec.rows]))
        if len(n_values) >= 3 and min(n_values) >= args.threshold:
            rows = []
            for l0 in l0_set:
                Wd = parametric_w(l0, beta)
                table = balmer_differences(Q, l0, r0, consts, Wd, n_values,
                                           threshold=args.threshold)
                for r in table.rows:
                    rows.append((l0, table.n_ref, r.n, r.m, r.k0, r.difference,
                                 r.model_difference, r.ratio, r.model_ratio,
                                 r.inverse_square_ratio, r.rel_deviation))
            out.write("\n")
            out.write(csv_text(["l0", "n_ref", "n", "m", "k0", "difference", "model_difference",
                                "ratio", "model_ratio", "inverse_square_ratio", "rel_deviation"],
                               rows))
    with _output(args.out) as fh:
        fh.write(out.getvalue())
    return EXIT_OK


def _grid_from(args, cfg: RunConfig) -> SpacetimeGrid:
    origin = pick(args.origin, cfg, "jefimenko", "grid", "origin", default=[2.0, 0.0, 0.0])
    n = pick(args.grid_n, cfg, "jefimenko", "grid", "n", default=5)
    h = pick(args.h, cfg, "jefimenko", "grid", "h", default=0.05)
    dt = pick(args.dt, cfg, "jefimenko", "grid", "dt", default=h)
    nt = pick(args.nt, cfg, "jefimenko", "grid", "nt", default=3)
    t0 = pick(args.t0, cfg, "jefimenko", "grid", "t0", default=1.0)
    return SpacetimeGrid(tuple(origin), (n, n, n), h, dt, nt, t0)


def cmd_jefimenko(args, cfg: RunConfig) -> int:
    from . import fields, jefimenko

    units = pick(args.units, cfg, "units", default="natural")
    consts = units_by_name(units)
    grid = _grid_from(args, cfg)
    threads = pick(args.threads, cfg, "threads")
    if args.rho_in or args.J_in:
        if not (args.rho_in and args.J_in):
            raise ConfigError("--rho-in and --J-in must be given together")
        rho, _ = load_field(args.rho_in)
        J, _ = load_field(args.J_in)
        if not isinstance(rho, ScalarField) or not isinstance(J, VectorField3):
            raise ConfigError("--rho-in must hold a scalar field and --J-in a vector field")
        src = jefimenko.SourceHistory(
            rho, J, continuity_tol=cfg.get("tolerances", "continuity", default=0.2),
            decay_tol=cfg.get("tolerances", "decay", default=1e-6))
        model = None
    else:
        kind = pick(args.kind, cfg, "jefimenko", "source", "kind", default="dipole")
        strength = pick(args.strength, cfg, "jefimenko", "source", "strength", default=1.0)
        sigma = pick(args.sigma, cfg, "jefimenko", "source", "sigma", default=0.3)
        center = tuple(cfg.get("jefimenko", "source", "center", default=[0.0, 0.0, 0.0]))
        if kind == "gaussian":
            model = jefimenko.GaussianCharge(strength, sigma, center)
        elif kind == "dipole":
            omega = pick(args.omega, cfg, "jefimenko", "source", "omega", default=2.0)
            direction = tuple(cfg.get("jefimenko", "source", "direction", default=[0.0, 0.0, 1.0]))
            model = jefimenko.OscillatingDipole(strength, sigma, omega, direction, center)
        else:
            raise ConfigError(f"unknown source kind {kind!r}; use 'gaussian' or 'dipole'")
        half = pick(args.src_half, cfg, "jefimenko", "source_grid", "half_width", default=6 * sigma)
        src_n = pick(args.src_n, cfg, "jefimenko", "source_grid", "n", default=19)
        nodes = SpacetimeGrid.centered(half, src_n)
        nodes = SpacetimeGrid(tuple(np.add(nodes.origin, center)), nodes.n, nodes.h)
        src = jefimenko.AnalyticSource(model, nodes, center=center)
    out = jefimenko.jefimenko_fields(src, grid, consts, workers=threads)
    if model is not None:
        rho_e, J_e = jefimenko.sample_model(model, grid)
    else:
        rho_e, J_e = ScalarField.zeros(grid), VectorField3.zeros(grid)
    report = _residual_report(out["E"], out["B"], rho_e, J_e, consts) if grid.nt >= 3 else {
        "grid": _grid_summary(grid)}
    if model is None and grid.nt >= 3:
        report["note"] = "residuals use zero sources at evaluation nodes"
    if args.fields_out:
        prefix = Path(args.fields_out)
        save_field(f"{prefix}_E.emf", out["E"], units, "E")
        save_field(f"{prefix}_B.emf", out["B"], units, "B")
        report["files"] = [f"{prefix}_E.emf", f"{prefix}_B.emf"]
    with _output(args.out) as fh:
        fh.write(json_text(report))
    return EXIT_OK


def _grid_summary(g: SpacetimeGrid) -> dict:
    return {"h": g.h, "dt": g.dt, "n": list(g.n), "nt": g.nt}


def _residual_report(E, B, rho, J, consts) -> dict:
    from .fields import maxwell_residual

    rep = maxwell_residual(E, B, rho, J, consts).as_dict()
    rep["grid"] = _grid_summary(E.grid)
    return rep


def _load(path: Optional[str], kind, like: Optional[SpacetimeGrid] = None):
    if path is None:
        if like is None:
            return None
        return kind.zeros(like)
    f, _ = load_field(path)
    if not isinstance(f, kind):
        raise ConfigError(f"{path}: expected a {kind.__name__}")
    return f


def cmd_verify(args, cfg: RunConfig) -> int:
    consts = units_by_name(pick(args.units, cfg, "units", default="natural"))
    E = _load(args.E, VectorField3)
    B = _load(args.B, VectorField3)
    rho = _load(args.rho, ScalarField, E.grid)
    J = _load(args.J, VectorField3, E.grid)
    with _output(args.out) as fh:
        fh.write(json_text(_residual_report(E, B, rho, J, consts)))
    return EXIT_OK


def cmd_boost(args, cfg: RunConfig) -> int:
    from .fields import max_norm
    from .nonradiating import BoostParams, boost_fields, boost_source, boosted_curl_identity

    units = pick(args.units, cfg, "units", default="natural")
    consts = units_by_name(units)
    beta = pick(args.v, cfg, "boost", "v")
    if beta is None:
        raise ConfigError("boost velocity missing: pass --v bx,by,bz (fractions of c)")
    boost = BoostParams.from_beta(beta, consts)
    report = {"v_over_c": list(beta), "gamma": boost.gamma}
    prefix = Path(args.fields_out) if args.fields_out else None
    if args.rho or args.J:
        if not (args.rho and args.J):
            raise ConfigError("--rho and --J must be given together")
        rho, J = _load(args.rho, ScalarField), _load(args.J, VectorField3)
        rho_p, J_p = boost_source(rho, J, boost, consts)
        if rho.grid.nt >= 3:
            rep = boosted_curl_identity(rho, J, boost, consts)
            report["source"] = {"residual": rep.residual, "boosted_curl": rep.boosted_curl,
                                "rhs": rep.rhs, "rest_curl": rep.rest_curl}
        if prefix:
            save_field(f"{prefix}_rho.emf", rho_p, units, "rho'")
            save_field(f"{prefix}_J.emf", J_p, units, "J'")
    if args.E or args.B:
        E = _load(args.E, VectorField3) if args.E else None
        B = _load(args.B, VectorField3) if args.B else None
        E = E if E is not None else VectorField3.zeros(B.grid)
        B = B if B is not None else VectorField3.zeros(E.grid)
        Ep, Bp = boost_fields(E, B, boost, consts)
        S = np.cross(Ep.values, Bp.values, axis=0) / consts.mu0
        report["fields"] = {"max_E": max_norm(Ep.values, vector=True),
                            "max_B": max_norm(Bp.values, vector=True),
                            "max_poynting": max_norm(S, vector=True)}
        if prefix:
            save_field(f"{prefix}_E.emf", Ep, units, "E'")
            save_field(f"{prefix}_B.emf", Bp, units, "B'")
    if len(report) == 2:
        raise ConfigError("boost needs input fields: --rho/--J and/or --E/--B")
    with _output(args.out) as fh:
        fh.write(json_text(report))
    return EXIT_OK


def cmd_selftest(args, cfg: RunConfig) -> int:
    from .acceptance import run_all

    selected = parse_index_range(args.only) if args.only else None
    with _output(args.out) as fh:
        results = run_all(selected, echo=lambda line: (fh.write(line + "\n"), fh.flush()))
        passed = sum(r.passed for r in results)
        fh.write(f"{passed}/{len(results)} criteria passed\n")
    return EXIT_OK if passed == len(results) else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON run config (default: ${ENV_VAR})")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--threads", type=int, help="worker threads for field synthesis")
    common.add_argument("--units", choices=("natural", "si"))

    p = argparse.ArgumentParser(prog="emtoolkit", description="Electromagnetic field toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("zeros", parents=[common], help="zeros of spherical Bessel functions")
    s.add_argument("--l", type=int)
    s.add_argument("--count", type=int)
    s.add_argument("--r0", type=float)
    s.set_defaults(func=cmd_zeros)

    s = sub.add_parser("modes", parents=[common], help="inspect one cavity mode")
    s.add_argument("--l", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int, help="zero index (1-based)")
    s.add_argument("--r0", type=float)
    s.set_defaults(func=cmd_modes)

    s = sub.add_parser("spectrum", parents=[common], help="cycle-mean energy spectrum")
    s.add_argument("--Q", type=float)
    s.add_argument("--l0", type=_int_list, help="l0 values, e.g. 0 or 0,2 or 0..3")
    s.add_argument("--n", help="zero indices, e.g. 20..30")
    s.add_argument("--r0", type=float)
    s.add_argument("--beta", type=float, help="external beta for the parametric reading")
    s.add_argument("--threshold", type=int, default=20,
                   help="smallest zero index for the difference table (default 20)")
    s.add_argument("--plot-data", action="store_true", help="emit (m, mean_energy) columns only")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("jefimenko", parents=[common], help="retarded-field synthesis")
    s.add_argument("--kind", choices=("gaussian", "dipole"))
    s.add_argument("--strength", type=float, help="charge (gaussian) or dipole moment")
    s.add_argument("--sigma", type=float)
    s.add_argument("--omega", type=float)
    s.add_argument("--src-half", type=float, help="half width of the source box")
    s.add_argument("--src-n", type=int, help="source nodes per axis")
    s.add_argument("--rho-in", help="serialized charge history (replaces the analytic source)")
    s.add_argument("--J-in", help="serialized current history")
    s.add_argument("--origin", type=_vec3)
    s.add_argument("--grid-n", type=int)
    s.add_argument("--h", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--nt", type=int)
    s.add_argument("--t0", type=float)
    s.add_argument("--fields-out", help="prefix for serialized E and B")
    s.set_defaults(func=cmd_jefimenko)

    s = sub.add_parser("boost", parents=[common], help="Lorentz-boost sources or fields")
    s.add_argument("--v", type=_vec3, help="velocity as fractions of c, e.g. 0.5,0,0")
    s.add_argument("--rho")
    s.add_argument("--J")
    s.add_argument("--E")
    s.add_argument("--B")
    s.add_argument("--fields-out", help="prefix for serialized transformed fields")
    s.set_defaults(func=cmd_boost)

    s = sub.add_parser("verify", parents=[common], help="Maxwell residuals of stored fields")
    s.add_argument("--E", required=True)
    s.add_argument("--B", required=True)
    s.add_argument("--rho")
    s.add_argument("--J")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", help="criterion numbers, e.g. 1,3 or 1..4")
    s.set_defaults(func=cmd_selftest)
    return p


def _fail(code: int, exc: Exception) -> int:
    report = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(report, sort_keys=True) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except ConvergenceError as exc:
        return _fail(EXIT_CONVERGENCE, exc)
    except PreconditionError as exc:
        return _fail(EXIT_PRECONDITION, exc)
    except OSError as exc:
        return _fail(EXIT_CONFIG, exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

import math

import numpy as np
import pytest

from emtoolkit.core import (CoverageError, PreconditionError, ScalarField, SpacetimeGrid,
                            VectorField3, sample_scalar)
from emtoolkit.jefimenko import (AnalyticSource, GaussianCharge, OscillatingDipole, SourceHistory,
                                 causal_time_derivative, jefimenko_fields, sample_model,
                                 synthesize_at)


def test_causal_derivative_quadratic_exact():
    dt = 0.1
    t = np.arange(7) * dt
    v = 3 * t**2 - t + 2
    np.testing.assert_allclose(causal_time_derivative(v, dt), 6 * t - 1, atol=1e-12)


def test_causal_derivative_uses_only_past():
    v = np.zeros(8)
    v[5] = 1.0
    d = causal_time_derivative(v, 1.0)
    assert not np.any(d[:5])


def test_causal_derivative_axis_and_short():
    v = np.arange(12.0).reshape(3, 4)
    np.testing.assert_allclose(causal_time_derivative(v, 0.5, axis=1), 2.0)
    np.testing.assert_allclose(causal_time_derivative(v[:, :2], 1.0, axis=1), 1.0)


def test_zero_source_gives_zero_fields(nat):
    g = SpacetimeGrid.centered(1.0, 5, dt=0.1, nt=60, t0=-5.0)
    src = SourceHistory(ScalarField.zeros(g), VectorField3.zeros(g))
    out = synthesize_at(src, [[3.0, 0, 0], [0, 2, 1]], [0.3], nat)
    for key in ("E", "B", "V", "A"):
        assert not np.any(out[key])


def test_static_gaussian_field(nat):
    model = GaussianCharge(1.0, 0.4)
    g = SpacetimeGrid.centered(2.4, 41, dt=1.0, nt=1)
    rho, J = sample_model(model, g)
    src = SourceHistory(rho, J, static=True)
    pts = np.array([[1.5, 0, 0], [0, -2.0, 1.0], [1.0, 1.0, 1.0]])
    E = synthesize_at(src, pts, [0.0], nat, want=("E", "V"))
    r = np.linalg.norm(pts, axis=1)
    exact = model.field_magnitude(r, nat)[None, :] * pts.T / r
    np.testing.assert_allclose(E["E"][:, 0], exact, rtol=2e-3, atol=1e-15)
    np.testing.assert_allclose(E["V"][0], model.potential(r, nat), rtol=2e-3)


def test_analytic_and_sampled_agree_static(nat):
    model = GaussianCharge(2.0, 0.5, center=(0.1, 0, 0))
    g = SpacetimeGrid.centered(3.0, 25, dt=1.0, nt=1)
    rho, J = sample_model(model, g)
    a = synthesize_at(AnalyticSource(model, g), [[2.5, 0.3, 0]], [0.0], nat, want=("E",))
    s = synthesize_at(SourceHistory(rho, J, static=True, decay_tol=None), [[2.5, 0.3, 0]], [0.0],
                      nat, want=("E",))
    np.testing.assert_allclose(a["E"], s["E"], rtol=1e-12, atol=1e-15)


def test_coverage_error(nat):
    g = SpacetimeGrid.centered(1.0, 5, dt=0.1, nt=4)
    rho = sample_scalar(g, lambda t, x, y, z: np.exp(-8 * (x * x + y * y + z * z)))
    src = SourceHistory(rho, VectorField3.zeros(g), continuity_tol=None, decay_tol=None)
    with pytest.raises(CoverageError):
        synthesize_at(src, [[5.0, 0, 0]], [0.3], nat)


def test_continuity_and_decay_checks(nat):
    g = SpacetimeGrid.centered(1.0, 9, dt=0.1, nt=4)
    rho = sample_scalar(g, lambda t, x, y, z: t * np.exp(-8 * (x * x + y * y + z * z)))
    with pytest.raises(PreconditionError, match="continuity"):
        SourceHistory(rho, VectorField3.zeros(g), decay_tol=None)
    wide = sample_scalar(g, lambda t, x, y, z: np.exp(-(x * x + y * y + z * z)))
    with pytest.raises(PreconditionError, match="support boundary"):
        SourceHistory(wide, VectorField3.zeros(g))
    with pytest.raises(PreconditionError):
        SourceHistory(wide, VectorField3.zeros(g), support_radius=0.01, center=(5, 5, 5))


def test_causality_bitwise(nat):
    g = SpacetimeGrid.centered(0.5, 5, dt=0.1, nt=130, t0=-10.0)
    on = (g.times() >= 1.0)[:, None, None, None]
    rho = ScalarField(g, np.broadcast_to(on * 1.0, g.shape))
    J = VectorField3(g, np.stack([np.zeros(g.shape), np.zeros(g.shape),
                                  np.broadcast_to(on * 2.0, g.shape)]))
    src = SourceHistory(rho, J, continuity_tol=None, decay_tol=None)
    # source nodes lie within |x| <= 0.5*sqrt(3); a point at distance 10 sees t_r < 1
    far = synthesize_at(src, [[10.0, 0, 0]], [2.8], nat)
    for key in ("E", "B", "V", "A"):
        assert np.all(far[key] == 0.0)
    near = synthesize_at(src, [[1.5, 0, 0]], [2.8], nat)
    assert np.any(near["V"] != 0.0)


def test_self_cell_regularised(nat):
    g = SpacetimeGrid.centered(1.0, 5, dt=1.0, nt=1)
    model = GaussianCharge(1.0, 0.3)
    rho, J = sample_model(model, g)
    src = SourceHistory(rho, J, static=True, decay_tol=None)
    out = synthesize_at(src, [[0.0, 0.0, 0.0]], [0.0], nat)
    assert np.all(np.isfinite(out["V"])) and np.all(np.isfinite(out["E"]))
    # by symmetry E vanishes at the centre
    assert np.max(np.abs(out["E"])) < 1e-12 * out["V"].max()


def test_potentials_reproduce_fields(nat):
    model = OscillatingDipole(1.0, 0.3, 2.0)
    nodes = SpacetimeGrid.centered(1.2, 17, dt=1.0, nt=1)
    src = AnalyticSource(model, nodes)
    p, t, e = np.array([1.7, 0.4, -0.6]), 0.9, 1e-3
    offs = [np.zeros(3)] + [s * e * np.eye(3)[i] for i in range(3) for s in (1, -1)]
    res = [synthesize_at(src, [p + o], [t - e, t, t + e], nat) for o in offs]
    gradV = np.array([(res[1 + 2 * i]["V"][1, 0] - res[2 + 2 * i]["V"][1, 0]) / (2 * e)
                      for i in range(3)])
    dA = (res[0]["A"][:, 2, 0] - res[0]["A"][:, 0, 0]) / (2 * e)
    E = res[0]["E"][:, 1, 0]
    np.testing.assert_allclose(-gradV - dA, E, atol=1e-5 * np.max(np.abs(E)))
    A = lambda k: res[k]["A"][:, 1, 0]
    dAdx = [(A(1 + 2 * i) - A(2 + 2 * i)) / (2 * e) for i in range(3)]
    curlA = np.array([dAdx[1][2] - dAdx[2][1], dAdx[2][0] - dAdx[0][2], dAdx[0][1] - dAdx[1][0]])
    B = res[0]["B"][:, 1, 0]
    np.testing.assert_allclose(curlA, B, atol=1e-5 * np.max(np.abs(B)))


def test_dipole_far_field_magnitude(nat):
    # quasi-static near zone: field of a point dipole p = p0 cos(w t) z
    model = OscillatingDipole(1.0, 0.2, 0.01)
    nodes = SpacetimeGrid.centered(1.0, 21, dt=1.0, nt=1)
    out = synthesize_at(AnalyticSource(model, nodes), [[0, 0, 3.0]], [0.0], nat, want=("E",))
    exact = 2 * 1.0 / (4 * math.pi * nat.epsilon0 * 27.0)
    assert out["E"][2, 0, 0] == pytest.approx(exact, rel=1e-3)


def test_jefimenko_fields_grid_shapes(nat):
    model = OscillatingDipole(1.0, 0.3, 1.0)
    src = AnalyticSource(model, SpacetimeGrid.centered(1.0, 9, dt=1.0, nt=1))
    eg = SpacetimeGrid((2.0, 0, 0), (3, 3, 3), 0.1, dt=0.1, nt=2)
    f = jefimenko_fields(src, eg, nat, potentials=True)
    assert f["E"].values.shape == (3, 2, 3, 3, 3)
    assert f["V"].values.shape == (2, 3, 3, 3)

import numpy as np
import pytest

from emtoolkit.core import ScalarField, ShapeError, SpacetimeGrid, VectorField3, sample_scalar, sample_vector
from emtoolkit.fields import (MaxwellResidual, convergence_order, curl, d2_axis, dalembertian,
                              div, grad, interior, laplacian, max_norm, maxwell_residual, poynting,
                              refine_grid, source_dalembertian_identity)

G = SpacetimeGrid((-1.0, -1.0, -1.0), (9, 9, 9), 0.25, dt=0.1, nt=5)


def _inner(a, vector=False):
    return interior(a, vector)


def test_grad_constant_zero():
    f = ScalarField(G, np.full(G.shape, 3.0))
    assert grad(f).max_abs() == 0.0


def test_div_linear_exact():
    F = sample_vector(G, lambda t, x, y, z: (x, y, z))
    np.testing.assert_allclose(div(F).values, 3.0, atol=1e-12)


def test_curl_rotation():
    F = sample_vector(G, lambda t, x, y, z: (-y, x, 0 * x))
    c = curl(F).values
    np.testing.assert_allclose(c[2], 2.0, atol=1e-12)
    np.testing.assert_allclose(c[:2], 0.0, atol=1e-12)


def test_quadratic_exact_on_interior():
    f = sample_scalar(G, lambda t, x, y, z: x * x + 2 * y * y - z * z + x * y)
    np.testing.assert_allclose(_inner(laplacian(f).values), 4.0, atol=1e-11)
    g = grad(f).values
    X, Y, Z = G.mesh()
    np.testing.assert_allclose(g[0], np.broadcast_to(2 * X + Y, G.shape), atol=1e-11)


def test_d2_edges_exact_for_cubic():
    x = np.linspace(0, 1, 7)
    v = x**3
    np.testing.assert_allclose(d2_axis(v, x[1] - x[0], 0), 6 * x, atol=1e-10)


def test_shape_errors():
    small = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0, nt=2)
    with pytest.raises(ShapeError):
        dalembertian(ScalarField.zeros(small), None)
    other = SpacetimeGrid((0, 0, 0), (9, 9, 9), 0.5, nt=5)
    with pytest.raises(ShapeError):
        maxwell_residual(VectorField3.zeros(G), VectorField3.zeros(other), ScalarField.zeros(G),
                         VectorField3.zeros(G), None)


def test_div_curl_and_curl_grad(nat):
    F = sample_vector(G, lambda t, x, y, z: (np.sin(x * y), np.cos(z) * x, np.exp(0.3 * y * z)))
    f = sample_scalar(G, lambda t, x, y, z: np.sin(x) * np.cos(y * z))
    # central stencils along different axes commute exactly
    assert max_norm(div(curl(F)).values) < 1e-12
    assert max_norm(curl(grad(f)).values, vector=True) < 1e-12


def _wave(k, speed, grid):
    return sample_scalar(grid, lambda t, x, y, z: np.exp(1j * (k[0] * x + k[1] * y + k[2] * z
                                                              - speed * np.linalg.norm(k) * t)))


def test_dalembertian_constant_zero(nat):
    assert dalembertian(ScalarField(G, np.ones(G.shape)), nat).max_abs() == 0.0


def test_dalembertian_plane_wave_orders(nat):
    k = np.array([1.0, 0.5, -0.5])
    res, res2, hs = [], [], []
    base = SpacetimeGrid((0, 0, 0), (5, 5, 5), 0.4, dt=0.4, nt=5)
    for f in (1, 2, 4):
        g = refine_grid(base, f)
        w = _wave(k, 1.0, g)
        res.append(max_norm(dalembertian(w, nat).values))
        w2 = _wave(k, 2.0, g)
        # -|k|^2 from the Laplacian, +4|k|^2 from the time term
        exact = 3 * np.dot(k, k) * w2.values
        res2.append(max_norm(dalembertian(w2, nat).values - exact))
        hs.append(g.h)
    assert 1.8 <= convergence_order(hs, res) <= 2.2
    assert 1.8 <= convergence_order(hs, res2) <= 2.2


def test_maxwell_zero_fields(nat):
    z = VectorField3.zeros(G)
    r = maxwell_residual(z, z, ScalarField.zeros(G), z, nat)
    assert r.as_tuple() == (0.0, 0.0, 0.0, 0.0)


def test_coulomb_shell(nat):
    # point charge outside the box: div E = 0 and curl E = 0 up to stencil error
    def E(t, x, y, z):
        X, Y, Z = x + 3.0, y, z
        r3 = (X * X + Y * Y + Z * Z) ** 1.5
        return X / (4 * np.pi * r3), Y / (4 * np.pi * r3), Z / (4 * np.pi * r3)
    divs, curls, hs = [], [], []
    base = SpacetimeGrid((-0.5, -0.5, -0.5), (5, 5, 5), 0.25, dt=1.0, nt=3)
    for f in (1, 2, 4):
        g = refine_grid(base, f)
        Ef = sample_vector(g, E)
        z = VectorField3.zeros(g)
        r = maxwell_residual(Ef, z, ScalarField.zeros(g), z, nat)
        assert r.gauss_B == 0.0 and r.ampere == 0.0
        # compare on the interior nodes of the coarsest grid
        sl = (slice(None),) + (slice(f, -f, f),) * 3
        divs.append(np.max(np.abs(div(Ef).values[sl])))
        curls.append(np.max(np.abs(curl(Ef).values[(slice(None),) + sl])))
        hs.append(g.h)
    assert 1.9 <= convergence_order(hs, divs) <= 2.1
    assert 1.9 <= convergence_order(hs, curls) <= 2.1


def test_source_identity_B_zero_curl_free_J(nat):
    J = grad(sample_scalar(G, lambda t, x, y, z: np.sin(x + t) * np.cos(y) * z))
    z = VectorField3.zeros(G)
    _, res_B = source_dalembertian_identity(z, z, ScalarField.zeros(G), J, nat)
    assert res_B < 1e-12


def test_poynting_cases(nat):
    E = sample_vector(G, lambda t, x, y, z: (np.cos(z - t), 0 * x, 0 * x))
    S, divS = poynting(E, VectorField3.zeros(G), nat)
    assert S.max_abs() == 0.0 and divS.max_abs() == 0.0
    S, _ = poynting(E, E, nat)
    assert S.max_abs() == 0.0
    B = sample_vector(G, lambda t, x, y, z: (0 * x, np.cos(z - t), 0 * x))
    S, _ = poynting(E, B, nat)
    np.testing.assert_allclose(S.values[2], np.abs(E.values[0]) ** 2, atol=1e-14)


def test_poynting_si_scale(si):
    g = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0, nt=3)
    E = VectorField3(g, np.stack([np.ones(g.shape), 0 * np.ones(g.shape), 0 * np.ones(g.shape)]))
    B = VectorField3(g, np.stack([0 * np.ones(g.shape), np.ones(g.shape) / si.c, 0 * np.ones(g.shape)]))
    S, _ = poynting(E, B, si)
    assert S.values[2].real.max() == pytest.approx(1.0 / (si.mu0 * si.c))


def test_convergence_order_exact():
    hs = [0.1, 0.05, 0.025]
    assert convergence_order(hs, [h * h for h in hs]) == pytest.approx(2.0)
    with pytest.raises(ShapeError):
        convergence_order([0.1], [1.0])
    with pytest.raises(ShapeError):
        convergence_order(hs, [1.0, 0.0, 1.0])


def test_refine_grid_preserves_box():
    g = refine_grid(G, 2)
    assert g.n == (17, 17, 17) and g.nt == 9
    assert g.extent == G.extent


def test_residual_record():
    r = MaxwellResidual(1.0, 2.0, 3.0, 4.0)
    assert r.as_dict() == {"gauss_E": 1.0, "gauss_B": 2.0, "faraday": 3.0, "ampere": 4.0}

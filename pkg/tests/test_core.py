import json
import math

import numpy as np
import pytest

from emtoolkit.core import (ConfigError, PhysicalConstants, PreconditionError,
                            ScalarField, ShapeError, SpacetimeGrid, VectorField3, check_same_grid,
                            is_real, load_field, sample_scalar, sample_vector, save_field,
                            si_units, units_by_name)


def test_si_constants_consistent(si):
    assert si.c == 299792458.0
    assert abs(si.mu0 * si.epsilon0 * si.c**2 - 1.0) < 1e-12
    assert si.mu0_eps0 == pytest.approx(1.0 / si.c**2, rel=1e-12)


def test_natural_units(nat):
    assert (nat.c, nat.mu0, nat.epsilon0) == (1.0, 1.0, 1.0)


def test_inconsistent_constants_rejected():
    with pytest.raises(PreconditionError):
        PhysicalConstants(c=1.0, mu0=1.0, epsilon0=2.0)
    with pytest.raises(PreconditionError):
        PhysicalConstants(c=-1.0, mu0=1.0, epsilon0=1.0)


def test_units_by_name_unknown():
    assert units_by_name("si") == si_units()
    with pytest.raises(ConfigError):
        units_by_name("cgs")


def test_grid_layout():
    g = SpacetimeGrid((0.0, 1.0, 2.0), (3, 4, 5), 0.5, dt=0.1, nt=2, t0=1.0)
    assert g.shape == (2, 3, 4, 5)
    x, y, z = g.axes()
    assert x[-1] == 1.0 and y[0] == 1.0 and z[-1] == 4.0
    np.testing.assert_allclose(g.times(), [1.0, 1.1])
    pts = g.points()
    assert pts.shape == (60, 3)
    # ij ordering: z varies fastest
    np.testing.assert_allclose(pts[1] - pts[0], [0, 0, 0.5])
    assert SpacetimeGrid.from_dict(g.to_dict()) == g


def test_grid_centered_symmetric():
    g = SpacetimeGrid.centered(2.0, 5)
    np.testing.assert_allclose(g.axes()[0], [-2, -1, 0, 1, 2])


def test_grid_rejects_bad_spacing():
    with pytest.raises(PreconditionError):
        SpacetimeGrid((0, 0, 0), (3, 3, 3), 0.0)


def test_field_shape_checked():
    g = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0)
    with pytest.raises(ShapeError):
        ScalarField(g, np.zeros((3, 3, 3)))
    with pytest.raises(ShapeError):
        VectorField3(g, np.zeros((1, 3, 3, 3)))


def test_fields_are_immutable_copies():
    g = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0)
    arr = np.ones(g.shape)
    f = ScalarField(g, arr)
    arr[:] = 5.0
    assert f.max_abs() == 1.0
    with pytest.raises(ValueError):
        f.values[0, 0, 0, 0] = 2.0


def test_field_arithmetic_and_grid_mismatch():
    g = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0)
    h = SpacetimeGrid((0, 0, 0), (3, 3, 3), 0.5)
    a = ScalarField(g, np.ones(g.shape))
    assert (a + a * 2.0).max_abs() == 3.0
    with pytest.raises(ShapeError):
        a + ScalarField(h, np.ones(h.shape))
    with pytest.raises(ShapeError):
        check_same_grid(a, ScalarField(h, np.ones(h.shape)))


def test_is_real_relative():
    g = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0)
    f = ScalarField(g, np.full(g.shape, 1e6 + 1e-8j))
    assert is_real(f, 1e-12)
    assert not is_real(ScalarField(g, np.full(g.shape, 1.0 + 1e-3j)))


def test_sample_rejects_non_finite():
    g = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0)
    with pytest.raises(PreconditionError, match=r"index \(0, 0, 0, 0\)"):
        with np.errstate(divide="ignore"):
            sample_scalar(g, lambda t, x, y, z: 1.0 / x)


def test_sample_vector_components():
    g = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0, nt=2)
    v = sample_vector(g, lambda t, x, y, z: (x, y, z + t))
    assert v.values[2, 1, 0, 0, 1] == 2.0


def test_field_roundtrip(tmp_path):
    g = SpacetimeGrid((0.5, 0, 0), (3, 3, 4), 0.25, dt=0.1, nt=3, t0=-1.0)
    vals = np.arange(3 * np.prod(g.shape)).reshape(3, *g.shape) * (1 + 0.5j)
    f = VectorField3(g, vals)
    p = tmp_path / "f.emf"
    save_field(p, f, units="si", name="E")
    back, header = load_field(p)
    assert isinstance(back, VectorField3)
    assert back.grid == g
    np.testing.assert_array_equal(back.values, f.values)
    assert header["units"] == "si" and header["dtype"] == "<c16"
    first = p.read_bytes().split(b"\n", 1)[0]
    assert json.loads(first)["order"] == "component,t,x,y,z"


def test_field_truncated_file(tmp_path):
    g = SpacetimeGrid((0, 0, 0), (3, 3, 3), 1.0)
    p = tmp_path / "s.emf"
    save_field(p, ScalarField(g, np.ones(g.shape)))
    p.write_bytes(p.read_bytes()[:-16])
    with pytest.raises(ShapeError):
        load_field(p)


def test_field_bad_header(tmp_path):
    p = tmp_path / "x.emf"
    p.write_bytes(b'{"format": "other"}\n')
    with pytest.raises(ConfigError):
        load_field(p)


def test_grid_needs_three_nodes():
    with pytest.raises(ShapeError):
        SpacetimeGrid((0, 0, 0), (2, 3, 3), 1.0)

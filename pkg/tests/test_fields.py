import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stackfault.fields import (DisplacementField, LatticeField, SpinField, VectorField, affine_interpolate,
                               angular_lift, double, dump_csv, exp_field, geodesic_distance, load_csv,
                               restrict_sublattice)
from stackfault.lattice import SUBLATTICES, Disc, LatticeGeometry, Rectangle


def _field(rng, n=6, lo=(-2, 1), h=0.25):
    return DisplacementField(LatticeGeometry(h), lo, rng.normal(size=(n, n)))


def test_at_raises_on_missing_site(rng):
    u = _field(rng)
    assert u[(-2, 1)] == u.values[0, 0]
    with pytest.raises(KeyError):
        u.at(np.array([[100, 100]]))


def test_masked_sites_are_undefined():
    vals = np.array([[0.0, np.nan], [1.0, 2.0]])
    u = DisplacementField(LatticeGeometry(1.0), (0, 0), vals)
    assert u.sites().tolist() == [[0, 0], [1, 0], [1, 1]]
    with pytest.raises(KeyError):
        u.at([[0, 1]])


def test_non_finite_defined_values_rejected():
    with pytest.raises(ValueError):
        LatticeField(LatticeGeometry(1.0), (0, 0), np.array([[np.inf]]), np.array([[True]]))


def test_from_function_samples_positions():
    g = LatticeGeometry(0.5, (0.1, 0.0))
    u = DisplacementField.from_function(Rectangle(0, 1, 0, 1), g, lambda x, y: x + 10 * y)
    x, y = u.positions()
    assert np.allclose(u.values, x + 10 * y)
    r = DisplacementField.from_function(Disc((0.0, 0.0), 0.6), g, lambda x, y: x, restrict=True)
    assert all(np.hypot(*g.position(s)) < 0.6 for s in r.sites())


def test_spin_field_angles_are_reduced():
    v = SpinField(LatticeGeometry(1.0), (0, 0), np.array([[-1e-300, 7.0]]))
    assert np.all((v.values >= 0) & (v.values < 2 * math.pi))
    assert np.allclose(v.vectors(), np.exp(1j * np.array([[0.0, 7.0]])))


def test_exp_field_and_double(rng):
    u = _field(rng)
    assert np.allclose(exp_field(u, 4 * math.pi).vectors(), exp_field(double(u)).vectors())
    assert np.allclose(VectorField.from_spin(exp_field(u)).values, np.exp(2j * math.pi * u.values))


def test_add_and_scale(rng):
    u = _field(rng)
    assert np.array_equal((u + u).values, u.scaled(2.0).values)
    with pytest.raises(ValueError):
        u + _field(rng, lo=(0, 0))


@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(2, 7), st.integers(2, 7))
def test_restrict_sublattice_indices(l1, l2, n1, n2):
    idx = np.arange(n1 * n2, dtype=float).reshape(n1, n2)
    f = LatticeField(LatticeGeometry(0.5), (l1, l2), idx)
    for tag in SUBLATTICES:
        r = restrict_sublattice(f, tag)
        for k in r.sites():
            base = 2 * k + np.array(tag.shift)
            assert f[tuple(base)] == r[tuple(k)]
        # every base site of the tag appears exactly once
        assert len(r.sites()) == int(tag.select(f.sites()).sum())


def test_geodesic_distance_range():
    assert math.isclose(float(geodesic_distance(0.0, math.pi)), math.pi)
    assert math.isclose(float(geodesic_distance(0.1, 2 * math.pi - 0.1)), 0.2)


def test_angular_lift_inverts_exp():
    v = SpinField(LatticeGeometry(1.0), (0, 0), np.array([[0.5, 3.0, 6.0]]))
    u = angular_lift(v)
    assert np.all((u.values >= 0) & (u.values < 1))
    assert np.allclose(exp_field(u).values, v.values)


def test_csv_round_trip_is_exact(rng):
    u = _field(rng)
    u.mask[1, 2] = False
    text = dump_csv(u)
    assert text.splitlines()[0] == "i1,i2,value"
    w = load_csv("# comment\n" + text, u.geom)
    assert np.array_equal(w.at(u.sites()), u.at(u.sites()))
    assert len(w.sites()) == len(u.sites())


def test_affine_interpolant_reproduces_nodes_and_identity(rng):
    g = LatticeGeometry(0.125)
    v = SpinField(g, (0, 0), rng.uniform(0, 2 * math.pi, size=(9, 9)))
    A = Rectangle(0.0, 1.0, 0.0, 1.0)
    I = affine_interpolate(v, A)
    x, y = v.positions()
    inner = (slice(0, 8), slice(0, 8))
    assert np.allclose(I(x[inner], y[inner]), v.vectors()[inner])
    z = v.vectors()
    e = (np.abs(np.diff(z, axis=0)) ** 2)
    f = (np.abs(np.diff(z, axis=1)) ** 2)
    edges = e[:, :-1] + e[:, 1:] + f[:-1, :] + f[1:, :]
    assert np.allclose(I.dirichlet(), 0.5 * edges.ravel(), rtol=0, atol=1e-12)


def test_affine_interpolant_gradient_by_differences(rng):
    g = LatticeGeometry(0.25)
    v = SpinField(g, (0, 0), rng.uniform(0, 2 * math.pi, size=(5, 5)))
    I = affine_interpolate(v, Rectangle(0.0, 1.0, 0.0, 1.0))
    gp, gm = I.gradients(np.array([[1, 1]]))
    h = 1e-7
    # a point inside T+ (above the diagonal) and one inside T-
    for (px, py), gr in (((0.30, 0.45), gp[0]), ((0.45, 0.30), gm[0])):
        dx = (I(np.array(px + h), np.array(py)) - I(np.array(px - h), np.array(py))) / (2 * h)
        dy = (I(np.array(px), np.array(py + h)) - I(np.array(px), np.array(py - h))) / (2 * h)
        assert np.allclose([dx, dy], gr, atol=1e-6)


def test_affine_interpolate_needs_all_corners():
    g = LatticeGeometry(0.5)
    vals = np.zeros((3, 3))
    vals[1, 1] = np.nan
    v = SpinField(g, (0, 0), vals, np.isfinite(vals))
    with pytest.raises(KeyError):
        affine_interpolate(v, Rectangle(0.0, 1.0, 0.0, 1.0))

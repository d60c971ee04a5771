import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stackfault.lattice import (SUBLATTICES, Annulus, Disc, LatticeGeometry, Punctured, Rectangle, SublatticeTag,
                                bonds, cell_barycenters, cells, discrete_boundary, domain_from_dict, sites,
                                sublattice_geometry, triangles)


def test_geometry_rejects_bad_spacing():
    for h in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            LatticeGeometry(h)


def test_sites_of_unit_disc_at_half_spacing():
    s = sites(Disc((0.0, 0.0), 1.0), LatticeGeometry(0.5))
    # open disc: the four sites at distance exactly 1 are excluded
    assert len(s) == 9
    assert s.tolist() == sorted(s.tolist())


def test_sites_are_read_only():
    s = sites(Disc((0.0, 0.0), 1.0), LatticeGeometry(0.25))
    with pytest.raises(ValueError):
        s[0, 0] = 7


def test_unbounded_domain_rejected():
    with pytest.raises(ValueError):
        sites(Rectangle(0.0, math.inf, 0.0, 1.0), LatticeGeometry(0.5))


def test_bonds_lie_inside_and_have_requested_step():
    D = Disc((0.1, -0.2), 0.9)
    g = LatticeGeometry(0.125)
    for direction in (0, 1):
        for span in (1, 2):
            a, b = bonds(D, g, direction, span)
            step = np.zeros(2, dtype=int)
            step[direction] = span
            assert np.all(b - a == step)
            pa, pb = g.position(a), g.position(b)
            assert np.all(D.contains(pa[:, 0], pa[:, 1])) and np.all(D.contains(pb[:, 0], pb[:, 1]))


def test_bond_argument_errors():
    D = Disc((0.0, 0.0), 1.0)
    g = LatticeGeometry(0.5)
    with pytest.raises(ValueError):
        bonds(D, g, 2)
    with pytest.raises(ValueError):
        bonds(D, g, 0, 3)


def test_annulus_excludes_bonds_crossing_the_hole():
    A = Annulus((0.0, 0.0), 0.3, 1.0)
    g = LatticeGeometry(0.25)
    a, b = bonds(A, g, 0)
    # (-0.5, 0)-(-0.25, 0) ends in the hole; (-0.75, 0)-(-0.5, 0) stays in the annulus
    assert not any((a == [-2, 0]).all(1) & (b == [-1, 0]).all(1))
    assert any((a == [-3, 0]).all(1) & (b == [-2, 0]).all(1))


def test_cells_inside_rectangle():
    g = LatticeGeometry(0.25)
    c = cells(Rectangle(0.0, 1.0, 0.0, 0.5), g)
    assert len(c) == 4 * 2
    bc = cell_barycenters(c, g)
    assert np.allclose(bc.min(0), [0.125, 0.125])


def test_triangles_split_the_cell():
    tp, tm = triangles((2, 3), LatticeGeometry(0.5))
    assert tp.tolist() == [[1.0, 1.5], [1.0, 2.0], [1.5, 2.0]]
    assert tm.tolist() == [[1.0, 1.5], [1.5, 1.5], [1.5, 2.0]]


def test_sublattice_tags_partition_the_lattice():
    idx = np.array([[i, j] for i in range(-3, 4) for j in range(-3, 4)])
    counts = sum(t.select(idx).astype(int) for t in SUBLATTICES)
    assert np.all(counts == 1)
    assert np.all(SublatticeTag.EVEN.select(idx) == (idx[:, 1] % 2 == 0))
    with pytest.raises(ValueError):
        SublatticeTag.EVEN.shift


def test_sublattice_geometry_maps_index_k_to_2k_plus_shift():
    g = LatticeGeometry(0.1, (0.3, -0.2))
    for t in SUBLATTICES:
        g2 = sublattice_geometry(g, t)
        k = np.array([[2, -1], [0, 5]])
        assert np.allclose(g2.position(k), g.position(2 * k + np.array(t.shift)))


def test_single_boundary_of_rectangle_is_its_perimeter():
    g = LatticeGeometry(0.25)
    b = discrete_boundary(Rectangle(0.0, 1.0, 0.0, 1.0), g, "single")
    assert len(b) == 16
    assert all(i in (0, 4) or j in (0, 4) for i, j in b)


def test_double_boundary_contains_coarse_edge_midpoints():
    g = LatticeGeometry(0.25)
    b = {tuple(v) for v in discrete_boundary(Rectangle(0.0, 1.0, 0.0, 1.0), g, "double")}
    # s0 complex: vertices (0,0),(2,0),(4,0) with the midpoints (1,0),(3,0)
    assert {(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)} <= b
    # the s3 complex has only one cell [1,3]^2, whose boundary includes (2,1)
    assert (2, 1) in b


def test_boundary_of_too_small_domain_is_empty():
    assert len(discrete_boundary(Disc((0.0, 0.0), 0.1), LatticeGeometry(0.5))) == 0
    with pytest.raises(ValueError):
        discrete_boundary(Disc((0.0, 0.0), 1.0), LatticeGeometry(0.5), "triple")


def test_punctured_validation():
    base = Disc((0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        Punctured(base, ((0.0, 0.0), (0.1, 0.0)), 0.2)
    with pytest.raises(ValueError):
        Punctured(base, ((0.95, 0.0),), 0.1)
    P = Punctured(base, ((0.0, 0.0),), 0.25)
    assert not bool(P.contains(0.1, 0.0)) and bool(P.contains(0.5, 0.0))


def test_domain_from_dict_and_unknown_keys():
    d = domain_from_dict({"shape": "rectangle", "bounds": [0, 1, 0, 2]})
    assert isinstance(d, Rectangle)
    with pytest.raises(ValueError):
        domain_from_dict({"shape": "disc", "radius": 1, "colour": "red"})
    with pytest.raises(ValueError):
        domain_from_dict({"shape": "hexagon"})


@given(st.floats(-0.9, 0.9), st.sampled_from([0.5, 0.25, 0.125]))
def test_horizontal_section_is_disc_chord(y, h):
    D = Disc((0.0, 0.0), 1.0)
    (a, b), = D.horizontal_section(y)
    assert math.isclose(b, math.sqrt(1 - y * y)) and math.isclose(a, -b)


@given(st.integers(1, 5), st.integers(1, 5), st.sampled_from([0.5, 0.25]))
def test_sites_count_on_rectangle(n1, n2, h):
    R = Rectangle(0.0, n1 * h, 0.0, n2 * h)
    assert len(sites(R, LatticeGeometry(h))) == (n1 + 1) * (n2 + 1)
    a, _ = bonds(R, LatticeGeometry(h), 0)
    assert len(a) == n1 * (n2 + 1)

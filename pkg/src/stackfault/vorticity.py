"""Discrete derivative calculus: projection onto Z, elastic increments,
plaquette circulation, vorticity measures, winding numbers and flat distance.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .fields import DisplacementField, LatticeField, restrict_sublattice
from .lattice import Domain, SublatticeTag, bonds, cell_barycenters

__all__ = [
    "VorticityMeasure",
    "project_int",
    "elastic_increment",
    "elastic_increments",
    "plaquette_circulation",
    "circulation_grid",
    "vorticity_measure",
    "winding_number",
    "flat_distance",
    "dipole_free_representative",
]


def project_int(t):
    """Nearest integer with ties resolved downward: ``ceil(t - 1/2)``."""
    r = np.ceil(np.asarray(t, dtype=float) - 0.5)
    if np.ndim(r) == 0:
        return int(r)
    return r.astype(np.int64)


@dataclass
class VorticityMeasure:
    """Finite sum of Dirac charges ``sum_h d_h delta_{x_h}``.

    Parameters
    ----------
    points : ndarray, shape (n, 2)
    charges : ndarray of int, shape (n,)
    domain : Domain, optional
    """

    points: np.ndarray
    charges: np.ndarray
    domain: Domain | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.charges = np.asarray(self.charges, dtype=np.int64).reshape(-1)
        if len(self.points) != len(self.charges):
            raise ValueError("points and charges differ in length")
        if np.any(self.charges == 0):
            raise ValueError("charges must be nonzero")
        if len(np.unique(self.points, axis=0)) != len(self.points):
            raise ValueError("points must be pairwise distinct")

    @classmethod
    def from_pairs(cls, pairs, domain=None) -> "VorticityMeasure":
        """Build from ``[((x, y), d), ...]`` merging coincident points and dropping zeros."""
        acc: dict[tuple[float, float], int] = {}
        for p, d in pairs:
            key = (float(p[0]), float(p[1]))
            acc[key] = acc.get(key, 0) + int(d)
        items = [(k, d) for k, d in acc.items() if d != 0]
        pts = np.array([k for k, _ in items], dtype=float).reshape(-1, 2)
        chg = np.array([d for _, d in items], dtype=np.int64)
        return cls(pts, chg, domain)

    @classmethod
    def empty(cls, domain=None):
        return cls(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), domain)

    def __len__(self):
        return len(self.charges)

    @property
    def total(self) -> int:
        return int(self.charges.sum())

    @property
    def mass(self) -> int:
        return int(np.abs(self.charges).sum())

    def __neg__(self):
        return VorticityMeasure(self.points.copy(), -self.charges, self.domain)

    def __sub__(self, other: "VorticityMeasure") -> "VorticityMeasure":
        pairs = list(zip(map(tuple, self.points), self.charges))
        pairs += list(zip(map(tuple, other.points), -other.charges))
        return VorticityMeasure.from_pairs(pairs, self.domain)

    def restrict(self, domain: Domain) -> "VorticityMeasure":
        if len(self) == 0:
            return VorticityMeasure.empty(domain)
        keep = domain.contains(self.points[:, 0], self.points[:, 1])
        return VorticityMeasure(self.points[keep], self.charges[keep], domain)

    def canonical(self):
        """Sorted (x, y, d) tuples for exact comparison."""
        return sorted((float(p[0]), float(p[1]), int(d)) for p, d in zip(self.points, self.charges))

    def __eq__(self, other):
        if not isinstance(other, VorticityMeasure):
            return NotImplemented
        return self.canonical() == other.canonical()

    def to_json(self) -> str:
        return json.dumps([{"x": x, "y": y, "charge": d} for x, y, d in self.canonical()])

    @classmethod
    def from_json(cls, text: str, domain=None) -> "VorticityMeasure":
        items = json.loads(text)
        return cls.from_pairs((((it["x"], it["y"]), it["charge"]) for it in items), domain)


# ---------------------------------------------------------------------------
# increments


def _elastic_forward(t):
    """Elastic part t - P_Z(t) of a forward increment, in (-1/2, 1/2]."""
    return t - np.ceil(t - 0.5)


def elastic_increment(u: LatticeField, i, j) -> float:
    """Elastic part of ``u(j) - u(i)`` for nearest neighbours i, j.

    For i <= j this is ``du - P_Z(du)``, for j <= i it is
    ``du + P_Z(du(j, i))``; in both cases its modulus is dist(du, Z).
    """
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    d = j - i
    if not (np.abs(d).sum() == 1):
        raise ValueError(f"sites {tuple(i)} and {tuple(j)} are not nearest neighbours")
    ui, uj = float(u[i]), float(u[j])
    if d.sum() > 0:
        t = uj - ui
        return t - project_int(t)
    t = ui - uj
    return -(t - project_int(t))


def elastic_increments(u: LatticeField, domain: Domain, direction: int) -> np.ndarray:
    """Forward elastic increments on the span-1 bonds of ``domain`` along ``direction``."""
    a, b = bonds(domain, u.geom, direction, 1)
    return _elastic_forward(u.at(b) - u.at(a))


def _proj_grid(v, axis):
    d = np.diff(v, axis=axis)
    return np.ceil(d - 0.5)


def circulation_grid(u: LatticeField) -> tuple[np.ndarray, np.ndarray]:
    """Circulation of every window cell whose four corners are defined.

    The circulation equals ``-(P(b) + P(r) - P(t) - P(l))`` with b, r, t, l the
    raw increments on the bottom, right, top and left edges; the sum of the
    raw increments telescopes to zero, so the integer form is exact.

    Returns
    -------
    circ : ndarray of int64, shape (n1-1, n2-1)
        Indexed by cell anchor minus ``u.lo``.
    valid : ndarray of bool
    """
    v = u.values
    ph = _proj_grid(v, 0)  # horizontal edges, shape (n1-1, n2)
    pv = _proj_grid(v, 1)  # vertical edges, shape (n1, n2-1)
    circ = -(ph[:, :-1] + pv[1:, :] - ph[:, 1:] - pv[:-1, :])
    m = u.mask
    valid = m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]
    return np.where(valid, circ, 0).astype(np.int64), valid


def plaquette_circulation(u: LatticeField, cell) -> int:
    """Sum of the four counterclockwise elastic increments around cell ``i + [0, eps]^2``."""
    i = np.asarray(cell, dtype=np.int64)
    corners = [i, i + (1, 0), i + (1, 1), i + (0, 1)]
    if not np.all(u.defined(np.array(corners))):
        raise KeyError(f"missing corner of cell {tuple(int(t) for t in i)}")
    return winding_number(u, corners)


def vorticity_measure(u: LatticeField, domain: Domain,
                      tag: SublatticeTag = SublatticeTag.ALL) -> VorticityMeasure:
    """Charges at barycenters of cells with nonzero circulation, restricted to ``domain``.

    ``tag`` in s0..s3 selects the 2eps-cells of the shifted sublattice.  Cells
    with an undefined corner are skipped.
    """
    if tag is not SublatticeTag.ALL:
        u = restrict_sublattice(u, tag)
    if min(u.shape) < 2:
        return VorticityMeasure.empty(domain)
    circ, valid = circulation_grid(u)
    idx = np.argwhere(valid & (circ != 0))
    anchors = idx + np.asarray(u.lo)
    bary = cell_barycenters(anchors, u.geom)
    d = circ[idx[:, 0], idx[:, 1]]
    keep = domain.contains(bary[:, 0], bary[:, 1]) if len(bary) else np.zeros(0, dtype=bool)
    return VorticityMeasure(bary[keep], d[keep], domain)


def winding_number(u: LatticeField, loop) -> int:
    """Sum of elastic increments along a closed loop of nearest-neighbour sites.

    The loop is given as an ordered cycle ``[p0, p1, ..., p_{n-1}]``; the last
    step returns to ``p0``.  The result is computed as the integer
    ``-sum of signed projections`` which equals the increment sum exactly.
    """
    pts = np.asarray(loop, dtype=np.int64).reshape(-1, 2)
    if len(pts) < 2:
        return 0
    nxt = np.roll(pts, -1, axis=0)
    step = nxt - pts
    if not np.all(np.abs(step).sum(axis=1) == 1):
        raise ValueError("loop has a step that is not between nearest neighbours")
    vals = u.at(pts)
    nv = u.at(nxt)
    fwd = step.sum(axis=1) > 0
    # forward step i -> j: -P(u_j - u_i); backward step: +P(u_i - u_j)
    t = np.where(fwd, nv - vals, vals - nv)
    p = np.ceil(t - 0.5)
    return int(-np.sum(np.where(fwd, p, -p)))


# ---------------------------------------------------------------------------
# flat distance


def _expand_units(mu: VorticityMeasure):
    pos, neg = [], []
    for p, d in zip(mu.points, mu.charges):
        (pos if d > 0 else neg).extend([p] * abs(int(d)))
    return np.array(pos).reshape(-1, 2), np.array(neg).reshape(-1, 2)


def flat_distance(mu: VorticityMeasure, nu: VorticityMeasure, domain: Domain) -> float:
    """Flat distance between two finite Dirac sums in ``domain``.

    Evaluated as the min-cost cancellation of the unit charges of ``mu - nu``:
    a +1 and a -1 unit cancel at cost ``min(|x - y|, 2)``; a single unit is
    annihilated at cost ``min(1, dist(x, boundary))``.  The assignment is
    solved exactly with dummy rows/columns for annihilation.
    """
    diff = mu - nu
    pos, neg = _expand_units(diff)
    p, n = len(pos), len(neg)
    if p + n == 0:
        return 0.0
    ann_pos = np.minimum(1.0, domain.boundary_distance(pos[:, 0], pos[:, 1])) if p else np.zeros(0)
    ann_neg = np.minimum(1.0, domain.boundary_distance(neg[:, 0], neg[:, 1])) if n else np.zeros(0)
    big = 1e6
    cost = np.zeros((p + n, n + p))
    if p and n:
        d = np.hypot(pos[:, None, 0] - neg[None, :, 0], pos[:, None, 1] - neg[None, :, 1])
        cost[:p, :n] = np.minimum(d, 2.0)
    # positive unit k matched with its own dummy column n + k
    if p:
        dummy = np.full((p, p), big)
        np.fill_diagonal(dummy, ann_pos)
        cost[:p, n:] = dummy
    # negative unit l matched with its own dummy row p + l
    if n:
        dummy = np.full((n, n), big)
        np.fill_diagonal(dummy, ann_neg)
        cost[p:, :n] = dummy
    rows, cols = linear_sum_assignment(cost)
    return float(math.fsum(cost[rows, cols]))


# ---------------------------------------------------------------------------
# dipole-free representative


def dipole_free_representative(u: DisplacementField, U: Domain) -> DisplacementField:
    """Remove the integer parts of horizontal increments inside ``U``.

    On every connected run of horizontal bonds of ``U`` the field is anchored
    at the leftmost site and ``P_Z`` of each increment is subtracted
    cumulatively, so that ``u_tilde - u`` is integer valued and horizontal
    increments of ``u_tilde`` equal the elastic increments of ``u``.
    Sites of ``u`` off these runs are left unchanged.
    """
    a, b = bonds(U, u.geom, 0, 1)
    out = u.copy()
    if len(a) == 0:
        return out
    p = project_int(u.at(b) - u.at(a)).astype(float)
    # bonds are sorted by (i1, i2); regroup by row then column
    order = np.lexsort((a[:, 0], a[:, 1]))
    a, p = a[order], p[order]
    new_run = np.ones(len(a), dtype=bool)
    new_run[1:] = (a[1:, 1] != a[:-1, 1]) | (a[1:, 0] != a[:-1, 0] + 1)
    run_id = np.cumsum(new_run) - 1
    csum = np.cumsum(p)
    base = np.zeros(run_id[-1] + 1)
    first = np.flatnonzero(new_run)
    base[:] = csum[first] - p[first]
    shift = csum - base[run_id]
    tgt = a + (1, 0)
    i1, i2 = out.local(tgt)
    out.values[i1, i2] = u.values[i1, i2] - shift
    return out

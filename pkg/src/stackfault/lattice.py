"""Geometry of the square lattice eps*Z^2, its cells and shifted sublattices.

Sites are stored as exact integer pairs ``(i1, i2)``; the physical position of
a site is ``offset + spacing * (i1, i2)``.  Domains answer membership,
boundary-distance and horizontal-section queries, and all enumerations are
vectorized scans of the integer bounding box.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "LatticeGeometry",
    "SublatticeTag",
    "SUBLATTICE_SHIFTS",
    "Domain",
    "Disc",
    "Rectangle",
    "Annulus",
    "Punctured",
    "domain_from_dict",
    "sites",
    "bonds",
    "cells",
    "cell_barycenters",
    "triangles",
    "discrete_boundary",
    "sublattice_geometry",
]


@dataclass(frozen=True)
class LatticeGeometry:
    """Lattice ``offset + spacing * Z^2``.

    Parameters
    ----------
    spacing : float
        Lattice constant (eps), strictly positive.
    offset : tuple of float
        Physical position of the site with index (0, 0).
    """

    spacing: float
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError(f"spacing must be positive and finite, got {self.spacing}")
        object.__setattr__(self, "offset", (float(self.offset[0]), float(self.offset[1])))

    def position(self, idx) -> np.ndarray:
        """Physical coordinates of integer sites, shape ``(..., 2)``."""
        idx = np.asarray(idx)
        return np.asarray(self.offset) + self.spacing * idx

    def index_range(self, lo: float, hi: float, axis: int) -> tuple[int, int]:
        """Inclusive integer range of indices whose coordinate lies in [lo, hi]."""
        off = self.offset[axis]
        return math.ceil((lo - off) / self.spacing), math.floor((hi - off) / self.spacing)


class SublatticeTag(enum.Enum):
    S0 = "s0"
    S1 = "s1"
    S2 = "s2"
    S3 = "s3"
    EVEN = "even"
    ODD = "odd"
    ALL = "all"

    @property
    def shift(self) -> tuple[int, int]:
        if self not in SUBLATTICE_SHIFTS:
            raise ValueError(f"{self} is not one of s0..s3")
        return SUBLATTICE_SHIFTS[self]

    def select(self, idx: np.ndarray) -> np.ndarray:
        """Boolean mask of the integer sites (on the base lattice) carrying this tag."""
        idx = np.asarray(idx)
        p1 = np.mod(idx[..., 0], 2)
        p2 = np.mod(idx[..., 1], 2)
        if self is SublatticeTag.ALL:
            return np.ones(idx.shape[:-1], dtype=bool)
        if self is SublatticeTag.EVEN:
            return p2 == 0
        if self is SublatticeTag.ODD:
            return p2 == 1
        s1, s2 = self.shift
        return (p1 == s1) & (p2 == s2)


SUBLATTICE_SHIFTS = {
    SublatticeTag.S0: (0, 0),
    SublatticeTag.S1: (1, 0),
    SublatticeTag.S2: (0, 1),
    SublatticeTag.S3: (1, 1),
}

SUBLATTICES = (SublatticeTag.S0, SublatticeTag.S1, SublatticeTag.S2, SublatticeTag.S3)


def sublattice_geometry(geom: LatticeGeometry, tag: SublatticeTag) -> LatticeGeometry:
    """Geometry of ``2 eps Z^2 + eps s_j`` so that index k maps to base index 2k + s_j."""
    s = tag.shift
    return LatticeGeometry(
        2.0 * geom.spacing,
        (geom.offset[0] + geom.spacing * s[0], geom.offset[1] + geom.spacing * s[1]),
    )


# ---------------------------------------------------------------------------
# domains


def _point_segment_distance(px, py, x0, y0, x1, y1):
    dx, dy = x1 - x0, y1 - y0
    ll = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(ll > 0, ((px - x0) * dx + (py - y0) * dy) / np.where(ll > 0, ll, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(x0 + t * dx - px, y0 + t * dy - py)


def _point_square_distance(px, py, x0, y0, side):
    """Distance from (px, py) to the closed square [x0, x0+side] x [y0, y0+side]."""
    qx = np.clip(px, x0, x0 + side)
    qy = np.clip(py, y0, y0 + side)
    return np.hypot(qx - px, qy - py)


class Domain:
    """Bounded planar region; subclasses are frozen dataclasses."""

    is_open: bool = True

    def bbox(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def contains(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def segment_inside(self, x0, y0, x1, y1) -> np.ndarray:
        """Whether the closed segments [p0, p1] lie in the domain."""
        raise NotImplementedError

    def square_inside(self, x0, y0, side) -> np.ndarray:
        """Whether the closed squares anchored at (x0, y0) lie in the domain."""
        raise NotImplementedError

    def horizontal_section(self, y: float) -> list[tuple[float, float]]:
        """Open intervals of the line {x2 = y} inside the domain interior, left to right."""
        raise NotImplementedError

    def check_bounded(self):
        b = self.bbox()
        if not all(math.isfinite(v) for v in b):
            raise ValueError(f"unbounded domain {self!r}")


@dataclass(frozen=True)
class Disc(Domain):
    """Open disc B_r(center)."""

    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    is_open = True

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius >= 0:
            raise ValueError("radius must be non-negative")

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r

    def contains(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) < self.radius

    def boundary_distance(self, x, y):
        return np.abs(self.radius - np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]))

    def segment_inside(self, x0, y0, x1, y1):
        return self.contains(x0, y0) & self.contains(x1, y1)

    def square_inside(self, x0, y0, side):
        return (
            self.contains(x0, y0)
            & self.contains(x0 + side, y0)
            & self.contains(x0, y0 + side)
            & self.contains(x0 + side, y0 + side)
        )

    def horizontal_section(self, y):
        h = self.radius**2 - (y - self.center[1]) ** 2
        if h <= 0:
            return []
        w = math.sqrt(h)
        return [(self.center[0] - w, self.center[0] + w)]


@dataclass(frozen=True)
class Rectangle(Domain):
    """Closed axis-aligned rectangle [x0, x1] x [y0, y1]."""

    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0
    is_open = False

    def bbox(self):
        return self.x0, self.x1, self.y0, self.y1

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    def boundary_distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = self.contains(x, y)
        din = np.minimum.reduce([x - self.x0, self.x1 - x, y - self.y0, self.y1 - y])
        dx = np.maximum.reduce([self.x0 - x, np.zeros_like(x), x - self.x1])
        dy = np.maximum.reduce([self.y0 - y, np.zeros_like(y), y - self.y1])
        return np.where(inside, din, np.hypot(dx, dy))

    def segment_inside(self, x0, y0, x1, y1):
        return self.contains(x0, y0) & self.contains(x1, y1)

    def square_inside(self, x0, y0, side):
        return self.contains(x0, y0) & self.contains(x0 + side, y0 + side)

    def horizontal_section(self, y):
        if self.y0 < y < self.y1 and self.x0 < self.x1:
            return [(self.x0, self.x1)]
        return []


@dataclass(frozen=True)
class Annulus(Domain):
    """Open annulus A_{r,R}(center) = {r < |x - center| < R}."""

    center: tuple[float, float] = (0.0, 0.0)
    inner: float = 0.5
    outer: float = 1.0
    is_open = True

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not 0 <= self.inner < self.outer:
            raise ValueError("annulus needs 0 <= inner < outer")

    def bbox(self):
        cx, cy = self.center
        r = self.outer
        return cx - r, cx + r, cy - r, cy + r

    def _r(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1])

    def contains(self, x, y):
        r = self._r(x, y)
        return (r > self.inner) & (r < self.outer)

    def boundary_distance(self, x, y):
        r = self._r(x, y)
        return np.minimum(np.abs(r - self.inner), np.abs(self.outer - r))

    def segment_inside(self, x0, y0, x1, y1):
        outer = (self._r(x0, y0) < self.outer) & (self._r(x1, y1) < self.outer)
        d = _point_segment_distance(self.center[0], self.center[1], x0, y0, x1, y1)
        return outer & (d > self.inner)

    def square_inside(self, x0, y0, side):
        outer = Disc(self.center, self.outer).square_inside(x0, y0, side)
        d = _point_square_distance(self.center[0], self.center[1], x0, y0, side)
        return outer & (d > self.inner)

    def horizontal_section(self, y):
        full = Disc(self.center, self.outer).horizontal_section(y)
        return _subtract_holes(full, [(self.center, self.inner)], y)


def _subtract_holes(intervals, holes, y):
    out = list(intervals)
    for c, r in holes:
        h = r**2 - (y - c[1]) ** 2
        if h < 0:
            continue
        w = math.sqrt(h)
        a, b = c[0] - w, c[0] + w
        nxt = []
        for lo, hi in out:
            if b <= lo or a >= hi:
                nxt.append((lo, hi))
                continue
            if lo < a:
                nxt.append((lo, a))
            if b < hi:
                nxt.append((b, hi))
        out = nxt
    return out


@dataclass(frozen=True)
class Punctured(Domain):
    """Base domain minus the closed discs of radius sigma around ``centers``.

    The discs must be pairwise disjoint and contained in the base domain.
    """

    base: Domain = field(default_factory=Disc)
    centers: tuple[tuple[float, float], ...] = ()
    sigma: float = 0.1
    is_open = True

    def __post_init__(self):
        cs = tuple((float(c[0]), float(c[1])) for c in self.centers)
        object.__setattr__(self, "centers", cs)
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        for k, c in enumerate(cs):
            if float(self.base.boundary_distance(c[0], c[1])) < self.sigma or not bool(
                self.base.contains(c[0], c[1])
            ):
                raise ValueError(f"disc of radius {self.sigma} around {c} is not inside the base domain")
            for c2 in cs[k + 1:]:
                if math.dist(c, c2) < 2 * self.sigma:
                    raise ValueError(f"discs around {c} and {c2} overlap")

    def bbox(self):
        return self.base.bbox()

    def contains(self, x, y):
        m = self.base.contains(x, y)
        for c in self.centers:
            m = m & (np.hypot(np.asarray(x) - c[0], np.asarray(y) - c[1]) > self.sigma)
        return m

    def boundary_distance(self, x, y):
        d = self.base.boundary_distance(x, y)
        for c in self.centers:
            d = np.minimum(d, np.abs(np.hypot(np.asarray(x) - c[0], np.asarray(y) - c[1]) - self.sigma))
        return d

    def segment_inside(self, x0, y0, x1, y1):
        m = self.base.segment_inside(x0, y0, x1, y1)
        for c in self.centers:
            m = m & (_point_segment_distance(c[0], c[1], x0, y0, x1, y1) > self.sigma)
        return m

    def square_inside(self, x0, y0, side):
        m = self.base.square_inside(x0, y0, side)
        for c in self.centers:
            m = m & (_point_square_distance(c[0], c[1], x0, y0, side) > self.sigma)
        return m

    def horizontal_section(self, y):
        return _subtract_holes(self.base.horizontal_section(y), [(c, self.sigma) for c in self.centers], y)


def domain_from_dict(spec: dict) -> Domain:
    """Build a domain from a JSON-style descriptor.

    Examples: ``{"shape": "disc", "center": [0, 0], "radius": 1}``,
    ``{"shape": "rectangle", "bounds": [x0, x1, y0, y1]}``,
    ``{"shape": "annulus", "center": [0, 0], "inner": 0.5, "outer": 1}``.
    """
    spec = dict(spec)
    shape = spec.pop("shape", None)
    if shape == "disc":
        allowed = {"center", "radius"}
        dom = Disc(tuple(spec.get("center", (0.0, 0.0))), float(spec["radius"]))
    elif shape == "rectangle":
        allowed = {"bounds"}
        dom = Rectangle(*map(float, spec["bounds"]))
    elif shape == "annulus":
        allowed = {"center", "inner", "outer"}
        dom = Annulus(tuple(spec.get("center", (0.0, 0.0))), float(spec["inner"]), float(spec["outer"]))
    else:
        raise ValueError(f"unknown domain shape {shape!r}")
    extra = set(spec) - allowed
    if extra:
        raise ValueError(f"unknown domain keys {sorted(extra)}")
    dom.check_bounded()
    return dom


# ---------------------------------------------------------------------------
# enumeration


def _index_box(domain: Domain, geom: LatticeGeometry, pad: int = 0):
    domain.check_bounded()
    xmin, xmax, ymin, ymax = domain.bbox()
    a1, b1 = geom.index_range(xmin, xmax, 0)
    a2, b2 = geom.index_range(ymin, ymax, 1)
    return a1 - pad, b1 + pad, a2 - pad, b2 + pad


def _grid(a1, b1, a2, b2):
    if b1 < a1 or b2 < a2:
        return np.zeros((0, 2), dtype=np.int64)
    i1, i2 = np.meshgrid(np.arange(a1, b1 + 1), np.arange(a2, b2 + 1), indexing="ij")
    return np.stack([i1.ravel(), i2.ravel()], axis=1).astype(np.int64)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=256)
def _sites_cached(domain, geom, tag):
    idx = _grid(*_index_box(domain, geom))
    if len(idx) == 0:
        return _frozen(idx)
    p = geom.position(idx)
    keep = domain.contains(p[:, 0], p[:, 1]) & tag.select(idx)
    return _frozen(idx[keep])


def sites(domain: Domain, geom: LatticeGeometry, tag: SublatticeTag = SublatticeTag.ALL) -> np.ndarray:
    """Integer sites of the tagged sublattice inside ``domain``.

    Returns
    -------
    ndarray of int64, shape (n, 2)
        Sorted lexicographically by (i1, i2).
    """
    return _sites_cached(domain, geom, tag)


@lru_cache(maxsize=256)
def _bonds_cached(domain, geom, direction, span, tag):
    a1, b1, a2, b2 = _index_box(domain, geom)
    start = _grid(a1, b1, a2, b2)
    if len(start) == 0:
        return _frozen(start), _frozen(start.copy())
    step = np.zeros(2, dtype=np.int64)
    step[direction] = span
    end = start + step
    p0 = geom.position(start)
    p1 = geom.position(end)
    keep = tag.select(start) & domain.segment_inside(p0[:, 0], p0[:, 1], p1[:, 0], p1[:, 1])
    return _frozen(start[keep]), _frozen(end[keep])


def bonds(
    domain: Domain,
    geom: LatticeGeometry,
    direction: int,
    span: int = 1,
    tag: SublatticeTag = SublatticeTag.ALL,
) -> tuple[np.ndarray, np.ndarray]:
    """Bonds ``(i, i + span * e_k)`` whose closed segment lies in ``domain``.

    Parameters
    ----------
    direction : {0, 1}
        0 for e1 (horizontal), 1 for e2 (vertical).
    span : {1, 2}
        Number of lattice steps.
    tag : SublatticeTag
        Restricts the starting site.

    Returns
    -------
    start, end : ndarray of int64, shape (n, 2)
    """
    if direction not in (0, 1):
        raise ValueError("direction must be 0 (e1) or 1 (e2)")
    if span not in (1, 2):
        raise ValueError("span must be 1 or 2")
    return _bonds_cached(domain, geom, direction, span, tag)


@lru_cache(maxsize=256)
def _cells_cached(domain, geom):
    idx = _grid(*_index_box(domain, geom))
    if len(idx) == 0:
        return _frozen(idx)
    p = geom.position(idx)
    keep = domain.square_inside(p[:, 0], p[:, 1], geom.spacing)
    return _frozen(idx[keep])


def cells(domain: Domain, geom: LatticeGeometry) -> np.ndarray:
    """Anchors i of the closed cells i + [0, eps]^2 contained in ``domain``."""
    return _cells_cached(domain, geom)


def cell_barycenters(anchors: np.ndarray, geom: LatticeGeometry) -> np.ndarray:
    return geom.position(np.asarray(anchors)) + 0.5 * geom.spacing


def triangles(anchor: Sequence[int], geom: LatticeGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Vertex coordinates of T+ = conv(i, i+e2, i+e1+e2) and T- = conv(i, i+e1, i+e1+e2)."""
    p = geom.position(np.asarray(anchor))
    h = geom.spacing
    tp = np.array([p, p + (0, h), p + (h, h)])
    tm = np.array([p, p + (h, 0), p + (h, h)])
    return tp, tm


def _cell_mask(domain, geom, pad=1):
    a1, b1, a2, b2 = _index_box(domain, geom, pad)
    n1, n2 = b1 - a1 + 1, b2 - a2 + 1
    mask = np.zeros((max(n1, 0), max(n2, 0)), dtype=bool)
    anchors = cells(domain, geom)
    if len(anchors):
        mask[anchors[:, 0] - a1, anchors[:, 1] - a2] = True
    return mask, (a1, a2)


def _boundary_vertices(mask, lo):
    """Vertices with between one and three incident cells of ``mask``."""
    n1, n2 = mask.shape
    cnt = np.zeros((n1 + 1, n2 + 1), dtype=np.int8)
    m = mask.astype(np.int8)
    cnt[:-1, :-1] += m
    cnt[1:, :-1] += m
    cnt[:-1, 1:] += m
    cnt[1:, 1:] += m
    v = np.argwhere((cnt > 0) & (cnt < 4))
    return v + np.asarray(lo)


def discrete_boundary(domain: Domain, geom: LatticeGeometry, layer: str = "single") -> np.ndarray:
    """Discrete boundary of ``domain``.

    ``single``: vertices of the topological boundary of the union of eps-cells
    inside the domain.  ``double``: union over j of the boundaries of the
    unions of 2eps-cells of ``2 eps Z^2 + eps s_j`` inside the domain, as a set
    of eps-lattice sites (so midpoints of boundary 2eps-edges are included).
    An empty array signals that no cell fits.
    """
    if layer == "single":
        mask, lo = _cell_mask(domain, geom)
        if not mask.any():
            return np.zeros((0, 2), dtype=np.int64)
        return _sorted_unique(_boundary_vertices(mask, lo))
    if layer != "double":
        raise ValueError("layer must be 'single' or 'double'")
    out = []
    for tag in SUBLATTICES:
        g2 = sublattice_geometry(geom, tag)
        mask, lo = _cell_mask(domain, g2)
        if not mask.any():
            continue
        s = np.asarray(tag.shift)
        v = _boundary_vertices(mask, lo)
        out.append(2 * v + s)
        # midpoints of 2eps-edges separating an inside cell from an outside one
        pm = np.pad(mask, 1)
        hor = pm[1:-1, 1:] ^ pm[1:-1, :-1]  # edge from (k1,k2) to (k1+1,k2): cells (k1,k2) and (k1,k2-1)
        e = np.argwhere(hor) + np.asarray(lo)
        out.append(2 * e + s + (1, 0))
        ver = pm[1:, 1:-1] ^ pm[:-1, 1:-1]  # edge from (k1,k2) to (k1,k2+1): cells (k1,k2) and (k1-1,k2)
        e = np.argwhere(ver) + np.asarray(lo)
        out.append(2 * e + s + (0, 1))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return _sorted_unique(np.concatenate(out))


def _sorted_unique(idx):
    idx = np.asarray(idx, dtype=np.int64).reshape(-1, 2)
    return np.unique(idx, axis=0)

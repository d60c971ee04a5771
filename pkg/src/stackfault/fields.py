"""Displacement and spin fields on lattice windows.

A field is stored densely over a rectangular window of integer indices with a
validity mask, row-major in ``(i1, i2)``.  Spin fields store angles in
[0, 2pi); displacement fields store the scaled displacement ``u``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import Domain, LatticeGeometry, SublatticeTag, cells, sublattice_geometry

__all__ = [
    "LatticeField",
    "DisplacementField",
    "SpinField",
    "VectorField",
    "AffineInterpolant",
    "exp_field",
    "double",
    "restrict_sublattice",
    "affine_interpolate",
    "geodesic_distance",
    "angular_lift",
    "dump_csv",
    "load_csv",
]

TWO_PI = 2.0 * math.pi


class LatticeField:
    """Values on a window ``lo + [0, n1) x [0, n2)`` of integer sites.

    Parameters
    ----------
    geom : LatticeGeometry
    lo : tuple of int
        Integer index of ``values[0, 0]``.
    values : ndarray, shape (n1, n2)
    mask : ndarray of bool, optional
        Sites carrying a value; defaults to all finite entries.
    """

    def __init__(self, geom: LatticeGeometry, lo, values, mask=None):
        self.geom = geom
        self.lo = (int(lo[0]), int(lo[1]))
        self.values = np.asarray(values)
        if self.values.ndim != 2:
            raise ValueError("field values must be a 2-D array")
        if mask is None:
            mask = np.isfinite(self.values)
        self.mask = np.asarray(mask, dtype=bool)
        if self.mask.shape != self.values.shape:
            raise ValueError("mask and values shapes differ")
        if not np.all(np.isfinite(self.values[self.mask])):
            raise ValueError("field values must be finite on defined sites")

    @property
    def shape(self):
        return self.values.shape

    def _new(self, values, mask=None, geom=None, lo=None):
        return type(self)(geom or self.geom, self.lo if lo is None else lo, values,
                          self.mask.copy() if mask is None else mask)

    def copy(self):
        return self._new(self.values.copy())

    def sites(self) -> np.ndarray:
        """Defined sites, lexicographic order."""
        return np.argwhere(self.mask) + np.asarray(self.lo)

    def local(self, idx) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(idx, dtype=np.int64)
        return idx[..., 0] - self.lo[0], idx[..., 1] - self.lo[1]

    def defined(self, idx) -> np.ndarray:
        a, b = self.local(idx)
        n1, n2 = self.shape
        ok = (a >= 0) & (a < n1) & (b >= 0) & (b < n2)
        out = np.zeros(ok.shape, dtype=bool)
        out[ok] = self.mask[a[ok], b[ok]]
        return out

    def at(self, idx) -> np.ndarray:
        """Values at integer sites; raises ``KeyError`` for undefined sites."""
        idx = np.asarray(idx, dtype=np.int64)
        ok = self.defined(idx)
        if not np.all(ok):
            bad = idx.reshape(-1, 2)[~ok.ravel()][0]
            raise KeyError(f"missing value at site {tuple(int(v) for v in bad)}")
        a, b = self.local(idx)
        return self.values[a, b]

    def __getitem__(self, site):
        return self.at(np.asarray(site))[()]

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates of every window entry, each of shape (n1, n2)."""
        n1, n2 = self.shape
        i1 = np.arange(n1) + self.lo[0]
        i2 = np.arange(n2) + self.lo[1]
        x = self.geom.offset[0] + self.geom.spacing * i1
        y = self.geom.offset[1] + self.geom.spacing * i2
        return np.meshgrid(x, y, indexing="ij")

    @classmethod
    def from_function(cls, domain: Domain, geom: LatticeGeometry, func: Callable, pad: int = 0,
                      restrict: bool = False):
        """Sample ``func(x, y)`` on the bounding box of ``domain`` (padded by ``pad`` sites).

        With ``restrict`` only sites inside the domain are defined.
        """
        xmin, xmax, ymin, ymax = domain.bbox()
        a1, b1 = geom.index_range(xmin, xmax, 0)
        a2, b2 = geom.index_range(ymin, ymax, 1)
        lo = (a1 - pad, a2 - pad)
        n1, n2 = b1 - a1 + 1 + 2 * pad, b2 - a2 + 1 + 2 * pad
        f = cls(geom, lo, np.zeros((n1, n2)), np.ones((n1, n2), dtype=bool))
        x, y = f.positions()
        vals = np.asarray(func(x, y), dtype=float)
        mask = domain.contains(x, y) if restrict else np.ones((n1, n2), dtype=bool)
        vals = np.where(mask, vals, 0.0)
        return cls(geom, lo, vals, mask)

    @classmethod
    def from_sites(cls, geom: LatticeGeometry, idx, vals):
        """Field defined exactly on the given sites."""
        idx = np.asarray(idx, dtype=np.int64).reshape(-1, 2)
        vals = np.asarray(vals)
        if len(idx) == 0:
            return cls(geom, (0, 0), np.zeros((0, 0), dtype=vals.dtype), np.zeros((0, 0), dtype=bool))
        lo = idx.min(axis=0)
        hi = idx.max(axis=0)
        n1, n2 = hi - lo + 1
        values = np.zeros((n1, n2), dtype=vals.dtype)
        mask = np.zeros((n1, n2), dtype=bool)
        values[idx[:, 0] - lo[0], idx[:, 1] - lo[1]] = vals
        mask[idx[:, 0] - lo[0], idx[:, 1] - lo[1]] = True
        return cls(geom, tuple(lo), values, mask)

    def restrict_to(self, domain: Domain):
        """Copy whose defined sites are further restricted to ``domain``."""
        x, y = self.positions()
        return self._new(self.values.copy(), self.mask & domain.contains(x, y))


class DisplacementField(LatticeField):
    """Scaled horizontal displacement u on lattice sites."""

    def __add__(self, other):
        if isinstance(other, LatticeField):
            if other.lo != self.lo or other.shape != self.shape:
                raise ValueError("fields live on different windows")
            return self._new(self.values + other.values, self.mask & other.mask)
        return self._new(self.values + other)

    def scaled(self, factor: float) -> "DisplacementField":
        return self._new(factor * self.values)


class SpinField(LatticeField):
    """Unit vectors exp(i * angle) stored as angles in [0, 2pi)."""

    def __init__(self, geom, lo, values, mask=None):
        vals = np.mod(np.asarray(values, dtype=float), TWO_PI)
        # np.mod may return exactly 2pi for tiny negative inputs
        vals = np.where(vals >= TWO_PI, 0.0, vals)
        super().__init__(geom, lo, vals, mask)

    def vectors(self) -> np.ndarray:
        """Complex representation exp(i * angle), shape (n1, n2)."""
        return np.exp(1j * self.values)


class VectorField(LatticeField):
    """Planar vectors stored as complex numbers (for weak-membrane energies)."""

    def __init__(self, geom, lo, values, mask=None):
        vals = np.asarray(values, dtype=complex)
        if mask is None:
            mask = np.isfinite(vals)
        super().__init__(geom, lo, vals, mask)

    @classmethod
    def from_spin(cls, v: SpinField) -> "VectorField":
        return cls(v.geom, v.lo, v.vectors(), v.mask.copy())


def exp_field(u: DisplacementField, factor: float = TWO_PI) -> SpinField:
    """Spin field exp(i * factor * u); ``factor = 4pi`` gives the complex square."""
    return SpinField(u.geom, u.lo, factor * u.values, u.mask.copy())


def double(u: DisplacementField) -> DisplacementField:
    return u.scaled(2.0)


def restrict_sublattice(f: LatticeField, tag: SublatticeTag) -> LatticeField:
    """Restriction of ``f`` to ``2 eps Z^2 + eps s_j`` as a field on that lattice.

    Index k of the returned field corresponds to base index ``2k + s_j``.
    """
    s = tag.shift
    lo1 = -((s[0] - f.lo[0]) // 2)  # ceil((lo - s) / 2)
    lo2 = -((s[1] - f.lo[1]) // 2)
    st1 = 2 * lo1 + s[0] - f.lo[0]
    st2 = 2 * lo2 + s[1] - f.lo[1]
    vals = f.values[st1::2, st2::2]
    mask = f.mask[st1::2, st2::2]
    return type(f)(sublattice_geometry(f.geom, tag), (lo1, lo2), vals.copy(), mask.copy())


def geodesic_distance(a, b):
    """Geodesic distance on S^1 between angles ``a`` and ``b``, in [0, pi]."""
    chord = np.abs(np.exp(1j * np.asarray(a)) - np.exp(1j * np.asarray(b)))
    return 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0))


def angular_lift(v: SpinField) -> DisplacementField:
    """Principal lifting u = angle / 2pi in [0, 1)."""
    return DisplacementField(v.geom, v.lo, v.values / TWO_PI, v.mask.copy())


@dataclass
class AffineInterpolant:
    """Piecewise-affine interpolation of a spin field on the eps-triangulation.

    Each cell Q = i + [0, eps]^2 splits into T+ = conv(i, i+e2, i+e1+e2) and
    T- = conv(i, i+e1, i+e1+e2); on each triangle the interpolant of the
    planar vectors is affine.
    """

    v: SpinField
    anchors: np.ndarray

    def _corners(self, anchors):
        a = np.asarray(anchors, dtype=np.int64).reshape(-1, 2)
        z = self.v.vectors()
        out = []
        for d in ((0, 0), (1, 0), (1, 1), (0, 1)):
            a1, a2 = self.v.local(a + d)
            out.append(z[a1, a2])
        return out  # z00, z10, z11, z01

    def gradients(self, anchors=None) -> tuple[np.ndarray, np.ndarray]:
        """Complex gradient pairs (d/dx1, d/dx2) on T+ and T-, each of shape (n, 2)."""
        anchors = self.anchors if anchors is None else anchors
        z00, z10, z11, z01 = self._corners(anchors)
        h = self.v.geom.spacing
        gp = np.stack([(z11 - z01) / h, (z01 - z00) / h], axis=1)
        gm = np.stack([(z10 - z00) / h, (z11 - z10) / h], axis=1)
        return gp, gm

    def dirichlet(self, anchors=None) -> np.ndarray:
        """Per-cell integral of |grad v_hat|^2 (constant gradient times area h^2/2)."""
        gp, gm = self.gradients(anchors)
        h = self.v.geom.spacing
        sq = lambda g: np.sum(np.abs(g) ** 2, axis=1)
        return 0.5 * h * h * (sq(gp) + sq(gm))

    def __call__(self, x, y) -> np.ndarray:
        """Evaluate the interpolant (complex) at physical points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = self.v.geom
        s1 = (x - g.offset[0]) / g.spacing
        s2 = (y - g.offset[1]) / g.spacing
        a1 = np.floor(s1).astype(np.int64)
        a2 = np.floor(s2).astype(np.int64)
        t1, t2 = s1 - a1, s2 - a2
        z00, z10, z11, z01 = self._corners(np.stack([a1, a2], axis=-1))
        z00, z10, z11, z01 = (c.reshape(x.shape) for c in (z00, z10, z11, z01))
        upper = t2 >= t1
        # T+: z = z00 + t1 (z11 - z01) + t2 (z01 - z00); T-: z00 + t1 (z10 - z00) + t2 (z11 - z10)
        zp = z00 + t1 * (z11 - z01) + t2 * (z01 - z00)
        zm = z00 + t1 * (z10 - z00) + t2 * (z11 - z10)
        return np.where(upper, zp, zm)


def affine_interpolate(v: SpinField, domain: Domain) -> AffineInterpolant:
    """Affine interpolant on the cells of ``domain``; all cell corners must be defined."""
    anchors = cells(domain, v.geom)
    for d in ((0, 0), (1, 0), (1, 1), (0, 1)):
        ok = v.defined(anchors + np.asarray(d))
        if not np.all(ok):
            bad = anchors[~ok][0] + np.asarray(d)
            raise KeyError(f"missing corner value at site {tuple(int(t) for t in bad)}")
    return AffineInterpolant(v, anchors)


def dump_csv(f: LatticeField, path=None) -> str:
    """Write ``i1,i2,value`` rows (one per defined site) with a header line."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i1", "i2", "value"])
    idx = f.sites()
    a, b = f.local(idx)
    for (i1, i2), val in zip(idx, f.values[a, b]):
        w.writerow([int(i1), int(i2), f"{float(val):.17g}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load_csv(text: str, geom: LatticeGeometry, cls=DisplacementField) -> LatticeField:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if rows[0] != ["i1", "i2", "value"]:
        raise ValueError("expected header i1,i2,value")
    body = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, 3)
    return cls.from_sites(geom, body[:, :2].astype(np.int64), body[:, 2])

"""Stacking faults: admissibility, tension resolution, line tension,
two-colorings by full horizontal chords and lattice crossing counts.

A stacking fault is a finite union of open horizontal segments whose
endpoints are dislocations or boundary points.  On each horizontal line
through dislocations the admissible faults that resolve the tension
alternate between right and left rays, so only two patterns compete.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Domain, LatticeGeometry, bonds
from .vorticity import VorticityMeasure

__all__ = [
    "Segment",
    "StackingFault",
    "TwoColoring",
    "validate_fault",
    "resolves_tension",
    "line_tension",
    "line_tension_bruteforce",
    "two_coloring",
    "fault_crossings",
    "recovery_chords",
    "BOUNDARY",
]

BOUNDARY = "boundary"
ON_BOUNDARY = 1e-9
BRUTE_CAP = 12


@dataclass(frozen=True)
class Segment:
    """Open segment between ``p`` and ``q`` with endpoint tags (dislocation index or ``"boundary"``)."""

    p: tuple[float, float]
    q: tuple[float, float]
    tags: tuple = (None, None)

    def __post_init__(self):
        p, q = (float(self.p[0]), float(self.p[1])), (float(self.q[0]), float(self.q[1]))
        if q < p:
            p, q = q, p
            object.__setattr__(self, "tags", tuple(reversed(self.tags)))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def horizontal(self) -> bool:
        return self.p[1] == self.q[1]

    @property
    def y(self) -> float:
        return self.p[1]

    @property
    def length(self) -> float:
        return math.dist(self.p, self.q)


@dataclass
class StackingFault:
    """Finite list of open segments together with the measure and domain they refer to."""

    segments: list
    mu: VorticityMeasure
    omega: Domain

    @classmethod
    def from_endpoints(cls, pairs, mu: VorticityMeasure, omega: Domain) -> "StackingFault":
        segs = []
        for p, q in pairs:
            segs.append(Segment(p, q, (_tag(p, mu, omega), _tag(q, mu, omega))))
        return cls(segs, mu, omega)

    @property
    def length(self) -> float:
        return math.fsum(s.length for s in self.segments)

    def on_line(self, y: float) -> list:
        return sorted([s for s in self.segments if s.horizontal and s.y == y], key=lambda s: s.p[0])

    def to_json(self) -> str:
        return json.dumps({"segments": [{"p": list(s.p), "q": list(s.q), "tags": list(s.tags)}
                                        for s in self.segments], "length": self.length})


def _tag(p, mu: VorticityMeasure, omega: Domain):
    for h, x in enumerate(mu.points):
        if float(x[0]) == float(p[0]) and float(x[1]) == float(p[1]):
            return h
    if abs(float(omega.boundary_distance(p[0], p[1]))) <= ON_BOUNDARY:
        return BOUNDARY
    return None


def _section(omega: Domain, y: float, x: float | None = None):
    """Closure [a, b] of the component of the horizontal section containing ``x`` (or all components)."""
    ivs = omega.horizontal_section(y)
    if x is None:
        return ivs
    for a, b in ivs:
        if a <= x <= b:
            return a, b
    raise ValueError(f"point ({x}, {y}) is outside the domain")


def validate_fault(S: StackingFault, mu: VorticityMeasure | None = None,
                   omega: Domain | None = None) -> tuple[bool, list[str]]:
    """Check the invariants of ``S``; returns (valid, list of violations)."""
    mu = S.mu if mu is None else mu
    omega = S.omega if omega is None else omega
    errs = []
    pts = np.asarray(mu.points, dtype=float).reshape(-1, 2)
    for k, s in enumerate(S.segments):
        if not s.horizontal:
            errs.append(f"segment {k} is not horizontal")
            continue
        if not s.length > 0:
            errs.append(f"segment {k} is degenerate")
            continue
        for end, p in (("left", s.p), ("right", s.q)):
            if _tag(p, mu, omega) is None:
                errs.append(f"segment {k}: {end} endpoint {p} is neither a dislocation nor a boundary point")
        on = pts[(pts[:, 1] == s.y) & (pts[:, 0] > s.p[0]) & (pts[:, 0] < s.q[0])]
        if len(on):
            errs.append(f"segment {k} passes through the dislocation {tuple(on[0])}")
        mid = 0.5 * (s.p[0] + s.q[0])
        inside = [(a, b) for a, b in omega.horizontal_section(s.y) if a <= s.p[0] + 1e-12 and s.q[0] <= b + 1e-12]
        if not inside or not bool(omega.contains(mid, s.y)):
            errs.append(f"segment {k} leaves the domain")
    hs = [s for s in S.segments if s.horizontal and s.length > 0]
    for i, s in enumerate(hs):
        for t in hs[i + 1:]:
            if s.y == t.y and s.p[0] < t.q[0] and t.p[0] < s.q[0]:
                errs.append(f"segments {s.p}-{s.q} and {t.p}-{t.q} overlap")
    return not errs, errs


def _min_gap(mu: VorticityMeasure) -> float:
    pts = np.asarray(mu.points, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return math.inf
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    return float(d[~np.eye(len(pts), dtype=bool)].min())


def default_resolution_radius(mu: VorticityMeasure, omega: Domain) -> float:
    """Half the minimum over pairwise and boundary distances of the dislocations."""
    pts = np.asarray(mu.points, dtype=float).reshape(-1, 2)
    bd = [float(omega.boundary_distance(x, y)) for x, y in pts]
    return 0.5 * min([_min_gap(mu)] + bd)


def _segment_gap(S: StackingFault, mu: VorticityMeasure) -> float:
    """Smallest distance from a dislocation to a segment of S on another line."""
    gap = math.inf
    for xh, yh in np.asarray(mu.points, dtype=float).reshape(-1, 2):
        for s in S.segments:
            if s.y == yh:
                continue
            dx = max(s.p[0] - xh, 0.0, xh - s.q[0])
            gap = min(gap, math.hypot(dx, s.y - yh))
    return gap


def resolves_tension(S: StackingFault, mu: VorticityMeasure | None = None, sigma: float | None = None) -> bool:
    """True iff S meets each B_sigma(x_h) in exactly one of its two horizontal radii.

    The default sigma is half the smallest distance from a dislocation to the
    boundary, to another dislocation or to a fault segment on another line.
    """
    mu = S.mu if mu is None else mu
    omega = S.omega
    if sigma is None:
        sigma = min(default_resolution_radius(mu, omega), 0.5 * _segment_gap(S, mu))
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if 2 * sigma > _min_gap(mu):
        raise ValueError(f"sigma={sigma} is too large: the discs around the dislocations overlap")
    for xh, yh in np.asarray(mu.points, dtype=float).reshape(-1, 2):
        pieces = []
        for s in S.segments:
            if s.horizontal:
                if abs(s.y - yh) >= sigma:
                    continue
                half = math.sqrt(sigma * sigma - (s.y - yh) ** 2)
                lo, hi = max(s.p[0], xh - half), min(s.q[0], xh + half)
                if lo < hi:
                    pieces.append((s.y, lo, hi))
            else:
                return False
        if len(pieces) != 1:
            return False
        y, lo, hi = pieces[0]
        if y != yh:
            return False
        a, b = _section(omega, yh, xh)
        right = (xh, min(xh + sigma, b))
        left = (max(xh - sigma, a), xh)
        if (lo, hi) != right and (lo, hi) != left:
            return False
    return True


def _lines(mu: VorticityMeasure, omega: Domain):
    """Dislocation x-coordinates grouped by exact height and section component."""
    pts = np.asarray(mu.points, dtype=float).reshape(-1, 2)
    groups = {}
    for h, (x, y) in enumerate(pts):
        if not bool(omega.contains(x, y)) or float(omega.boundary_distance(x, y)) <= 0:
            raise ValueError(f"dislocation ({x}, {y}) is not in the interior of the domain")
        a, b = _section(omega, y, x)
        groups.setdefault((float(y), a, b), []).append((float(x), h))
    return {k: sorted(v) for k, v in sorted(groups.items())}


def _pattern(xs, a, b, first_right: bool):
    """Segments (x0, x1) of the alternating pattern starting with a right (or left) ray."""
    segs = []
    k = len(xs)
    if first_right:
        for i in range(0, k - 1, 2):
            segs.append((xs[i], xs[i + 1]))
        if k % 2 == 1:
            segs.append((xs[-1], b))
    else:
        segs.append((a, xs[0]))
        for i in range(1, k - 1, 2):
            segs.append((xs[i], xs[i + 1]))
        if k % 2 == 0:
            segs.append((xs[-1], b))
    return segs


def line_tension(mu: VorticityMeasure, omega: Domain) -> tuple[float, StackingFault]:
    """L(mu, Omega) and a minimizing fault; ties prefer the pattern starting with a right ray."""
    total, pairs = [], []
    for (y, a, b), items in _lines(mu, omega).items():
        xs = [x for x, _ in items]
        best = None
        for first_right in (True, False):
            segs = _pattern(xs, a, b, first_right)
            cost = math.fsum(x1 - x0 for x0, x1 in segs)
            if best is None or cost < best[0]:
                best = (cost, segs)
        total.append(best[0])
        pairs += [((x0, y), (x1, y)) for x0, x1 in best[1]]
    return math.fsum(total), StackingFault.from_endpoints(pairs, mu, omega)


def line_tension_bruteforce(mu: VorticityMeasure, omega: Domain) -> float:
    """L(mu, Omega) by enumerating every right/left ray assignment on each line."""
    if len(mu.points) > BRUTE_CAP:
        raise ValueError(f"brute force is capped at {BRUTE_CAP} dislocations")
    total = []
    for (y, a, b), items in _lines(mu, omega).items():
        xs = [x for x, _ in items]
        k = len(xs)
        best = math.inf
        for sides in itertools.product((1, -1), repeat=k):
            segs = set()
            for i, s in enumerate(sides):
                if s == 1:
                    segs.add((xs[i], xs[i + 1] if i + 1 < k else b))
                else:
                    segs.add((xs[i - 1] if i > 0 else a, xs[i]))
            ok = True
            for x in xs:
                has_right = any(x0 == x for x0, _ in segs)
                has_left = any(x1 == x for _, x1 in segs)
                if has_right and has_left:
                    ok = False
                    break
            if ok:
                best = min(best, math.fsum(x1 - x0 for x0, x1 in segs))
        total.append(best)
    return math.fsum(total)


@dataclass
class TwoColoring:
    """chi in {0, pi}: pi times the parity of the chords strictly below the point."""

    heights: np.ndarray
    omega: Domain
    chords: list = field(default_factory=list)

    def value(self, x, y):
        y = np.asarray(y, dtype=float)
        n = np.searchsorted(self.heights, y, side="left")
        return math.pi * np.mod(n, 2)

    __call__ = value


def _is_chord(s: Segment, omega: Domain) -> bool:
    if not s.horizontal:
        return False
    for a, b in omega.horizontal_section(s.y):
        if abs(s.p[0] - a) <= ON_BOUNDARY and abs(s.q[0] - b) <= ON_BOUNDARY:
            return True
    return False


def two_coloring(chords, omega: Domain) -> TwoColoring:
    """Two-coloring whose jump set is the union of full horizontal chords of a convex domain."""
    chords = list(chords.segments if isinstance(chords, StackingFault) else chords)
    for s in chords:
        if not _is_chord(s, omega):
            raise ValueError(f"segment {s.p}-{s.q} does not connect two boundary points")
        if len(omega.horizontal_section(s.y)) != 1:
            raise ValueError(f"the chord at height {s.y} does not split the domain into two parts")
    heights = np.sort(np.array([s.y for s in chords], dtype=float))
    return TwoColoring(heights, omega, chords)


def fault_crossings(S: StackingFault, domain: Domain, eps: float, span: int = 1) -> int:
    """Number of vertical bonds (i, i + span e2) whose half-open segment (i, i + span eps e2] meets S."""
    geom = LatticeGeometry(eps)
    a, _ = bonds(domain, geom, 1, span)
    if len(a) == 0 or not S.segments:
        return 0
    p = geom.position(a)
    hit = np.zeros(len(a), dtype=bool)
    for s in S.segments:
        if not s.horizontal:
            raise ValueError("fault segments must be horizontal")
        hit |= (p[:, 0] > s.p[0]) & (p[:, 0] < s.q[0]) & (p[:, 1] < s.y) & (s.y <= p[:, 1] + span * eps)
    return int(hit.sum())


def recovery_chords(S: StackingFault, mu: VorticityMeasure, omega: Domain) -> list:
    """Full chords turning the right-ray jump set of mu into S.

    With right-ray liftings the half-integer jump set on a line is where an
    odd number of dislocations lies to the left; S must agree with it or with
    its complement on each line, the latter requiring a chord.
    """
    pts = np.asarray(mu.points, dtype=float).reshape(-1, 2)
    ys = sorted({float(y) for y in pts[:, 1]} | {s.y for s in S.segments if s.horizontal})
    chords = []
    for y in ys:
        for a, b in omega.horizontal_section(y):
            xs = sorted(float(x) for x, yy in pts if yy == y and a < x < b)
            segs = [s for s in S.on_line(y) if a - ON_BOUNDARY <= s.p[0] and s.q[0] <= b + ON_BOUNDARY]
            cuts = sorted({a, b, *xs, *[s.p[0] for s in segs], *[s.q[0] for s in segs]})
            flags = set()
            for x0, x1 in zip(cuts, cuts[1:]):
                if not x1 > x0:
                    continue
                m = 0.5 * (x0 + x1)
                in_s = any(s.p[0] < m < s.q[0] for s in segs)
                in_j = sum(x < m for x in xs) % 2 == 1
                flags.add(in_s != in_j)
            if len(flags) > 1:
                raise ValueError(f"fault on the line y={y} is not an alternating ray pattern")
            if flags == {True}:
                chords.append(Segment((a, y), (b, y), (BOUNDARY, BOUNDARY)))
    return chords

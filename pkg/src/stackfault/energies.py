"""Interaction potentials and the discrete lattice energies.

All bond sums are reduced with ``math.fsum`` (correctly rounded, hence
independent of summation order and reproducible).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fields import (DisplacementField, LatticeField, SpinField, VectorField, double, exp_field,
                     restrict_sublattice)
from .lattice import SUBLATTICES, Domain, SublatticeTag, bonds

__all__ = [
    "PotentialParams",
    "EnergyBreakdown",
    "ComparisonReport",
    "potential",
    "dist_to_int",
    "energy_edge",
    "energy_pedge",
    "energy_screw",
    "energy_xy",
    "energy_wm",
    "sublattice_energy",
    "verify_comparisons",
]

TWO_PI2 = 2.0 * math.pi**2


@dataclass(frozen=True)
class PotentialParams:
    """Stacking-fault weight ``alpha`` and weak-membrane thresholds ``tau1, tau2``."""

    alpha: float = 1.0
    tau1: float = 1.0
    tau2: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "tau1", "tau2"):
            v = getattr(self, name)
            if not (v > 0):
                raise ValueError(f"{name} must be positive, got {v}")


@dataclass
class EnergyBreakdown:
    horizontal: float
    vertical_nn: float
    vertical_nnn: float
    total: float = field(init=False)

    def __post_init__(self):
        self.total = math.fsum([self.horizontal, self.vertical_nn, self.vertical_nnn])

    def to_json(self, **meta) -> str:
        d = {"kind": "pedge", **meta}
        d.update(asdict(self))
        return json.dumps(d)


def dist_to_int(t):
    """dist(t, Z) computed as |t - P_Z(t)|."""
    t = np.asarray(t, dtype=float)
    return np.abs(t - np.ceil(t - 0.5))


def potential(kind: str, t):
    """Bond potentials f0, f1 and f_half.

    f0(t) = 2pi^2 t^2, f1(t) = 2pi^2 dist^2(t, Z), f_half(t) = 2pi^2 dist^2(t, Z/2).
    """
    t = np.asarray(t, dtype=float)
    if kind == "f0":
        out = TWO_PI2 * t * t
    elif kind == "f1":
        d = dist_to_int(t)
        out = TWO_PI2 * d * d
    elif kind in ("f_half", "fhalf", "f1/2"):
        d = 0.5 * dist_to_int(2.0 * t)
        out = TWO_PI2 * d * d
    else:
        raise ValueError(f"unknown potential {kind!r}")
    return out[()] if out.ndim == 0 else out


def _incr(u: LatticeField, A: Domain, direction: int, span: int = 1, tag=SublatticeTag.ALL):
    a, b = bonds(A, u.geom, direction, span, tag)
    try:
        return u.at(b) - u.at(a)
    except KeyError as exc:
        raise KeyError(f"field is missing values on bonds of the domain: {exc}") from None


def _sum(x) -> float:
    return math.fsum(np.asarray(x).ravel().tolist())


def energy_edge(u: DisplacementField, A: Domain) -> float:
    """f0 on horizontal and f1 on vertical nearest-neighbour bonds of ``A``."""
    return math.fsum([_sum(potential("f0", _incr(u, A, 0))), _sum(potential("f1", _incr(u, A, 1)))])


def energy_screw(u: DisplacementField, A: Domain) -> float:
    """f1 on all nearest-neighbour bonds of ``A``."""
    return math.fsum([_sum(potential("f1", _incr(u, A, 0))), _sum(potential("f1", _incr(u, A, 1)))])


def energy_pedge(u: DisplacementField, A: Domain, params: PotentialParams | float = 1.0) -> EnergyBreakdown:
    """Partial-edge energy split into horizontal, vertical nn and vertical nnn parts.

    horizontal: sum of f0 on e1 bonds; vertical_nn: sum of f_half on e2 bonds;
    vertical_nnn: (alpha/pi^2) eps sum of f1 on span-2 e2 bonds.
    """
    alpha = params.alpha if isinstance(params, PotentialParams) else float(params)
    h = _sum(potential("f0", _incr(u, A, 0)))
    vnn = _sum(potential("f_half", _incr(u, A, 1)))
    s = _sum(potential("f1", _incr(u, A, 1, 2)))
    return EnergyBreakdown(h, vnn, alpha / math.pi**2 * u.geom.spacing * s)


def nnn_sum(u: DisplacementField, A: Domain) -> float:
    """Sum of f1 over the span-2 vertical increments (the alpha-slope up to eps/pi^2)."""
    return _sum(potential("f1", _incr(u, A, 1, 2)))


def _chord2(v, A, direction):
    a, b = bonds(A, v.geom, direction, 1)
    if isinstance(v, SpinField):
        d = v.at(b) - v.at(a)
        s = np.sin(0.5 * d)
        return 4.0 * s * s
    return np.abs(v.at(b) - v.at(a)) ** 2


def energy_xy(v: SpinField, A: Domain) -> float:
    """Half the sum of squared chord lengths over nearest-neighbour bonds."""
    return 0.5 * math.fsum([_sum(_chord2(v, A, 0)), _sum(_chord2(v, A, 1))])


def energy_wm(w: SpinField | VectorField, A: Domain, tau1: float, tau2: float) -> float:
    """Weak-membrane energy sum_k sum_bonds min(|dw|^2 / 2, tau_k * spacing).

    The spacing is that of the field's own lattice, so the restriction of a
    field to a 2eps-sublattice is truncated at ``tau_k * 2eps``.
    """
    h = w.geom.spacing
    parts = []
    for k, tau in ((0, tau1), (1, tau2)):
        parts.append(_sum(np.minimum(0.5 * _chord2(w, A, k), tau * h)))
    return math.fsum(parts)


def sublattice_energy(kind: str, f: LatticeField, A: Domain, tag: SublatticeTag,
                      tau1: float = 1.0, tau2: float = 1.0) -> float:
    """Energy ``kind`` (edge, screw, xy, wm) of the restriction of ``f`` to a 2eps-sublattice."""
    r = restrict_sublattice(f, tag)
    if kind == "edge":
        return energy_edge(r, A)
    if kind == "screw":
        return energy_screw(r, A)
    if kind == "xy":
        return energy_xy(r, A)
    if kind == "wm":
        return energy_wm(r, A, tau1, tau2)
    raise ValueError(f"unknown energy kind {kind!r}")


# ---------------------------------------------------------------------------
# comparisons


@dataclass
class ComparisonReport:
    identity_error: float
    four_pedge: float
    edge_2u: float
    screw_2u: float
    xy_4pi: float
    sublattice_sum: float
    pedge: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]


def verify_comparisons(u: DisplacementField, A: Domain, params: PotentialParams | float = 1.0,
                       atol: float = 1e-10, slack: float = 1e-9) -> ComparisonReport:
    """Check the exact relations between the energies for a single field.

    identity : F_pedge(u) = F_edge(2u)/4 + (alpha/pi^2) eps sum f1(nnn)
    chain : 4 F_pedge(u) >= F_edge(2u) >= F_screw(2u) >= XY(exp(4 pi i u))
    sublattice : 16 F_pedge(u) >= sum_j F_edge on 2eps Z^2 + eps s_j of 2u
    """
    alpha = params.alpha if isinstance(params, PotentialParams) else float(params)
    br = energy_pedge(u, A, alpha)
    u2 = double(u)
    edge2 = energy_edge(u2, A)
    screw2 = energy_screw(u2, A)
    xy = energy_xy(exp_field(u, 4.0 * math.pi), A)
    rhs = 0.25 * edge2 + alpha / math.pi**2 * u.geom.spacing * nnn_sum(u, A)
    err = abs(br.total - rhs)
    sub = math.fsum(sublattice_energy("edge", u2, A, t) for t in SUBLATTICES)
    rep = ComparisonReport(err, 4.0 * br.total, edge2, screw2, xy, sub, br.total)
    rep.checks = {
        "identity": err <= atol,
        "pedge_ge_edge": 4.0 * br.total - edge2 >= -slack,
        "edge_ge_screw": edge2 - screw2 >= -slack,
        "screw_ge_xy": screw2 - xy >= -slack,
        "sublattice": 16.0 * br.total - sub >= -slack,
    }
    return rep

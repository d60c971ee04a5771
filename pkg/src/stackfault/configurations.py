"""Explicit lattice configurations: vortex liftings with prescribed cuts,
discrete single vortices, the even/odd half-vortex examples and the
recovery configuration built from core minimizers, a far-field lifting and a
two-coloring of the stacking fault.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import DisplacementField
from .lattice import Disc, Domain, LatticeGeometry

__all__ = [
    "LiftingSpec",
    "vortex_lifting",
    "discrete_vortex",
    "half_vortex_even_odd",
    "recovery_configuration",
    "RecoveryResult",
    "cutoff",
]

TWO_PI = 2.0 * math.pi
CUTS = ("right", "left", "full")


@dataclass(frozen=True)
class LiftingSpec:
    """Lifting of ((x - center)/|x - center|)^degree with a horizontal cut.

    ``cut`` is ``"right"`` (jump on the right ray, base angle in [0, 2pi)),
    ``"left"`` (jump on the left ray, base angle in (-pi, pi]) or ``"full"``
    (principal angle, smooth off the full horizontal line).  On the cut the
    value is the limit from below.
    """

    center: tuple[float, float] = (0.0, 0.0)
    degree: int = 1
    cut: str = "right"

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.degree not in (-1, 1):
            raise ValueError("degree must be +1 or -1")
        if self.cut not in CUTS:
            raise ValueError(f"cut must be one of {CUTS}")

    def conjugate(self) -> "LiftingSpec":
        return LiftingSpec(self.center, -self.degree, self.cut)


def _base_angle(dx, dy, cut):
    a = np.arctan2(dy, dx)
    on_axis = dy == 0
    if cut == "right":
        a = np.mod(a, TWO_PI)
        a = np.where(a >= TWO_PI, 0.0, a)
        a = np.where(on_axis & (dx > 0), TWO_PI, a)
    a = np.where(on_axis & (dx < 0), np.pi if cut == "right" else -np.pi, a)
    return a


def vortex_lifting(spec: LiftingSpec, at_center: float | None = None) -> Callable:
    """Angle evaluator theta(x, y) for ``spec``.

    Parameters
    ----------
    at_center : float, optional
        Value assigned at the center itself; by default evaluating there raises.
    """
    cx, cy = spec.center

    def theta(x, y):
        dx = np.asarray(x, dtype=float) - cx
        dy = np.asarray(y, dtype=float) - cy
        at = (dx == 0) & (dy == 0)
        if np.any(at) and at_center is None:
            raise ValueError(f"lifting evaluated at its center {spec.center}")
        out = spec.degree * _base_angle(dx, dy, spec.cut)
        if np.any(at):
            out = np.where(at, at_center, out)
        return out[()] if np.ndim(out) == 0 else out

    return theta


def sample_lifting(spec: LiftingSpec, geom: LatticeGeometry, idx, scale: float = 1.0 / TWO_PI,
                   at_center: float | None = None) -> np.ndarray:
    """Values scale * theta(site) at integer sites ``idx`` (shared sampling path)."""
    p = geom.position(np.asarray(idx, dtype=np.int64).reshape(-1, 2))
    return scale * vortex_lifting(spec, at_center)(p[:, 0], p[:, 1])


def discrete_vortex(eps: float, spec: LiftingSpec | None = None, domain: Domain | None = None,
                    pad: int = 1, at_center: float | None = None) -> DisplacementField:
    """u(i) = theta(i)/2pi on the lattice window covering ``domain``.

    By default the vortex sits at the barycenter (eps/2, eps/2) of the cell at
    the origin and the domain is B_1(0).
    """
    if spec is None:
        spec = LiftingSpec((0.5 * eps, 0.5 * eps), 1, "right")
    domain = domain or Disc((0.0, 0.0), 1.0)
    geom = LatticeGeometry(eps)
    u = DisplacementField.from_function(domain, geom, lambda x, y: np.zeros_like(x), pad=pad)
    # same sampling path as the core-energy boundary data, so the two agree bit for bit
    idx = np.indices(u.shape).reshape(2, -1).T + np.asarray(u.lo)
    u.values[...] = sample_lifting(spec, geom, idx, at_center=at_center).reshape(u.shape)
    return u


def half_vortex_even_odd(eps: float, x0=(0.0, 0.0), variant: str = "same-cut",
                         domain: Domain | None = None, pad: int = 2) -> DisplacementField:
    """Even/odd half-vortex fields around ``x0``.

    same-cut: u = theta_plus/4pi on even rows and theta_plus/4pi + 1/2 on odd rows.
    opposite-cuts: u = theta_plus/4pi on even rows and theta_minus/4pi on odd rows.
    Here theta_plus has its cut on the right ray and theta_minus on the left ray;
    both take the value 0 at x0 and the limit from below on their cut.
    """
    domain = domain or Disc((0.0, 0.0), 1.0)
    geom = LatticeGeometry(eps)
    tp = vortex_lifting(LiftingSpec(x0, 1, "right"), at_center=0.0)
    tm = vortex_lifting(LiftingSpec(x0, 1, "left"), at_center=0.0)
    u = DisplacementField.from_function(domain, geom, lambda x, y: np.zeros_like(x), pad=pad)
    x, y = u.positions()
    i2 = np.arange(u.shape[1]) + u.lo[1]
    odd = np.broadcast_to(np.mod(i2, 2) == 1, u.shape)
    even_vals = tp(x, y) / (2 * TWO_PI)
    if variant == "same-cut":
        odd_vals = even_vals + 0.5
    elif variant == "opposite-cuts":
        odd_vals = tm(x, y) / (2 * TWO_PI)
    else:
        raise ValueError("variant must be 'same-cut' or 'opposite-cuts'")
    u.values[...] = np.where(odd, odd_vals, even_vals)
    return u


def cutoff(t):
    """Smooth step: 0 on [0, 5/8], 1 on [7/8, inf), C-infinity in between."""
    t = np.asarray(t, dtype=float)
    s = np.clip((t - 0.625) / 0.25, 0.0, 1.0)

    def g(z):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)

    a, b = g(s), g(1.0 - s)
    return a / (a + b)


@dataclass
class RecoveryResult:
    """Recovery configuration and the ingredients used to build it.

    ``cores`` holds (value, SolverReport) of the core problem of each
    dislocation and ``matching`` the mean-angle constants a_h.
    """

    field: DisplacementField
    fault: object
    chords: list = field(default_factory=list)
    cores: list = field(default_factory=list)
    matching: list = field(default_factory=list)


def _wrap(t, period):
    """Representative of t modulo ``period`` in (-period/2, period/2]."""
    return t - period * np.ceil(t / period - 0.5)


def recovery_configuration(eps: float, mu, omega: Domain, sigma: float, alpha: float = 1.0,
                           fault=None, core_tol: float = 1e-10, core_restarts: int = 0,
                           pad: int = 2) -> RecoveryResult:
    """Displacement field built from core minimizers, a cut lifting and a two-coloring.

    The far field is ``U = psi/4pi + chi/2pi`` where psi is the sum of the
    right-ray liftings d_h theta(x - x_h) plus the harmonic conjugate of the
    regular part of Phi_mu, and chi in {0, pi} is the two-coloring by the full
    chords that turn the right-ray jump set into the fault ``S``.  Near x_h
    write 4pi U = d_h theta_h + g with theta_h the lifting cut along the ray
    of S at x_h; g is smooth modulo 4pi and a_h is its mean over the annulus
    sigma/2 < |x - x_h| < sigma.  On that annulus
    ``u = U + (eta(|x - x_h|/sigma) - 1)(g - a_h)/4pi`` and inside
    B_{sigma/2}(x_h) u is the partial-edge core minimizer with boundary data
    (d_h theta_h + a_h)/4pi plus the integer (g - g_smooth)/4pi, which only
    jumps across horizontal lines.
    """
    from .continuum import SingularityConfig, canonical_harmonic_map, check_sigma
    from .minimize import gamma_pedge
    from .stacking import line_tension, recovery_chords, resolves_tension, two_coloring

    mu = mu if isinstance(mu, SingularityConfig) else SingularityConfig.from_measure(mu)
    geom = LatticeGeometry(eps)
    zero = lambda x, y: np.zeros_like(x)
    if mu.M == 0:
        return RecoveryResult(DisplacementField.from_function(omega, geom, zero, pad=pad), fault)
    check_sigma(mu, omega, sigma)
    if not 0.5 * sigma > 8 * eps:
        raise ValueError(f"core radius sigma/2={0.5 * sigma} must exceed 8 eps={8 * eps}")
    if fault is None:
        _, fault = line_tension(mu, omega)
    if not resolves_tension(fault, mu):
        raise ValueError("the stacking fault does not resolve the dislocation tension")
    chords = recovery_chords(fault, mu, omega)
    chi = two_coloring(chords, omega)
    hm = canonical_harmonic_map(mu, omega)
    pts = np.asarray(mu.points, dtype=float)
    d = np.asarray(mu.charges, dtype=int)

    def psi_far(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        with np.errstate(all="ignore"):
            out = hm.phi.regular_conjugate(x, y) - hm._shift
        for (px, py), dh in zip(pts, d):
            out = out + dh * _base_angle(x - px, y - py, "right")
        return out + 2.0 * chi.value(x, y)

    u = DisplacementField.from_function(omega, geom, zero, pad=pad)
    X, Y = u.positions()
    four_pi = 2.0 * TWO_PI
    psi = psi_far(X, Y)
    vals = psi / four_pi
    cores, matching = [], []
    for (px, py), dh in zip(pts, d):
        side = _fault_side(fault, px, py)
        theta = vortex_lifting(LiftingSpec((px, py), int(dh), side), at_center=0.0)
        ref = (px, py + 0.75 * sigma)
        g0 = float(psi_far(*ref) - theta(*ref))
        # mean-angle matching over the gluing annulus
        rr = 0.5 * sigma * (1.0 + (np.arange(64) + 0.5) / 64)
        tt = (np.arange(256) + 0.5) * (TWO_PI / 256)
        RR, TT = np.meshgrid(rr, tt, indexing="ij")
        ax, ay = px + RR * np.cos(TT), py + RR * np.sin(TT)
        ga = g0 + _wrap(psi_far(ax, ay) - theta(ax, ay) - g0, four_pi)
        a_h = float(np.sum(ga * RR) / np.sum(RR))
        matching.append(a_h)
        R = np.hypot(X - px, Y - py)
        near = R < sigma
        g = psi[near] - theta(X[near], Y[near])
        gs = g0 + _wrap(g - g0, four_pi)
        sheet = np.round((g - gs) / four_pi)
        eta = cutoff(R[near] / sigma)
        vals[near] = psi[near] / four_pi + (eta - 1.0) * (gs - a_h) / four_pi
        core_val, rep = gamma_pedge(eps, 0.5 * sigma, (px, py), alpha, restarts=core_restarts,
                                    tol=core_tol, cut=side, degree=int(dh), rotation=a_h)
        cores.append((core_val, rep))
        idx = np.argwhere(near) + np.asarray(u.lo)
        inner = (R[near] < 0.5 * sigma) & rep.field.defined(idx)
        vals_near = vals[near]
        vals_near[inner] = rep.field.at(idx[inner]) + sheet[inner]
        vals[near] = vals_near
    u.values[...] = vals
    return RecoveryResult(u, fault, chords, cores, matching)


def _fault_side(fault, px, py) -> str:
    """'right' or 'left' according to the ray of the fault emanating from (px, py)."""
    for s in fault.segments:
        if s.horizontal and s.y == py:
            if s.p[0] == px:
                return "right"
            if s.q[0] == px:
                return "left"
    raise ValueError(f"no fault segment emanates from ({px}, {py})")

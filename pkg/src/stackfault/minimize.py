"""Dirichlet minimization of the screw, edge and partial-edge energies.

Every energy is a sum over bonds of ``w * 2pi^2 * dist^2(u_b - u_a, pZ)`` with
``p`` in {0, 1/2, 1} (p = 0 meaning the plain square).  The solver alternates

* exact coordinate descent: on each colour class of a checkerboard colouring
  every free site is moved to a global minimizer of its one-dimensional
  section, found among the clamped quadratic minimizers of all branches and
  the interval endpoints between breakpoints;
* majorize-minimize steps: with the nearest-branch integers frozen the
  energy is majorized by a weighted quadratic whose minimizer is one sparse
  solve (the matrix does not depend on the branches and is factorized once).

Both steps never increase the energy; the iteration stops when a full sweep
moves no site by more than the tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .configurations import LiftingSpec, sample_lifting
from .energies import energy_pedge, energy_screw
from .fields import DisplacementField, LatticeField
from .lattice import Disc, Domain, LatticeGeometry, Punctured, bonds, discrete_boundary

__all__ = [
    "MinimizationProblem",
    "SolverReport",
    "GammaEstimate",
    "dirichlet_problem",
    "solve",
    "gamma_screw",
    "gamma_pedge",
    "extrapolate_gamma",
    "m_sigma_discrete",
]

TWO_PI2 = 2.0 * math.pi**2
KINDS = ("screw", "edge", "pedge")
CHUNK = 4096
PERTURBATIONS = ("integer", "row-half", "integer-noise", "row-half-noise")


@dataclass
class MinimizationProblem:
    """Energy, geometry and Dirichlet data of a discrete minimization.

    Parameters
    ----------
    kind : {"screw", "edge", "pedge"}
    domain : Domain
        Bonds of the energy are those of ``domain``.
    geom : LatticeGeometry
    free, fixed : ndarray of int, shape (n, 2)
        Disjoint site sets covering every bond endpoint.
    fixed_values : ndarray, shape (len(fixed),)
    initial : LatticeField, optional
        Starting values on the free sites (zero when omitted).
    alpha : float
        Stacking-fault weight of the partial-edge energy.
    tol : float
        Stop once a sweep moves no site by more than ``tol``.
    max_sweeps : int
    restarts : int
        Extra perturbed starts besides the plain one.
    perturbation : {"integer", "row-half", "integer-noise", "row-half-noise"}
        Perturbation used by the restarts: random integers per site, random
        half-integers per row, optionally plus uniform noise in [-1/4, 1/4].
    seed : int
    """

    kind: str
    domain: Domain
    geom: LatticeGeometry
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    initial: LatticeField | None = None
    alpha: float = 1.0
    tol: float = 1e-10
    max_sweeps: int = 100_000
    restarts: int = 0
    perturbation: str = "integer"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.perturbation not in PERTURBATIONS:
            raise ValueError(f"perturbation must be one of {PERTURBATIONS}")
        self.free = np.asarray(self.free, dtype=np.int64).reshape(-1, 2)
        self.fixed = np.asarray(self.fixed, dtype=np.int64).reshape(-1, 2)
        self.fixed_values = np.asarray(self.fixed_values, dtype=float).ravel()
        if len(self.fixed_values) != len(self.fixed):
            raise ValueError("inconsistent fixed data: one value per fixed site is required")
        if not np.all(np.isfinite(self.fixed_values)):
            raise ValueError("inconsistent fixed data: non-finite fixed value")
        u, inv = np.unique(self.fixed, axis=0, return_inverse=True)
        if len(u) < len(self.fixed):
            inv = inv.ravel()
            first = np.full(len(u), np.nan)
            first[inv[::-1]] = self.fixed_values[::-1]
            if np.any(first[inv] != self.fixed_values):
                raise ValueError("inconsistent fixed data: a site is given two values")
            keep = np.unique(inv, return_index=True)[1]
            self.fixed, self.fixed_values = self.fixed[keep], self.fixed_values[keep]
        self.free = np.unique(self.free, axis=0)
        both = np.concatenate([self.free, self.fixed])
        if len(np.unique(both, axis=0)) < len(both):
            raise ValueError("free and fixed site sets overlap")


@dataclass
class SolverReport:
    """Outcome of :func:`solve`.

    ``energy`` is the final energy of the best start, ``dispersion`` the
    spread of final energies over all starts and ``history`` the energy
    after every majorize-minimize step and sweep of the best start.
    """

    energy: float
    sweeps: int
    residual: float
    dispersion: float
    monotone: bool
    converged: bool
    restart_energies: list = field(default_factory=list)
    history: list = field(default_factory=list)
    mm_steps: int = 0
    field: DisplacementField | None = None


def _terms(kind: str, alpha: float, eps: float):
    """(direction, span, period p, weight) of each bond family."""
    if kind == "screw":
        return [(0, 1, 1.0, 1.0), (1, 1, 1.0, 1.0)]
    if kind == "edge":
        return [(0, 1, 0.0, 1.0), (1, 1, 1.0, 1.0)]
    return [(0, 1, 0.0, 1.0), (1, 1, 0.5, 1.0), (1, 2, 1.0, alpha * eps / math.pi**2)]


def _branch(d, p):
    """Nearest point of pZ (p > 0) or 0 (p = 0), with the ceil(t - 1/2) tie rule."""
    pp = np.where(p > 0, p, 1.0)
    return np.where(p > 0, pp * np.ceil(d / pp - 0.5), 0.0)


class _System:
    def __init__(self, prob: MinimizationProblem):
        self.prob = prob
        nf = len(prob.free)
        self.nf = nf
        sites = np.concatenate([prob.free, prob.fixed])
        self.sites = sites
        self.lo = sites.min(axis=0) if len(sites) else np.zeros(2, dtype=np.int64)
        shape = (sites.max(axis=0) - self.lo + 1) if len(sites) else np.zeros(2, dtype=np.int64)
        self.lut = np.full(tuple(int(s) for s in shape), -1, dtype=np.int64)
        if len(sites):
            self.lut[sites[:, 0] - self.lo[0], sites[:, 1] - self.lo[1]] = np.arange(len(sites))
        A, B, W, P = [], [], [], []
        for direction, span, p, w in _terms(prob.kind, prob.alpha, prob.geom.spacing):
            s, e = bonds(prob.domain, prob.geom, direction, span)
            ia, ib = self._index(s), self._index(e)
            A.append(ia)
            B.append(ib)
            W.append(np.full(len(ia), w))
            P.append(np.full(len(ia), p))
        self.a = np.concatenate(A)
        self.b = np.concatenate(B)
        self.w = np.concatenate(W)
        self.p = np.concatenate(P)
        self.has_span2 = prob.kind == "pedge"
        if nf:
            self._build_sections()
            self._build_quadratic()

    def _index(self, idx):
        idx = np.asarray(idx, dtype=np.int64).reshape(-1, 2)
        if len(idx) == 0:
            return np.zeros(0, dtype=np.int64)
        loc = idx - self.lo
        ok = np.all((loc >= 0) & (loc < np.asarray(self.lut.shape)), axis=1)
        out = np.full(len(idx), -1, dtype=np.int64)
        out[ok] = self.lut[loc[ok, 0], loc[ok, 1]]
        if np.any(out < 0):
            bad = idx[out < 0][0]
            raise ValueError(f"bond endpoint {tuple(int(v) for v in bad)} is neither free nor fixed")
        return out

    # -- energy ---------------------------------------------------------------

    def energy(self, x) -> float:
        d = x[self.b] - x[self.a]
        r = d - _branch(d, self.p)
        e = TWO_PI2 * math.fsum((self.w * r * r).tolist())
        if not math.isfinite(e):
            raise FloatingPointError("non-finite energy")
        return e

    # -- coordinate descent ---------------------------------------------------

    def _build_sections(self):
        nf = self.nf
        src = np.concatenate([self.a, self.b])
        nbr = np.concatenate([self.b, self.a])
        w = np.concatenate([self.w, self.w])
        p = np.concatenate([self.p, self.p])
        keep = src < nf
        src, nbr, w, p = src[keep], nbr[keep], w[keep], p[keep]
        order = np.argsort(src, kind="stable")
        src, nbr, w, p = src[order], nbr[order], w[order], p[order]
        counts = np.bincount(src, minlength=nf)
        K = max(int(counts.max()) if len(counts) else 1, 1)
        start = np.concatenate([[0], np.cumsum(counts)[:-1]])
        rank = np.arange(len(src)) - start[src]
        self.nbr = np.zeros((nf, K), dtype=np.int64)
        self.sw = np.zeros((nf, K))
        self.sp = np.ones((nf, K))
        self.nbr[src, rank] = nbr
        self.sw[src, rank] = w
        self.sp[src, rank] = p
        free = self.prob.free
        ncol = 3 if self.has_span2 else 2
        colour = np.mod(free[:, 0] + free[:, 1], ncol)
        self.classes = [np.flatnonzero(colour == c) for c in range(ncol)]
        self.classes = [c for c in self.classes if len(c)]

    def _section_min(self, x, S):
        """Global minimizers of the one-dimensional sections of the sites ``S``."""
        n = x[self.nbr[S]]
        w, p = self.sw[S], self.sp[S]
        xo = x[S]
        f0 = (p == 0) & (w > 0)
        per = (p > 0) & (w > 0)
        pp = np.where(per, p, 1.0)
        W0 = (w * f0).sum(axis=1)
        has0 = W0 > 0
        W0s = np.where(has0, W0, 1.0)
        xbar = np.where(has0, (w * n * f0).sum(axis=1) / W0s, xo)
        Pq = (w * per * (pp / 2) ** 2).sum(axis=1)
        half = np.where(has0, np.sqrt(Pq / W0s), 0.5)
        lo, hi = xbar - half, xbar + half
        pmin = float(pp[per].min()) if per.any() else 1.0
        J = int(math.ceil(2.0 * float(half.max()) / pmin)) + 1
        m0 = np.ceil((lo[:, None] - n) / pp - 0.5)
        bp = n[..., None] + pp[..., None] * (m0[..., None] + np.arange(J) + 0.5)
        ok = per[..., None] & (bp >= lo[:, None, None]) & (bp <= hi[:, None, None])
        bp = np.where(ok, bp, np.nan).reshape(len(S), -1)
        pts = np.sort(np.concatenate([lo[:, None], bp, hi[:, None]], axis=1), axis=1)
        left, right = pts[:, :-1], pts[:, 1:]
        mid = 0.5 * (left + right)
        c = np.where(per[:, None, :], _branch(mid[:, :, None] - n[:, None, :], pp[:, None, :]) + n[:, None, :],
                     n[:, None, :])
        wa = np.where(f0 | per, w, 0.0)
        ws = wa.sum(axis=1)
        xq = (wa[:, None, :] * c).sum(axis=2) / ws[:, None]
        xq = np.minimum(np.maximum(xq, left), right)
        cand = np.concatenate([xq, xo[:, None]], axis=1)
        t = cand[:, :, None] - n[:, None, :]
        r = np.where(per[:, None, :], t - _branch(t, pp[:, None, :]), t)
        g = (w[:, None, :] * r * r).sum(axis=2)
        g = np.where(np.isnan(g), np.inf, g)
        k = np.argmin(g, axis=1)
        rows = np.arange(len(S))
        better = g[rows, k] < g[:, -1]
        return np.where(better, cand[rows, k], xo)

    def sweep(self, x) -> float:
        delta = 0.0
        for cls in self.classes:
            for i in range(0, len(cls), CHUNK):
                S = cls[i:i + CHUNK]
                new = self._section_min(x, S)
                if len(S):
                    delta = max(delta, float(np.max(np.abs(new - x[S]))))
                x[S] = new
        return delta

    # -- majorize-minimize ----------------------------------------------------

    def _build_quadratic(self):
        nf = self.nf
        a, b, w = self.a, self.b, self.w
        fa, fb = a < nf, b < nf
        both = fa & fb
        g = coo_matrix((np.ones(int(both.sum())), (a[both], b[both])), shape=(nf, nf))
        ncomp, lab = connected_components(g, directed=False)
        anchored = np.zeros(ncomp, dtype=bool)
        anchored[lab[a[fa & ~fb]]] = True
        anchored[lab[b[fb & ~fa]]] = True
        pinned = np.zeros(nf, dtype=bool)
        for comp in np.flatnonzero(~anchored):
            pinned[np.flatnonzero(lab == comp)[0]] = True
        self.active = ~pinned
        act = np.full(len(self.sites), -1, dtype=np.int64)
        act[np.flatnonzero(self.active)] = np.arange(int(self.active.sum()))
        self.act = act
        na, nb_ = act[a], act[b]
        ia, ib = na >= 0, nb_ >= 0
        rows = np.concatenate([na[ia], nb_[ib], na[ia & ib], nb_[ia & ib]])
        cols = np.concatenate([na[ia], nb_[ib], nb_[ia & ib], na[ia & ib]])
        vals = np.concatenate([w[ia], w[ib], -w[ia & ib], -w[ia & ib]])
        nact = int(self.active.sum())
        self.lu = splu(coo_matrix((vals, (rows, cols)), shape=(nact, nact)).tocsc()) if nact else None
        self._ia, self._ib = ia, ib

    def mm_step(self, x):
        if self.lu is None:
            return x
        a, b, w = self.a, self.b, self.w
        z = _branch(x[b] - x[a], self.p)
        na, nb_ = self.act[a], self.act[b]
        ia, ib = self._ia, self._ib
        n = self.lu.shape[0]
        rhs = np.bincount(na[ia], weights=w[ia] * (-z[ia] + np.where(ib[ia], 0.0, x[b][ia])), minlength=n)
        rhs += np.bincount(nb_[ib], weights=w[ib] * (z[ib] + np.where(ia[ib], 0.0, x[a][ib])), minlength=n)
        y = x.copy()
        y[np.flatnonzero(self.act >= 0)] = self.lu.solve(rhs)
        return y


def _descend(sys: _System, x, tol, max_sweeps):
    E = sys.energy(x)
    hist = [E]
    sweeps = mm = 0
    resid = math.inf
    converged = False
    while True:
        for _ in range(500):
            z0 = _branch(x[sys.b] - x[sys.a], sys.p)
            y = sys.mm_step(x)
            Ey = sys.energy(y)
            if not Ey <= E:
                break
            mm += 1
            x, E = y, Ey
            hist.append(E)
            if np.array_equal(_branch(x[sys.b] - x[sys.a], sys.p), z0):
                break
        for _ in range(20):
            if sweeps >= max_sweeps:
                break
            resid = sys.sweep(x)
            sweeps += 1
            E = sys.energy(x)
            hist.append(E)
            if resid <= tol:
                converged = True
                break
        if converged or sweeps >= max_sweeps:
            return x, E, hist, sweeps, resid, converged, mm


def _perturb(prob: MinimizationProblem, x0, rng):
    nf = len(prob.free)
    x = x0.copy()
    if prob.perturbation.startswith("integer"):
        x[:nf] += rng.integers(-2, 3, size=nf)
    else:
        rows, inv = np.unique(prob.free[:, 1], return_inverse=True)
        x[:nf] += 0.5 * rng.integers(-2, 3, size=len(rows))[inv.ravel()]
    if prob.perturbation.endswith("noise"):
        x[:nf] += rng.uniform(-0.25, 0.25, size=nf)
    return x


def solve(problem: MinimizationProblem) -> tuple[DisplacementField, SolverReport]:
    """Minimize the energy of ``problem`` over its free sites.

    Returns
    -------
    field : DisplacementField
        Defined exactly on the free and fixed sites; fixed values are copied
        unchanged.
    report : SolverReport
    """
    sys = _System(problem)
    nf = sys.nf
    x0 = np.zeros(len(sys.sites))
    x0[nf:] = problem.fixed_values
    if problem.initial is not None and nf:
        x0[:nf] = problem.initial.at(problem.free)
    if nf == 0:
        E = sys.energy(x0)
        f = DisplacementField.from_sites(problem.geom, sys.sites, x0)
        return f, SolverReport(E, 0, 0.0, 0.0, True, True, [E], [E], 0, f)
    rng = np.random.default_rng(problem.seed)
    runs = []
    for r in range(problem.restarts + 1):
        start = x0 if r == 0 else _perturb(problem, x0, rng)
        runs.append(_descend(sys, start.copy(), problem.tol, problem.max_sweeps))
    energies = [run[1] for run in runs]
    best = int(np.argmin(energies))
    x, E, hist, sweeps, resid, converged, mm = runs[best]
    x[nf:] = problem.fixed_values
    scale = max(1.0, abs(hist[0]))
    monotone = bool(np.all(np.diff(hist) <= 1e-12 * scale))
    f = DisplacementField.from_sites(problem.geom, sys.sites, x)
    rep = SolverReport(E, sweeps, resid, float(max(energies) - min(energies)), monotone, converged,
                       energies, hist, mm, f)
    return f, rep


def dirichlet_problem(kind: str, domain: Domain, geom: LatticeGeometry, boundary: np.ndarray,
                      data: Callable, initial: Callable | None = None, **kw) -> MinimizationProblem:
    """Problem whose fixed sites are the bond endpoints lying on ``boundary``.

    ``data(idx)`` gives the fixed values and ``initial(idx)`` the starting
    values of the free sites (``data`` itself when omitted).
    """
    alpha = kw.get("alpha", 1.0)
    ends = []
    for direction, span, _, _ in _terms(kind, alpha, geom.spacing):
        s, e = bonds(domain, geom, direction, span)
        ends += [s, e]
    ends = np.unique(np.concatenate(ends), axis=0) if ends else np.zeros((0, 2), dtype=np.int64)
    bset = {tuple(v) for v in np.asarray(boundary).tolist()}
    on = np.array([tuple(v) in bset for v in ends.tolist()], dtype=bool) if len(ends) else np.zeros(0, bool)
    fixed, free = ends[on], ends[~on]
    init = None
    if len(free):
        init = DisplacementField.from_sites(geom, free, (initial or data)(free))
    return MinimizationProblem(kind, domain, geom, free, fixed, data(fixed) if len(fixed) else np.zeros(0),
                               init, **kw)


def gamma_screw(eps: float, sigma: float, x0=(0.0, 0.0), restarts: int = 8, seed: int = 0,
                tol: float = 1e-10, max_sweeps: int = 100_000,
                cut: str = "right", perturbation: str = "integer") -> tuple[float, SolverReport]:
    """Screw core energy: min F_screw(u, B_sigma(x0)) with u = theta/2pi on the single boundary layer.

    Restarts add random integers to the sampled lifting (an exact symmetry of
    F_screw, so their spread measures rounding only); ``integer-noise`` also
    adds bounded noise and explores other local minima.
    """
    if not sigma > 4 * eps:
        raise ValueError(f"gamma_screw needs sigma > 4 eps, got sigma={sigma}, eps={eps}")
    geom = LatticeGeometry(eps)
    B = Disc(tuple(x0), sigma)
    spec = LiftingSpec(tuple(x0), 1, cut)
    data = lambda idx: sample_lifting(spec, geom, idx, at_center=0.0)
    prob = dirichlet_problem("screw", B, geom, discrete_boundary(B, geom, "single"), data,
                             tol=tol, max_sweeps=max_sweeps, restarts=restarts, seed=seed,
                             perturbation=perturbation)
    u, rep = solve(prob)
    return energy_screw(u, B), rep


def gamma_pedge(eps: float, sigma: float, x0=(0.0, 0.0), alpha: float = 1.0, restarts: int = 8,
                seed: int = 0, tol: float = 1e-10, max_sweeps: int = 100_000, cut: str = "right",
                degree: int = 1, rotation: float = 0.0) -> tuple[float, SolverReport]:
    """Partial-edge core energy: min F_pedge(u, B_sigma(x0)) with 2u = theta/2pi on the double layer.

    ``theta = degree * theta_cut(x - x0) + rotation``; the initializer is
    theta/4pi everywhere and restarts add random half-integer row offsets.
    """
    if not sigma > 8 * eps:
        raise ValueError(f"gamma_pedge needs sigma > 8 eps, got sigma={sigma}, eps={eps}")
    geom = LatticeGeometry(eps)
    B = Disc(tuple(x0), sigma)
    spec = LiftingSpec(tuple(x0), degree, cut)
    scale = 1.0 / (4.0 * math.pi)
    data = lambda idx: sample_lifting(spec, geom, idx, scale=scale, at_center=0.0) + rotation * scale
    prob = dirichlet_problem("pedge", B, geom, discrete_boundary(B, geom, "double"), data,
                             alpha=alpha, tol=tol, max_sweeps=max_sweeps, restarts=restarts, seed=seed,
                             perturbation="row-half")
    u, rep = solve(prob)
    return energy_pedge(u, B, alpha).total, rep


@dataclass
class GammaEstimate:
    """Extrapolated core constant with the sequence r_k and its successive differences."""

    estimate: float
    r: list
    diffs: list
    mode: str


def extrapolate_gamma(series: Sequence[tuple[float, float, float]], mode: str = "screw") -> GammaEstimate:
    """r_k = value_k - pi log(sigma/eps_k) (screw) or 4 value_k - pi log(sigma/eps_k) (pedge)."""
    if mode not in ("screw", "pedge"):
        raise ValueError("mode must be 'screw' or 'pedge'")
    series = sorted(series, key=lambda t: -t[0])
    if len(series) < 3:
        raise ValueError("extrapolation needs at least 3 ladder points")
    if len({s for _, s, _ in series}) != 1:
        raise ValueError("ladder points must share sigma")
    fac = 4.0 if mode == "pedge" else 1.0
    r = [fac * v - math.pi * math.log(s / e) for e, s, v in series]
    return GammaEstimate(r[-1], r, [b - a for a, b in zip(r, r[1:])], mode)


def m_sigma_discrete(mu, omega: Domain, sigma: float, eps: float, tol: float = 1e-10,
                     max_sweeps: int = 100_000, restarts: int = 0, seed: int = 0,
                     return_report: bool = False):
    """min F_screw over Omega^sigma(mu) with data theta_mu/2pi on every discrete boundary."""
    from .continuum import SingularityConfig, canonical_harmonic_map, check_sigma

    mu = mu if isinstance(mu, SingularityConfig) else SingularityConfig.from_measure(mu)
    geom = LatticeGeometry(eps)
    if mu.M == 0:
        dom = omega
        data = lambda idx: np.zeros(len(idx))
    else:
        check_sigma(mu, omega, sigma)
        dom = Punctured(omega, tuple(tuple(map(float, p)) for p in mu.points), sigma)
        hm = canonical_harmonic_map(mu, omega)

        def data(idx):
            p = geom.position(idx)
            return hm.angle(p[:, 0], p[:, 1]) / (2 * math.pi)

    prob = dirichlet_problem("screw", dom, geom, discrete_boundary(dom, geom, "single"), data,
                             tol=tol, max_sweeps=max_sweeps, restarts=restarts, seed=seed)
    u, rep = solve(prob)
    val = energy_screw(u, dom)
    return (val, rep) if return_report else val

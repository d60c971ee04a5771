"""Acceptance criteria 1-12, each checked at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL`` line; the lines are printed
as they are produced and again in the pytest terminal summary.  Running this
file directly executes all criteria and prints the lines without pytest.
"""
import itertools
import math
import time

import numpy as np

from oracles import flat_lp, image_series
from stackfault.configurations import discrete_vortex, half_vortex_even_odd, recovery_configuration
from stackfault.continuum import SingularityConfig, phi_mu, renormalized_energy
from stackfault.energies import energy_edge, energy_pedge, energy_screw, nnn_sum, verify_comparisons
from stackfault.fields import DisplacementField, SpinField, affine_interpolate, double
from stackfault.lattice import Disc, LatticeGeometry, Rectangle, cells
from stackfault.minimize import gamma_pedge, gamma_screw, m_sigma_discrete
from stackfault.stacking import line_tension, line_tension_bruteforce
from stackfault.vorticity import (VorticityMeasure, circulation_grid, dipole_free_representative,
                                  flat_distance, vorticity_measure, winding_number)

RESULTS = []
B1 = Disc((0.0, 0.0), 1.0)
DELTA0 = SingularityConfig.of([(0.0, 0.0)], [1])


def record(n: int, ok: bool, detail: str):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _corpus(n_fields=1000, n=16, seed=2024):
    rng = np.random.default_rng(seed)
    g = LatticeGeometry(1.0 / n)
    A = Rectangle(0.0, (n - 1) / n, 0.0, (n - 1) / n)
    for _ in range(n_fields):
        vals = rng.integers(-2**21, 2**21, size=(n, n)) / 2.0**20
        yield DisplacementField(g, (0, 0), vals), A, float(rng.uniform(0.1, 4.0))


def test_criterion_01_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for u, A, alpha in _corpus():
        F = energy_pedge(u, A, alpha).total
        rhs = 0.25 * energy_edge(double(u), A) + alpha / math.pi**2 * u.geom.spacing * nnn_sum(u, A)
        worst = max(worst, abs(F - rhs))
    dt = time.perf_counter() - t0
    record(1, worst < 1e-10 and dt < 5.0, f"max |error| = {worst:.2e} over 1000 fields, {dt:.2f} s")


def _generator_fields():
    eps = 2**-5
    out = [(discrete_vortex(eps), B1, 1.0)]
    for variant in ("same-cut", "opposite-cuts"):
        out.append((half_vortex_even_odd(eps, (0.0, 0.0), variant), B1, 1.0))
    rec = recovery_configuration(eps, DELTA0, B1, 0.75)
    out.append((rec.field, B1, 1.0))
    _, rep = gamma_pedge(1 / 16, 0.5 + 1e-9, restarts=0)
    out.append((rep.field, Disc((0.0, 0.0), 0.5 + 1e-9), 1.0))
    _, rep = gamma_screw(1 / 16, 0.5, restarts=0)
    out.append((rep.field, Disc((0.0, 0.0), 0.5), 1.0))
    return out


def test_criterion_02_chain():
    worst = math.inf
    count = 0
    for u, A, alpha in itertools.chain(_corpus(), _generator_fields()):
        r = verify_comparisons(u, A, alpha)
        worst = min(worst, r.four_pedge - r.edge_2u, r.edge_2u - r.screw_2u, r.screw_2u - r.xy_4pi)
        count += 1
    record(2, worst >= -1e-9, f"min slack = {worst:.3e} over {count} fields")


def test_criterion_03_dipole_free():
    rng = np.random.default_rng(3)
    g = LatticeGeometry(1.0 / 16)
    D = Disc((0.0, 0.0), 0.9)
    bad = 0
    for _ in range(200):
        vals = rng.integers(-2**21, 2**21, size=(33, 33)) / 2.0**20
        u = DisplacementField(g, (-16, -16), vals)
        ut = dipole_free_representative(u, D)
        s1, s2, e2 = energy_screw(u, D), energy_screw(ut, D), energy_edge(ut, D)
        if not (s1 == s2 == e2 and vorticity_measure(u, D) == vorticity_measure(ut, D)):
            bad += 1
    record(3, bad == 0, f"{bad} of 200 disc fields violate exact equality")


def test_criterion_04_quantization_stokes():
    rng = np.random.default_rng(4)
    n = 24
    bad_q = bad_s = 0
    for k in range(500):
        vals = rng.integers(-2**22, 2**22, size=(n, n)) / 2.0**20
        u = DisplacementField(LatticeGeometry(1.0 / n), (0, 0), vals)
        circ, valid = circulation_grid(u)
        bad_q += int(np.any(~np.isin(circ[valid], (-1, 0, 1))))
        a1, a2 = np.sort(rng.choice(n, size=2, replace=False))
        b1, b2 = np.sort(rng.choice(n, size=2, replace=False))
        loop = ([(i, b1) for i in range(a1, a2)] + [(a2, j) for j in range(b1, b2)]
                + [(i, b2) for i in range(a2, a1, -1)] + [(a1, j) for j in range(b2, b1, -1)])
        bad_s += int(winding_number(u, loop) != int(circ[a1:a2, b1:b2].sum()))
    record(4, bad_q == 0 and bad_s == 0, f"quantization failures {bad_q}, Stokes failures {bad_s} on 500 blocks")


def test_criterion_05_affine_identity():
    rng = np.random.default_rng(5)
    g = LatticeGeometry(1.0 / 8)
    A = Rectangle(0.0, 7 / 8, 0.0, 7 / 8)
    worst = 0.0
    for _ in range(200):
        v = SpinField(g, (0, 0), rng.uniform(0, 2 * math.pi, size=(8, 8)))
        z = v.vectors()
        anc = cells(A, g)
        i1, i2 = anc[:, 0], anc[:, 1]
        edges = (np.abs(z[i1 + 1, i2] - z[i1, i2]) ** 2 + np.abs(z[i1 + 1, i2 + 1] - z[i1 + 1, i2]) ** 2
                 + np.abs(z[i1, i2 + 1] - z[i1 + 1, i2 + 1]) ** 2 + np.abs(z[i1, i2] - z[i1, i2 + 1]) ** 2)
        worst = max(worst, float(np.max(np.abs(affine_interpolate(v, A).dirichlet() - 0.5 * edges))))
    record(5, worst <= 1e-10, f"max per-cell error = {worst:.2e} on 200 fields")


def test_criterion_06_renormalized_energy():
    parts = []
    ok = True
    for s in (1.0, 0.5, 0.25):
        W = renormalized_energy(DELTA0, Disc((0.0, 0.0), s)).W
        stated = -abs(math.log(s))
        good = abs(W - stated) <= 1e-12
        ok &= good
        parts.append(f"sigma={s}: W={W:.12f} vs {stated:.12f} ({'ok' if good else 'off'};"
                     f" -pi|log sigma| err {abs(W + math.pi * abs(math.log(s))):.0e})")
    R = Rectangle(-1.0, 1.0, -1.0, 1.0)
    _, R0 = image_series(0.0, 0.0)
    phi = phi_mu(DELTA0, R)
    rel = abs(float(phi.regular(0.0, 0.0)) - R0) / abs(R0)
    pts = [(0.3, 0.2), (-0.5, 0.6), (0.8, -0.1)]
    rel_pts = max(abs(float(phi(x, y)) - image_series(x, y)[0]) / abs(image_series(x, y)[0]) for x, y in pts)
    ok &= rel < 0.01 and rel_pts < 0.01
    parts.append(f"rectangle vs image series: R(0) rel err {rel:.1e}, Phi rel err {rel_pts:.1e}")
    record(6, ok, "; ".join(parts))


def test_criterion_07_m_sigma():
    t0 = time.perf_counter()
    target = math.pi * math.log(4)
    v64 = m_sigma_discrete(DELTA0, B1, 0.25, 1 / 64)
    v128 = m_sigma_discrete(DELTA0, B1, 0.25, 1 / 128)
    dt = time.perf_counter() - t0
    within = abs(v128 - target) <= 0.1 * target
    # decreasing as a function of eps: the finer lattice gives the larger value
    decreasing = v128 > v64
    record(7, within and decreasing and dt < 120,
           f"m(1/64)={v64:.4f}, m(1/128)={v128:.4f}, target {target:.4f}, rel err {abs(v128 - target) / target:.3f},"
           f" {dt:.1f} s")


SCREW = {}


def _screw_ladder():
    if not SCREW:
        for k in (8, 16, 32):
            SCREW[k] = gamma_screw(0.5 / k, 0.5, restarts=8)
    return SCREW


def test_criterion_08_gamma_scaling():
    t0 = time.perf_counter()
    lad = _screw_ladder()
    dt = time.perf_counter() - t0
    r = [lad[k][0] - math.pi * math.log(k) for k in (8, 16, 32)]
    d1, d2 = abs(r[1] - r[0]), abs(r[2] - r[1])
    disp = max(lad[k][1].dispersion for k in lad)
    record(8, d2 < d1 and d2 < 0.15 and disp < 1e-6 and dt < 300,
           f"r = {r[0]:.4f}, {r[1]:.4f}, {r[2]:.4f}; |diffs| {d1:.4f}, {d2:.4f}; dispersion {disp:.1e}; {dt:.1f} s")


def test_criterion_09_partial_core():
    lad = _screw_ladder()
    ok = True
    parts = []
    # sigma/eps = 8 violates the strict core precondition sigma > 8 eps, so the rows are 16 and 32
    for k in (16, 32):
        eps = 0.5 / k
        v, rep = gamma_pedge(eps, 0.5, restarts=8) if 0.5 > 8 * eps else (None, None)
        rp = 4 * v - math.pi * math.log(k)
        rs = lad[k][0] - math.pi * math.log(k)
        chain = verify_comparisons(rep.field, Disc((0.0, 0.0), 0.5))
        slack = min(chain.four_pedge - chain.edge_2u, chain.edge_2u - chain.screw_2u,
                    chain.screw_2u - chain.xy_4pi)
        good = rp >= rs - 0.2 and slack >= -1e-9
        ok &= good
        parts.append(f"sigma/eps={k}: r_pedge {rp:.4f} vs r_screw {rs:.4f}, chain slack {slack:.1e}")
    record(9, ok, "; ".join(parts))


def test_criterion_10_line_tension():
    rng = np.random.default_rng(10)
    mismatches = 0
    for _ in range(200):
        k = int(rng.integers(1, 7))
        ys = rng.choice(np.arange(-6, 7), size=int(rng.integers(1, 4)), replace=False) * 0.12
        pts = set()
        while len(pts) < k:
            y = float(rng.choice(ys))
            half = math.sqrt(1 - y * y)
            pts.add((float(np.round(rng.uniform(-0.95 * half, 0.95 * half), 6)), y))
        mu = VorticityMeasure.from_pairs([(p, int(rng.choice((-1, 1)))) for p in pts], B1)
        mismatches += int(line_tension(mu, B1)[0] != line_tension_bruteforce(mu, B1))
    examples = [
        ([((0.0, 0.0), 1)], 1.0),
        ([((-0.25, 0.0), 1), ((0.25, 0.0), -1)], 0.5),
        ([((-0.5, 0.0), 1), ((0.0, 0.0), -1), ((0.5, 0.0), 1)], 1.0),
    ]
    got = [line_tension(VorticityMeasure.from_pairs(p, B1), B1)[0] for p, _ in examples]
    ok = mismatches == 0 and got == [L for _, L in examples]
    record(10, ok, f"{mismatches} mismatches on 200 configurations; examples L = {got}")


def test_criterion_11_flat_distance():
    rng = np.random.default_rng(11)
    worst = 0.0
    for R in (1.0, 10.0):
        D = Disc((0.0, 0.0), R)
        g = np.linspace(-R, R, 13)
        X, Y = np.meshgrid(g, g)
        grid = np.c_[X.ravel(), Y.ravel()]
        grid = grid[D.contains(grid[:, 0], grid[:, 1])]
        for _ in range(50):
            k = int(rng.integers(1, 5))
            r = R * np.sqrt(rng.uniform(0, 0.95, size=k))
            t = rng.uniform(0, 2 * math.pi, size=k)
            pts = np.c_[r * np.cos(t), r * np.sin(t)]
            ch = rng.choice((-1, 1), size=k)
            mu = VorticityMeasure(pts, ch, D)
            got = flat_distance(mu, VorticityMeasure.empty(D), D)
            ref = flat_lp(pts, ch, D.boundary_distance, grid)
            worst = max(worst, abs(got - ref) / max(ref, 1e-12))
    record(11, worst <= 0.05, f"max relative deviation from the LP oracle {worst:.2e} over 100 configurations")


def test_criterion_12_examples_and_recovery():
    parts = []
    ok = True
    ladder = [2.0**-k for k in (4, 5, 6, 7)]
    for variant in ("same-cut", "opposite-cuts"):
        gaps, charges = [], []
        for e in ladder:
            u = half_vortex_even_odd(e, (0.0, 0.0), variant)
            gaps.append(energy_pedge(u, B1).total - 0.25 * math.pi * abs(math.log(e)))
            charges.append(vorticity_measure(double(u), B1).total)
        d = np.abs(np.diff(gaps))
        good = all(c == 1 for c in charges) and max(abs(x) for x in gaps) < 10 and np.all(np.diff(d) < 0)
        ok &= bool(good)
        parts.append(f"{variant} gaps " + ", ".join(f"{x:.3f}" for x in gaps))
    # sigma/2 > 8 eps with sigma < 1 rules out eps = 2^-4 for the recovery configuration
    gaps, charges = [], []
    for e in ladder[1:]:
        rec = recovery_configuration(e, DELTA0, B1, 0.75)
        gaps.append(energy_pedge(rec.field, B1).total - 0.25 * math.pi * abs(math.log(e)))
        m = vorticity_measure(double(rec.field), B1)
        charges.append(m.total if len(m) == 1 else None)
    d = np.abs(np.diff(gaps))
    good = all(c == 1 for c in charges) and max(abs(x) for x in gaps) < 10 and bool(np.all(np.diff(d) < 0))
    ok &= good
    parts.append("recovery gaps " + ", ".join(f"{x:.3f}" for x in gaps))
    b1 = energy_pedge(rec.field, B1, 1.0)
    b2 = energy_pedge(rec.field, B1, 2.0)
    slope = b2.total - b1.total
    affine = (b2.horizontal == b1.horizontal and b2.vertical_nn == b1.vertical_nn
              and b2.vertical_nnn == 2.0 * b1.vertical_nnn and slope >= 0)
    ok &= affine
    parts.append(f"alpha slope {slope:.4f} ({'exact' if affine else 'not affine'})")
    record(12, ok, "; ".join(parts))


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass

"""Continuum reference quantities: the potential Phi_mu, the renormalized
energy W(mu, Omega), the canonical harmonic map and the sigma-limits of the
Dirichlet energy.

Discs are handled analytically through the Dirichlet Green's function with
image charges; rectangles through a fast sine-transform Poisson solve for the
harmonic correction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.fft import dstn
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import RectBivariateSpline

from .fields import SpinField
from .lattice import Disc, Domain, LatticeGeometry, Rectangle
from .vorticity import VorticityMeasure

__all__ = [
    "SingularityConfig",
    "RenormalizedEnergy",
    "PhiMu",
    "HarmonicMap",
    "phi_mu",
    "renormalized_energy",
    "canonical_harmonic_map",
    "renormalized_energy_of_field",
    "m_sigma_reference",
    "check_sigma",
]


class SingularityConfig(VorticityMeasure):
    """Finitely many distinct points with charges +-1."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(np.abs(self.charges) != 1):
            raise ValueError("singularity charges must be +1 or -1")

    @classmethod
    def of(cls, points, charges, domain=None) -> "SingularityConfig":
        return cls(np.asarray(points, dtype=float).reshape(-1, 2), np.asarray(charges), domain)

    @classmethod
    def from_measure(cls, mu: VorticityMeasure) -> "SingularityConfig":
        return cls(mu.points.copy(), mu.charges.copy(), mu.domain)

    @property
    def M(self) -> int:
        return len(self.charges)


def _as_config(mu) -> SingularityConfig:
    if isinstance(mu, SingularityConfig):
        return mu
    if isinstance(mu, VorticityMeasure):
        return SingularityConfig.from_measure(mu)
    pts, chg = mu
    return SingularityConfig.of(pts, chg)


def _check_inside(mu: SingularityConfig, omega: Domain):
    for p in mu.points:
        if not bool(omega.contains(p[0], p[1])) or float(omega.boundary_distance(p[0], p[1])) <= 0:
            raise ValueError(f"singularity {tuple(p)} is not strictly inside the domain")


def check_sigma(mu, omega: Domain, sigma: float):
    """Raise unless the closed discs B_sigma(x_h) are pairwise disjoint and inside ``omega``."""
    mu = _as_config(mu)
    _check_inside(mu, omega)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    for k, p in enumerate(mu.points):
        if float(omega.boundary_distance(p[0], p[1])) <= sigma:
            raise ValueError(f"B_sigma({tuple(p)}) is not inside the domain for sigma={sigma}")
        for q in mu.points[k + 1:]:
            if math.dist(p, q) <= 2 * sigma:
                raise ValueError(f"B_sigma discs around {tuple(p)} and {tuple(q)} intersect")


def _arg(x, y, px, py):
    return np.arctan2(y - py, x - px)


def _grad_arg(x, y, px, py):
    dx, dy = x - px, y - py
    r2 = dx * dx + dy * dy
    return -dy / r2, dx / r2


# ---------------------------------------------------------------------------
# Phi_mu


class PhiMu:
    """Solution of Delta Phi = 2 pi mu in Omega, Phi = 0 on the boundary."""

    method = ""

    def __init__(self, mu: SingularityConfig, omega: Domain):
        self.mu = mu
        self.omega = omega

    def singular(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (px, py), d in zip(self.mu.points, self.mu.charges):
            out += d * np.log(np.hypot(x - px, y - py))
        return out

    def regular(self, x, y):
        """R_mu = Phi_mu - sum_h d_h log|x - x_h| (harmonic in Omega)."""
        raise NotImplementedError

    def regular_grad(self, x, y):
        raise NotImplementedError

    def regular_conjugate(self, x, y):
        """Harmonic conjugate of R_mu, up to an additive constant."""
        raise NotImplementedError

    def __call__(self, x, y):
        return self.singular(x, y) + self.regular(x, y)


class _DiscPhi(PhiMu):
    method = "analytic-disc"

    def __init__(self, mu, omega: Disc):
        super().__init__(mu, omega)
        c = np.asarray(omega.center)
        R = omega.radius
        self._imgs = []
        for p, d in zip(mu.points, mu.charges):
            q = p - c
            n2 = float(q @ q)
            if n2 == 0.0:
                self._imgs.append((None, d, -d * math.log(R)))
            else:
                star = c + R * R * q / n2
                self._imgs.append((star, d, -d * math.log(math.sqrt(n2) / R)))

    def regular(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for star, d, const in self._imgs:
            out += const
            if star is not None:
                out -= d * np.log(np.hypot(x - star[0], y - star[1]))
        return out

    def regular_grad(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx = np.zeros(np.broadcast(x, y).shape)
        gy = np.zeros_like(gx)
        for star, d, _ in self._imgs:
            if star is None:
                continue
            dx, dy = x - star[0], y - star[1]
            r2 = dx * dx + dy * dy
            gx -= d * dx / r2
            gy -= d * dy / r2
        return gx, gy

    def regular_conjugate(self, x, y):
        # -d arg(x - x*) with the branch cut pointing away from the disc
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = self.omega.center
        out = np.zeros(np.broadcast(x, y).shape)
        for star, d, _ in self._imgs:
            if star is None:
                continue
            ox, oy = star[0] - c[0], star[1] - c[1]
            n = math.hypot(ox, oy)
            ux, uy = ox / n, oy / n
            # rotate x - x* so that the outward direction becomes the negative real axis
            zx, zy = x - star[0], y - star[1]
            rx = -(zx * ux + zy * uy)
            ry = -(-zx * uy + zy * ux)
            out -= d * np.arctan2(ry, rx)
        return out


def _laplace_dirichlet_dst(g_bottom, g_top, g_left, g_right, hx, hy):
    """Five-point harmonic interpolation of Dirichlet data on a rectangle grid.

    Boundary arrays hold the values on the full sides (corners included);
    returns the full (nx+2, ny+2) grid.
    """
    nx = len(g_bottom) - 2
    ny = len(g_left) - 2
    rhs = np.zeros((nx, ny))
    rhs[0, :] -= g_left[1:-1] / hx**2
    rhs[-1, :] -= g_right[1:-1] / hx**2
    rhs[:, 0] -= g_bottom[1:-1] / hy**2
    rhs[:, -1] -= g_top[1:-1] / hy**2
    jx = np.arange(1, nx + 1)
    jy = np.arange(1, ny + 1)
    lx = (2 * np.cos(np.pi * jx / (nx + 1)) - 2) / hx**2
    ly = (2 * np.cos(np.pi * jy / (ny + 1)) - 2) / hy**2
    lam = lx[:, None] + ly[None, :]
    sol = dstn(dstn(rhs, type=1, norm="ortho") / lam, type=1, norm="ortho")
    full = np.zeros((nx + 2, ny + 2))
    full[1:-1, 1:-1] = sol
    full[0, :] = g_left
    full[-1, :] = g_right
    full[:, 0] = g_bottom
    full[:, -1] = g_top
    return full


class _RectanglePhi(PhiMu):
    method = "finite-difference"

    def __init__(self, mu, omega: Rectangle, n: int = 513, check_n: int | None = 257):
        super().__init__(mu, omega)
        self.n = n
        self.xs, self.ys, self.H = self._solve(n)
        self.spline = RectBivariateSpline(self.xs, self.ys, self.H, kx=3, ky=3)
        self.richardson_error = float("nan")
        if check_n:
            xc, yc, Hc = self._solve(check_n)
            stride = (n - 1) // (check_n - 1)
            if stride * (check_n - 1) == n - 1:
                fine = self.H[::stride, ::stride]
                self.richardson_error = float(np.max(np.abs(fine - Hc)) / 3.0)
        # conjugate of H by line integration of grad-perp H from the lower-left corner
        hx, hy = np.gradient(self.H, self.xs, self.ys, edge_order=2)
        bottom = cumulative_trapezoid(-hy[:, 0], self.xs, initial=0.0)
        cols = cumulative_trapezoid(hx, self.ys, axis=1, initial=0.0)
        self.Hc = bottom[:, None] + cols
        self.spline_c = RectBivariateSpline(self.xs, self.ys, self.Hc, kx=3, ky=3)

    def _solve(self, n):
        om = self.omega
        xs = np.linspace(om.x0, om.x1, n)
        ys = np.linspace(om.y0, om.y1, n)
        g = lambda x, y: -self.singular(x, y)
        full = _laplace_dirichlet_dst(
            g(xs, np.full(n, om.y0)), g(xs, np.full(n, om.y1)),
            g(np.full(n, om.x0), ys), g(np.full(n, om.x1), ys),
            xs[1] - xs[0], ys[1] - ys[0],
        )
        return xs, ys, full

    def regular(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shp = np.broadcast(x, y).shape
        xb, yb = np.broadcast_to(x, shp).ravel(), np.broadcast_to(y, shp).ravel()
        return self.spline.ev(xb, yb).reshape(shp)

    def regular_grad(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shp = np.broadcast(x, y).shape
        xb, yb = np.broadcast_to(x, shp).ravel(), np.broadcast_to(y, shp).ravel()
        return (self.spline.ev(xb, yb, dx=1).reshape(shp), self.spline.ev(xb, yb, dy=1).reshape(shp))

    def regular_conjugate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shp = np.broadcast(x, y).shape
        xb, yb = np.broadcast_to(x, shp).ravel(), np.broadcast_to(y, shp).ravel()
        return self.spline_c.ev(xb, yb).reshape(shp)


def phi_mu(mu, omega: Domain, n: int = 513, check_n: int | None = 257) -> PhiMu:
    """Evaluator of Phi_mu for a disc (analytic) or rectangle (finite differences).

    Parameters
    ----------
    mu : SingularityConfig or VorticityMeasure
    omega : Disc or Rectangle
    n, check_n : int
        Grid sizes of the rectangle solve and of its Richardson check.
    """
    mu = _as_config(mu)
    _check_inside(mu, omega)
    if isinstance(omega, Disc):
        return _DiscPhi(mu, omega)
    if isinstance(omega, Rectangle):
        return _RectanglePhi(mu, omega, n, check_n)
    raise NotImplementedError(f"Phi_mu is available for discs and rectangles, not {type(omega).__name__}")


@dataclass
class RenormalizedEnergy:
    W: float
    regular_parts: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)


def renormalized_energy(mu, omega: Domain, **kw) -> RenormalizedEnergy:
    """W = -pi sum_{h != h'} d_h d_h' log|x_h - x_h'| - pi sum_h d_h R_mu(x_h)."""
    mu = _as_config(mu)
    phi = phi_mu(mu, omega, **kw)
    pts, d = mu.points, mu.charges
    R = np.array([float(phi.regular(p[0], p[1])) for p in pts]) if len(pts) else np.zeros(0)
    inter = []
    for h in range(len(d)):
        for k in range(len(d)):
            if h != k:
                inter.append(d[h] * d[k] * math.log(math.dist(pts[h], pts[k])))
    W = -math.pi * math.fsum(inter) - math.pi * math.fsum((d * R).tolist())
    diag = {}
    if hasattr(phi, "richardson_error"):
        diag["richardson_error"] = phi.richardson_error
    return RenormalizedEnergy(W, R, phi.method, diag)


# ---------------------------------------------------------------------------
# canonical harmonic map


class HarmonicMap:
    """Angle field theta_mu with grad theta = grad-perp Phi_mu.

    The angle is a lifting with a branch cut along the leftward horizontal ray
    from each singularity (the principal ``arctan2`` branch), shifted so that
    theta vanishes at a reference boundary point.
    """

    def __init__(self, phi: PhiMu, ref: tuple[float, float]):
        self.phi = phi
        self.mu = phi.mu
        self.ref = ref
        self._shift = 0.0
        self._shift = float(self.angle(*ref))

    def angle(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (px, py), d in zip(self.mu.points, self.mu.charges):
            out += d * _arg(x, y, px, py)
        return out + self.phi.regular_conjugate(x, y) - self._shift

    __call__ = angle

    def grad(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx = np.zeros(np.broadcast(x, y).shape)
        gy = np.zeros_like(gx)
        for (px, py), d in zip(self.mu.points, self.mu.charges):
            ax, ay = _grad_arg(x, y, px, py)
            gx += d * ax
            gy += d * ay
        rx, ry = self.phi.regular_grad(x, y)
        return gx - ry, gy + rx

    def sample(self, geom: LatticeGeometry, domain: Domain, pad: int = 1) -> SpinField:
        """Spin field on the lattice window covering ``domain``."""
        for p in self.mu.points:
            q = (np.asarray(p) - np.asarray(geom.offset)) / geom.spacing
            if np.allclose(q, np.round(q), rtol=0, atol=0):
                raise ValueError(f"singularity {tuple(p)} coincides with a lattice site")
        return SpinField.from_function(domain, geom, self.angle, pad=pad)


def canonical_harmonic_map(mu, omega: Domain, **kw) -> HarmonicMap:
    mu = _as_config(mu)
    phi = phi_mu(mu, omega, **kw)
    if isinstance(omega, Disc):
        ref = (omega.center[0] + omega.radius, omega.center[1])
    else:
        ref = (omega.x1, 0.5 * (omega.y0 + omega.y1))
    return HarmonicMap(phi, ref)


# ---------------------------------------------------------------------------
# quadrature of the Dirichlet energy


def _numeric_grad(angle: Callable, x, y, h):
    v = lambda a, b: np.exp(1j * angle(a, b))
    gx = np.abs(v(x + h, y) - v(x - h, y)) / (2 * h)
    gy = np.abs(v(x, y + h) - v(x, y - h)) / (2 * h)
    return gx, gy


def _grad_sq(field_, x, y, h):
    if hasattr(field_, "grad"):
        gx, gy = field_.grad(x, y)
    else:
        gx, gy = _numeric_grad(field_, x, y, h)
    return gx * gx + gy * gy


def _polar_annulus(field_, center, r0, r1, n_theta, per_unit_log, h):
    """Midpoint rule in (log r, angle) for 1/2 int over r0 < |x - c| < r1."""
    if r1 <= r0:
        return 0.0
    L = math.log(r1 / r0)
    n_r = max(32, int(math.ceil(per_unit_log * L)))
    s = math.log(r0) + (np.arange(n_r) + 0.5) * (L / n_r)
    t = (np.arange(n_theta) + 0.5) * (2 * math.pi / n_theta)
    r = np.exp(s)
    R, T = np.meshgrid(r, t, indexing="ij")
    x = center[0] + R * np.cos(T)
    y = center[1] + R * np.sin(T)
    f = _grad_sq(field_, x, y, h * R)
    return 0.5 * math.fsum((f * R * R).ravel().tolist()) * (L / n_r) * (2 * math.pi / n_theta)


def _outer_region(field_, omega: Domain, holes, n, sub, h):
    """Midpoint rule over omega minus the discs ``holes``, supersampling cut cells."""
    xmin, xmax, ymin, ymax = omega.bbox()
    dx = (xmax - xmin) / n
    dy = (ymax - ymin) / n
    xc = xmin + (np.arange(n) + 0.5) * dx
    yc = ymin + (np.arange(n) + 0.5) * dy
    X, Y = np.meshgrid(xc, yc, indexing="ij")

    def inside(x, y):
        m = omega.contains(x, y)
        for c, r in holes:
            m &= np.hypot(x - c[0], y - c[1]) >= r
        return m

    diag = 0.5 * math.hypot(dx, dy)
    cut = omega.boundary_distance(X, Y) < diag
    for c, r in holes:
        cut |= np.abs(np.hypot(X - c[0], Y - c[1]) - r) < diag
    whole = inside(X, Y) & ~cut
    total = []
    if whole.any():
        total.append(math.fsum(_grad_sq(field_, X[whole], Y[whole], h).tolist()) * dx * dy)
    if cut.any():
        off = (np.arange(sub) + 0.5) / sub - 0.5
        ox, oy = np.meshgrid(off * dx, off * dy, indexing="ij")
        sx = X[cut][:, None] + ox.ravel()[None, :]
        sy = Y[cut][:, None] + oy.ravel()[None, :]
        m = inside(sx, sy)
        if m.any():
            total.append(math.fsum(_grad_sq(field_, sx[m], sy[m], h).tolist()) * dx * dy / sub**2)
    return 0.5 * math.fsum(total)


def renormalized_energy_of_field(v, mu, omega: Domain, sigmas: Sequence[float], n_theta: int = 1024,
                                 per_unit_log: int = 256, n_outer: int = 1024, sub: int = 8,
                                 fd_step: float = 1e-6) -> np.ndarray:
    """Values of 1/2 int_{Omega^sigma} |grad v|^2 - M pi |log sigma| for each sigma.

    ``v`` is an angle evaluator (a lifting of the spin field); when it offers
    a ``grad`` method the gradient is used directly, otherwise it is computed
    by centred differences of exp(i * angle).  Around every singularity the
    energy is integrated on a polar grid out to half the distance to the
    nearest other singularity or boundary; the rest of the domain uses a
    Cartesian grid with supersampled cut cells.
    """
    mu = _as_config(mu)
    for s in sigmas:
        check_sigma(mu, omega, s)
    pts = mu.points
    rho = []
    for k, p in enumerate(pts):
        others = [math.dist(p, q) for j, q in enumerate(pts) if j != k]
        r = min([float(omega.boundary_distance(p[0], p[1]))] + [0.5 * d for d in others])
        rho.append(r)
    holes = [(tuple(p), r) for p, r in zip(pts, rho)]
    outer = _outer_region(v, omega, holes, n_outer, sub, fd_step)
    out = []
    for s in sigmas:
        parts = [outer]
        for p, r in zip(pts, rho):
            parts.append(_polar_annulus(v, p, s, r, n_theta, per_unit_log, fd_step))
        out.append(math.fsum(parts) - len(pts) * math.pi * abs(math.log(s)))
    return np.array(out)


def m_sigma_reference(mu, omega: Domain, sigma: float, **kw) -> float:
    """Continuum target M pi |log sigma| + W(mu, Omega)."""
    mu = _as_config(mu)
    check_sigma(mu, omega, sigma)
    return mu.M * math.pi * abs(math.log(sigma)) + renormalized_energy(mu, omega, **kw).W

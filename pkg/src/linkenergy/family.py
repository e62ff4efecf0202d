"""
Canonical five-parameter family of Gauss-map surfaces of a link in S^3.

For ``(v, z)`` in the open ball times (0, 1) the member is the Gauss map of
the pair ``(F_v o gamma1, D o F_v o gamma2)``, where ``F_v`` is the inversion
about ``v`` and ``D`` dilates by ``a(v, z)`` about the center ``c(v)`` of the
inverted sphere. For unit ``v`` the second curve is instead sent through the
boundary map ``F_v - b(z) v``. Members at ``z`` in {0, 1} are the zero
surface.

Surfaces are handled as sampled parametrizations: the "area" of a member
is the trapezoid sum of its Jacobian over the torus of parameters, which
dominates the mass of the associated current.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm, qmc

from .conformal import BOUNDARY_TOL, CENTER_EXCLUSION, boundary_offset
from .curves import uniform_nodes
from .energy import as_quad, energy_density, gauss_frame, mobius_energy
from .errors import ConfigError, SingularityError

ON_SPHERE_TOL = 1e-8


def family_b(v, z):
    """``(2z - 1) / ((1 - |v|^2 + z)(1 - z))``."""
    q = 1.0 - float(np.dot(v, v))
    return (2.0 * z - 1.0) / ((q + z) * (1.0 - z))


def family_a(v, z):
    """``1 + (1 - |v|^2) b(v, z)``; runs monotonically over (0, inf) as z does over (0, 1)."""
    q = 1.0 - float(np.dot(v, v))
    return 1.0 + q * family_b(v, z)


@dataclass(frozen=True)
class FamilyPoint:
    """Parameters of one family member and its derived coefficients.

    On the boundary (``|v| >= 1 - 1e-9``) ``v`` is normalized, ``a = 1``,
    ``b = b(z)`` and there is no image-sphere center.
    """

    v: np.ndarray
    z: float
    a: float
    b: float
    c: Optional[np.ndarray]
    boundary: bool

    @property
    def zero(self):
        return self.z <= 0.0 or self.z >= 1.0


def family_coeffs(v, z):
    v = np.asarray(v, dtype=float)
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise ConfigError(f"z must lie in [0, 1], got {z}")
    nv = np.linalg.norm(v)
    if nv > 1.0 + BOUNDARY_TOL:
        raise ConfigError(f"|v| must be at most 1, got {nv}")
    boundary = nv >= 1.0 - BOUNDARY_TOL
    if boundary:
        v = v / nv
    if z in (0.0, 1.0):
        return FamilyPoint(v, z, math.nan, math.copysign(math.inf, z - 0.5), None, boundary)
    if boundary:
        return FamilyPoint(v, z, 1.0, boundary_offset(z), None, True)
    q = 1.0 - nv * nv
    return FamilyPoint(v, z, family_a(v, z), family_b(v, z), v / q, False)


def _invert(p, d, v):
    """Inverted positions and velocities; rows within 1e-6 of ``v`` are masked out."""
    y = p - v
    r2 = np.einsum("...k,...k->...", y, y)
    ok = r2 >= CENTER_EXCLUSION ** 2
    r2 = np.where(ok, r2, 1.0)
    X = y / r2[..., None]
    Xd = (d - 2.0 * (np.einsum("...k,...k->...", d, y) / r2)[..., None] * y) / r2[..., None]
    return X, Xd, ok


def family_frame(p1, d1, p2, d2, fp):
    """Gauss frame of member ``fp`` for curve samples; also returns the pair of
    inverted curves' derivatives and a validity mask.

    ``p1, d1`` and ``p2, d2`` must broadcast against each other (e.g. shapes
    (n, 1, 4) and (1, n, 4) for a full grid).
    """
    X1, X1d, ok1 = _invert(p1, d1, fp.v)
    X2, X2d, ok2 = _invert(p2, d2, fp.v)
    if fp.boundary:
        Y2 = X2 - fp.b * fp.v
        Y2d = X2d
    else:
        Y2 = fp.a * (X2 - fp.c) + fp.c
        Y2d = fp.a * X2d
    frame = gauss_frame(X1, X1d, Y2, Y2d)
    mask = ok1 & ok2
    dF = X1 - X2
    n1 = np.linalg.norm(X1d, axis=-1)
    n2 = np.linalg.norm(X2d, axis=-1)
    upper = fp.a * n1 * n2 / (fp.a * np.einsum("...k,...k->...", dF, dF) + fp.b ** 2)
    return frame, np.where(mask, upper, 0.0), mask, (X1, X2, Y2)


def dilation_identity_residual(p1, p2, fp):
    """Relative residual of ``|X1 - Y2|^2 = a |X1 - X2|^2 + b^2``.

    ``Xi = F_v(pi)`` for points ``pi`` of S^3 and ``Y2`` is the dilated (or,
    on the boundary, shifted) image of ``X2``.
    """
    X1, X2 = (_invert(p, np.zeros_like(p), fp.v)[0] for p in (p1, p2))
    Y2 = X2 - fp.b * fp.v if fp.boundary else fp.a * (X2 - fp.c) + fp.c
    lhs = np.einsum("...k,...k->...", X1 - Y2, X1 - Y2)
    rhs = fp.a * np.einsum("...k,...k->...", X1 - X2, X1 - X2) + fp.b ** 2
    return np.abs(lhs - rhs) / np.abs(rhs)


@dataclass(frozen=True)
class SurfaceGrid:
    """Sampled family member on the uniform ``n x n`` parameter grid.

    ``upper`` is the nodewise dominating integrand
    ``a |X1'||X2'| / (a |X1 - X2|^2 + b^2)`` with ``Xi = F_v o gamma_i``;
    masked nodes (curve within 1e-6 of ``v``) carry zero weight.
    """

    point: FamilyPoint
    n: int
    sample: object
    upper: np.ndarray
    mask: np.ndarray
    energy_nodes: np.ndarray
    images: tuple = ()

    @property
    def weight(self):
        return (2.0 * np.pi / self.n) ** 2

    @property
    def jac(self):
        return np.where(self.mask, self.sample.jac, 0.0)

    @property
    def g(self):
        return self.sample.g

    @property
    def area_integral(self):
        return float(self.weight * self.jac.sum())

    @property
    def upper_integral(self):
        return float(self.weight * self.upper.sum())

    @property
    def energy(self):
        return float(self.weight * self.energy_nodes.sum())


class FamilySampler:
    """Evaluates family members of a fixed link on a fixed grid.

    Curve samples and the energy are computed once, so scans over many
    ``(v, z)`` only pay for the per-member maps.
    """

    def __init__(self, link, quad=96, check_sphere=True):
        self.quad = as_quad(quad)
        if link.dim != 4:
            raise ConfigError("the canonical family needs a link in S^3 (dimension 4)")
        if check_sphere:
            resid = link.on_sphere_residual()
            if resid > ON_SPHERE_TOL:
                raise ConfigError(f"link is not on the unit sphere (residual {resid:.2e})")
        self.link = link
        n = self.quad.n
        self.p1, self.d1 = link.gamma1.sample(n)
        self.p2, self.d2 = link.gamma2.sample(n)
        self.energy_nodes = energy_density(self.p1, self.d1, self.p2, self.d2)
        self.energy = float(self.quad.weight * self.energy_nodes.sum())

    def grid(self, fp, keep_images=False):
        if not isinstance(fp, FamilyPoint):
            fp = family_coeffs(*fp)
        n = self.quad.n
        if fp.zero:
            zeros = np.zeros((n, n))
            sample = gauss_frame(self.p1[:, None], self.d1[:, None], self.p2[None], self.d2[None])
            sample = type(sample)(sample.g, sample.dgds * 0, sample.dgdt * 0, zeros, sample.bound,
                                  sample.residuals, sample.scaled_residuals)
            return SurfaceGrid(fp, n, sample, zeros, np.ones((n, n), bool), self.energy_nodes)
        with np.errstate(invalid="ignore", divide="ignore"):
            frame, upper, mask, images = family_frame(
                self.p1[:, None], self.d1[:, None], self.p2[None], self.d2[None], fp)
        return SurfaceGrid(fp, n, frame, upper, np.broadcast_to(mask, (n, n)),
                           self.energy_nodes, images if keep_images else ())

    def area(self, v, z):
        return self.grid(family_coeffs(v, z)).area_integral


def family_gauss_map(link, fp, s, t):
    """Family member's Gauss map at parameters ``(s, t)``.

    Raises
    ------
    SingularityError
        If either curve point lies within 1e-6 of ``v``.
    """
    if not isinstance(fp, FamilyPoint):
        fp = family_coeffs(*fp)
    if fp.zero:
        raise ConfigError("members at z in {0, 1} are the zero surface")
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    c1, c2 = link.gamma1, link.gamma2
    frame, _, mask, _ = family_frame(c1(s), c1.derivative(s), c2(t), c2.derivative(t), fp)
    if not np.all(mask):
        raise SingularityError("a curve passes through the inversion center")
    return frame


def family_area(link, fp, quad=96):
    """Sampled member ``fp`` with its area and dominating integrals."""
    return FamilySampler(link, quad).grid(fp)


# ---------------------------------------------------------------------------
# parameter samples

def family_samples(count, seed=0):
    """Scrambled Halton points in the open ball B^4 times (0, 1).

    Directions come from Gaussian quantiles, radii from ``u**(1/4)`` so the
    sample is uniform in volume.
    """
    h = qmc.Halton(d=6, scramble=True, seed=seed).random(count)
    h = np.clip(h, 1e-12, 1 - 1e-12)
    direction = norm.ppf(h[:, :4])
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = h[:, 4] ** 0.25
    return [(radius[i] * direction[i], h[i, 5]) for i in range(count)]


def axis_grid(per_axis=11, z_count=9):
    """``v`` on a ``per_axis^4`` lattice of [-1, 1]^4 clipped to the closed ball, and
    ``z_count`` interior values of ``z``."""
    ax = np.linspace(-1.0, 1.0, per_axis)
    V = np.stack(np.meshgrid(ax, ax, ax, ax, indexing="ij"), -1).reshape(-1, 4)
    V = V[np.linalg.norm(V, axis=1) <= 1.0 + 1e-12]
    zs = np.arange(1, z_count + 1) / (z_count + 1)
    return [(v, z) for v in V for z in zs]


def sphere_covering(per_axis=4):
    """``per_axis^3`` points of S^3 spread evenly in Hopf coordinates."""
    u = (np.arange(per_axis) + 0.5) / per_axis
    eta = np.arcsin(np.sqrt(u))
    phi = 2 * np.pi * (np.arange(per_axis) + 0.25) / per_axis
    E, P1, P2 = np.meshgrid(eta, phi, phi, indexing="ij")
    pts = np.stack([np.cos(E) * np.cos(P1), np.cos(E) * np.sin(P1),
                    np.sin(E) * np.cos(P2), np.sin(E) * np.sin(P2)], -1)
    return pts.reshape(-1, 4)


def _worker_count(workers):
    if workers is not None:
        return max(1, int(workers))
    import os
    env = os.environ.get("LINKENERGY_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def scan(sampler, points, func, workers=None):
    """Apply ``func(grid)`` to each member; ordered results, optionally threaded."""
    def one(vz):
        return func(sampler.grid(family_coeffs(*vz)))

    nw = _worker_count(workers)
    if nw == 1:
        return [one(p) for p in points]
    with ThreadPoolExecutor(nw) as pool:
        return list(pool.map(one, points))


@dataclass(frozen=True)
class ScanRow:
    v: np.ndarray
    z: float
    area_integral: float
    upper_integral: float
    max_jac: float
    containment_margin: float


def family_scan(link, points, quad=96, workers=None):
    """Area, dominating integral, max Jacobian and boundary containment margin per member.

    ``containment_margin`` is the worst slack of the hemisphere/annulus
    condition, evaluated only for boundary members (nan otherwise).
    """
    sampler = FamilySampler(link, quad)
    alpha = link.alpha

    def row(grid):
        fp = grid.point
        margin = math.nan
        if fp.boundary and not fp.zero:
            margin = containment_margins(grid, alpha)[0]
        return ScanRow(fp.v, fp.z, grid.area_integral, grid.upper_integral,
                       float(grid.jac.max()), margin)

    return sampler, scan(sampler, points, row, workers)


# ---------------------------------------------------------------------------
# uniform bounds

@dataclass(frozen=True)
class JacobianBoundReport:
    max_jac: float
    argmax: tuple
    chain_bound: float
    speed_bounds: tuple
    alpha: float
    samples: int


def uniform_jacobian_bound(link, points, quad=48, workers=None):
    """Largest sampled Jacobian over the family against the explicit chain bound.

    The chain bound is ``(3 C1)(3 C2) / alpha^2`` with ``Ci`` the largest speed
    of each component: the inverted distance estimate times the derivative
    bound for inverted curves, applied to each factor.
    """
    sampler = FamilySampler(link, quad)
    maxima = scan(sampler, points, lambda g: float(g.jac.max()), workers)
    i = int(np.argmax(maxima))
    probe = uniform_nodes(1024)
    C1 = float(link.gamma1.speed(probe).max())
    C2 = float(link.gamma2.speed(probe).max())
    alpha = link.alpha
    v, z = points[i]
    return JacobianBoundReport(maxima[i], (np.asarray(v), float(z)), 9.0 * C1 * C2 / alpha ** 2,
                               (C1, C2), alpha, len(points))


# ---------------------------------------------------------------------------
# boundary members: great spheres and support containment

def geodesic_distance(x, p):
    """Great-circle distance on S^3, inner product clamped to [-1, 1]."""
    return np.arccos(np.clip(np.einsum("...k,...k->...", x, p), -1.0, 1.0))


def support_radius(z, alpha):
    """``arccos(b(z) / sqrt(b(z)^2 + c^2))`` with ``c = alpha / 4``.

    Equals pi, pi/2 and 0 at z = 0, 1/2 and 1.
    """
    z = np.asarray(z, dtype=float)
    c = alpha / 4.0
    with np.errstate(divide="ignore", invalid="ignore"):
        b = (2.0 * z - 1.0) / (z * (1.0 - z))
        r = np.arccos(b / np.sqrt(b * b + c * c))
    r = np.where(z <= 0.0, np.pi, np.where(z >= 1.0, 0.0, r))
    r = np.where(z == 0.5, np.pi / 2, r)
    return r if r.ndim else float(r)


def _require_off_curves(link, p, min_dist):
    probe = uniform_nodes(4096)
    d = min(np.linalg.norm(c(probe) - p, axis=-1).min() for c in (link.gamma1, link.gamma2))
    if d < min_dist:
        raise SingularityError(f"center lies within {d:.2e} of the link (need {min_dist:g})")
    return d


@dataclass(frozen=True)
class GreatSphereReport:
    max_inner: float
    area_integral: float


def great_sphere_check(link, v, quad=128, min_dist=1e-4):
    """For unit ``v``, the member at z = 1/2 maps into the great sphere ``<x, v> = 0``."""
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > BOUNDARY_TOL:
        raise ConfigError("great_sphere_check needs a unit vector")
    _require_off_curves(link, v, min_dist)
    grid = family_area(link, family_coeffs(v, 0.5), quad)
    inner = np.abs(np.einsum("...k,k->...", grid.g, v))[grid.mask]
    return GreatSphereReport(float(inner.max()), grid.area_integral)


def containment_margins(grid, alpha):
    """Worst slack of the support annulus and of the inner-product bound.

    Returns ``(annulus_margin, bound_margin)``; both are nonnegative when the
    member's image lies in the closed hemisphere/annulus around ``p`` (or
    ``-p`` for z < 1/2) and satisfies ``|<g, p>| <= |b| / sqrt(c^2 + b^2)``.
    """
    fp = grid.point
    p = fp.v
    r = support_radius(fp.z, alpha)
    g = grid.g[grid.mask]
    if fp.z >= 0.5:
        d = geodesic_distance(g, p)
        lo = r
    else:
        d = geodesic_distance(g, -p)
        lo = np.pi - r
    annulus = min(float((d - lo).min()), float((np.pi / 2 - d).min()))
    c = alpha / 4.0
    inner = np.abs(g @ p)
    bound = abs(fp.b) / math.sqrt(c * c + fp.b ** 2)
    return annulus, float((bound - inner).min())


@dataclass(frozen=True)
class ContainmentReport:
    p: np.ndarray
    z: float
    radius: float
    annulus_margin: float
    bound_margin: float
    identity_residual: float
    nodes: int

    def holds(self, tol=1e-6, identity_tol=1e-10):
        return (self.annulus_margin >= -tol and self.bound_margin >= -tol
                and self.identity_residual <= identity_tol)


def support_containment_check(link, p, z, quad=128, min_dist=1e-4):
    """Check where the boundary member at ``(p, z)`` sits relative to ``p``.

    For z >= 1/2 every node must satisfy ``r(z) <= d(g, p) <= pi/2``; for
    z <= 1/2 the mirrored condition around ``-p``. The identity
    ``<g, p> = b(z) / |F_p o gamma1 - L o gamma2|`` is checked nodewise.
    """
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > BOUNDARY_TOL:
        raise ConfigError("support containment needs a unit vector p")
    _require_off_curves(link, p, min_dist)
    fp = family_coeffs(p, z)
    sampler = FamilySampler(link, quad)
    grid = sampler.grid(fp, keep_images=True)
    X1, _, Y2 = grid.images
    delta = np.linalg.norm(X1 - Y2, axis=-1)
    identity = np.abs(grid.g @ fp.v - fp.b / delta)[grid.mask]
    annulus, bound = containment_margins(grid, link.alpha)
    return ContainmentReport(fp.v, fp.z, support_radius(fp.z, link.alpha), annulus, bound,
                             float(identity.max()), int(grid.mask.sum()))


# ---------------------------------------------------------------------------
# concentration of area in small balls

@dataclass(frozen=True)
class ConcentrationReport:
    radii: tuple
    max_mass: tuple
    jac_measure_bound: tuple
    argmax: tuple


def ball_mass(grid, center, radius):
    """Area of the part of the member mapped into the geodesic ball, and its parameter measure."""
    inside = (geodesic_distance(grid.g, center) < radius) & grid.mask
    return float(grid.weight * grid.jac[inside].sum()), float(grid.weight * inside.sum())


def concentration_scan(link, points, radii=(0.4, 0.2, 0.1, 0.05), centers=None, quad=128,
                       workers=None):
    """Largest area inside a geodesic ball, over family members and ball centers.

    Also records, per radius, ``max_jac * preimage_measure`` for the
    maximizing member, which bounds the ball mass from above.
    """
    centers = sphere_covering() if centers is None else np.asarray(centers, dtype=float)
    sampler = FamilySampler(link, quad)
    radii = tuple(float(r) for r in radii)

    def per_member(grid):
        jmax = float(grid.jac.max())
        out = []
        for r in radii:
            best = (-1.0, 0.0, None)
            for q in centers:
                mass, measure = ball_mass(grid, q, r)
                if mass > best[0]:
                    best = (mass, jmax * measure, q)
            out.append(best)
        return out

    rows = scan(sampler, points, per_member, workers)
    max_mass, bounds, where = [], [], []
    for k in range(len(radii)):
        i = int(np.argmax([row[k][0] for row in rows]))
        max_mass.append(rows[i][k][0])
        bounds.append(rows[i][k][1])
        where.append((points[i], rows[i][k][2]))
    return ConcentrationReport(radii, tuple(max_mass), tuple(bounds), tuple(where))

"""
Geodesic retractions of S^3 and the min-max sweepout built from the family.

A retraction ``R(p, lam, t)`` slides each point of the closed annulus
``lam <= d(p, x) <= pi/2`` along its geodesic from ``p`` so that the distance
becomes ``(1 - t) d + t lam``. It never increases lengths, so composing a
family member with it cannot increase area.
"""

import math
from dataclasses import dataclass

import numpy as np

from .curves import project_link_to_r3
from .energy import linking_number, wedge_norm
from .errors import ContainmentError, SingularityError
from .family import (FamilySampler, containment_margins, family_coeffs, geodesic_distance,
                     support_radius)

DOMAIN_TOL = 1e-9
ANTIPODAL_TOL = 1e-12


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def log_map(p, x):
    """Inverse exponential map of S^3 at ``p``; its norm is the geodesic distance.

    Raises
    ------
    SingularityError
        At the antipode of ``p``.
    """
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    c = _dot(x, p)
    w = x - c[..., None] * p
    sn = np.sqrt(_dot(w, w))
    theta = np.arctan2(sn, c)
    if np.any(np.pi - theta < ANTIPODAL_TOL):
        raise SingularityError("logarithm undefined at the antipodal point")
    scale = np.where(sn > 0, theta / np.where(sn > 0, sn, 1.0), 1.0)
    return scale[..., None] * w


def exp_map(p, y):
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.sqrt(_dot(y, y))
    sinc = np.where(r > 0, np.sin(r) / np.where(r > 0, r, 1.0), 1.0)
    return np.cos(r)[..., None] * p + sinc[..., None] * y


def _polar(p, x):
    """Distance from ``p`` and unit initial direction of the geodesic to ``x``."""
    c = _dot(x, p)
    w = x - c[..., None] * p
    sn = np.sqrt(_dot(w, w))
    d = np.arctan2(sn, c)
    u = w / np.where(sn > 0, sn, 1.0)[..., None]
    return d, u


@dataclass(frozen=True)
class Retraction:
    """Radial geodesic contraction of the annulus ``lam <= d(p, .) <= pi/2``."""

    p: np.ndarray
    lam: float
    t: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p / np.linalg.norm(p))

    def _distances(self, x):
        d, u = _polar(self.p, x)
        bad = (d < self.lam - DOMAIN_TOL) | (d > np.pi / 2 + DOMAIN_TOL)
        if np.any(bad):
            worst = float(np.max(np.maximum(self.lam - d, d - np.pi / 2)))
            raise ContainmentError(f"point outside the retraction annulus by {worst:.2e}")
        d = np.clip(d, self.lam, np.pi / 2)
        return d, u, (1.0 - self.t) * d + self.t * self.lam

    def __call__(self, x):
        _, u, rho = self._distances(np.asarray(x, dtype=float))
        return np.cos(rho)[..., None] * self.p + np.sin(rho)[..., None] * u

    def jvp(self, x, h):
        """Differential on tangent vectors: radial part scaled by ``1 - t``,
        the rest by ``sin(rho') / sin(d)``."""
        x = np.asarray(x, dtype=float)
        d, u, rho = self._distances(x)
        p = self.p
        er = -np.sin(d)[..., None] * p + np.cos(d)[..., None] * u
        er_img = -np.sin(rho)[..., None] * p + np.cos(rho)[..., None] * u
        h = h - _dot(h, x)[..., None] * x
        hr = _dot(h, er)
        perp = h - hr[..., None] * er
        return (1.0 - self.t) * hr[..., None] * er_img + (np.sin(rho) / np.sin(d))[..., None] * perp


def retract(r, x):
    return r(x)


def tangent_basis(x):
    """Orthonormal basis (3 x 4) of the tangent space of S^3 at unit ``x``."""
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(4)]))
    return q[:, 1:4].T


def retract_contraction_check(r, points, h=1e-5):
    """Largest singular value of the finite-difference differential over ``points``.

    Each tangent direction is probed along the great circle through the
    point, so the perturbed points stay on S^3.
    """
    worst = 0.0
    for x in np.atleast_2d(points):
        cols = []
        for e in tangent_basis(x):
            plus = np.cos(h) * x + np.sin(h) * e
            minus = np.cos(h) * x - np.sin(h) * e
            cols.append((r(plus) - r(minus)) / (2 * h))
        worst = max(worst, float(np.linalg.svd(np.column_stack(cols), compute_uv=False)[0]))
    return worst


def _gram_jac(a, b):
    return wedge_norm(a, b)


@dataclass(frozen=True)
class RetractedGrid:
    """Family member at a unit ``p`` composed with the retraction for slide ``s``.

    ``signed_integral`` integrates the Jacobian oriented by the outward normal of
    the geodesic sphere through each image point; once every node lies on one
    sphere its absolute value is the mass of the pushed-forward surface.
    """

    center: np.ndarray
    radius: float
    s: float
    jac: np.ndarray
    base_jac: np.ndarray
    signed_integral: float
    sphere_residual: float
    weight: float

    @property
    def area_integral(self):
        return float(self.weight * self.jac.sum())

    @property
    def base_area(self):
        return float(self.weight * self.base_jac.sum())


def retraction_for(p, z, s, alpha):
    """Retraction used for member ``(p, z)``: about ``p`` for z >= 1/2, else about ``-p``."""
    r = support_radius(z, alpha)
    if z >= 0.5:
        return Retraction(p, r, s)
    return Retraction(-np.asarray(p, dtype=float), np.pi - r, s)


def retracted_grid(sampler, p, z, s, containment_tol=1e-6):
    """Compose the boundary member at ``(p, z)`` with its retraction.

    Raises
    ------
    ContainmentError
        When the member is not inside the retraction's annulus, which would
        mean the support bound failed upstream.
    """
    alpha = sampler.link.alpha
    fp = family_coeffs(p, z)
    grid = sampler.grid(fp)
    w = grid.weight
    if fp.zero:
        zeros = np.zeros((grid.n, grid.n))
        return RetractedGrid(fp.v, support_radius(z, alpha), s, zeros, zeros, 0.0, 0.0, w)
    annulus, _ = containment_margins(grid, alpha)
    if annulus < -containment_tol:
        raise ContainmentError(f"member at z={z} leaves its annulus by {-annulus:.2e}")
    R = retraction_for(fp.v, fp.z, s, alpha)
    m = grid.mask
    g = np.where(m[..., None], grid.g, _on_sphere(R))
    G = R(g)
    Gs = R.jvp(g, grid.sample.dgds)
    Gt = R.jvp(g, grid.sample.dgdt)
    jac = np.where(m, _gram_jac(Gs, Gt), 0.0)
    d, u = _polar(R.p, G)
    er = -np.sin(d)[..., None] * R.p + np.cos(d)[..., None] * u
    signed = np.linalg.det(np.stack([G, er, Gs, Gt], axis=-1))
    signed = float(w * np.where(m, signed, 0.0).sum())
    rho = (1.0 - s) * np.clip(geodesic_distance(g, R.p), R.lam, np.pi / 2) + s * R.lam
    resid = float(np.abs(d - rho)[m].max())
    return RetractedGrid(R.p, R.lam, s, jac, grid.jac, signed, resid, w)


def _on_sphere(R):
    # any point of the annulus; used to fill masked nodes so the map is defined
    e = tangent_basis(R.p)[0]
    rho = 0.5 * (R.lam + np.pi / 2)
    return np.cos(rho) * R.p + np.sin(rho) * e


def retracted_family_area(link, p, z, s, quad=128):
    return retracted_grid(FamilySampler(link, quad), p, z, s)


def geodesic_sphere_area(radius, n=64):
    """Area of a geodesic sphere of S^3 from a sampled parametrization.

    Gauss-Legendre in the polar angle and the trapezoid rule in azimuth; the
    closed form is ``4 pi sin(radius)^2``.
    """
    x, wx = np.polynomial.legendre.leggauss(n)
    theta = 0.5 * np.pi * (x + 1.0)
    wt = 0.5 * np.pi * wx
    phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    # tangent vectors of p cos r + sin r u(theta, phi), u on the S^2 orthogonal to p
    ut = np.stack([np.cos(T) * np.cos(P), np.cos(T) * np.sin(P), -np.sin(T)], -1)
    up = np.stack([-np.sin(T) * np.sin(P), np.sin(T) * np.cos(P), np.zeros_like(T)], -1)
    jac = math.sin(radius) ** 2 * _gram_jac(ut, up)
    return float((wt[:, None] * jac).sum() * (2 * np.pi / (2 * n)))


# ---------------------------------------------------------------------------
# min-max family

def sphere_degree(link, quad=128):
    """How many times a fully retracted member covers its sphere: ``|lk|``."""
    r3 = link if link.dim == 3 else project_link_to_r3(link)
    return abs(linking_number(r3, quad))


def cube_to_ball(x):
    """Radial stretch of [0, 1]^4 onto the closed ball of radius 2.

    Centered coordinates ``y = 2x - 1`` are rescaled along rays so that the
    max-norm becomes half the Euclidean norm of the image; the cube boundary
    lands on the sphere of radius 2.
    """
    y = 2.0 * np.asarray(x, dtype=float) - 1.0
    e = np.linalg.norm(y)
    if e == 0:
        return y
    return 2.0 * np.abs(y).max() * y / e


@dataclass(frozen=True)
class MinMaxPoint:
    x: np.ndarray
    t: float
    v: np.ndarray
    kind: str           # zero | family | retracted | sphere
    area: float
    center: np.ndarray = None
    radius: float = math.nan


class MinMaxFamily:
    """Sweepout of S^3 over the five-cube, evaluated member by member."""

    def __init__(self, link, quad=96):
        self.sampler = FamilySampler(link, quad)
        self.alpha = link.alpha
        self.degree = sphere_degree(link)

    @property
    def energy(self):
        return self.sampler.energy

    def surface(self, x, t):
        x = np.asarray(x, dtype=float)
        t = float(t)
        v = cube_to_ball(x)
        nv = float(np.linalg.norm(v))
        if t <= 0.0 or t >= 1.0:
            return MinMaxPoint(x, t, v, "zero", 0.0)
        if nv <= 1.0:
            grid = self.sampler.grid(family_coeffs(v, t))
            return MinMaxPoint(x, t, v, "family", grid.area_integral)
        p = v / nv
        r = support_radius(t, self.alpha)
        if nv >= 2.0 - 1e-12:
            return MinMaxPoint(x, t, v, "sphere", 4 * np.pi * math.sin(r) ** 2, p, r)
        rg = retracted_grid(self.sampler, p, t, nv - 1.0)
        return MinMaxPoint(x, t, v, "retracted", rg.area_integral, rg.center, rg.radius)

    def boundary_sphere_residual(self, x, t):
        """Distance of the slid-to-the-end member from the round sphere it should equal."""
        v = cube_to_ball(x)
        rg = retracted_grid(self.sampler, v / np.linalg.norm(v), t, 1.0)
        target = self.degree * 4 * np.pi * math.sin(rg.radius) ** 2
        return rg.sphere_residual, abs(abs(rg.signed_integral) - target)


def minmax_surface(link, x, t, quad=96):
    return MinMaxFamily(link, quad).surface(x, t)


def sweepout_samples(count, seed, boundary_fraction=0.25):
    """Uniform samples of the five-cube, a fraction pushed onto the boundary of the first factor."""
    rng = np.random.default_rng(seed)
    pts = rng.random((count, 5))
    nb = int(boundary_fraction * count)
    for i in range(nb):
        axis = rng.integers(4)
        pts[i, axis] = float(rng.integers(2))
    return pts

"""
Cross energy, Gauss linking integral and the Gauss map of a link.

All double integrals over the torus of parameters use the uniform
trapezoid rule, which for smooth periodic integrands converges faster than
any power of the grid spacing.
"""

from dataclasses import dataclass

import numpy as np

from .curves import TWO_PI, uniform_nodes
from .errors import ConfigError, IntersectingLinkError, UnresolvedLinkingError

# accepted distance of the Gauss integral from the nearest integer
LK_RESOLUTION = 0.1
# max residual of the least-squares hyperplane for a link in R^4
HYPERPLANE_TOL = 1e-8


@dataclass(frozen=True)
class QuadratureSpec:
    """Uniform ``n``-point trapezoid grid per circle."""

    n: int = 128

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ConfigError(f"quadrature needs n >= 8 nodes, got {self.n}")

    @property
    def nodes(self):
        return uniform_nodes(self.n)

    @property
    def weight(self):
        """Area of one cell of the (s, t) grid."""
        return (TWO_PI / self.n) ** 2


def as_quad(quad):
    return quad if isinstance(quad, QuadratureSpec) else QuadratureSpec(int(quad))


def _require_disjoint(link):
    # Link.alpha raises IntersectingLinkError itself
    if not link.alpha > 0:
        raise IntersectingLinkError("components intersect")


def _grid(link, quad):
    p1, d1 = link.gamma1.sample(quad.n)
    p2, d2 = link.gamma2.sample(quad.n)
    return p1, d1, p2, d2


def energy_density(p1, d1, p2, d2):
    """Nodewise ``|g1'||g2'| / |g1 - g2|^2`` for node arrays of shape (n, dim)."""
    D = p1[:, None, :] - p2[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", D, D)
    if r2.min() <= 0:
        raise IntersectingLinkError("coincident nodes on the two components")
    return np.outer(np.linalg.norm(d1, axis=1), np.linalg.norm(d2, axis=1)) / r2


def mobius_energy(link, quad=128):
    """Moebius cross energy of ``link`` by the ``n x n`` trapezoid rule."""
    quad = as_quad(quad)
    _require_disjoint(link)
    return float(quad.weight * energy_density(*_grid(link, quad)).sum())


def _hyperplane_frame(points, normal=None):
    """Orthonormal oriented frame (e1, e2, e3) of the affine hull of R^4 points.

    Returns the centroid, the 3x4 frame and the unit normal n such that
    (e1, e2, e3, n) is positively oriented.
    """
    center = points.mean(axis=0)
    X = points - center
    _, _, vt = np.linalg.svd(X, full_matrices=True)
    fitted = vt[-1]
    resid = np.abs(X @ fitted).max()
    if resid > HYPERPLANE_TOL:
        raise ConfigError(f"link in R^4 is not contained in a hyperplane (residual {resid:.2e})")
    if normal is None:
        n = fitted * np.sign(fitted[np.argmax(np.abs(fitted))])
    else:
        normal = np.asarray(normal, dtype=float)
        n = normal / np.linalg.norm(normal)
        if abs(abs(n @ fitted) - 1.0) > 1e-8:
            raise ConfigError("given normal is not normal to the link's hyperplane")
    frame = vt[:3].copy()
    if np.linalg.det(np.vstack([frame, n])) < 0:
        frame[2] *= -1.0
    return center, frame, n


def _to_r3(link, quad, normal=None):
    p1, d1, p2, d2 = _grid(link, quad)
    if link.dim == 3:
        return p1, d1, p2, d2
    center, frame, _ = _hyperplane_frame(np.vstack([p1, p2]), normal)
    return (p1 - center) @ frame.T, d1 @ frame.T, (p2 - center) @ frame.T, d2 @ frame.T


def linking_density(p1, d1, p2, d2):
    """Nodewise ``det(g1', g2', g1 - g2) / |g1 - g2|^3`` for R^3 node arrays."""
    D = p1[:, None, :] - p2[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", D, D))
    cross = np.cross(d2[None, :, :], D)
    det = np.einsum("ik,ijk->ij", d1, cross)
    return det / r ** 3


def gauss_linking_integral(link, quad=128, normal=None):
    """Gauss double integral divided by 4*pi.

    Links in R^4 must lie in an affine hyperplane; they are integrated in
    that hyperplane, oriented so that (frame, normal) is positive. Without
    an explicit ``normal`` the fitted normal is signed to make its largest
    component positive.
    """
    quad = as_quad(quad)
    _require_disjoint(link)
    density = linking_density(*_to_r3(link, quad, normal))
    return float(quad.weight * density.sum() / (4.0 * np.pi))


def linking_number(link, quad=128, normal=None):
    """Nearest integer to the Gauss integral.

    Raises
    ------
    UnresolvedLinkingError
        When the integral is more than 0.1 away from an integer.
    """
    quad = as_quad(quad)
    value = gauss_linking_integral(link, quad, normal)
    lk = int(round(value))
    if abs(value - lk) > LK_RESOLUTION:
        raise UnresolvedLinkingError(
            f"Gauss integral {value:.6f} is not near an integer at n={quad.n}; increase n")
    return lk


@dataclass(frozen=True)
class GaussMapSample:
    """Gauss map data at one node or, with array fields, on a whole grid.

    ``residuals`` holds the raw inner products <g1', g2'>, <g1', D>,
    <g2', D> with D = g1 - g2; ``scaled_residuals`` divides each by the norms
    of its two factors so that it is a cosine.
    """

    g: np.ndarray
    dgds: np.ndarray
    dgdt: np.ndarray
    jac: np.ndarray
    bound: np.ndarray
    residuals: np.ndarray
    scaled_residuals: np.ndarray


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def wedge_norm(a, b):
    """Area of the parallelogram spanned by ``a`` and ``b``.

    Summing squared 2x2 minors avoids the cancellation in
    ``|a|^2 |b|^2 - <a, b>^2`` when the vectors are nearly parallel.
    """
    m = a[..., :, None] * b[..., None, :]
    m = m - np.swapaxes(m, -1, -2)
    return np.sqrt(0.5 * np.einsum("...ij,...ij->...", m, m))


def gauss_frame(p1, d1, p2, d2):
    """Vectorized Gauss map of a pair of curve samples.

    ``p1, d1`` are positions and velocities of the first curve and ``p2, d2``
    of the second, all broadcastable to a common shape ``(..., dim)``.
    """
    D = p1 - p2
    r = np.sqrt(_dot(D, D))
    g = D / r[..., None]
    gs = (d1 - _dot(g, d1)[..., None] * g) / r[..., None]
    gt = -(d2 - _dot(g, d2)[..., None] * g) / r[..., None]
    jac = wedge_norm(gs, gt)
    n1 = np.sqrt(_dot(d1, d1))
    n2 = np.sqrt(_dot(d2, d2))
    bound = n1 * n2 / r ** 2
    res = np.stack(np.broadcast_arrays(_dot(d1, d2), _dot(d1, D), _dot(d2, D)), axis=-1)
    scale = np.stack(np.broadcast_arrays(n1 * n2, n1 * r, n2 * r), axis=-1)
    return GaussMapSample(g, gs, gt, jac, bound, res, res / scale)


def gauss_map(link, s, t):
    """Gauss map sample at parameters ``(s, t)`` (scalars or broadcastable arrays)."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    c1, c2 = link.gamma1, link.gamma2
    return gauss_frame(c1(s), c1.derivative(s), c2(t), c2.derivative(t))


def gauss_map_grid(link, quad=128):
    """Gauss map on the full ``n x n`` grid; fields have shape (n, n, ...)."""
    quad = as_quad(quad)
    p1, d1, p2, d2 = _grid(link, quad)
    return gauss_frame(p1[:, None], d1[:, None], p2[None, :], d2[None, :])


def jacobian_bound_excess(sample):
    """Largest ``(jac - bound) / max(1, bound)``; nonpositive up to rounding."""
    excess = (sample.jac - sample.bound) / np.maximum(1.0, sample.bound)
    return float(np.max(excess))


def near_equality_residual(sample, rel=1e-9):
    """Max scaled orthogonality residual over nodes where ``jac >= (1-rel)*bound``.

    Returns ``(max_residual, node_count)``; ``(0.0, 0)`` when no node is near
    equality.
    """
    near = sample.jac >= (1.0 - rel) * sample.bound
    count = int(np.count_nonzero(near))
    if count == 0:
        return 0.0, 0
    return float(np.abs(sample.scaled_residuals[near]).max()), count


@dataclass(frozen=True)
class LowerBoundReport:
    energy: float
    gauss_integral: float
    lk: int
    slack: float


def energy_lower_bound_report(link, quad=128, normal=None):
    """Energy, linking number and the slack ``E - 4*pi*|lk|``."""
    quad = as_quad(quad)
    E = mobius_energy(link, quad)
    integral = gauss_linking_integral(link, quad, normal)
    lk = linking_number(link, quad, normal)
    return LowerBoundReport(E, integral, lk, E - 4.0 * np.pi * abs(lk))

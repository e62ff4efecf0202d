"""
Gradient descent on the discretized cross energy of a link in R^3.

The unknowns are the real Fourier coefficients of both components. The
energy is invariant under similarities and inversions, so every accepted
step is followed by a gauge normalization (centroids centered, first
component of unit mean radius) and convergence is measured on the gradient
with the conformal directions projected out.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import optimize

from .conformal import inversion, inversion_jvp
from .curves import Curve, Link, stereographic_lift_link, uniform_nodes
from .energy import as_quad, gauss_frame, linking_number
from .errors import ConfigError
from .family import FamilySampler, family_coeffs, family_samples

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
INITIAL_STEP = 1e-1
MIN_STEP = 1e-12
ALPHA_FLOOR = 1e-3
LK_EVERY = 50


def _basis(modes, n):
    s = uniform_nodes(n)
    k = np.arange(1, modes + 1)
    ks = np.outer(s, k)
    B = np.hstack([np.ones((n, 1)), np.cos(ks), np.sin(ks)])
    Bd = np.hstack([np.zeros((n, 1)), -k * np.sin(ks), k * np.cos(ks)])
    return B, Bd


class DiscreteEnergy:
    """Trapezoid-rule cross energy as a function of the packed real coefficients.

    The packed vector is ``[A1.ravel(), A2.ravel()]`` with ``Ai`` of shape
    ``(dim, 2M + 1)`` as produced by :meth:`Curve.to_real`.
    """

    def __init__(self, modes, quad=96, dim=3):
        self.modes = modes
        self.dim = dim
        self.quad = as_quad(quad)
        self.B, self.Bd = _basis(modes, self.quad.n)
        self.size = dim * (2 * modes + 1)

    def pack(self, link):
        return np.concatenate([link.gamma1.with_modes(self.modes).to_real().ravel(),
                               link.gamma2.with_modes(self.modes).to_real().ravel()])

    def unpack(self, x):
        A1 = x[:self.size].reshape(self.dim, -1)
        A2 = x[self.size:].reshape(self.dim, -1)
        return A1, A2

    def link(self, x):
        A1, A2 = self.unpack(x)
        return Link(Curve.from_real(A1), Curve.from_real(A2))

    def nodes(self, x):
        A1, A2 = self.unpack(x)
        return self.B @ A1.T, self.Bd @ A1.T, self.B @ A2.T, self.Bd @ A2.T

    def separation(self, x):
        """Smallest node-to-node chord on the quadrature grid."""
        P1, _, P2, _ = self.nodes(x)
        D = P1[:, None] - P2[None]
        return float(np.sqrt(np.einsum("ijk,ijk->ij", D, D).min()))

    def value(self, x):
        P1, D1, P2, D2 = self.nodes(x)
        D = P1[:, None] - P2[None]
        r2 = np.einsum("ijk,ijk->ij", D, D)
        f = np.outer(np.linalg.norm(D1, axis=1), np.linalg.norm(D2, axis=1)) / r2
        return float(self.quad.weight * f.sum())

    def value_and_grad(self, x):
        P1, D1, P2, D2 = self.nodes(x)
        D = P1[:, None] - P2[None]
        r2 = np.einsum("ijk,ijk->ij", D, D)
        u = np.linalg.norm(D1, axis=1)
        w = np.linalg.norm(D2, axis=1)
        f = np.outer(u, w) / r2
        h2 = self.quad.weight
        q = (2.0 * f / r2)[..., None] * D
        gP1 = -h2 * q.sum(axis=1)
        gP2 = h2 * q.sum(axis=0)
        inv = 1.0 / r2
        gD1 = h2 * (D1 / u[:, None]) * (inv @ w)[:, None]
        gD2 = h2 * (D2 / w[:, None]) * (u @ inv)[:, None]
        G1 = (self.B.T @ gP1 + self.Bd.T @ gD1).T
        G2 = (self.B.T @ gP2 + self.Bd.T @ gD2).T
        return float(h2 * f.sum()), np.concatenate([G1.ravel(), G2.ravel()])


def energy_gradient(link, quad=96, modes=None):
    """Gradient of the discretized energy with respect to every real coefficient.

    Returns an array of shape ``(2, dim, 2M + 1)``: component, coordinate,
    coefficient ``[a_0, a_1..a_M, b_1..b_M]``.
    """
    modes = modes or max(link.gamma1.modes, link.gamma2.modes)
    de = DiscreteEnergy(modes, quad, link.dim)
    _, g = de.value_and_grad(de.pack(link))
    return g.reshape(2, link.dim, -1)


def finite_difference_gradient(func, x, eps=1e-6):
    """Central differences of a scalar function, one coordinate at a time."""
    grad = np.zeros_like(x)
    for j in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[j] += eps
        xm[j] -= eps
        grad[j] = (func(xp) - func(xm)) / (2 * eps)
    return grad


def conformal_directions(link, modes, n=None):
    """Orthonormal basis (rows) of the infinitesimal conformal motions in coefficient space.

    Translations, rotations, scaling and the three special conformal fields
    ``2<b, x> x - |x|^2 b`` are evaluated along both curves and Fourier-fit.
    """
    if link.dim != 3:
        raise ConfigError("conformal directions are built for links in R^3")
    n = n or 8 * (2 * modes + 1)
    s = uniform_nodes(n)
    pts = [link.gamma1(s), link.gamma2(s)]
    e = np.eye(3)
    fields = []
    fields += [lambda x, b=b: np.broadcast_to(b, x.shape) for b in e]
    fields += [lambda x, b=b: np.cross(b, x) for b in e]
    fields.append(lambda x: x)
    fields += [lambda x, b=b: 2.0 * (x @ b)[:, None] * x - np.sum(x * x, 1)[:, None] * b for b in e]
    rows = []
    for fld in fields:
        parts = [Curve.from_samples(fld(p), modes).to_real().ravel() for p in pts]
        rows.append(np.concatenate(parts))
    q, _ = np.linalg.qr(np.array(rows).T)
    return q.T


def project_out(grad, basis):
    return grad - basis.T @ (basis @ grad)


def gauge_normalize(link, probe=256):
    """Center the midpoint of the two centroids at the origin and give the first
    component unit mean radius; the image changes only by a similarity."""
    s = uniform_nodes(probe)
    A1, A2 = link.gamma1.to_real(), link.gamma2.to_real()
    mid = 0.5 * (A1[:, 0] + A2[:, 0])
    radius = np.linalg.norm(link.gamma1(s) - A1[:, 0], axis=1).mean()
    A1, A2 = A1.copy(), A2.copy()
    A1[:, 0] -= mid
    A2[:, 0] -= mid
    return Link(Curve.from_real(A1 / radius), Curve.from_real(A2 / radius))


@dataclass
class TraceRow:
    iter: int
    energy: float
    alpha: float
    step: float
    gradnorm: float
    lk: int


@dataclass
class MinimizeResult:
    link: Link
    energy: float
    converged: bool
    stalled: bool
    iterations: int
    trace: List[TraceRow] = field(default_factory=list)

    def trace_table(self):
        return [(r.iter, r.energy, r.alpha, r.step, r.gradnorm, r.lk) for r in self.trace]


def minimize(link, max_iter=5000, tol=1e-6, quad=96, modes=16, initial_step=INITIAL_STEP,
             alpha_floor=ALPHA_FLOOR, callback=None):
    """Backtracking gradient descent with Armijo acceptance and gauge fixing.

    Each iteration starts the line search at ``initial_step`` and halves it
    until the Armijo condition holds and the node-grid separation stays above
    ``alpha_floor`` times the mean radius (one after normalization). A step
    below 1e-12 ends the run as stalled. Convergence is declared when the
    gradient with conformal directions removed has norm at most ``tol``.
    """
    if link.dim != 3:
        raise ConfigError("minimize works in the R^3 chart; project the link first")
    quad = as_quad(quad)
    try:
        lk0 = linking_number(link, quad)
    except Exception:
        lk0 = None
    if lk0 is None or abs(lk0) != 1:
        logger.warning("minimizing a link with lk=%s; no positive energy floor applies", lk0)

    de = DiscreteEnergy(modes, quad, 3)
    x = de.pack(gauge_normalize(link.curve_map(lambda c: c.with_modes(modes))))
    E, g = de.value_and_grad(x)
    lk = lk0
    trace = []
    stalled = converged = False

    def projected_norm(x, g):
        basis = conformal_directions(de.link(x), modes)
        return float(np.linalg.norm(project_out(g, basis)))

    gnorm = projected_norm(x, g)
    trace.append(TraceRow(0, E, de.separation(x), 0.0, gnorm, lk))
    it = 0
    for it in range(1, max_iter + 1):
        if gnorm <= tol:
            converged = True
            it -= 1
            break
        gg = float(g @ g)
        step = initial_step
        while step >= MIN_STEP:
            xn = x - step * g
            if de.separation(xn) >= alpha_floor:
                En = de.value(xn)
                if En <= E - ARMIJO * step * gg:
                    break
            step *= 0.5
        else:
            stalled = True
            it -= 1
            break
        x = de.pack(gauge_normalize(de.link(xn)))
        E, g = de.value_and_grad(x)
        gnorm = projected_norm(x, g)
        if it % LK_EVERY == 0:
            lk = linking_number(de.link(x), quad)
        trace.append(TraceRow(it, E, de.separation(x), step, gnorm, lk))
        if callback is not None:
            callback(trace[-1])
    final = de.link(x)
    lk_final = linking_number(final, quad)
    if trace[-1].lk != lk_final:
        trace[-1] = TraceRow(trace[-1].iter, trace[-1].energy, trace[-1].alpha, trace[-1].step,
                             trace[-1].gradnorm, lk_final)
    return MinimizeResult(final, E, converged, stalled, it, trace)


# ---------------------------------------------------------------------------
# diagnostics at (near) minimizers

def fit_circle(points):
    """Best-fit circle of points in R^n: plane by SVD, then algebraic circle fit in it.

    Returns ``(center, radius, max_deviation)`` where the deviation combines
    distance from the plane and from the circle within it.
    """
    c0 = points.mean(axis=0)
    X = points - c0
    _, _, vt = np.linalg.svd(X, full_matrices=False)
    plane = vt[:2]
    uv = X @ plane.T
    off = np.linalg.norm(X - uv @ plane, axis=1)
    A = np.column_stack([2 * uv, np.ones(len(uv))])
    sol, *_ = np.linalg.lstsq(A, np.sum(uv ** 2, 1), rcond=None)
    cuv = sol[:2]
    radius = math.sqrt(sol[2] + cuv @ cuv)
    dev = np.hypot(np.linalg.norm(uv - cuv, axis=1) - radius, off)
    return c0 + cuv @ plane, radius, float(dev.max())


@dataclass(frozen=True)
class RigidityReport:
    """Scaled residuals of the equality conditions at a candidate minimizer.

    ``max_ortho_residual`` is the largest cosine among the three orthogonality
    conditions, ``chord_spread`` is (max - min) / mean of the chord lengths and
    ``circle_residuals`` are best-fit-circle deviations divided by radii, all
    after applying the inversion about ``v``.
    """

    max_ortho_residual: float
    chord_spread: float
    circle_residuals: tuple
    v: np.ndarray
    family_area: float


def _s3(link):
    if link.dim == 3:
        return stereographic_lift_link(link)
    return link


def best_inversion_center(link, quad=64, candidates=64, seed=0):
    """Center ``v`` maximizing the area of the z = 1/2 family member.

    A low-discrepancy scan of the ball (plus the origin) seeds a Nelder-Mead
    refinement.
    """
    sampler = FamilySampler(_s3(link), quad)

    def neg_area(v):
        nv = np.linalg.norm(v)
        if nv >= 0.999:
            return 1e3 * nv
        return -sampler.area(v, 0.5)

    starts = [np.zeros(4)] + [v * 0.95 for v, _ in family_samples(candidates, seed)]
    vals = [neg_area(v) for v in starts]
    v0 = starts[int(np.argmin(vals))]
    res = optimize.minimize(neg_area, v0, method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 4000})
    return res.x, -res.fun


def rigidity_report(link, quad=128, v=None):
    """Equality-case diagnostics after the inversion that best rounds the link."""
    s3 = _s3(link)
    if v is None:
        v, _ = best_inversion_center(s3)
    v = np.asarray(v, dtype=float)
    n = as_quad(quad).n
    p1, d1 = s3.gamma1.sample(n)
    p2, d2 = s3.gamma2.sample(n)
    X1, X1d = inversion(p1, v), inversion_jvp(p1, v, d1)
    X2, X2d = inversion(p2, v), inversion_jvp(p2, v, d2)
    frame = gauss_frame(X1[:, None], X1d[:, None], X2[None], X2d[None])
    chord = np.linalg.norm(X1[:, None] - X2[None], axis=-1)
    circles = []
    for X in (X1, X2):
        _, radius, dev = fit_circle(X)
        circles.append(dev / radius)
    area = FamilySampler(s3, n).area(v, 0.5)
    return RigidityReport(float(np.abs(frame.scaled_residuals).max()),
                          float((chord.max() - chord.min()) / chord.mean()),
                          tuple(circles), v, area)


@dataclass(frozen=True)
class FamilyMaxReport:
    v: np.ndarray
    z: float
    value: float
    energy: float


def family_max_diagnostic(link, quad=64, samples=256, seed=0):
    """Largest family area over a scan of (v, z), refined by Nelder-Mead in (v, z)."""
    sampler = FamilySampler(_s3(link), quad)

    def neg(x):
        v, z = x[:4], x[4]
        if np.linalg.norm(v) >= 0.999 or not 1e-4 < z < 1 - 1e-4:
            return 1e3
        return -sampler.area(v, z)

    pts = [(np.zeros(4), z) for z in np.linspace(0.05, 0.95, 19)]
    pts += family_samples(samples, seed)
    vals = [neg(np.append(v, z)) for v, z in pts]
    best = pts[int(np.argmin(vals))]
    x0 = np.append(best[0], best[1])
    res = optimize.minimize(neg, x0, method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 6000})
    return FamilyMaxReport(res.x[:4], float(res.x[4]), -float(res.fun), sampler.energy)

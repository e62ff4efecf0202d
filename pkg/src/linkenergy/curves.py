"""
Closed curves and two-component links
=====================================

A curve is a truncated Fourier series per ambient coordinate, parametrized
over [0, 2*pi). Coefficients are stored for wavenumbers -M..M, so evaluation
is ``Re(sum_k c_k exp(i k s))``. Band-limited curves keep every later integrand
analytic, which is what makes uniform trapezoid quadrature converge
spectrally.

The module also holds the stereographic chart between R^3 and S^3 and the
named model links used across the package (Hopf link, split circles, the
(2,4) torus link and seeded perturbations of the Hopf link).
"""

import functools
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateCurveError, IntersectingLinkError

DEFAULT_MODES = 32
TWO_PI = 2.0 * np.pi

# minimal chord length below which two components count as intersecting
INTERSECTION_TOL = 1e-9
# |gamma'| < DEGENERATE_SPEED * mean speed rejects a curve
DEGENERATE_SPEED = 1e-9


def uniform_nodes(n):
    """``n`` equispaced parameters on [0, 2*pi)."""
    return TWO_PI * np.arange(n) / n


@dataclass(frozen=True, eq=False)
class Curve:
    """Closed curve in R^3 or R^4 given by complex Fourier coefficients.

    Parameters
    ----------
    coeffs : array-like, shape (dim, 2*M + 1)
        Coefficient of ``exp(i k s)`` for ``k = -M, ..., M`` in each
        coordinate. The array is conjugate-symmetrized on construction so
        the curve is real-valued.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] % 2 == 0:
            raise ConfigError(f"coefficients must have shape (dim, 2M+1), got {c.shape}")
        if c.shape[0] not in (3, 4):
            raise ConfigError(f"curves live in R^3 or R^4, got dim={c.shape[0]}")
        c = 0.5 * (c + np.conj(c[:, ::-1]))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self):
        return self.coeffs.shape[0]

    @property
    def modes(self):
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def wavenumbers(self):
        return np.arange(-self.modes, self.modes + 1)

    def __call__(self, s):
        return self.derivative(s, order=0)

    def derivative(self, s, order=1):
        """Term-by-term derivative of the series at parameter(s) ``s``.

        Returns an array of shape ``np.shape(s) + (dim,)``.
        """
        s = np.asarray(s, dtype=float)
        k = self.wavenumbers
        c = self.coeffs * (1j * k) ** order
        phase = np.exp(1j * s[..., None] * k)
        return (phase @ c.T).real

    def sample(self, n):
        """Positions and velocities on the uniform ``n``-point grid."""
        s = uniform_nodes(n)
        return self(s), self.derivative(s)

    def speed(self, s):
        return np.linalg.norm(self.derivative(s), axis=-1)

    def reversed(self):
        """Same image traversed backwards, ``s -> -s``."""
        return Curve(self.coeffs[:, ::-1])

    def transformed(self, matrix, offset=None):
        """Image under the affine map ``x -> matrix @ x + offset``."""
        matrix = np.asarray(matrix, dtype=float)
        c = matrix @ self.coeffs
        if offset is not None:
            c[:, self.modes] += np.asarray(offset, dtype=float)
        return Curve(c)

    def with_modes(self, modes):
        """Zero-padded or truncated copy with ``modes`` wavenumbers each side."""
        out = np.zeros((self.dim, 2 * modes + 1), dtype=complex)
        m = min(modes, self.modes)
        out[:, modes - m:modes + m + 1] = self.coeffs[:, self.modes - m:self.modes + m + 1]
        return Curve(out)

    # real (cos/sin) coordinates, used by the optimizer
    def to_real(self):
        """Real coefficients ``[a_0, a_1..a_M, b_1..b_M]`` per coordinate.

        The curve is ``a_0 + sum_k a_k cos(ks) + b_k sin(ks)``.
        """
        M = self.modes
        pos = self.coeffs[:, M + 1:]
        return np.concatenate(
            [self.coeffs[:, M:M + 1].real, 2.0 * pos.real, -2.0 * pos.imag], axis=1
        )

    @classmethod
    def from_real(cls, real):
        real = np.asarray(real, dtype=float)
        M = (real.shape[1] - 1) // 2
        a, b = real[:, 1:M + 1], real[:, M + 1:]
        pos = 0.5 * (a - 1j * b)
        c = np.concatenate([np.conj(pos[:, ::-1]), real[:, :1].astype(complex), pos], axis=1)
        return cls(c)

    @classmethod
    def from_samples(cls, points, modes=None):
        """Fourier fit of samples taken at uniform parameters ``2*pi*j/K``."""
        points = np.asarray(points, dtype=float)
        K = points.shape[0]
        max_modes = (K - 1) // 2
        if modes is None:
            modes = max_modes
        if modes > max_modes:
            raise ConfigError(f"{K} samples cannot resolve {modes} modes")
        F = np.fft.fft(points, axis=0) / K
        k = np.arange(-modes, modes + 1)
        return cls(F[k % K].T)

    @classmethod
    def from_function(cls, func, modes, oversample=4):
        """Fit ``func(s) -> (..., dim)`` by sampling ``oversample * (2M+1)`` points."""
        K = oversample * (2 * modes + 1)
        return cls.from_samples(func(uniform_nodes(K)), modes)

    @classmethod
    def from_polyline(cls, points, modes=DEFAULT_MODES):
        """Least-squares Fourier fit of an ordered closed polyline, then arclength resampling."""
        points = np.asarray(points, dtype=float)
        seg = np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)
        if np.any(seg == 0):
            raise DegenerateCurveError("polyline has repeated consecutive vertices")
        s = TWO_PI * np.concatenate([[0.0], np.cumsum(seg)[:-1]]) / seg.sum()
        M = min(modes, (len(points) - 1) // 2)
        k = np.arange(1, M + 1)
        design = np.hstack([np.ones((len(s), 1)), np.cos(np.outer(s, k)), np.sin(np.outer(s, k))])
        real, *_ = np.linalg.lstsq(design, points, rcond=None)
        return resample_arclength(cls.from_real(real.T), M)


def curve_length(curve, n=None):
    """Total length by the trapezoid rule (spectrally accurate)."""
    n = n or max(256, 8 * curve.modes)
    return TWO_PI * curve.speed(uniform_nodes(n)).mean()


def resample_arclength(curve, modes=None):
    """Reparametrize ``curve`` proportionally to arclength.

    The cumulative length is integrated spectrally from the Fourier series of
    the speed, inverted by Newton's method at uniform targets, and the
    resampled points are refit with ``modes`` wavenumbers.

    Raises
    ------
    DegenerateCurveError
        If the speed drops below ``1e-9`` times its mean on the probe grid.
    """
    modes = curve.modes if modes is None else modes
    K = max(1024, 8 * max(modes, curve.modes))
    s = uniform_nodes(K)
    speed = curve.speed(s)
    mean = speed.mean()
    if not mean > 0 or speed.min() < DEGENERATE_SPEED * mean:
        raise DegenerateCurveError("curve is not regular: speed vanishes on the probe grid")

    spec = np.fft.rfft(speed)[1:K // 2] / K
    k = np.arange(1, K // 2)

    def cumulative(x):
        ph = np.exp(1j * np.outer(x, k))
        return mean * x + 2.0 * (((ph - 1.0) / (1j * k)) @ spec).real

    J = max(4 * modes + 4, 256)
    u = uniform_nodes(J)
    target = mean * u
    # interpolated inverse of the tabulated (monotone) length as a starting
    # point; from the identity Newton can overshoot on uneven speed
    table = np.append(s, TWO_PI)
    phi = np.interp(target, cumulative(table), table)
    for _ in range(50):
        step = (cumulative(phi) - target) / curve.speed(phi)
        phi -= step
        if np.max(np.abs(step)) < 1e-15:
            break
    return Curve.from_samples(curve(phi), modes)


# ---------------------------------------------------------------------------
# stereographic chart: 0 in R^3 goes to the south pole (0, 0, 0, -1)

def inverse_stereographic(x):
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    return np.concatenate([2.0 * x, r2 - 1.0], axis=-1) / (r2 + 1.0)


def stereographic(y):
    """Projection from the north pole ``(0, 0, 0, 1)``; inverse of the above."""
    y = np.asarray(y, dtype=float)
    return y[..., :3] / (1.0 - y[..., 3:])


def _refit(func, start_modes, accept, max_modes=512):
    modes = start_modes
    while True:
        fit = Curve.from_function(func, modes)
        probe = uniform_nodes(4 * (2 * modes + 1)) + np.pi / (2 * modes + 1)
        if accept(fit, probe) or modes >= max_modes:
            return fit
        modes *= 2


def stereographic_lift(curve, modes=None, tol=1e-12):
    """Carry a curve in R^3 onto the unit sphere S^3 in R^4.

    The lifted curve is refit (mode count doubled until the fit matches the
    pointwise lift to ``tol``) and reparametrized by arclength.
    """
    if curve.dim != 3:
        raise ConfigError("stereographic_lift needs a curve in R^3")

    def lift(s):
        return inverse_stereographic(curve(s))

    start = modes or max(DEFAULT_MODES, curve.modes)
    M = start
    while True:
        fit = _refit(lift, M, lambda c, p: np.max(np.abs(c(p) - lift(p))) < tol)
        out = resample_arclength(fit, fit.modes)
        probe = uniform_nodes(4 * out.dim * (2 * out.modes + 1))
        radial = np.abs(np.linalg.norm(out(probe), axis=-1) - 1.0)
        if radial.max() < 10 * tol:
            return out
        if fit.modes >= 512:
            if radial.max() < 1e-8:
                return out
            raise ConfigError(f"lift not resolved with 512 modes (radial error {radial.max():.1e})")
        M = 2 * fit.modes


def stereographic_project(curve, modes=None, tol=1e-12):
    """Inverse of :func:`stereographic_lift`; the curve must avoid ``(0,0,0,1)``."""
    if curve.dim != 4:
        raise ConfigError("stereographic_project needs a curve in R^4")

    def proj(s):
        return stereographic(curve(s))

    fit = _refit(proj, modes or max(DEFAULT_MODES, curve.modes),
                 lambda c, p: np.max(np.abs(c(p) - proj(p))) < tol)
    return resample_arclength(fit, fit.modes)


# ---------------------------------------------------------------------------

def _closest_pair_refine(c1, c2, s, t, iters=30):
    def val(s, t):
        d = c1(s) - c2(t)
        return d @ d

    f = val(s, t)
    for _ in range(iters):
        p1, d1, dd1 = c1(s), c1.derivative(s), c1.derivative(s, 2)
        p2, d2, dd2 = c2(t), c2.derivative(t), c2.derivative(t, 2)
        D = p1 - p2
        grad = 2.0 * np.array([D @ d1, -(D @ d2)])
        hess = 2.0 * np.array([[d1 @ d1 + D @ dd1, -(d1 @ d2)],
                               [-(d1 @ d2), d2 @ d2 - D @ dd2]])
        if np.linalg.norm(grad) < 1e-15:
            break
        try:
            if np.all(np.linalg.eigvalsh(hess) > 0):
                step = -np.linalg.solve(hess, grad)
            else:
                step = -grad / max(np.abs(hess).max(), 1.0)
        except np.linalg.LinAlgError:
            break
        h = 1.0
        while h > 1e-6:
            fn = val(s + h * step[0], t + h * step[1])
            if fn <= f:
                break
            h *= 0.5
        else:
            break
        s, t, f = s + h * step[0], t + h * step[1], fn
    return f


def min_separation(link, grid=256, candidates=8):
    """Minimal chord length between the two components.

    A ``grid x grid`` brute-force search followed by damped Newton refinement
    from the ``candidates`` best grid pairs.

    Raises
    ------
    IntersectingLinkError
        If the separation falls below 1e-9.
    """
    c1, c2 = link.gamma1, link.gamma2
    nodes = uniform_nodes(grid)
    p1, p2 = c1(nodes), c2(nodes)
    d2 = np.sum(p1 ** 2, 1)[:, None] + np.sum(p2 ** 2, 1)[None, :] - 2.0 * p1 @ p2.T
    flat = np.argsort(d2, axis=None)[:candidates]
    best = max(d2.min(), 0.0)
    if np.sqrt(best) < INTERSECTION_TOL:
        raise IntersectingLinkError("components intersect (separation below 1e-9)")
    for idx in flat:
        i, j = np.unravel_index(idx, d2.shape)
        best = min(best, _closest_pair_refine(c1, c2, nodes[i], nodes[j]))
    alpha = float(np.sqrt(max(best, 0.0)))
    if alpha < INTERSECTION_TOL:
        raise IntersectingLinkError(f"components intersect (separation {alpha:.3e})")
    return alpha


@dataclass(frozen=True, eq=False)
class Link:
    """Ordered, oriented pair of disjoint curves of equal dimension.

    Orientation is carried by the parametrizations; use :meth:`reversed` to
    flip a component. The minimal separation is computed on first access.
    """

    gamma1: Curve
    gamma2: Curve

    def __post_init__(self):
        if self.gamma1.dim != self.gamma2.dim:
            raise ConfigError("link components must share the ambient dimension")

    @property
    def dim(self):
        return self.gamma1.dim

    @cached_property
    def alpha(self):
        return min_separation(self)

    def swapped(self):
        return Link(self.gamma2, self.gamma1)

    def reversed(self, component=1):
        if component == 1:
            return Link(self.gamma1.reversed(), self.gamma2)
        return Link(self.gamma1, self.gamma2.reversed())

    def transformed(self, matrix, offset=None):
        return Link(self.gamma1.transformed(matrix, offset), self.gamma2.transformed(matrix, offset))

    def curve_map(self, func):
        return Link(func(self.gamma1), func(self.gamma2))

    def on_sphere_residual(self, n=512):
        s = uniform_nodes(n)
        return max(np.abs(np.linalg.norm(c(s), axis=-1) - 1.0).max()
                   for c in (self.gamma1, self.gamma2))


def stereographic_lift_link(link, modes=None):
    return link.curve_map(lambda c: stereographic_lift(c, modes))


def stereographic_project_link(link, modes=None):
    return link.curve_map(lambda c: stereographic_project(c, modes))


def chart_rotation(link, clearance=0.5, candidates=512):
    """Rotation of R^4 (det +1) moving a point far from ``link`` to the pole e4.

    The identity is returned when the pole already clears both curves by
    ``clearance``; otherwise the best of a fixed set of candidate points wins.
    """
    probe = np.vstack([c(uniform_nodes(512)) for c in (link.gamma1, link.gamma2)])
    pole = np.eye(4)[3]
    if np.linalg.norm(probe - pole, axis=1).min() >= clearance:
        return np.eye(4)
    q = np.random.default_rng(0).normal(size=(candidates, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    clear = np.min(np.linalg.norm(q[:, None] - probe[None], axis=-1), axis=1)
    best = q[int(np.argmax(clear))]
    basis, _ = np.linalg.qr(np.column_stack([best, np.eye(4)[:, :3]]))
    rot = np.vstack([basis[:, 1:4].T, best[None] * np.sign(basis[:, 0] @ best)])
    if np.linalg.det(rot) < 0:
        rot[0] *= -1.0
    return rot


def project_link_to_r3(link, modes=None):
    """Stereographic image of a link on S^3 after an orientation-preserving
    rotation that keeps the projection pole away from it."""
    rot = chart_rotation(link)
    return stereographic_project_link(link.transformed(rot), modes)


# ---------------------------------------------------------------------------
# model links

def circle(center, e1, e2, radius=1.0, phase=0.0):
    """Round circle ``center + radius*(cos(s+phase) e1 + sin(s+phase) e2)``, one mode."""
    center, e1, e2 = (np.asarray(v, dtype=float) for v in (center, e1, e2))
    pos = 0.5 * radius * np.exp(1j * phase) * (e1 - 1j * e2)
    c = np.stack([np.conj(pos), center.astype(complex), pos], axis=1)
    return Curve(c)


def hopf_link(modes=1):
    """Standard Hopf link: two orthogonal great circles of S^3."""
    e = np.eye(4)
    g1 = circle(np.zeros(4), e[0], e[1])
    g2 = circle(np.zeros(4), e[2], e[3])
    return Link(g1.with_modes(modes), g2.with_modes(modes))


# rotation in the (x2, x4) plane taking (0, 1, 0, 1)/sqrt(2) to the pole e4,
# so that both Hopf circles stay a unit chord away from the projection pole
_HOPF_CHART_ROTATION = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, np.sqrt(0.5), 0.0, -np.sqrt(0.5)],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, np.sqrt(0.5), 0.0, np.sqrt(0.5)],
])


@functools.lru_cache(maxsize=8)
def projected_hopf_link(modes=DEFAULT_MODES):
    """The Hopf link carried to R^3: rotate in S^3, then project stereographically.

    Both components are round circles in R^3, returned at unit-speed-proportional
    parametrization with ``modes`` wavenumbers.
    """
    hopf = hopf_link().transformed(_HOPF_CHART_ROTATION)
    return hopf.curve_map(lambda c: stereographic_project(c).with_modes(modes))


def coaxial_circles(gap, radius=1.0):
    """Two unit circles around the z-axis in the planes z=0 and z=gap."""
    e = np.eye(3)
    return Link(circle(np.zeros(3), e[0], e[1], radius),
                circle(gap * e[2], e[0], e[1], radius))


def split_link(gap=10.0):
    return coaxial_circles(gap)


def torus_curve(p, q, major=2.0, minor=1.0, phase=0.0):
    """Curve winding ``p`` times along and ``q`` times around a standard torus."""
    def f(s):
        theta = p * s
        phi = q * s + phase
        rho = major + minor * np.cos(phi)
        return np.stack([rho * np.cos(theta), rho * np.sin(theta), minor * np.sin(phi)], axis=-1)

    return Curve.from_function(f, p + q)


def torus_link_2_4(major=2.0, minor=1.0):
    """Two parallel (1, 2) curves on a torus; linking number of magnitude 2."""
    return Link(torus_curve(1, 2, major, minor, 0.0), torus_curve(1, 2, major, minor, np.pi))


def random_perturbation(rng, dim, modes, amplitude, max_wavenumber=3):
    """Smooth random displacement with sup-norm exactly ``amplitude`` on a fine grid."""
    real = np.zeros((dim, 2 * modes + 1))
    K = min(max_wavenumber, modes)
    decay = 1.0 / np.arange(1, K + 1) ** 2
    real[:, 1:K + 1] = rng.standard_normal((dim, K)) * decay
    real[:, modes + 1:modes + 1 + K] = rng.standard_normal((dim, K)) * decay
    pert = Curve.from_real(real)
    sup = np.linalg.norm(pert(uniform_nodes(512)), axis=-1).max()
    return real * (amplitude / sup)


def perturbed_hopf(seed, amplitude=0.1, modes=16, chart="R3"):
    """Projected Hopf link plus a seeded smooth perturbation of each component.

    ``chart="S3"`` lifts the perturbed link back to the unit sphere.
    """
    rng = np.random.default_rng(seed)
    base = projected_hopf_link(modes)
    curves = []
    for c in (base.gamma1, base.gamma2):
        real = c.to_real() + random_perturbation(rng, 3, modes, amplitude)
        curves.append(Curve.from_real(real))
    link = Link(*curves)
    if chart == "S3":
        return stereographic_lift_link(link)
    if chart != "R3":
        raise ConfigError(f"unknown chart {chart!r}")
    return link


NAMED_LINKS = {
    "hopf": lambda: hopf_link(),
    "hopf-r3": lambda: projected_hopf_link(),
    "split": lambda: split_link(),
    "torus-2-4": lambda: torus_link_2_4(),
}


def named_link(name, seed=None, amplitude=0.1, chart="R3"):
    """Built-in link by name; ``perturbed-hopf`` requires a seed."""
    if name == "perturbed-hopf":
        if seed is None:
            raise ConfigError("perturbed-hopf needs an explicit seed")
        return perturbed_hopf(seed, amplitude, chart=chart)
    try:
        return NAMED_LINKS[name]()
    except KeyError:
        raise ConfigError(f"unknown link {name!r}; choose from "
                          f"{sorted(NAMED_LINKS) + ['perturbed-hopf']}") from None


# ---------------------------------------------------------------------------
# JSON

def curve_to_dict(curve):
    return {
        "dim": curve.dim,
        "modes": curve.modes,
        "coeffs": [[[z.real, z.imag] for z in row] for row in curve.coeffs],
    }


def curve_from_dict(data):
    try:
        dim = int(data["dim"])
        if "coeffs" in data:
            arr = np.asarray(data["coeffs"], dtype=float)
            if arr.ndim != 3 or arr.shape[2] != 2:
                raise ConfigError("coeffs must be [[re, im], ...] per coordinate")
            curve = Curve(arr[..., 0] + 1j * arr[..., 1])
            if "modes" in data and int(data["modes"]) != curve.modes:
                raise ConfigError("declared modes disagree with coefficient count")
        elif "samples" in data:
            pts = np.asarray(data["samples"], dtype=float)
            curve = Curve.from_polyline(pts, int(data.get("modes", DEFAULT_MODES)))
        else:
            raise ConfigError("curve needs 'coeffs' or 'samples'")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid curve record: {exc}") from exc
    if curve.dim != dim:
        raise ConfigError(f"declared dim {dim} but data has dim {curve.dim}")
    return curve


def link_to_dict(link):
    return {"gamma1": curve_to_dict(link.gamma1), "gamma2": curve_to_dict(link.gamma2)}


def link_from_dict(data):
    if not isinstance(data, dict) or set(data) != {"gamma1", "gamma2"}:
        raise ConfigError("link file must be an object with keys gamma1, gamma2")
    return Link(curve_from_dict(data["gamma1"]), curve_from_dict(data["gamma2"]))


def load_link(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return link_from_dict(data)


def save_link(link, path):
    Path(path).write_text(json.dumps(link_to_dict(link)))

"""
Conformal maps of R^n used to move links around S^3.

Four kinds of map are supported, each with an exact image and an exact
differential:

* ``Inversion(v)``: ``x -> (x - v) / |x - v|^2``
* ``Dilation(w, lam)``: ``x -> lam * (x - w) + w``
* ``BoundaryMap(v, z)``: ``x -> Inversion(v)(x) - b(z) v`` for unit ``v``
* ``Composition(maps)``: apply ``maps[0]`` first

Maps act on arrays of points with the coordinate on the last axis.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .curves import Curve, uniform_nodes
from .errors import ConfigError, NearBoundaryError, SingularityError

SINGULAR_TOL = 1e-12
BOUNDARY_TOL = 1e-9
# curve points closer than this to an inversion center are treated as singular
CENTER_EXCLUSION = 1e-6


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def boundary_offset(z):
    """``(2z - 1) / (z (1 - z))``; +-inf at the endpoints."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        out = (2.0 * z - 1.0) / (z * (1.0 - z))
    return out if out.ndim else float(out)


def inversion(x, v):
    y = np.asarray(x, dtype=float) - v
    r2 = _dot(y, y)
    if np.any(r2 < SINGULAR_TOL ** 2):
        raise SingularityError("point at the inversion center")
    return y / r2[..., None]


def inversion_jvp(x, v, h):
    """Differential of the inversion at ``x`` applied to ``h``: a scaled reflection."""
    y = np.asarray(x, dtype=float) - v
    r2 = _dot(y, y)
    if np.any(r2 < SINGULAR_TOL ** 2):
        raise SingularityError("point at the inversion center")
    return (h - 2.0 * (_dot(h, y) / r2)[..., None] * y) / r2[..., None]


class ConformalMap:
    def __call__(self, x):
        raise NotImplementedError

    def jvp(self, x, h):
        """Differential at ``x`` applied to tangent vector(s) ``h``."""
        raise NotImplementedError

    def differential(self, x):
        """Jacobian matrix at ``x``, shape ``x.shape + (dim,)``; column j is D e_j."""
        x = np.asarray(x, dtype=float)
        dim = x.shape[-1]
        cols = [self.jvp(x, np.broadcast_to(e, x.shape)) for e in np.eye(dim)]
        return np.stack(cols, axis=-1)

    def then(self, other):
        return Composition((self, other))


@dataclass(frozen=True)
class Inversion(ConformalMap):
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    def __call__(self, x):
        return inversion(x, self.v)

    def jvp(self, x, h):
        return inversion_jvp(x, self.v, h)

    def centers(self):
        return [self.v]

    def to_dict(self):
        return {"kind": "inversion", "v": self.v.tolist()}


@dataclass(frozen=True)
class Dilation(ConformalMap):
    w: np.ndarray
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))

    def __call__(self, x):
        return self.lam * (np.asarray(x, dtype=float) - self.w) + self.w

    def jvp(self, x, h):
        return self.lam * np.asarray(h, dtype=float)

    def centers(self):
        return []

    def to_dict(self):
        return {"kind": "dilation", "w": self.w.tolist(), "lambda": float(self.lam)}


@dataclass(frozen=True)
class BoundaryMap(ConformalMap):
    """Inversion about a unit vector ``v`` followed by the shift ``-b(z) v``.

    It carries S^3 minus ``v`` into the hyperplane ``<x, v> = -1/2 - b(z)``.
    """

    v: np.ndarray
    z: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if abs(np.linalg.norm(v) - 1.0) > BOUNDARY_TOL:
            raise ConfigError("boundary map needs a unit vector v")
        if not 0.0 < self.z < 1.0:
            raise ConfigError("boundary map needs 0 < z < 1")
        object.__setattr__(self, "v", v)

    @property
    def offset(self):
        return boundary_offset(self.z)

    def __call__(self, x):
        return inversion(x, self.v) - self.offset * self.v

    def jvp(self, x, h):
        return inversion_jvp(x, self.v, h)

    def centers(self):
        return [self.v]

    def to_dict(self):
        return {"kind": "boundary", "v": self.v.tolist(), "z": float(self.z)}


@dataclass(frozen=True)
class Composition(ConformalMap):
    maps: Tuple[ConformalMap, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))

    def __call__(self, x):
        for m in self.maps:
            x = m(x)
        return x

    def jvp(self, x, h):
        for m in self.maps:
            h = m.jvp(x, h)
            x = m(x)
        return h

    def centers(self):
        # centers of later maps are pulled back only approximately; callers
        # check singularities pointwise through __call__ as well
        return [c for m in self.maps[:1] for c in m.centers()]

    def to_dict(self):
        return {"kind": "composition", "children": [m.to_dict() for m in self.maps]}


def map_from_dict(data):
    try:
        kind = data["kind"]
        if kind == "inversion":
            return Inversion(data["v"])
        if kind == "dilation":
            return Dilation(data["w"], float(data["lambda"]))
        if kind == "boundary":
            return BoundaryMap(data["v"], float(data["z"]))
        if kind == "composition":
            return Composition(tuple(map_from_dict(c) for c in data["children"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid conformal map record: {exc}") from exc
    raise ConfigError(f"unknown conformal map kind {kind!r}")


def image_sphere(v):
    """Center ``v / (1 - |v|^2)`` and radius ``1 / (1 - |v|^2)`` of the inverted unit sphere.

    Raises
    ------
    NearBoundaryError
        For ``|v| >= 1 - 1e-9``, where the boundary maps take over.
    """
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv >= 1.0 - BOUNDARY_TOL:
        raise NearBoundaryError(f"|v| = {nv:.12f} is at the unit sphere; use BoundaryMap")
    q = 1.0 - nv * nv
    return v / q, 1.0 / q


def inversion_distance_residual(x, y, v):
    """Relative residual of ``|F_v x - F_v y|^2 |x - v|^2 |y - v|^2 = |x - y|^2``."""
    Fx, Fy = inversion(x, v), inversion(y, v)
    lhs = _dot(Fx - Fy, Fx - Fy) * _dot(x - v, x - v) * _dot(y - v, y - v)
    rhs = _dot(x - y, x - y)
    return np.abs(lhs - rhs) / rhs


def boundary_map_plane_check(v, z, x):
    """Residual ``<L(x), v> + 1/2 + b(z)`` of the boundary map's target hyperplane."""
    L = BoundaryMap(v, z)
    return _dot(L(x), L.v) + 0.5 + L.offset


def pushforward_curve(cmap, curve, tol=1e-8, max_modes=512):
    """Fourier refit of ``cmap`` applied to ``curve``, keeping its parameter.

    The mode count starts at the curve's own and doubles until the refit
    agrees with the pointwise image to ``tol`` on an offset probe grid.

    Raises
    ------
    SingularityError
        If an inversion center lies within 1e-6 of the curve.
    """
    probe = uniform_nodes(2048)
    pts = curve(probe)
    for c in cmap.centers():
        if np.linalg.norm(pts - c, axis=-1).min() < CENTER_EXCLUSION:
            raise SingularityError("inversion center lies on the curve")

    def image(s):
        return cmap(curve(s))

    modes = max(curve.modes, 1)
    while True:
        fit = Curve.from_function(image, modes)
        check = uniform_nodes(4 * (2 * modes + 1)) + np.pi / (2 * modes + 1)
        err = np.abs(fit(check) - image(check)).max()
        if err < tol:
            return fit
        if modes >= max_modes:
            raise SingularityError(
                f"pushforward not resolved with {max_modes} modes (error {err:.2e})")
        modes = min(2 * modes, max_modes)


def pushforward_link(cmap, link, tol=1e-8):
    return link.curve_map(lambda c: pushforward_curve(cmap, c, tol))


@dataclass(frozen=True)
class DerivativeBoundReport:
    max_ratio: float
    speed_bound: float
    excluded: int

    @property
    def bound(self):
        return 3.0 * self.speed_bound

    @property
    def holds(self):
        return self.max_ratio <= self.bound + 1e-8


def derivative_bound_check(curve, v, samples=2048):
    """Largest ``|(F_v o gamma)'| / |F_v o gamma|^2`` over a uniform parameter grid.

    Samples within 1e-6 of ``v`` are dropped. ``speed_bound`` is the largest
    ``|gamma'|`` on the same grid.
    """
    v = np.asarray(v, dtype=float)
    s = uniform_nodes(samples)
    p, d = curve(s), curve.derivative(s)
    keep = np.linalg.norm(p - v, axis=-1) >= CENTER_EXCLUSION
    img = inversion(p[keep], v)
    dimg = inversion_jvp(p[keep], v, d[keep])
    ratio = np.linalg.norm(dimg, axis=-1) / _dot(img, img)
    return DerivativeBoundReport(float(ratio.max()), float(np.linalg.norm(d, axis=-1).max()),
                                 int(samples - keep.sum()))

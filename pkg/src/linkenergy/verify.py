"""
Invariant suite run by ``linkenergy verify``.

Each check measures one residual for the given link and compares it with a
tolerance. Checks are keyed by what they test; the measured value is always
reported, so overriding a tolerance never hides the number behind it.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .conformal import Inversion, inversion_distance_residual, pushforward_link
from .curves import project_link_to_r3, stereographic_lift_link
from .energy import (as_quad, gauss_linking_integral, gauss_map_grid, jacobian_bound_excess,
                     mobius_energy, near_equality_residual)
from .family import (FamilySampler, dilation_identity_residual, family_coeffs, family_samples,
                     family_scan, support_containment_check, support_radius)
from .optimizer import family_max_diagnostic, rigidity_report
from .sweepout import MinMaxFamily, Retraction, retract_contraction_check, retracted_grid

TWO_PI_SQ = 2.0 * math.pi ** 2


@dataclass(frozen=True)
class CheckResult:
    """``measured`` is compared with ``tolerance`` as ``measured <= tolerance``."""

    name: str
    measured: float
    tolerance: float
    seconds: float = 0.0

    @property
    def passed(self):
        return bool(self.measured <= self.tolerance)


DEFAULT_TOLERANCES = {
    "reference-energy": 1e-8,
    "energy-above-linking-bound": 1e-6,
    "linking-integral-integrality": 1e-6,
    "conformal-invariance": 1e-6,
    "gauss-jacobian-bound": 1e-10,
    "gauss-equality-orthogonality": 1e-4,
    "inversion-distance-identity": 1e-10,
    "dilation-distance-identity": 1e-10,
    "area-below-dominating-integral": 1e-10,
    "dominating-integral-below-energy": 1e-6,
    "reference-family-area": 1e-8,
    "support-radius-endpoints": 0.0,
    "support-containment": 1e-10,
    "retraction-endpoints": 1e-10,
    "retraction-non-expanding": 1e-5,
    "retracted-area-monotone": 1e-6,
    "retracted-sphere-mass": 1e-3,
    "sweepout-ends-zero": 0.0,
    "sweepout-below-energy": 1e-6,
    "family-maximum-below-energy": 1e-6,
    "reference-rigidity": 1e-10,
}


class Suite:
    """Checks for one link at one grid size.

    ``reference=True`` adds the checks that only hold for the round Hopf
    link (closed-form energy, family area and rigidity).
    """

    def __init__(self, link, quad=128, seed=0, reference=False, family_quad=64, samples=64):
        self.link = link
        self.quad = as_quad(quad)
        self.s3 = link if link.dim == 4 else stereographic_lift_link(link)
        self.r3 = link if link.dim == 3 else project_link_to_r3(link)
        self.seed = seed
        self.reference = reference
        self.family_quad = family_quad
        self.samples = samples
        self.rng = np.random.default_rng(seed)
        self._energy = None

    @property
    def energy(self):
        if self._energy is None:
            self._energy = mobius_energy(self.link, self.quad)
        return self._energy

    def _sphere_points(self, count):
        x = self.rng.normal(size=(count, 4))
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    def _ball_points(self, count, radius):
        x = self._sphere_points(count)
        return x * (radius * self.rng.random(count) ** 0.25)[:, None]

    def _off_curve_units(self, count, min_dist=1e-2):
        out = []
        probe = np.vstack([self.s3.gamma1.sample(512)[0], self.s3.gamma2.sample(512)[0]])
        while len(out) < count:
            p = self._sphere_points(1)[0]
            if np.linalg.norm(probe - p, axis=1).min() >= min_dist:
                out.append(p)
        return out

    # -- energy and linking -------------------------------------------------

    def reference_energy(self):
        return abs(self.energy - TWO_PI_SQ)

    def energy_above_linking_bound(self):
        lk = round(gauss_linking_integral(self.r3, self.quad))
        return max(0.0, 4 * math.pi * abs(lk) - self.energy)

    def linking_integral_integrality(self):
        g = gauss_linking_integral(self.r3, self.quad)
        return abs(g - round(g))

    def conformal_invariance(self):
        worst = 0.0
        for v in self._ball_points(5, 0.9):
            moved = pushforward_link(Inversion(v), self.s3)
            e0 = mobius_energy(self.s3, self.quad)
            worst = max(worst, abs(mobius_energy(moved, self.quad) - e0) / e0)
        return worst

    # -- Gauss map -----------------------------------------------------------

    def gauss_jacobian_bound(self):
        return max(jacobian_bound_excess(gauss_map_grid(lk, self.quad))
                   for lk in (self.link, self.s3))

    def gauss_equality_orthogonality(self):
        return max(near_equality_residual(gauss_map_grid(lk, self.quad))[0]
                   for lk in (self.link, self.s3))

    # -- family --------------------------------------------------------------

    def inversion_distance_identity(self):
        x, y = self._sphere_points(1000), self._sphere_points(1000)
        v = self._ball_points(1, 0.95)[0]
        return float(inversion_distance_residual(x, y, v).max())

    def dilation_distance_identity(self):
        worst = 0.0
        for v, z in family_samples(20, self.seed):
            x, y = self._sphere_points(50), self._sphere_points(50)
            worst = max(worst, float(dilation_identity_residual(x, y, family_coeffs(v, z)).max()))
        return worst

    def _scan(self):
        if not hasattr(self, "_rows"):
            points = family_samples(self.samples, self.seed)
            self._sampler, self._rows = family_scan(self.s3, points, self.family_quad)
        return self._sampler, self._rows

    def area_below_dominating_integral(self):
        _, rows = self._scan()
        return max(0.0, max((r.area_integral - r.upper_integral) / max(1.0, r.upper_integral)
                            for r in rows))

    def dominating_integral_below_energy(self):
        sampler, rows = self._scan()
        return max(0.0, max(r.upper_integral for r in rows) - sampler.energy)

    def reference_family_area(self):
        grid = FamilySampler(self.s3, self.quad).grid(family_coeffs(np.zeros(4), 0.5))
        return max(abs(grid.area_integral - TWO_PI_SQ), float(np.abs(grid.jac - 0.5).max()))

    def family_maximum_below_energy(self):
        rep = family_max_diagnostic(self.s3, self.family_quad, samples=self.samples, seed=self.seed)
        return max(0.0, rep.value - rep.energy)

    # -- support and retraction ---------------------------------------------

    def support_radius_endpoints(self):
        a = self.s3.alpha
        r = [support_radius(z, a) for z in (0.0, 0.5, 1.0)]
        err = max(abs(r[0] - math.pi), abs(r[1] - math.pi / 2), abs(r[2]))
        grid = support_radius(np.linspace(0, 1, 1001), a)
        return err + (0.0 if np.all(np.diff(grid) <= 0) else 1.0)

    def support_containment(self):
        worst = 0.0
        for p in self._off_curve_units(2):
            for z in np.arange(1, 10) / 10:
                rep = support_containment_check(self.s3, p, z, self.family_quad)
                worst = max(worst, -rep.annulus_margin, -rep.bound_margin, rep.identity_residual)
        return worst

    def retraction_endpoints(self):
        p = self._sphere_points(1)[0]
        lam = 0.6
        x = self._sphere_points(400)
        d = np.arccos(np.clip(x @ p, -1, 1))
        x = x[(d >= lam) & (d <= np.pi / 2)]
        ident = np.abs(Retraction(p, lam, 0.0)(x) - x).max()
        onto = np.abs(np.arccos(np.clip(Retraction(p, lam, 1.0)(x) @ p, -1, 1)) - lam).max()
        return float(max(ident, onto))

    def retraction_non_expanding(self):
        p = self._sphere_points(1)[0]
        r = Retraction(p, 0.5, 0.7)
        pts = []
        while len(pts) < 64:
            x = self._sphere_points(1)[0]
            if 0.5 + 1e-4 < np.arccos(np.clip(x @ p, -1, 1)) < np.pi / 2 - 1e-4:
                pts.append(x)
        return max(0.0, retract_contraction_check(r, np.array(pts)) - 1.0)

    def _retracted(self):
        if not hasattr(self, "_ret"):
            sampler = FamilySampler(self.s3, self.family_quad)
            p = self._off_curve_units(1)[0]
            self._ret = {(z, s): retracted_grid(sampler, p, z, s)
                         for z in (0.3, 0.7) for s in (0.0, 0.25, 0.5, 0.75, 1.0)}
        return self._ret

    def retracted_area_monotone(self):
        ret = self._retracted()
        worst = 0.0
        for z in (0.3, 0.7):
            areas = [ret[z, s].area_integral for s in (0.0, 0.25, 0.5, 0.75, 1.0)]
            worst = max(worst, max(np.diff(areas)))
        return worst

    @property
    def degree(self):
        return abs(round(gauss_linking_integral(self.r3, self.quad)))

    def retracted_sphere_mass(self):
        worst = 0.0
        for z in (0.3, 0.7):
            g = self._retracted()[z, 1.0]
            target = self.degree * 4 * math.pi * math.sin(g.radius) ** 2
            worst = max(worst, g.sphere_residual, abs(abs(g.signed_integral) - target))
        return worst

    # -- sweepout ------------------------------------------------------------

    def _minmax(self):
        if not hasattr(self, "_mm"):
            self._mm = MinMaxFamily(self.s3, self.family_quad)
        return self._mm

    def sweepout_ends_zero(self):
        mm = self._minmax()
        x = self.rng.random((4, 4))
        return max(mm.surface(xi, t).area for xi in x for t in (0.0, 1.0))

    def sweepout_below_energy(self):
        mm = self._minmax()
        pts = np.random.default_rng(self.seed).random((24, 5))
        return max(0.0, max(mm.surface(p[:4], p[4]).area for p in pts) - mm.energy)

    def reference_rigidity(self):
        rep = rigidity_report(self.s3, self.quad, v=np.zeros(4))
        return max(rep.max_ortho_residual, rep.chord_spread, *rep.circle_residuals)

    def checks(self):
        names = [n for n in DEFAULT_TOLERANCES if self.reference or not n.startswith("reference")]
        return names

    def run(self, tolerances=None):
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(tolerances or {})
        out = []
        for name in self.checks():
            t0 = time.perf_counter()
            value = float(getattr(self, name.replace("-", "_"))())
            out.append(CheckResult(name, value, tol[name], time.perf_counter() - t0))
        return out


def run_suite(link, quad=128, seed=0, reference=False, tolerances=None, **kw):
    unknown = set(tolerances or {}) - set(DEFAULT_TOLERANCES)
    if unknown:
        from .errors import ConfigError
        raise ConfigError(f"unknown check name(s): {', '.join(sorted(unknown))}")
    return Suite(link, quad, seed, reference, **kw).run(tolerances)


def format_table(results):
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'measured':>18}  {'tolerance':>18}  status"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.measured:>18.12g}  {r.tolerance:>18.12g}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)

import math

import numpy as np
import pytest

from linkenergy.curves import hopf_link, perturbed_hopf
from linkenergy.errors import ConfigError, SingularityError
from linkenergy.family import (FamilySampler, axis_grid, concentration_scan,
                               dilation_identity_residual, family_a, family_b, family_coeffs,
                               family_samples, family_scan, great_sphere_check, sphere_covering,
                               support_containment_check, support_radius, uniform_jacobian_bound)

from conftest import unit_vectors

TWO_PI_SQ = 2 * math.pi ** 2


def test_coefficients_limits():
    v = np.array([0.3, 0, 0, 0.4])
    assert family_b(v, 0.5) == 0
    assert family_a(v, 0.5) == 1
    zs = np.linspace(0.01, 0.99, 50)
    a = [family_a(v, z) for z in zs]
    assert all(x > 0 for x in a) and np.all(np.diff(a) > 0)
    fp = family_coeffs(np.array([0.6, 0.8, 0, 0]), 0.3)
    assert fp.boundary and fp.a == 1 and fp.c is None
    assert family_coeffs(v, 0.0).zero and family_coeffs(v, 1.0).zero
    with pytest.raises(ConfigError):
        family_coeffs(np.array([2.0, 0, 0, 0]), 0.5)
    with pytest.raises(ConfigError):
        family_coeffs(v, 1.5)


def test_dilation_identity_inside_and_on_boundary(rng):
    x, y = unit_vectors(rng, 500), unit_vectors(rng, 500)
    for v, z in family_samples(30, 4):
        assert dilation_identity_residual(x, y, family_coeffs(v, z)).max() < 1e-10
    u = unit_vectors(rng, 1)[0]
    assert dilation_identity_residual(x, y, family_coeffs(u, 0.8)).max() < 1e-10


def test_hopf_member_at_center_is_clifford_torus(hopf):
    grid = FamilySampler(hopf, 128).grid(family_coeffs(np.zeros(4), 0.5))
    assert abs(grid.area_integral - TWO_PI_SQ) < 1e-10
    assert np.abs(grid.jac - 0.5).max() < 1e-12


def test_area_chain_on_perturbed_link(perturbed_s3):
    sampler, rows = family_scan(perturbed_s3[0], family_samples(100, 2) + axis_grid(3, 3), 64)
    for r in rows:
        assert r.area_integral <= r.upper_integral * (1 + 1e-10)
        assert r.upper_integral <= sampler.energy + 1e-6


def test_area_vanishes_at_the_z_ends(hopf):
    sampler = FamilySampler(hopf, 96)
    v = np.array([0.3, 0.2, -0.1, 0.5])
    areas = [sampler.area(v, z) for z in (1e-2, 1e-3, 1e-4, 1e-5)]
    assert all(b < a / 5 for a, b in zip(areas, areas[1:]))
    assert areas[-1] < 1e-3
    assert sampler.area(v, 1 - 1e-5) < 1e-3


@pytest.mark.xfail(strict=True, reason="the area decays only like a multiple of z; at z=0.001 "
                   "it is still of order 1e-2")
def test_area_below_threshold_at_z_0_001(hopf):
    sampler = FamilySampler(hopf, 96)
    rng = np.random.default_rng(0)
    for v in unit_vectors(rng, 10) * 0.9:
        for z in (0.001, 0.999):
            assert sampler.area(v, z) < 1e-3


@pytest.mark.parametrize("link_idx", [0, 1, 2])
def test_interior_members_converge_to_boundary_members(perturbed_s3, link_idx):
    sampler = FamilySampler(perturbed_s3[link_idx], 64)
    rng = np.random.default_rng(link_idx)
    u = unit_vectors(rng, 1)[0]
    z = 0.35
    limit = sampler.area(u, z)
    gaps = [abs(sampler.area((1 - e) * u, z) - limit) for e in (1e-2, 1e-4, 1e-6)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3


def test_great_sphere_for_half(hopf):
    u = np.array([1.0, 1, 1, 1]) / 2
    rep = great_sphere_check(hopf, u)
    assert rep.max_inner < 1e-10
    assert rep.area_integral >= 4 * math.pi


def test_support_radius_endpoints_and_monotone():
    alpha = math.sqrt(2)
    assert support_radius(0.0, alpha) == math.pi
    assert support_radius(0.5, alpha) == math.pi / 2
    assert support_radius(1.0, alpha) == 0.0
    r = support_radius(np.linspace(0, 1, 1001), alpha)
    assert np.all(np.diff(r) < 0)


def test_support_containment(perturbed_s3):
    rng = np.random.default_rng(3)
    p = unit_vectors(rng, 1)[0]
    for z in (0.2, 0.5, 0.8):
        rep = support_containment_check(perturbed_s3[1], p, z, 96)
        assert rep.holds(tol=1e-10)


def test_support_check_refuses_center_on_curve(hopf):
    with pytest.raises(SingularityError):
        support_containment_check(hopf, np.array([1.0, 0, 0, 0]), 0.3)


def test_uniform_jacobian_bound(hopf):
    rep = uniform_jacobian_bound(hopf, axis_grid(3, 3), quad=32)
    assert rep.max_jac <= rep.chain_bound


def test_concentration_bounded_by_jacobian_measure(hopf):
    rep = concentration_scan(hopf, family_samples(8, 0), radii=(0.4, 0.1), quad=48)
    assert all(m <= b + 1e-12 for m, b in zip(rep.max_mass, rep.jac_measure_bound))
    assert rep.max_mass[1] <= rep.max_mass[0]


def test_sphere_covering_is_on_sphere():
    pts = sphere_covering()
    assert pts.shape == (64, 4)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1, atol=1e-14)


def test_scan_is_deterministic(hopf):
    pts = family_samples(10, 9)
    a = [r.area_integral for r in family_scan(hopf, pts, 32, workers=1)[1]]
    b = [r.area_integral for r in family_scan(hopf, pts, 32, workers=3)[1]]
    assert a == b


def test_family_needs_sphere_link():
    with pytest.raises(ConfigError):
        FamilySampler(perturbed_hopf(0, 0.1), 32)

import math

import numpy as np
import pytest

from linkenergy.curves import hopf_link, perturbed_hopf, projected_hopf_link, split_link
from linkenergy.energy import mobius_energy
from linkenergy.optimizer import (DiscreteEnergy, conformal_directions, energy_gradient,
                                  family_max_diagnostic, finite_difference_gradient, fit_circle,
                                  gauge_normalize, minimize, project_out, rigidity_report)

TWO_PI_SQ = 2 * math.pi ** 2


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_central_differences(seed):
    link = perturbed_hopf(seed, 0.3, modes=4)
    de = DiscreteEnergy(4, 48)
    x = de.pack(link)
    _, g = de.value_and_grad(x)
    fd = finite_difference_gradient(de.value, x, 1e-6)
    assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-5


def test_gradient_blind_to_translation_and_scaling():
    link = perturbed_hopf(1, 0.2, modes=6)
    g = energy_gradient(link, 64, 6)
    # simultaneous translation moves only the constant coefficient
    assert np.abs(g[:, :, 0].sum(axis=0)).max() < 1e-8
    real = np.stack([link.gamma1.to_real(), link.gamma2.to_real()])
    assert abs(np.sum(g * real)) < 1e-8


def test_projected_gradient_vanishes_at_hopf():
    link = projected_hopf_link(16)
    de = DiscreteEnergy(16, 96)
    _, g = de.value_and_grad(de.pack(link))
    assert np.linalg.norm(project_out(g, conformal_directions(link, 16))) < 1e-5


def test_conformal_directions_are_orthonormal():
    b = conformal_directions(perturbed_hopf(0, 0.1, modes=8), 8)
    assert b.shape[0] == 10
    np.testing.assert_allclose(b @ b.T, np.eye(10), atol=1e-12)


def test_gauge_normalize():
    link = perturbed_hopf(2, 0.2)
    n1 = gauge_normalize(link)
    np.testing.assert_allclose(gauge_normalize(n1).gamma1.coeffs, n1.gamma1.coeffs, atol=1e-12)
    moved = link.transformed(3.0 * np.eye(3), np.array([1.0, -2.0, 0.5]))
    n2 = gauge_normalize(moved)
    np.testing.assert_allclose(n2.gamma1.coeffs, n1.gamma1.coeffs, atol=1e-12)
    assert abs(mobius_energy(n2) - mobius_energy(link)) < 1e-10


def test_hopf_is_stationary():
    res = minimize(projected_hopf_link(16), max_iter=100, tol=0.0)
    energies = [r.energy for r in res.trace]
    assert max(energies) - min(energies) <= 1e-8


def test_split_link_has_no_floor():
    res = minimize(split_link(2.0), max_iter=30, tol=0.0, quad=48, modes=4)
    energies = [r.energy for r in res.trace]
    assert all(b < a for a, b in zip(energies, energies[1:]))
    assert energies[-1] < 0.7 * energies[0]
    assert all(r.lk in (None, 0) for r in res.trace)


def test_armijo_acceptance():
    res = minimize(perturbed_hopf(4, 0.1), max_iter=40, tol=0.0)
    for prev, cur in zip(res.trace, res.trace[1:]):
        # the raw gradient is at least as long as the projected one recorded
        assert cur.energy <= prev.energy - 1e-4 * cur.step * prev.gradnorm ** 2 + 1e-12
        assert cur.alpha >= 1e-3
        assert cur.step > 0


def test_rigidity_exact_hopf(hopf):
    rep = rigidity_report(hopf, v=np.zeros(4))
    assert rep.max_ortho_residual <= 1e-10
    assert rep.chord_spread <= 1e-10
    assert max(rep.circle_residuals) <= 1e-10


def test_rigidity_negative_control():
    rep = rigidity_report(perturbed_hopf(0, 0.3))
    assert max(rep.max_ortho_residual, rep.chord_spread, *rep.circle_residuals) > 1e-2


def test_family_maximum_is_strict_off_minimizer():
    rep = family_max_diagnostic(perturbed_hopf(1, 0.1, chart="S3"), samples=64)
    assert rep.value <= rep.energy + 1e-6
    assert rep.energy - rep.value > 1e-3


def test_fit_circle_recovers_radius(rng):
    s = rng.uniform(0, 2 * np.pi, 50)
    pts = np.stack([2 + 3 * np.cos(s), 3 * np.sin(s), 0 * s, 0 * s + 1], -1)
    center, radius, dev = fit_circle(pts)
    assert abs(radius - 3) < 1e-12 and dev < 1e-12
    np.testing.assert_allclose(center, [2, 0, 0, 1], atol=1e-12)


def test_line_search_collapse_is_reported():
    res = minimize(perturbed_hopf(0, 0.1), max_iter=10, alpha_floor=100.0, quad=32, modes=4)
    assert res.stalled and not res.converged
    assert res.iterations == 0 and len(res.trace) == 1

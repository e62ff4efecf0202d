import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from linkenergy.curves import (Curve, Link, circle, curve_from_dict, curve_length, curve_to_dict,
                               hopf_link, inverse_stereographic, link_from_dict, link_to_dict,
                               load_link, min_separation, named_link, perturbed_hopf,
                               project_link_to_r3, resample_arclength, split_link, stereographic,
                               stereographic_lift, torus_link_2_4, uniform_nodes)
from linkenergy.errors import ConfigError, DegenerateCurveError, IntersectingLinkError


def ellipse(a, b, modes=4):
    return Curve.from_function(lambda s: np.stack([a * np.cos(s), b * np.sin(s), 0 * s], -1), modes)


def test_circle_evaluates_exactly():
    c = circle(np.zeros(3), [1, 0, 0], [0, 1, 0], radius=2.0)
    s = np.linspace(0, 6, 7)
    np.testing.assert_allclose(c(s), np.stack([2 * np.cos(s), 2 * np.sin(s), 0 * s], -1), atol=1e-14)
    np.testing.assert_allclose(c.derivative(s), np.stack([-2 * np.sin(s), 2 * np.cos(s), 0 * s], -1),
                               atol=1e-14)


def test_derivative_matches_central_differences(rng):
    c = perturbed_hopf(4, 0.3).gamma1
    s = rng.uniform(0, 2 * np.pi, 20)
    h = 1e-6
    fd = (c(s + h) - c(s - h)) / (2 * h)
    np.testing.assert_allclose(c.derivative(s), fd, atol=1e-8)
    fd2 = (c.derivative(s + h) - c.derivative(s - h)) / (2 * h)
    np.testing.assert_allclose(c.derivative(s, 2), fd2, atol=1e-7)


def test_real_form_round_trip(rng):
    c = perturbed_hopf(5, 0.2).gamma2
    back = Curve.from_real(c.to_real())
    np.testing.assert_allclose(back.coeffs, c.coeffs, atol=1e-15)


def test_ellipse_length_against_adaptive_quadrature():
    a, b = 3.0, 1.0
    exact, _ = integrate.quad(lambda s: np.hypot(a * np.sin(s), b * np.cos(s)), 0, 2 * np.pi,
                              epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(curve_length(ellipse(a, b), 256) - exact) < 1e-12


def test_arclength_resampling_gives_constant_speed():
    c = resample_arclength(ellipse(2.0, 1.0, 1), 64)
    speed = c.speed(uniform_nodes(512))
    assert np.ptp(speed) / speed.mean() < 1e-8


def test_degenerate_curve_rejected():
    const = Curve(np.zeros((3, 3), dtype=complex))
    with pytest.raises(DegenerateCurveError):
        resample_arclength(const)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_stereographic_round_trip(x):
    x = np.array(x)
    y = inverse_stereographic(x)
    assert abs(np.linalg.norm(y) - 1) < 1e-12
    np.testing.assert_allclose(stereographic(y), x, atol=1e-9)


def test_lift_lands_on_sphere():
    lifted = stereographic_lift(perturbed_hopf(0, 0.1).gamma1)
    s = uniform_nodes(777)
    assert np.abs(np.linalg.norm(lifted(s), axis=1) - 1).max() < 1e-11


def test_min_separation_of_coaxial_circles():
    assert abs(split_link(10.0).alpha - 10.0) < 1e-12


def test_hopf_separation_is_sqrt2():
    assert abs(hopf_link().alpha - np.sqrt(2)) < 1e-12


def test_intersecting_link_rejected():
    e = np.eye(3)
    c1 = circle(np.zeros(3), e[0], e[1])
    c2 = circle(np.array([2.0, 0, 0]), e[0], e[2])
    with pytest.raises(IntersectingLinkError):
        min_separation(Link(c1, c2))


def test_named_links():
    assert named_link("hopf").dim == 4
    assert named_link("hopf-r3").dim == 3
    assert named_link("torus-2-4").dim == 3
    with pytest.raises(ConfigError):
        named_link("perturbed-hopf")
    with pytest.raises(ConfigError):
        named_link("trefoil")


def test_perturbed_links_are_reproducible():
    a, b = perturbed_hopf(7, 0.1), perturbed_hopf(7, 0.1)
    np.testing.assert_array_equal(a.gamma1.coeffs, b.gamma1.coeffs)
    assert not np.allclose(a.gamma1.coeffs, perturbed_hopf(8, 0.1).gamma1.coeffs)


def test_json_round_trip(tmp_path):
    link = torus_link_2_4()
    path = tmp_path / "link.json"
    path.write_text(json.dumps(link_to_dict(link)))
    back = load_link(path)
    np.testing.assert_allclose(back.gamma1.coeffs, link.gamma1.coeffs)


def test_samples_record_is_fitted():
    s = uniform_nodes(64)
    rec = {"dim": 3, "samples": np.stack([np.cos(s), np.sin(s), 0 * s], -1).tolist(), "modes": 8}
    c = curve_from_dict(rec)
    assert abs(curve_length(c) - 2 * np.pi) < 1e-8


@pytest.mark.parametrize("text", ["{", "[1, 2]", '{"gamma1": {}}'])
def test_malformed_link_files(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_link(path)


def test_declared_dim_must_match():
    rec = curve_to_dict(circle(np.zeros(3), [1, 0, 0], [0, 1, 0]))
    rec["dim"] = 4
    with pytest.raises(ConfigError):
        curve_from_dict(rec)


def test_projection_chart_keeps_hopf_round():
    r3 = project_link_to_r3(hopf_link())
    assert r3.dim == 3
    with pytest.raises(ConfigError):
        link_from_dict({"gamma1": 1})


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.floats(0.05, 0.35))
def test_lift_handles_uneven_speed(seed, amp):
    lifted = stereographic_lift(perturbed_hopf(seed, amp).gamma1)
    s = uniform_nodes(501)
    assert np.abs(np.linalg.norm(lifted(s), axis=1) - 1).max() < 1e-10
    speed = lifted.speed(s)
    assert np.ptp(speed) / speed.mean() < 1e-8

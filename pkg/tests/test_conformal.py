import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linkenergy.conformal import (BoundaryMap, Composition, Dilation, Inversion,
                                  boundary_map_plane_check, derivative_bound_check, image_sphere,
                                  inversion_distance_residual, map_from_dict, pushforward_curve,
                                  pushforward_link)
from linkenergy.curves import circle, hopf_link, perturbed_hopf, uniform_nodes
from linkenergy.energy import mobius_energy
from linkenergy.errors import ConfigError, NearBoundaryError, SingularityError
from linkenergy.optimizer import fit_circle

from conftest import unit_vectors

MAPS = [
    Inversion(np.array([0.1, -0.2, 0.3, 0.05])),
    Dilation(np.array([0.5, 0, 0, 1.0]), 2.5),
    BoundaryMap(np.array([0.0, 0.6, 0.0, 0.8]), 0.3),
    Composition((Inversion(np.array([0.2, 0, 0, 0])), Dilation(np.zeros(4), 0.5))),
]


def test_inversion_is_an_involution(rng):
    v = np.array([0.3, 0.1, -0.2, 0.4])
    x = rng.normal(size=(50, 4))
    F = Inversion(v)
    np.testing.assert_allclose(F(F(x) + v), x - v, rtol=1e-12)


@pytest.mark.parametrize("cmap", MAPS, ids=["inversion", "dilation", "boundary", "composition"])
def test_differential_matches_differences(cmap, rng):
    x = rng.normal(size=(20, 4)) + 2.0
    h = 1e-5
    J = cmap.differential(x)
    for j, e in enumerate(np.eye(4)):
        fd = (cmap(x + h * e) - cmap(x - h * e)) / (2 * h)
        np.testing.assert_allclose(J[..., j], fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("cmap", MAPS, ids=["inversion", "dilation", "boundary", "composition"])
def test_map_json_round_trip(cmap, rng):
    back = map_from_dict(json.loads(json.dumps(cmap.to_dict())))
    x = rng.normal(size=(5, 4)) + 2.0
    np.testing.assert_allclose(back(x), cmap(x))


def test_unknown_map_kind():
    with pytest.raises(ConfigError):
        map_from_dict({"kind": "shear"})
    with pytest.raises(ConfigError):
        map_from_dict({"kind": "inversion"})


def test_inversion_center_raises():
    with pytest.raises(SingularityError):
        Inversion(np.zeros(4))(np.zeros(4))


def test_inverted_sphere_center_and_radius(rng):
    v = np.array([0.2, -0.4, 0.1, 0.3])
    center, radius = image_sphere(v)
    img = Inversion(v)(unit_vectors(rng, 200))
    np.testing.assert_allclose(np.linalg.norm(img - center, axis=1), radius, rtol=1e-12)
    with pytest.raises(NearBoundaryError):
        image_sphere(np.array([1.0, 0, 0, 0]))


def test_boundary_map_lands_in_hyperplane(rng):
    v = unit_vectors(rng, 1)[0]
    x = unit_vectors(rng, 300)
    assert np.abs(boundary_map_plane_check(v, 0.7, x)).max() < 1e-10
    with pytest.raises(ConfigError):
        BoundaryMap(2 * v, 0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_inversion_distance_identity(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 20, 4))
    v = rng.normal(size=4)
    assert inversion_distance_residual(x, y, v).max() < 1e-10


def test_circles_map_to_circles():
    c = circle(np.array([0.0, 0, 0, 0.5]), [1, 0, 0, 0], [0, 0.6, 0.8, 0], radius=1.3)
    img = pushforward_curve(Inversion(np.array([0.3, 0.1, 0, 0.2])), c)
    _, radius, dev = fit_circle(img(uniform_nodes(400)))
    assert dev / radius < 1e-6


def test_energy_is_invariant(rng):
    link = perturbed_hopf(2, 0.1, chart="S3")
    e0 = mobius_energy(link)
    for v in unit_vectors(rng, 3) * 0.7:
        assert abs(mobius_energy(pushforward_link(Inversion(v), link)) - e0) / e0 < 1e-9


def test_pushforward_refuses_center_on_curve(hopf):
    with pytest.raises(SingularityError):
        pushforward_curve(Inversion(np.array([1.0, 0, 0, 0])), hopf.gamma1)


def test_inverted_speed_bound(rng):
    c = perturbed_hopf(1, 0.1, chart="S3").gamma1
    for v in unit_vectors(rng, 5):
        rep = derivative_bound_check(c, v)
        assert rep.holds

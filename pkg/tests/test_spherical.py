"""Support sets on the first-contact sphere and spherical conflict sets."""

import math

import numpy as np
import pytest

from confset import (ConeApprox, Point, SceneError, Site, annular_shadow,
                     geodesic_distance, hausdorff, icosphere, label_directions,
                     make_scene, min_distance_profile, spherical_conflict,
                     support_sets)
from confset.scenes import (circle_points_scene, two_point_scene,
                            walls_and_poles_scene)

from oracles import great_circle_pair, s1_conflict_angles


def test_min_distance_profile_two_achievers(walls_poles, origin3):
    r0, achieving = min_distance_profile(walls_poles, origin3)
    assert r0 == pytest.approx(1.0, abs=1e-12)
    assert achieving == [0, 1]


def test_min_distance_profile_inside_site():
    sc = walls_and_poles_scene()
    with pytest.raises(SceneError, match="inside a site"):
        min_distance_profile(sc, np.array([1.0, 0.0, 0.0]))


def test_supports_of_demo_scene_are_four_points(walls_poles, origin3):
    sup = support_sets(walls_poles, origin3)
    assert sup.r0 == pytest.approx(1.0)
    walls = sup.sample_points(0)
    poles = sup.sample_points(1)
    # planes touch the sphere at the poles of the x3 axis, the point pair
    # on the x1 axis
    assert sorted(np.round(walls[:, 2], 12).tolist()) == [-1.0, 1.0]
    assert np.max(np.abs(walls[:, :2])) < 1e-9
    assert sorted(np.round(poles[:, 0], 12).tolist()) == [-1.0, 1.0]
    assert np.max(np.abs(poles[:, 1:])) < 1e-9


def test_geodesic_distance_checks_units():
    assert geodesic_distance((1.0, 0.0), (0.0, 1.0)) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError, match="unit"):
        geodesic_distance((2.0, 0.0), (0.0, 1.0))


def test_icosphere_counts_and_norms():
    V, F = icosphere(3)
    assert V.shape == (642, 3)
    assert F.shape == (1280, 3)
    assert np.max(np.abs(np.linalg.norm(V, axis=1) - 1.0)) < 1e-12
    assert F.min() >= 0 and F.max() < 642
    # deterministic (cached) construction
    V2, _ = icosphere(3)
    assert V2 is V or np.array_equal(V2, V)


def test_circle_sites_conflict_matches_gap_midpoints():
    sc = circle_points_scene(5, seed=7)
    sup = support_sets(sc, np.zeros(2))
    sph = spherical_conflict(sup)
    site_ang = [math.atan2(s.primitives[0].coords[1], s.primitives[0].coords[0])
                for s in sc.sites]
    want = s1_conflict_angles(site_ang)
    assert sph.dirs.shape[0] == want.shape[0] == 5
    assert hausdorff(sph.dirs, want) < 1e-6
    assert sph.arcs.shape[0] == 0
    assert np.max(sph.residuals) < 1e-6


def test_s2_conflict_is_the_great_circle_pair(walls_poles, origin3):
    sup = support_sets(walls_poles, origin3)
    sph = spherical_conflict(sup, resolution=5)
    want = great_circle_pair(4096)
    assert hausdorff(sph.dirs, want) < 0.05
    assert sph.arcs.shape[0] > 0
    assert np.max(sph.residuals) < 1e-6
    assert sph.excluded_site_ids == []


def test_s2_triple_junction():
    e = np.eye(3)
    sc = make_scene(3, [Site(f"e{i}", (Point(e[i]),)) for i in range(3)])
    sup = support_sets(sc, np.zeros(3))
    sph = spherical_conflict(sup, resolution=4)
    assert sph.junctions.shape[0] == 2
    j = sph.dirs[sph.junctions]
    target = np.ones(3) / math.sqrt(3.0)
    d = np.linalg.norm(np.sort(j, axis=0) - np.sort(np.stack([target, -target]), axis=0))
    assert d < 1e-6


def test_conflict_needs_two_nonempty_supports():
    sc = two_point_scene()
    sup = support_sets(sc, np.array([0.5, 0.0]))
    assert sup.nonempty() == [0]
    with pytest.raises(SceneError, match="two nonempty"):
        spherical_conflict(sup)


def test_far_site_is_excluded():
    sites = [
        Site("near_a", (Point(np.array([1.0, 0.0])),)),
        Site("near_b", (Point(np.array([-1.0, 0.0])),)),
        Site("far", (Point(np.array([0.0, 5.0])),)),
    ]
    sc = make_scene(2, sites)
    sup = support_sets(sc, np.zeros(2))
    sph = spherical_conflict(sup)
    assert sph.excluded_site_ids == ["far"]
    ang = np.mod(np.arctan2(sph.dirs[:, 1], sph.dirs[:, 0]), 2 * math.pi)
    assert np.allclose(np.sort(ang), [math.pi / 2, 3 * math.pi / 2], atol=1e-7)


def test_label_directions_margins(walls_poles, origin3):
    sup = support_sets(walls_poles, origin3)
    U, _ = icosphere(2)
    lab, margin = label_directions(sup, U)
    assert np.all(margin >= 0.0)
    G = sup.geodesic_matrix(U)
    assert np.array_equal(lab, np.argmin(G, axis=1))


def test_cone_points_and_ray_distance():
    dirs = np.array([[1.0, 0.0], [0.0, 1.0]])
    c = ConeApprox(apex=np.array([1.0, 2.0]), dirs=dirs)
    pts = c.points([0.5, 2.0])
    assert pts.shape == (4, 2)
    assert np.max(c.ray_distance(pts)) < 1e-12
    assert c.ray_distance(np.array([[0.0, 2.0]]))[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        c.points([0.0])


def test_annular_shadow_validation_and_labels():
    sc = circle_points_scene(4, seed=3)
    sup = support_sets(sc, np.zeros(2))
    with pytest.raises(SceneError, match="positive"):
        annular_shadow(sup, 0.0)
    shadow = annular_shadow(sup, 0.3)
    assert shadow.dimension == 2
    assert len(shadow.sites) == 4
    rng = np.random.default_rng(0)
    u = rng.normal(size=(128, 2))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    probes = (sup.r0 / 3.0) * rng.uniform(0.1, 1.0, size=(128, 1)) * u
    lab_sh = np.argmin(shadow.distance_matrix(probes), axis=1)
    lab_geo, _ = label_directions(sup, probes / np.linalg.norm(probes, axis=1, keepdims=True))
    assert np.array_equal(lab_sh, lab_geo)

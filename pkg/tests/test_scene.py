"""Sites, scenes, distances, clipping and JSON round-trips."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confset import (Ball, Box, Hyperplane, Point, PointSet, SceneError,
                     Segment, Site, Sphere, clip_scene, load_scene,
                     make_scene, nearest_point, parse_scene, scene_dumps,
                     site_pair_distance)

finite = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)


def _pts(*rows):
    return np.array(rows, dtype=float)


# ---------------------------------------------------------------------------
# primitive distances


def test_point_distance_exact():
    p = Point(np.array([1.0, 2.0]))
    d = p.distance(_pts([4.0, 6.0]))
    assert d[0] == pytest.approx(5.0, abs=1e-15)


def test_pointset_tie_breaks_to_lexicographic_smallest():
    ps = PointSet(_pts([1.0, 0.0], [-1.0, 0.0]))
    y = ps.nearest(np.zeros((1, 2)))
    assert np.allclose(y[0], [-1.0, 0.0])


def test_hyperplane_signed_offset():
    h = Hyperplane(np.array([0.0, 0.0, 1.0]), -1.0)  # plane z = -1
    d = h.distance(_pts([0.0, 0.0, 0.5]))
    assert d[0] == pytest.approx(1.5, abs=1e-15)
    assert np.allclose(h.nearest(_pts([3.0, 4.0, 0.5]))[0], [3.0, 4.0, -1.0])


def test_sphere_inside_and_outside():
    s = Sphere(np.zeros(3), 2.0)
    d = s.distance(_pts([0.0, 0.0, 0.5], [0.0, 0.0, 3.0]))
    assert d[0] == pytest.approx(1.5)
    assert d[1] == pytest.approx(1.0)


def test_ball_zero_inside():
    b = Ball(np.zeros(2), 1.0)
    d = b.distance(_pts([0.3, 0.0], [2.0, 0.0]))
    assert d[0] == 0.0
    assert d[1] == pytest.approx(1.0)


@given(st.lists(finite, min_size=2, max_size=2),
       st.lists(finite, min_size=2, max_size=2))
@settings(max_examples=60, deadline=None)
def test_segment_distance_matches_dense_sampling(a, b):
    a = np.array(a)
    b = np.array(b)
    if np.linalg.norm(b - a) < 1e-6:
        return
    seg = Segment(a, b)
    x = np.array([1.7, -2.3])
    t = np.linspace(0.0, 1.0, 20001)[:, None]
    dense = np.linalg.norm(a + t * (b - a) - x, axis=1).min()
    assert seg.distance(x[None, :])[0] == pytest.approx(dense, abs=1e-6)


def test_box_euclidean_and_taxicab():
    box = Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    x = _pts([2.0, 2.0])
    assert box.distance(x)[0] == pytest.approx(math.sqrt(2.0))
    assert box.distance_l1(x)[0] == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# scenes and validation


def test_make_scene_rejects_overlapping_sites():
    with pytest.raises(SceneError, match="disjoint|distance"):
        make_scene(2, [
            Site("a", (Ball(np.zeros(2), 1.0),)),
            Site("b", (Ball(np.array([1.0, 0.0]), 0.5),)),
        ])


def test_make_scene_rejects_duplicate_ids():
    with pytest.raises(SceneError):
        make_scene(2, [
            Site("a", (Point(np.zeros(2)),)),
            Site("a", (Point(np.array([1.0, 1.0])),)),
        ])


def test_taxicab_rejects_curved_primitives():
    s = make_scene(2, [
        Site("a", (Ball(np.zeros(2), 0.2),)),
        Site("b", (Point(np.array([2.0, 2.0])),)),
    ])
    s = make_scene(2, s.sites, metric="taxicab", check=False)
    with pytest.raises(SceneError, match="taxicab"):
        s.distance_matrix(_pts([0.0, 1.0]))


def test_distance_matrix_shape_and_order():
    s = make_scene(2, [
        Site("right", (Point(np.array([1.0, 0.0])),)),
        Site("left", (Point(np.array([-1.0, 0.0])),)),
    ])
    D = s.distance_matrix(_pts([0.9, 0.0], [-0.9, 0.0]))
    assert D.shape == (2, 2)
    assert D[0, 0] < D[0, 1] and D[1, 1] < D[1, 0]


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_pairwise_site_distance_vs_sampling(seed):
    rng = np.random.default_rng(seed)
    a = Ball(rng.uniform(-2, 2, 2), float(rng.uniform(0.1, 0.5)))
    c0 = rng.uniform(-2, 2, 2)
    c1 = c0 + rng.uniform(-1, 1, 2)
    if np.linalg.norm(c1 - c0) < 1e-3:
        c1 = c0 + np.array([0.5, 0.0])
    b = Segment(c0, c1)
    sa, sb = Site("a", (a,)), Site("b", (b,))
    d = site_pair_distance(sa, sb)
    t = np.linspace(0, 1, 4001)[:, None]
    pts = c0 + t * (c1 - c0)
    dense = float(a.distance(pts).min())
    assert d == pytest.approx(dense, abs=2e-6)
    assert d <= dense + 1e-12


# ---------------------------------------------------------------------------
# clipping


def test_clip_preserves_near_distances_exactly():
    rng = np.random.default_rng(3)
    s = make_scene(2, [
        Site("a", (Point(np.array([1.0, 0.2])),)),
        Site("b", (Segment(np.array([-1.5, -0.5]), np.array([-0.5, 1.0])),)),
        Site("c", (Ball(np.array([0.3, -1.4]), 0.3),)),
    ])
    x0 = np.zeros(2)
    r0 = float(s.distance_matrix(x0[None, :])[0].min())
    clipped = clip_scene(s, x0, r0 + 0.5)
    pts = x0 + rng.uniform(-0.15, 0.15, size=(64, 2))
    D = s.distance_matrix(pts)
    Dc = clipped.distance_matrix(pts)
    # winners keep their distance; losers may only move farther away
    win = np.argmin(D, axis=1)
    assert np.allclose(Dc[np.arange(64), win], D[np.arange(64), win],
                       atol=1e-9)
    assert np.all(Dc >= D - 1e-9)


def test_clip_requires_euclidean():
    s = make_scene(2, [
        Site("a", (Point(np.zeros(2)),)),
        Site("b", (Point(np.array([1.0, 1.0])),)),
    ], metric="taxicab")
    with pytest.raises(SceneError):
        clip_scene(s, np.zeros(2), 1.0)


# ---------------------------------------------------------------------------
# JSON round-trip


def test_scene_json_roundtrip():
    s = make_scene(3, [
        Site("walls", (Hyperplane(np.array([0.0, 0.0, 1.0]), 1.0),
                       Hyperplane(np.array([0.0, 0.0, 1.0]), -1.0))),
        Site("poles", (PointSet(_pts([1.0, 0, 0], [-1.0, 0, 0])),)),
        Site("blob", (Ball(np.array([4.0, 4.0, 0.0]), 0.5),
                      Segment(np.array([4.0, 4.0, 2.0]),
                              np.array([5.0, 4.0, 2.0])))),
    ])
    text = scene_dumps(s)
    s2 = parse_scene(text)
    assert s2.site_ids() == s.site_ids()
    assert s2.dimension == 3
    pts = np.random.default_rng(0).uniform(-2, 2, size=(32, 3))
    assert np.allclose(s.distance_matrix(pts), s2.distance_matrix(pts),
                       atol=0.0)


def test_parse_scene_reports_syntax_position():
    with pytest.raises(SceneError, match=r"line \d+"):
        parse_scene('{"dimension": 2,\n  "sites": [}')


def test_parse_scene_reports_offending_pair():
    text = json.dumps({
        "dimension": 2,
        "sites": [
            {"id": "a", "primitives": [
                {"type": "ball", "center": [0, 0], "radius": 1.0}]},
            {"id": "b", "primitives": [
                {"type": "point", "point": [1.0, 0.0]}]},
        ],
    })
    with pytest.raises(SceneError, match="a.*b|b.*a"):
        parse_scene(text)


def test_load_scene_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_scene(str(tmp_path / "nope.json"))

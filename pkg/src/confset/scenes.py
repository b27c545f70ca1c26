"""Built-in scenes: small canonical configurations used by the demos,
the CLI and the test-bench.

Random builders are deterministic in their seed and use rejection
sampling to keep configurations well-separated: junction branch angles
stay above the angular clustering linkage, and spectator sites stay far
enough from a probed junction that local extraction windows only ever
see the three relevant territories.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .conflict import ConflictComplex, Window
from .scene import (Ball, Box, Hyperplane, Point, PointSet, Scene, SceneError,
                    Segment, Site, make_scene)

__all__ = [
    "two_point_scene",
    "equilateral_scene",
    "circle_points_scene",
    "walls_and_poles_scene",
    "taxicab_pair_scene",
    "segment_point_scene",
    "ball_wall_scene",
    "random_junction_scene",
    "random_mixed_scene",
    "shadow_invariant_scene",
    "transversal_planes_complex",
    "DemoEntry",
    "DEMO_SCENES",
]


def two_point_scene() -> Scene:
    """Two point sites at (+1, 0) and (-1, 0); conflict set is x1 = 0."""
    return make_scene(2, [
        Site("right", (Point(np.array([1.0, 0.0])),)),
        Site("left", (Point(np.array([-1.0, 0.0])),)),
    ])


def equilateral_scene() -> Scene:
    """Three point sites on the unit circle at 90, 210 and 330 degrees.

    The circumcenter (the origin) is a junction with branch angles of
    exactly 120 degrees.
    """
    sites = []
    for name, deg in (("top", 90.0), ("southwest", 210.0),
                      ("southeast", 330.0)):
        a = math.radians(deg)
        sites.append(Site(name, (Point(np.array([math.cos(a),
                                                 math.sin(a)])),)))
    return make_scene(2, sites)


def circle_points_scene(k: int = 3, seed: int = 0,
                        min_gap_deg: float = 25.0) -> Scene:
    """k point sites on the unit circle with a minimum angular gap.

    All pairwise bisectors pass through the origin, so the conflict set is
    a star of k rays there and its radial projection equals the circular
    conflict set of the site directions.
    """
    if k < 2:
        raise SceneError("need at least two sites on the circle")
    rng = np.random.default_rng(seed)
    min_gap = math.radians(min_gap_deg)
    for _ in range(10000):
        ang = np.sort(rng.uniform(0.0, 2 * math.pi, size=k))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
        if np.min(gaps) >= min_gap:
            break
    else:
        raise SceneError(f"could not place {k} sites with {min_gap_deg} deg gaps")
    sites = [Site(f"p{i}", (Point(np.array([math.cos(a), math.sin(a)])),))
             for i, a in enumerate(ang)]
    return make_scene(2, sites)


def walls_and_poles_scene() -> Scene:
    """Slab walls x3 = +/-1 against two poles (+/-1, 0, 0).

    The conflict set is a pair of lens-shaped revolution surfaces meeting
    at the origin; its tangent cone there is the plane pair x3 = +/-x1,
    while the germ itself is two sheets touching at a point.
    """
    n = np.array([0.0, 0.0, 1.0])
    return make_scene(3, [
        Site("walls", (Hyperplane(n, 1.0), Hyperplane(n, -1.0))),
        Site("poles", (PointSet(np.array([[1.0, 0.0, 0.0],
                                          [-1.0, 0.0, 0.0]])),)),
    ])


def taxicab_pair_scene() -> Scene:
    """Points (0,0) and (1,1) under the taxicab metric.

    The equidistant locus contains two full-dimensional quadrants, the
    standard counterexample to codimension-1 conflict sets in L1.
    """
    return make_scene(2, [
        Site("origin", (Point(np.array([0.0, 0.0])),)),
        Site("corner", (Point(np.array([1.0, 1.0])),)),
    ], metric="taxicab")


def segment_point_scene() -> Scene:
    """A segment site against a point site (parabola-like bisector)."""
    return make_scene(2, [
        Site("bar", (Segment(np.array([-1.0, -0.8]), np.array([1.0, -0.8])),)),
        Site("dot", (Point(np.array([0.0, 0.9])),)),
    ])


def ball_wall_scene() -> Scene:
    """A solid ball against a wall plane in 3D."""
    return make_scene(3, [
        Site("ball", (Ball(np.array([0.0, 0.0, 0.8]), 0.35),)),
        Site("wall", (Hyperplane(np.array([0.0, 0.0, 1.0]), -1.0),)),
    ])


def _circumcenter(a, b, c):
    """Circumcenter of a plane triangle, or None when degenerate."""
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1])
               + c[0] * (a[1] - b[1]))
    if abs(d) < 1e-12:
        return None
    ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1])
          + (c @ c) * (a[1] - b[1])) / d
    uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0])
          + (c @ c) * (b[0] - a[0])) / d
    return np.array([ux, uy])


def junction_branch_directions(pts: np.ndarray) -> np.ndarray:
    """Closed-form branch directions of the conflict set at the
    circumcenter of three point sites.

    For the pair (i, j) the branch leaves along the bisector direction t
    with t . (p_i - p_k) >= 0, i.e. into the half-plane where the third
    site k loses.  Returns three unit vectors sorted by angle.
    """
    c = _circumcenter(pts[0], pts[1], pts[2])
    if c is None:
        raise SceneError("degenerate (collinear) triple")
    dirs = []
    for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        e = pts[j] - pts[i]
        t = np.array([-e[1], e[0]])
        t = t / np.linalg.norm(t)
        if np.dot(t, pts[i] - pts[k]) < 0:
            t = -t
        dirs.append(t)
    dirs = np.array(dirs)
    order = np.argsort(np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]),
                              2 * math.pi), kind="stable")
    return dirs[order]


@dataclass(frozen=True)
class JunctionScene:
    """A random point scene together with one certified triple junction."""

    scene: Scene
    junction: np.ndarray       # circumcenter of the trio
    trio: Tuple[int, int, int]  # site indices meeting at the junction
    branch_dirs: np.ndarray    # closed-form branch directions (3, 2)


def random_junction_scene(seed: int) -> JunctionScene:
    """3 to 5 random point sites with a clean triple junction.

    Rejection rules: pairwise separation >= 0.55; the junction's
    circumradius in [0.35, 1.3]; branch angles >= 18 degrees (above the
    clustering linkage); spectator sites at least 0.65 beyond the
    circumradius so windows of half-width 0.18 around the junction only
    see the trio's territories.
    """
    rng = np.random.default_rng(seed)
    n = 3 + int(rng.integers(0, 3))
    for _ in range(20000):
        pts = rng.uniform(-0.9, 0.9, size=(n, 2))
        dd = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        dd[np.arange(n), np.arange(n)] = np.inf
        if dd.min() < 0.55:
            continue
        found = None
        for trio in itertools.combinations(range(n), 3):
            c = _circumcenter(*pts[list(trio)])
            if c is None:
                continue
            R = float(np.linalg.norm(pts[trio[0]] - c))
            if not (0.35 <= R <= 1.3):
                continue
            others = [m for m in range(n) if m not in trio]
            if any(np.linalg.norm(pts[m] - c) < R + 0.65 for m in others):
                continue
            dirs = junction_branch_directions(pts[list(trio)])
            ang = np.sort(np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]),
                                 2 * math.pi))
            gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
            if np.min(gaps) < math.radians(18.0):
                continue
            found = (c, trio, dirs)
            break
        if found is None:
            continue
        c, trio, dirs = found
        sites = [Site(f"p{i}", (Point(pts[i]),)) for i in range(n)]
        return JunctionScene(scene=make_scene(2, sites), junction=c,
                             trio=trio, branch_dirs=dirs)
    raise SceneError(f"no admissible junction configuration for seed {seed}")


def random_mixed_scene(seed: int, dimension: int = 2):
    """A random disjoint scene mixing primitive kinds, plus a probe point.

    Returns (scene, x0) with x0 uniform in the core of the window and
    outside every site.
    """
    rng = np.random.default_rng(seed)
    for _ in range(10000):
        sites = []
        n = 3 + int(rng.integers(0, 2))
        for i in range(n):
            kind = int(rng.integers(0, 3))
            c = rng.uniform(-1.2, 1.2, size=dimension)
            if kind == 0:
                prim = Point(c)
            elif kind == 1:
                prim = Ball(c, float(rng.uniform(0.1, 0.25)))
            else:
                e = c + rng.uniform(-0.5, 0.5, size=dimension)
                if np.linalg.norm(e - c) < 1e-3:
                    e = c + 0.3
                prim = Segment(c, e)
            sites.append(Site(f"s{i}", (prim,)))
        try:
            scene = make_scene(dimension, sites)
        except SceneError:
            continue
        for _ in range(100):
            x0 = rng.uniform(-1.0, 1.0, size=dimension)
            d = scene.distance_matrix(x0[None, :])[0]
            if d.min() > 0.05:
                return scene, x0
    raise SceneError(f"no admissible mixed scene for seed {seed}")


def shadow_invariant_scene(seed: int, dimension: int = 3):
    """Point-cloud sites all lying on a common sphere around a base point.

    Such a scene coincides with its own support configuration, so the
    annular shadow reproduces it exactly (up to rounding): the natural
    setting for shadow-vs-original label comparisons.

    Returns (scene, x0).
    """
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-0.5, 0.5, size=dimension)
    r0 = float(rng.uniform(0.8, 1.4))
    k = 2 + int(rng.integers(0, 3))
    for _ in range(1000):
        sites = []
        allpts = []
        for i in range(k):
            m = 1 + int(rng.integers(0, 4))
            u = rng.normal(size=(m, dimension))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            pts = x0 + r0 * u
            sites.append(Site(f"cloud{i}", (PointSet(pts),)))
            allpts.append(pts)
        P = np.concatenate(allpts)
        dd = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
        dd[np.arange(len(P)), np.arange(len(P))] = np.inf
        if dd.min() < 0.05:
            continue
        return make_scene(dimension, sites), x0
    raise SceneError(f"no admissible shadow scene for seed {seed}")


def transversal_planes_complex(half: float = 0.45,
                               res: int = 72) -> ConflictComplex:
    """Synthetic triangulation of the plane pair x3 = +/-x1.

    This is the tangent cone of the walls-and-poles germ at the origin,
    meshed directly: two parameter grids sharing their vertices along the
    x2-axis, so the 1-skeleton (and hence any link or inner-distance
    computation) sees the cone as one connected set.
    """
    if res % 2:
        raise SceneError("res must be even so the x2-axis is a grid line")
    n = res
    t = np.linspace(-half, half, n + 1)
    y = np.linspace(-half, half, n + 1)
    tt, yy = np.meshgrid(t, y, indexing="ij")
    # sheet A: (t, y, t)
    va = np.column_stack([tt.ravel(), yy.ravel(), tt.ravel()])
    ids_a = np.arange((n + 1) * (n + 1)).reshape(n + 1, n + 1)
    # sheet B: (t, y, -t); reuse sheet A's vertices on the t = 0 row
    mid = n // 2
    rows_b = [r for r in range(n + 1) if r != mid]
    vb = np.column_stack([tt[rows_b].ravel(), yy[rows_b].ravel(),
                          -tt[rows_b].ravel()])
    ids_b = np.zeros((n + 1, n + 1), dtype=np.int64)
    nxt = va.shape[0]
    for r in range(n + 1):
        if r == mid:
            ids_b[r] = ids_a[r]
        else:
            ids_b[r] = np.arange(nxt, nxt + n + 1)
            nxt += n + 1
    vertices = np.concatenate([va, vb])

    def grid_triangles(ids):
        tris = []
        for i in range(n):
            for j in range(n):
                a, b = ids[i, j], ids[i + 1, j]
                c, d = ids[i + 1, j + 1], ids[i, j + 1]
                tris.append((a, b, c))
                tris.append((a, c, d))
        return tris

    tris = np.array(grid_triangles(ids_a) + grid_triangles(ids_b),
                    dtype=np.int64)
    nv = vertices.shape[0]
    return ConflictComplex(
        dimension=3,
        window=Window.cube(half, 3),
        res=res,
        site_ids=["sheet_pos", "sheet_neg"],
        vertices=vertices,
        residuals=np.zeros(nv),
        vertex_pairs=np.tile(np.array([[0, 1]], dtype=np.int64), (nv, 1)),
        edges=np.zeros((0, 2), dtype=np.int64),
        edge_pairs=np.zeros((0, 2), dtype=np.int64),
        triangles=tris,
        triangle_pairs=np.tile(np.array([[0, 1]], dtype=np.int64),
                               (tris.shape[0], 1)),
        junctions=np.zeros(0, dtype=np.int64),
        junction_cells=np.zeros((0, 3)),
        tie_fraction=0.0,
        n_tie_cells=0,
        n_cells=2 * n * n,
    )


@dataclass(frozen=True)
class DemoEntry:
    """A named scene with a sensible extraction window and resolution."""

    name: str
    build: Callable[[], Scene]
    window: Window
    res: int
    at: Optional[tuple] = None   # interesting base point, if any


DEMO_SCENES = {
    "two-points": DemoEntry("two-points", two_point_scene,
                            Window((-2.0, -2.0), (2.0, 2.0)), 128,
                            at=(0.0, 1.0)),
    "equilateral": DemoEntry("equilateral", equilateral_scene,
                             Window((-2.0, -2.0), (2.0, 2.0)), 128,
                             at=(0.0, 0.0)),
    "circle-five": DemoEntry("circle-five",
                             lambda: circle_points_scene(5, seed=7),
                             Window((-2.0, -2.0), (2.0, 2.0)), 128,
                             at=(0.0, 0.0)),
    "segment-point": DemoEntry("segment-point", segment_point_scene,
                               Window((-2.0, -2.0), (2.0, 2.0)), 128),
    "paper-example": DemoEntry("paper-example", walls_and_poles_scene,
                               Window.cube(0.45, 3), 96, at=(0.0, 0.0, 0.0)),
    "ball-wall": DemoEntry("ball-wall", ball_wall_scene,
                           Window.cube(1.0, 3), 64, at=(0.0, 0.0, -0.275)),
}

"""Metric diagnostics on extracted conflict complexes.

Inner (intrinsic) distances are measured along the weighted 1-skeleton of
the complex: no shortcuts across faces, so mesh paths overestimate true
geodesics by a mesh-quality factor that the reports expose (inner and
outer lengths are both recorded).  The embedding scan compares inner to
outer distances across a shrinking scale schedule to detect germs whose
intrinsic metric degenerates relative to the ambient one; the branch and
cusp checks quantify tangent directions of 2D branches at a point; the
link counter and dimension check validate the local topology and the
codimension of the extracted cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from .conflict import ConflictComplex, Window, extract_conflict
from .scene import SceneError
from .spherical import min_distance_profile
from .tangent import _check_schedule, sphere_slice

__all__ = [
    "GeodesicGraph",
    "build_geodesic_graph",
    "inner_distance",
    "EmbeddingReport",
    "embedding_scan",
    "branch_tangents",
    "no_cusp_check",
    "link_components",
    "dimension_check",
]

#: vertices closer than this are merged into one graph node
SNAP_TOL = 1e-7
#: default single-linkage width for angular branch clustering (degrees)
BRANCH_LINKAGE_DEG = 10.0
#: minimum admissible pairwise branch angle (degrees)
MIN_BRANCH_ANGLE_DEG = 2.0
#: ratio growth per scale halving that flags a degenerate inner metric
DIVERGENCE_GROWTH = 1.5


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n):
        self.parent = np.arange(n, dtype=np.int64)

    def find(self, i):
        p = self.parent
        root = i
        while p[root] != root:
            root = p[root]
        while p[i] != root:
            p[i], i = root, p[i]
        return root

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            if rj < ri:
                ri, rj = rj, ri
            self.parent[rj] = ri


@dataclass(eq=False)
class GeodesicGraph:
    """Weighted 1-skeleton of a conflict complex after vertex snapping."""

    nodes: np.ndarray          # (N, dim) snapped node coordinates
    adj: csr_matrix            # symmetric edge-length matrix
    component: np.ndarray      # (N,) connected-component labels
    spacing: float             # max grid spacing of the source extraction
    n_merged: int              # vertices absorbed by snapping
    _tree: cKDTree = field(repr=False, default=None)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_components(self):
        return int(self.component.max()) + 1 if self.n_nodes else 0

    def snap(self, p, tol: Optional[float] = None) -> int:
        """Index of the node nearest p; error if farther than the snap radius
        (2 grid spacings by default)."""
        p = np.asarray(p, dtype=float)
        if tol is None:
            tol = 2.0 * self.spacing
        d, idx = self._tree.query(p)
        if d > tol:
            raise SceneError(
                f"point {p.tolist()} is {d:g} from the complex, beyond the "
                f"snap radius {tol:g}")
        return int(idx)


def _skeleton_edges(cplx: ConflictComplex) -> np.ndarray:
    if cplx.dimension == 2:
        return np.asarray(cplx.edges, dtype=np.int64)
    T = np.asarray(cplx.triangles, dtype=np.int64)
    if T.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])


def build_geodesic_graph(cplx: ConflictComplex,
                         snap_tol: float = SNAP_TOL) -> GeodesicGraph:
    """Snap coincident vertices and assemble the weighted 1-skeleton."""
    V = cplx.vertices
    E = _skeleton_edges(cplx)
    if V.shape[0] == 0 or E.shape[0] == 0:
        raise SceneError("complex has no 1-skeleton to build a graph from")
    uf = _UnionFind(V.shape[0])
    pairs = cKDTree(V).query_pairs(snap_tol, output_type="ndarray")
    for a, b in pairs:
        uf.union(int(a), int(b))
    roots = np.array([uf.find(i) for i in range(V.shape[0])], dtype=np.int64)
    uniq, remap = np.unique(roots, return_inverse=True)
    nodes = V[uniq]
    E2 = remap[E]
    E2 = E2[E2[:, 0] != E2[:, 1]]
    E2 = np.unique(np.sort(E2, axis=1), axis=0)
    w = np.linalg.norm(nodes[E2[:, 0]] - nodes[E2[:, 1]], axis=1)
    n = nodes.shape[0]
    adj = csr_matrix(
        (np.concatenate([w, w]),
         (np.concatenate([E2[:, 0], E2[:, 1]]),
          np.concatenate([E2[:, 1], E2[:, 0]]))),
        shape=(n, n))
    _, comp = connected_components(adj, directed=False)
    spacing = float(np.max(cplx.window.spacing(cplx.res)))
    return GeodesicGraph(nodes=nodes, adj=adj, component=comp,
                         spacing=spacing, n_merged=int(V.shape[0] - n),
                         _tree=cKDTree(nodes))


def inner_distance(graph: GeodesicGraph, p, q) -> float:
    """Shortest-path distance along the complex between the nodes nearest
    p and q.  Infinite when they lie in different components."""
    ip = graph.snap(p)
    iq = graph.snap(q)
    if graph.component[ip] != graph.component[iq]:
        return math.inf
    d = dijkstra(graph.adj, directed=False, indices=ip)
    val = float(d[iq])
    outer = float(np.linalg.norm(graph.nodes[ip] - graph.nodes[iq]))
    if val < outer - 1e-9:
        raise SceneError("inner distance fell below the ambient distance; "
                         "the graph weights are inconsistent")
    return val


@dataclass(eq=False)
class EmbeddingReport:
    """Inner/outer distance ratios of cross-sheet probe pairs per scale."""

    scales: list
    ratios: list
    details: list              # per-scale dicts: pairs used, extremal pair
    verdict: str               # "diverging" | "embedded"
    growth: float = DIVERGENCE_GROWTH

    def to_dict(self) -> dict:
        return {
            "scales": [float(s) for s in self.scales],
            "ratios": [float(r) for r in self.ratios],
            "verdict": self.verdict,
            "growth": self.growth,
            "details": self.details,
        }


def _sheet_components(graph: GeodesicGraph, r: np.ndarray, theta: float):
    """Component labels of the subgraph outside the core ball of radius
    theta/2 around the scan point (label -1 inside the core)."""
    keep = np.nonzero(r >= 0.5 * theta)[0]
    lab = np.full(graph.n_nodes, -1, dtype=np.int64)
    if keep.size == 0:
        return lab, 0
    sub = graph.adj[keep][:, keep]
    nc, sub_lab = connected_components(sub, directed=False)
    lab[keep] = sub_lab
    return lab, nc


def embedding_scan(graph: GeodesicGraph, cplx: ConflictComplex, x0,
                   scales: Sequence[float], growth: float = DIVERGENCE_GROWTH,
                   per_sheet: int = 32, max_pairs: int = 64) -> EmbeddingReport:
    """Probe the inner-vs-outer distance ratio at a shrinking scale schedule.

    At each scale theta, nodes within half a scale of x0 are removed and the
    remaining sheets identified; probe pairs join nodes hugging the radius
    theta on one sheet to their ambient-nearest node on another sheet.  A
    single sheet falls back to antipodal (reflected) pairs.  The reported
    ratio is the maximum inner/outer over the pairs; verdict "diverging"
    when the ratio keeps growing by >= growth per scale halving.
    """
    scales = _check_schedule(scales)
    x0 = np.asarray(x0, dtype=float)
    r = np.linalg.norm(graph.nodes - x0, axis=1)
    h = graph.spacing
    ratios = []
    details = []
    for theta in scales:
        if theta < 3.0 * h:
            raise SceneError(
                f"scan scale {theta:g} is below the resolved scale "
                f"(3 grid spacings = {3 * h:g}); re-extract finer")
        lab, _ = _sheet_components(graph, r, theta)
        # ring of one grid spacing: wider rings bias the ratio toward the
        # inner radius, where inner/outer is systematically larger
        band_w = max(h, 0.0125 * theta)
        band = np.nonzero((lab >= 0) & (np.abs(r - theta) <= band_w))[0]
        if band.size == 0:
            raise SceneError(f"no complex nodes near radius {theta:g} of "
                             f"{x0.tolist()}")
        sheets = np.unique(lab[band])
        pairs = []
        if sheets.size >= 2:
            # pairs of ambient-nearest nodes between sheet bands: these probe
            # the closest approach, where the inner/outer ratio peaks
            for s in sheets:
                cand = band[lab[band] == s]
                other = band[lab[band] != s]
                tree = cKDTree(graph.nodes[other])
                _, j = tree.query(graph.nodes[cand])
                for a, b in zip(cand, other[j]):
                    pairs.append((min(int(a), int(b)), max(int(a), int(b))))
        else:
            cand = band[np.argsort(np.abs(r[band] - theta),
                                   kind="stable")][:2 * per_sheet]
            tree = cKDTree(graph.nodes[band])
            targets = 2.0 * x0 - graph.nodes[cand]
            dd, j = tree.query(targets)
            for a, b, miss in zip(cand, band[j], dd):
                if miss <= 0.5 * theta and int(a) != int(b):
                    pairs.append((min(int(a), int(b)), max(int(a), int(b))))
        pairs = sorted(set(pairs))
        if not pairs:
            raise SceneError(f"no probe pairs found at scale {theta:g}")
        P = np.array(pairs, dtype=np.int64)
        outer = np.linalg.norm(graph.nodes[P[:, 0]] - graph.nodes[P[:, 1]],
                               axis=1)
        order = np.argsort(outer, kind="stable")[:max_pairs]
        P = P[order]
        outer = outer[order]
        src = np.unique(P[:, 0])
        D = dijkstra(graph.adj, directed=False, indices=src)
        pos = {int(s): k for k, s in enumerate(src)}
        inner = np.array([D[pos[int(a)], b] for a, b in P])
        bad = inner < outer - 1e-9
        if np.any(bad):
            raise SceneError("inner distance fell below the ambient distance")
        ok = outer > 1e-12
        ratio = float(np.max(inner[ok] / outer[ok])) if np.any(ok) else math.inf
        imax = int(np.argmax(np.where(ok, inner / np.maximum(outer, 1e-300),
                                      -1.0)))
        ratios.append(ratio)
        details.append({
            "scale": float(theta),
            "n_sheets": int(sheets.size),
            "n_pairs": int(P.shape[0]),
            "ratio": ratio,
            "max_pair": {
                "p": graph.nodes[P[imax, 0]].tolist(),
                "q": graph.nodes[P[imax, 1]].tolist(),
                "inner": float(inner[imax]),
                "outer": float(outer[imax]),
            },
        })
    grew = []
    for (ta, ra), (tb, rb) in zip(zip(scales, ratios), zip(scales[1:],
                                                           ratios[1:])):
        need = growth ** math.log2(ta / tb)
        grew.append(math.isinf(rb) or (math.isfinite(ra) and rb >= need * ra))
    verdict = "diverging" if (grew and all(grew)) else "embedded"
    return EmbeddingReport(scales=scales, ratios=ratios, details=details,
                           verdict=verdict, growth=growth)


def _cluster_angles(angles: np.ndarray, linkage_rad: float):
    """Single-linkage clusters of angles on the circle: split where the
    sorted cyclic gap exceeds the linkage width.  Returns a list of index
    arrays (into the input)."""
    n = angles.shape[0]
    order = np.argsort(angles, kind="stable")
    a = angles[order]
    gaps = np.diff(a)
    wrap = (a[0] + 2 * math.pi) - a[-1]
    cuts = np.nonzero(gaps > linkage_rad)[0]
    if cuts.size == 0:
        return [order]
    groups = []
    start = 0
    for c in cuts:
        groups.append(order[start:c + 1])
        start = c + 1
    groups.append(order[start:])
    if wrap <= linkage_rad and len(groups) > 1:
        groups[0] = np.concatenate([groups[-1], groups[0]])
        groups.pop()
    return groups


def branch_tangents(cplx: ConflictComplex, y0, eps_schedule,
                    linkage_deg: float = BRANCH_LINKAGE_DEG) -> np.ndarray:
    """Limiting unit tangent directions of the 2D branches at y0.

    Circle-slice directions are clustered at each eps with a single-linkage
    width of linkage_deg; the cluster count must agree across the last two
    radii, else the branching is unresolved and an error is raised.
    Returns the circular cluster means at the smallest eps, sorted by angle.
    """
    if cplx.dimension != 2:
        raise SceneError("branch tangents are defined for 2D complexes")
    eps = _check_schedule(eps_schedule)
    y0 = np.asarray(y0, dtype=float)
    link = math.radians(linkage_deg)
    counts = []
    last_groups = None
    last_dirs = None
    for e in eps:
        sl = sphere_slice(cplx, y0, e)
        ang = np.mod(np.arctan2(sl.dirs[:, 1], sl.dirs[:, 0]), 2 * math.pi)
        groups = _cluster_angles(ang, link)
        counts.append(len(groups))
        last_groups, last_dirs = groups, sl.dirs
    if len(counts) >= 2 and counts[-1] != counts[-2]:
        raise SceneError(
            f"unresolved branching at {y0.tolist()}: cluster count changed "
            f"{counts[-2]} -> {counts[-1]} over the last two radii "
            f"{eps[-2]:g}, {eps[-1]:g}")
    means = []
    for g in last_groups:
        v = last_dirs[g].sum(axis=0)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise SceneError("degenerate branch cluster (balanced directions)")
        means.append(v / norm)
    means = np.array(means)
    order = np.argsort(np.mod(np.arctan2(means[:, 1], means[:, 0]),
                              2 * math.pi), kind="stable")
    return means[order]


def no_cusp_check(scene, y0, eps_schedule=(0.12, 0.09, 0.06),
                  min_angle_deg: float = MIN_BRANCH_ANGLE_DEG,
                  res: int = 128, linkage_deg: float = BRANCH_LINKAGE_DEG,
                  workers: int = 1) -> dict:
    """Check that the branches of a 2D conflict set meet y0 at angles no
    smaller than min_angle_deg.

    Extracts the conflict set in a window of half-width 1.5 x max(eps)
    around y0, estimates branch tangents, and PASSes when every pairwise
    angle between branch directions is at least min_angle_deg.  A single
    unresolved cluster fails: branches closer than the linkage width
    cannot be certified cusp-free.
    """
    if scene.dimension != 2:
        raise SceneError("the cusp check applies to 2D scenes")
    y0 = np.asarray(y0, dtype=float)
    _, achieving = min_distance_profile(scene, y0)
    if len(achieving) < 2:
        raise SceneError(
            f"{y0.tolist()} is not a conflict point (single nearest site)")
    eps = _check_schedule(eps_schedule)
    window = Window.cube(1.5 * eps[0], 2, center=y0)
    cplx = extract_conflict(scene, window, res, workers=workers)
    dirs = branch_tangents(cplx, y0, eps, linkage_deg=linkage_deg)
    k = dirs.shape[0]
    angles = []
    for i in range(k):
        for j in range(i + 1, k):
            c = float(np.clip(np.dot(dirs[i], dirs[j]), -1.0, 1.0))
            angles.append(math.degrees(math.acos(c)))
    if k < 2:
        verdict = "FAIL"
        note = "single branch cluster: directions merge below the linkage width"
    elif min(angles) >= min_angle_deg:
        verdict = "PASS"
        note = ""
    else:
        verdict = "FAIL"
        note = f"min branch angle {min(angles):.3f} deg below {min_angle_deg} deg"
    return {
        "verdict": verdict,
        "n_branches": int(k),
        "directions": dirs.tolist(),
        "pairwise_angles_deg": sorted(angles),
        "eps_schedule": eps,
        "min_angle_deg": float(min_angle_deg),
        "note": note,
    }


def link_components(cplx: ConflictComplex, x0, eps: float) -> int:
    """Number of connected components of the complex's link at radius eps.

    3D: triangle chords crossing S(x0, eps) are joined when their triangles
    share a crossed mesh edge, and counted by union-find.  2D: the link is a
    finite direction set, so the crossing points are counted directly.
    """
    x0 = np.asarray(x0, dtype=float)
    h = float(np.max(cplx.window.spacing(cplx.res)))
    if eps < 3.0 * h:
        raise SceneError(
            f"link radius {eps:g} is below the resolved scale "
            f"(3 grid spacings = {3 * h:g})")
    if np.any(x0 - eps < cplx.window.lo) or np.any(x0 + eps > cplx.window.hi):
        raise SceneError(f"link sphere of radius {eps:g} leaves the window")
    V = cplx.vertices
    from .tangent import _edge_circle_roots
    if cplx.dimension == 2:
        E = cplx.edges
        if E.shape[0] == 0:
            raise SceneError("complex has no edges")
        rows, ts = _edge_circle_roots(V[E[:, 0]], V[E[:, 1]], x0, eps)
        if rows.size == 0:
            raise SceneError(f"link at radius {eps:g} is empty")
        # a crossing at a shared segment endpoint is reported by both
        # incident edges; count geometric points, not roots
        A = V[E[rows, 0]]
        pts = A + ts[:, None] * (V[E[rows, 1]] - A)
        uf = _UnionFind(pts.shape[0])
        for i, j in cKDTree(pts).query_pairs(SNAP_TOL, output_type="ndarray"):
            uf.union(int(i), int(j))
        return len({uf.find(i) for i in range(pts.shape[0])})
    T = np.asarray(cplx.triangles, dtype=np.int64)
    if T.shape[0] == 0:
        raise SceneError("complex has no triangles")
    te = np.sort(np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]]),
                 axis=1)
    keys = te[:, 0] * (V.shape[0] + 1) + te[:, 1]
    uniq, inv = np.unique(keys, return_inverse=True)
    ue = np.column_stack([uniq // (V.shape[0] + 1), uniq % (V.shape[0] + 1)])
    rows, ts = _edge_circle_roots(V[ue[:, 0]], V[ue[:, 1]], x0, eps)
    if rows.size == 0:
        raise SceneError(f"link at radius {eps:g} is empty")
    crossed = np.zeros(ue.shape[0], dtype=bool)
    crossed[rows] = True
    uf = _UnionFind(ue.shape[0])
    tri_edge = inv.reshape(3, -1).T
    for nt in range(T.shape[0]):
        es = [int(e) for e in tri_edge[nt] if crossed[e]]
        for a, b in zip(es, es[1:]):
            uf.union(a, b)
    # a crossing that grazes a mesh vertex can fall on edges of different
    # triangles: stitch crossings that nearly coincide and share a vertex
    A = V[ue[rows, 0]]
    pts = A + ts[:, None] * (V[ue[rows, 1]] - A)
    for i, j in cKDTree(pts).query_pairs(1.5 * h, output_type="ndarray"):
        ei, ej = int(rows[i]), int(rows[j])
        if ei != ej and len(set(ue[ei]) & set(ue[ej])):
            uf.union(ei, ej)
    roots = {uf.find(int(e)) for e in np.nonzero(crossed)[0]}
    return len(roots)


def dimension_check(cplx: ConflictComplex) -> dict:
    """Validate that the extracted cells have codimension one.

    PASS when (dim-1)-cells exist, the tie-cell fraction is zero and any
    isolated vertices are mere debris (they are reported and discounted).
    A positive tie fraction means solid regions of near-equal distance --
    the conflict set fails to be a hypersurface there (typical for the
    taxicab metric) and the verdict is FAIL.
    """
    n = cplx.dimension
    cells = cplx.edges if n == 2 else cplx.triangles
    n_cells = int(cells.shape[0])
    n_vertices_total = int(cplx.vertices.shape[0])
    warnings = []
    used = np.zeros(cplx.vertices.shape[0], dtype=bool)
    if n_cells:
        used[np.asarray(cells, dtype=np.int64).ravel()] = True
    n_isolated = int(np.count_nonzero(~used))
    if cplx.junction_cells.shape[0]:
        warnings.append(
            f"{cplx.junction_cells.shape[0]} unresolved junction cells")
    tie = float(cplx.tie_fraction)
    if n_vertices_total == 0 and n_cells == 0:
        verdict = "PASS"
        warnings.append("empty complex: nothing to check")
    elif tie > 0.0:
        verdict = "FAIL"
        warnings.append(
            f"tie cells cover fraction {tie:g} of the window: the conflict "
            f"set has full-dimensional parts")
    elif n_cells == 0:
        verdict = "FAIL"
        warnings.append("only isolated vertices: no codimension-1 cells")
    else:
        verdict = "PASS"
        if n_isolated:
            warnings.append(f"{n_isolated} isolated vertices removed")
    return {
        "verdict": verdict,
        "dimension": int(n),
        "cell_dimension": int(n - 1),
        "n_cells": n_cells,
        "n_vertices": n_vertices_total,
        "n_isolated": n_isolated,
        "tie_fraction": tie,
        "n_tie_cells": int(cplx.n_tie_cells),
        "warnings": warnings,
    }

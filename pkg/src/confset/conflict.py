"""Conflict-set extraction on lattice windows.

The conflict set of a scene is the set of points whose smallest site
distance is attained at least twice.  Extraction labels a regular lattice
by nearest site, finds lattice edges whose endpoints disagree, and bisects
the distance difference of the two labels along each such edge.  Every
emitted vertex satisfies |d_i - d_j| <= 1e-9 for its site pair and is kept
only if that common value is the global minimum over all sites (within
1e-8), so locally-equidistant-but-not-nearest sheets are discarded.

In the plane the roots are joined into segments cell by cell (with the
diagonal-ambiguity case resolved by the label of the cell center) and
cells showing three or more labels get a junction vertex refined by a 2x2
Newton iteration on the pairwise distance differences.  In space each
cube spanning exactly two labels is cut into the six tetrahedra of the
Kuhn subdivision and triangulated by marching tetrahedra; cubes spanning
three or more labels are subdivided once (3x3x3) and the still-mixed
subcubes are reported as junction cells.

Exact ties are broken toward the smallest site index, and an edge whose
endpoint is itself a tie point takes the root at that endpoint.  This
keeps bisectors that run along lattice lines (a frequent situation in
symmetric scenes) instead of losing them to the tie-break.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .scene import Scene, SceneError

__all__ = [
    "Window",
    "ConflictComplex",
    "label_points",
    "extract_conflict",
    "extract_conflict_2d",
    "extract_conflict_3d",
    "refine_point",
]

#: target residual |d_i - d_j| for emitted vertices
RESIDUAL_TOL = 1e-9
#: a vertex is kept only if max(d_i, d_j) <= min_m d_m + MINIMALITY_TOL
MINIMALITY_TOL = 1e-8
#: corner margin below which a lattice point counts as a tie point
TIE_TOL = 1e-9
_BISECT_ITERS = 60


@dataclass(frozen=True)
class Window:
    """Axis-aligned sampling window [lo_0, hi_0] x ... in R^2 or R^3."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.shape[0] not in (2, 3):
            raise SceneError("window needs matching lo/hi in R^2 or R^3")
        if not np.all(lo < hi):
            raise SceneError("window needs lo < hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def axes(self, res: int):
        """Per-axis lattice coordinates: res cells, res + 1 points, inclusive."""
        return [np.linspace(self.lo[k], self.hi[k], res + 1) for k in range(self.dim)]

    def spacing(self, res: int) -> np.ndarray:
        return (self.hi - self.lo) / res

    @staticmethod
    def cube(half: float, dim: int, center=None) -> "Window":
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        return Window(c - half, c + half)


@dataclass(eq=False)
class ConflictComplex:
    """Extracted conflict set: vertices plus segments (2D) or triangles (3D).

    vertex_pairs holds the two site indices whose distances agree at each
    vertex; junction vertices (equidistant to three or more sites) carry
    (-1, -1).  residuals holds |d_i - d_j| at each vertex.  tie_fraction is
    the fraction of lattice cells all of whose corners are tie points --
    the area proxy for fat (higher-dimensional) conflict pieces, which only
    occur under the taxicab metric.
    """

    dimension: int
    window: Window
    res: int
    site_ids: list
    vertices: np.ndarray        # (N, dim)
    residuals: np.ndarray       # (N,)
    vertex_pairs: np.ndarray    # (N, 2) int
    edges: np.ndarray           # (M, 2) int vertex indices (2D only)
    edge_pairs: np.ndarray      # (M, 2) int
    triangles: np.ndarray       # (T, 3) int vertex indices (3D only)
    triangle_pairs: np.ndarray  # (T, 2) int
    junctions: np.ndarray       # (J,) vertex indices of junction vertices
    junction_cells: np.ndarray  # (Jc, dim) centers of unresolved mixed cells
    tie_fraction: float
    n_tie_cells: int
    n_cells: int

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    def summary(self) -> dict:
        return {
            "dimension": self.dimension,
            "res": self.res,
            "n_vertices": int(self.vertices.shape[0]),
            "n_edges": int(self.edges.shape[0]),
            "n_triangles": int(self.triangles.shape[0]),
            "n_junctions": int(self.junctions.shape[0]),
            "n_junction_cells": int(self.junction_cells.shape[0]),
            "max_residual": float(self.residuals.max()) if self.residuals.size else 0.0,
            "tie_fraction": self.tie_fraction,
        }


# ---------------------------------------------------------------------------
# labeling and bisection


def label_points(scene, pts, workers: int = 1):
    """Nearest-site labels and runner-up margins for a batch of points.

    Ties break toward the smallest site index.  Returns (labels, margin)
    where margin = d_second - d_first >= 0.
    """
    D = scene.distance_matrix(pts, workers=workers)
    lab = np.argmin(D, axis=1).astype(np.int32)
    two = np.partition(D, 1, axis=1)
    return lab, two[:, 1] - two[:, 0]


def _bisect_batch(dist_fn, A, B, ia, ib, iters: int = _BISECT_ITERS):
    """Vectorized bisection of f = d[ia] - d[ib] on segments [A, B].

    Precondition (weak): f(A) <= 0 <= f(B).  A zero at an endpoint is a
    valid bracket and converges to that endpoint.  Returns the roots, the
    residuals |f|, and the global-minimality excess max(d_ia, d_ib) - min_m d_m.
    """
    lo = np.array(A, dtype=float, copy=True)
    hi = np.array(B, dtype=float, copy=True)
    n = lo.shape[0]
    rows = np.arange(n)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        D = dist_fn(mid)
        f = D[rows, ia] - D[rows, ib]
        pos = f > 0.0
        hi[pos] = mid[pos]
        lo[~pos] = mid[~pos]
    x = 0.5 * (lo + hi)
    D = dist_fn(x)
    di = D[rows, ia]
    dj = D[rows, ib]
    excess = np.maximum(di, dj) - D.min(axis=1)
    return x, np.abs(di - dj), excess


def refine_point(scene, a, b, i: int, j: int, tol: float = 1e-12,
                 iters: int = 100) -> np.ndarray:
    """Locate the point on segment [a, b] where d_i = d_j, to residual tol.

    Requires d_i - d_j <= 0 at a and >= 0 at b (weak brackets allowed);
    raises ValueError otherwise.  Returns the midpoint of the final bracket.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def f(x):
        D = scene.distance_matrix(x[None, :])[0]
        return D[i] - D[j]

    fa, fb = f(a), f(b)
    if fa > 0 or fb < 0:
        raise ValueError(
            f"refine_point needs d_{i} - d_{j} <= 0 at a and >= 0 at b "
            f"(got {fa:.3e}, {fb:.3e})")
    lo, hi = a.copy(), b.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
        if abs(f(0.5 * (lo + hi))) <= tol:
            break
    return 0.5 * (lo + hi)


def _newton_junction(scene, x0, labels, cell_lo, cell_hi,
                     tol: float = RESIDUAL_TOL, iters: int = 40):
    """Refine a point equidistant to three sites by Newton on the pair gaps.

    Gradients use the foot-point identity grad d_m = (x - nearest_m) / d_m.
    The iterate is confined to the cell inflated by one cell width; returns
    None when the Jacobian degenerates or the residual target is missed.
    """
    if scene.metric != "euclidean" or not hasattr(scene, "sites"):
        return None
    i, j, k = labels
    pad = cell_hi - cell_lo
    blo, bhi = cell_lo - pad, cell_hi + pad
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(iters):
        D = scene.distance_matrix(x[None, :])[0]
        F = np.array([D[i] - D[j], D[i] - D[k]])
        if np.max(np.abs(F)) <= tol:
            return x, float(np.max(np.abs(F)))
        grads = []
        for m in (i, j, k):
            dm = D[m]
            if dm < 1e-12:
                return None
            nm = scene.sites[m].nearest(x[None, :])[0]
            grads.append((x - nm) / dm)
        J = np.stack([grads[0] - grads[1], grads[0] - grads[2]])
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        limit = 2.0 * float(np.max(pad))
        sn = float(np.linalg.norm(step))
        if sn > limit:
            step *= limit / sn
        x = np.clip(x + step, blo, bhi)
    D = scene.distance_matrix(x[None, :])[0]
    F = np.array([D[i] - D[j], D[i] - D[k]])
    if np.max(np.abs(F)) <= tol:
        return x, float(np.max(np.abs(F)))
    return None


# ---------------------------------------------------------------------------
# 2D extraction


def extract_conflict_2d(scene, window: Window, res: int, workers: int = 1,
                        tie_tol: float = TIE_TOL,
                        minimality_tol: float = MINIMALITY_TOL) -> ConflictComplex:
    if window.dim != 2 or scene.dimension != 2:
        raise SceneError("extract_conflict_2d needs a 2D scene and window")
    xs, ys = window.axes(res)
    nx, ny = xs.size, ys.size
    X, Y = np.meshgrid(xs, ys)  # (ny, nx)
    P = np.column_stack([X.ravel(), Y.ravel()])
    lab, margin = label_points(scene, P, workers=workers)
    L = lab.reshape(ny, nx)
    tieg = (margin <= tie_tol).reshape(ny, nx)

    def dist(pts):
        return scene.distance_matrix(pts, workers=workers)

    # crossing lattice edges (skip edges fully inside a tie region)
    hmask = (L[:, :-1] != L[:, 1:]) & ~(tieg[:, :-1] & tieg[:, 1:])
    vmask = (L[:-1, :] != L[1:, :]) & ~(tieg[:-1, :] & tieg[1:, :])
    hij = np.argwhere(hmask)  # rows (iy, ix): edge (iy,ix)-(iy,ix+1)
    vij = np.argwhere(vmask)  # rows (iy, ix): edge (iy,ix)-(iy+1,ix)

    A = np.concatenate([
        np.column_stack([xs[hij[:, 1]], ys[hij[:, 0]]]),
        np.column_stack([xs[vij[:, 1]], ys[vij[:, 0]]]),
    ]) if hij.size + vij.size else np.zeros((0, 2))
    B = np.concatenate([
        np.column_stack([xs[hij[:, 1] + 1], ys[hij[:, 0]]]),
        np.column_stack([xs[vij[:, 1]], ys[vij[:, 0] + 1]]),
    ]) if hij.size + vij.size else np.zeros((0, 2))
    ia = np.concatenate([L[hij[:, 0], hij[:, 1]], L[vij[:, 0], vij[:, 1]]]) \
        if hij.size + vij.size else np.zeros(0, dtype=np.int32)
    ib = np.concatenate([L[hij[:, 0], hij[:, 1] + 1], L[vij[:, 0] + 1, vij[:, 1]]]) \
        if hij.size + vij.size else np.zeros(0, dtype=np.int32)

    verts = np.zeros((0, 2))
    resid = np.zeros(0)
    vpairs = np.zeros((0, 2), dtype=np.int32)
    Hroot = -np.ones((ny, res), dtype=np.int64)
    Vroot = -np.ones((res, nx), dtype=np.int64)
    if A.shape[0]:
        roots, rres, excess = _bisect_batch(dist, A, B, ia, ib)
        keep = excess <= minimality_tol
        idx = -np.ones(A.shape[0], dtype=np.int64)
        idx[keep] = np.arange(int(keep.sum()))
        verts = roots[keep]
        resid = rres[keep]
        vpairs = np.column_stack([np.minimum(ia, ib), np.maximum(ia, ib)])[keep]
        vpairs = vpairs.astype(np.int32)
        nh = hij.shape[0]
        Hroot[hij[:, 0], hij[:, 1]] = idx[:nh]
        Vroot[vij[:, 0], vij[:, 1]] = idx[nh:]

    vert_list = [verts]
    resid_list = [resid]
    vpair_list = [vpairs]
    nv = verts.shape[0]
    edges = []
    epairs = []
    junction_ids = []
    ambiguous_centers = []

    # tie cells: every corner is a tie point
    tie_cells = tieg[:-1, :-1] & tieg[:-1, 1:] & tieg[1:, :-1] & tieg[1:, 1:]
    n_tie = int(tie_cells.sum())

    c00 = L[:-1, :-1]
    c10 = L[:-1, 1:]
    c01 = L[1:, :-1]
    c11 = L[1:, 1:]
    active = ~((c00 == c10) & (c00 == c01) & (c00 == c11)) & ~tie_cells
    hx = window.spacing(res)

    for cy, cx in np.argwhere(active):
        labs = (int(c00[cy, cx]), int(c10[cy, cx]), int(c01[cy, cx]), int(c11[cy, cx]))
        distinct = sorted(set(labs))
        # edge slots: bottom, top, left, right
        slots = (Hroot[cy, cx], Hroot[cy + 1, cx], Vroot[cy, cx], Vroot[cy, cx + 1])
        present = [int(v) for v in slots if v >= 0]
        lo_c = np.array([xs[cx], ys[cy]])
        hi_c = np.array([xs[cx + 1], ys[cy + 1]])
        if len(distinct) >= 3:
            got = _newton_junction(scene, 0.5 * (lo_c + hi_c), distinct[:3], lo_c, hi_c)
            if got is None:
                ambiguous_centers.append(0.5 * (lo_c + hi_c))
                continue
            xj, rj = got
            svid = nv
            nv += 1
            vert_list.append(xj[None, :])
            resid_list.append(np.array([rj]))
            vpair_list.append(np.array([[-1, -1]], dtype=np.int32))
            junction_ids.append(svid)
            for v in present:
                # spokes from the junction to each bisector crossing; the
                # pair tag is the root's own (resolved after assembly)
                edges.append((svid, v))
                epairs.append(("spoke", v))
            continue
        if len(present) == 2:
            edges.append((present[0], present[1]))
            epairs.append((distinct[0], distinct[1]))
        elif len(present) == 4 and labs[0] == labs[3] and labs[1] == labs[2] \
                and labs[0] != labs[1]:
            # diagonal ambiguity: resolve with the label of the cell center
            center = 0.5 * (lo_c + hi_c)
            Dc = scene.distance_matrix(center[None, :])[0]
            a, b = labs[0], labs[1]
            bot, top, left, right = (int(s) for s in slots)
            if Dc[a] <= Dc[b]:
                # center belongs to the diagonal label: cut off the b corners
                new = [(bot, right), (top, left)]
            else:
                new = [(bot, left), (top, right)]
            edges.extend(new)
            epairs.extend([(min(a, b), max(a, b))] * 2)
        # other root counts: emit vertices only

    vertices = np.concatenate(vert_list) if vert_list else np.zeros((0, 2))
    residuals = np.concatenate(resid_list) if resid_list else np.zeros(0)
    vertex_pairs = np.concatenate(vpair_list) if vpair_list else np.zeros((0, 2), np.int32)
    edge_arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    epair_arr = np.zeros((edge_arr.shape[0], 2), dtype=np.int32)
    for n_, tag in enumerate(epairs):
        if isinstance(tag, tuple) and tag and tag[0] == "spoke":
            epair_arr[n_] = vertex_pairs[tag[1]]
        else:
            epair_arr[n_] = tag
    return ConflictComplex(
        dimension=2, window=window, res=res, site_ids=scene.site_ids(),
        vertices=vertices, residuals=residuals, vertex_pairs=vertex_pairs,
        edges=edge_arr, edge_pairs=epair_arr,
        triangles=np.zeros((0, 3), dtype=np.int64),
        triangle_pairs=np.zeros((0, 2), dtype=np.int32),
        junctions=np.asarray(junction_ids, dtype=np.int64),
        junction_cells=(np.asarray(ambiguous_centers)
                        if ambiguous_centers else np.zeros((0, 2))),
        tie_fraction=n_tie / float(res * res), n_tie_cells=n_tie,
        n_cells=res * res)


# ---------------------------------------------------------------------------
# 3D extraction: Kuhn tetrahedra marching


_TET_CORNERS = np.array([
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
])
_TET_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def _build_case_table():
    eidx = {e: n for n, e in enumerate(_TET_EDGES)}

    def ei(a, b):
        return eidx[(min(a, b), max(a, b))]

    table = []
    for m in range(16):
        hi = [v for v in range(4) if (m >> v) & 1]
        lo = [v for v in range(4) if not (m >> v) & 1]
        if not hi or not lo:
            table.append([])
        elif len(hi) == 1 or len(lo) == 1:
            v = hi[0] if len(hi) == 1 else lo[0]
            table.append([tuple(ei(v, u) for u in range(4) if u != v)])
        else:
            p, q = hi
            r, s = lo
            quad = [ei(p, r), ei(p, s), ei(q, s), ei(q, r)]
            table.append([(quad[0], quad[1], quad[2]), (quad[0], quad[2], quad[3])])
    return table


_CASES = _build_case_table()


def _march_tets(gid8: np.ndarray, lab8: np.ndarray):
    """Marching tetrahedra over cubes spanning exactly two labels.

    gid8/lab8 are (n, 8) corner keys and labels in the bit order
    b = bx + 2 by + 4 bz.  Returns triangle endpoint keys tu, tv of shape
    (T, 3) (one crossing edge per triangle corner) and the (T, 2) site pair.
    """
    hi = lab8.max(axis=1)
    lo = lab8.min(axis=1)
    bits = np.array([1, 2, 4, 8])
    TU, TV, TP = [], [], []
    for tet in _TET_CORNERS:
        lt = lab8[:, tet]
        gt = gid8[:, tet]
        mask = ((lt == hi[:, None]) * bits).sum(axis=1)
        for m in range(1, 15):
            tris = _CASES[m]
            if not tris:
                continue
            sel = np.nonzero(mask == m)[0]
            if sel.size == 0:
                continue
            for tri in tris:
                u = np.stack([gt[sel, _TET_EDGES[e][0]] for e in tri], axis=1)
                v = np.stack([gt[sel, _TET_EDGES[e][1]] for e in tri], axis=1)
                TU.append(u)
                TV.append(v)
                TP.append(np.column_stack([lo[sel], hi[sel]]))
    if not TU:
        z = np.zeros((0, 3), dtype=np.int64)
        return z, z.copy(), np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(TU), np.concatenate(TV), np.concatenate(TP)


def _edges_and_roots(dist, tu, tv, coords_of, label_of, nv_space,
                     minimality_tol):
    """Dedupe crossing edges, bisect each once, and map triangles to roots.

    Returns (roots, residuals, pairs, keep, tri_edge_idx): tri_edge_idx
    indexes the deduped edge table; keep marks edges passing the
    global-minimality filter.
    """
    umin = np.minimum(tu, tv)
    vmax = np.maximum(tu, tv)
    keys = umin.astype(np.int64) * nv_space + vmax.astype(np.int64)
    uniq, inv = np.unique(keys, return_inverse=True)
    tri_edge = inv.reshape(-1, 3)
    eu = (uniq // nv_space).astype(np.int64)
    ev = (uniq % nv_space).astype(np.int64)
    lu = label_of(eu)
    lv = label_of(ev)
    cu = coords_of(eu)
    cv = coords_of(ev)
    lo = np.minimum(lu, lv)
    # orient so f = d_lo - d_hi has f(A) <= 0
    a_is_u = lu == lo
    A = np.where(a_is_u[:, None], cu, cv)
    B = np.where(a_is_u[:, None], cv, cu)
    ia = np.minimum(lu, lv).astype(np.int64)
    ib = np.maximum(lu, lv).astype(np.int64)
    roots, rres, excess = _bisect_batch(dist, A, B, ia, ib)
    keep = excess <= minimality_tol
    pairs = np.column_stack([ia, ib]).astype(np.int32)
    return roots, rres, pairs, keep, tri_edge


def extract_conflict_3d(scene, window: Window, res: int, workers: int = 1,
                        tie_tol: float = TIE_TOL,
                        minimality_tol: float = MINIMALITY_TOL) -> ConflictComplex:
    if window.dim != 3 or scene.dimension != 3:
        raise SceneError("extract_conflict_3d needs a 3D scene and window")
    if scene.metric != "euclidean":
        raise SceneError("3D extraction supports the Euclidean metric only")
    xs, ys, zs = window.axes(res)
    nx, ny, nz = xs.size, ys.size, zs.size
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")  # (nz, ny, nx)
    P = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    lab, margin = label_points(scene, P, workers=workers)
    L3 = lab.reshape(nz, ny, nx)
    labf = lab.astype(np.int64)

    def dist(pts):
        return scene.distance_matrix(pts, workers=workers)

    def coords_of(g):
        ix = g % nx
        iy = (g // nx) % ny
        iz = g // (nx * ny)
        return np.column_stack([xs[ix], ys[iy], zs[iz]])

    def label_of(g):
        return labf[g]

    nc = res
    slabs = [L3[bz:bz + nc, by:by + nc, bx:bx + nc]
             for b in range(8)
             for bx, by, bz in [((b & 1), (b >> 1) & 1, (b >> 2) & 1)]]
    mn = np.minimum.reduce(slabs)
    mx = np.maximum.reduce(slabs)
    strict = np.zeros_like(mn, dtype=bool)
    for s in slabs:
        strict |= (s > mn) & (s < mx)
    active = np.argwhere(mn != mx)  # (na, 3) as (iz, iy, ix)

    # tie cubes (only meaningful for metrics with fat bisectors)
    tie3 = (margin <= tie_tol).reshape(nz, ny, nx)
    tslabs = [tie3[bz:bz + nc, by:by + nc, bx:bx + nc]
              for b in range(8)
              for bx, by, bz in [((b & 1), (b >> 1) & 1, (b >> 2) & 1)]]
    n_tie = int(np.logical_and.reduce(tslabs).sum())

    off = np.array([(b & 1) + ((b >> 1) & 1) * nx + ((b >> 2) & 1) * nx * ny
                    for b in range(8)], dtype=np.int64)

    vert_blocks, resid_blocks, vpair_blocks = [], [], []
    tri_blocks, tpair_blocks = [], []
    nv_running = 0
    junction_centers = []

    if active.shape[0]:
        base = (active[:, 0] * ny + active[:, 1]) * nx + active[:, 2]
        gid8 = base[:, None] + off[None, :]
        lab8 = labf[gid8]
        is_strict = strict[active[:, 0], active[:, 1], active[:, 2]]
        clean = ~is_strict

        if np.any(clean):
            tu, tv, tp = _march_tets(gid8[clean], lab8[clean])
            if tu.shape[0]:
                roots, rres, pairs, keep, tri_edge = _edges_and_roots(
                    dist, tu, tv, coords_of, label_of, nx * ny * nz,
                    minimality_tol)
                new_idx = -np.ones(roots.shape[0], dtype=np.int64)
                new_idx[keep] = nv_running + np.arange(int(keep.sum()))
                vert_blocks.append(roots[keep])
                resid_blocks.append(rres[keep])
                vpair_blocks.append(pairs[keep])
                nv_running += int(keep.sum())
                tri = new_idx[tri_edge]
                ok = np.all(tri >= 0, axis=1)
                tri_blocks.append(tri[ok])
                tpair_blocks.append(tp[ok].astype(np.int32))

        # mixed cubes: subdivide once on the 4x4x4 sub-lattice
        jz = active[is_strict]
        if jz.shape[0]:
            njc = jz.shape[0]
            h = window.spacing(res)
            t = np.arange(4) / 3.0
            lx = xs[jz[:, 2], None] + t[None, :] * h[0]   # (njc, 4)
            ly = ys[jz[:, 1], None] + t[None, :] * h[1]
            lz = zs[jz[:, 0], None] + t[None, :] * h[2]
            # local id = iz*16 + iy*4 + ix within each cube, offset cube*64
            pts = np.empty((njc, 64, 3))
            for iz_ in range(4):
                for iy_ in range(4):
                    for ix_ in range(4):
                        lid = iz_ * 16 + iy_ * 4 + ix_
                        pts[:, lid, 0] = lx[:, ix_]
                        pts[:, lid, 1] = ly[:, iy_]
                        pts[:, lid, 2] = lz[:, iz_]
            flat = pts.reshape(-1, 3)
            lab_loc, _ = label_points(scene, flat, workers=workers)
            lab_loc = lab_loc.astype(np.int64)

            sub_off = np.array([(b & 1) + ((b >> 1) & 1) * 4 + ((b >> 2) & 1) * 16
                                for b in range(8)], dtype=np.int64)
            sub_base = np.array([sz * 16 + sy * 4 + sx
                                 for sz in range(3) for sy in range(3)
                                 for sx in range(3)], dtype=np.int64)
            cube_keys = (np.arange(njc, dtype=np.int64) * 64)[:, None, None] \
                + sub_base[None, :, None] + sub_off[None, None, :]
            sub_gid8 = cube_keys.reshape(-1, 8)          # (njc*27, 8)
            sub_lab8 = lab_loc[sub_gid8]
            smn = sub_lab8.min(axis=1)
            smx = sub_lab8.max(axis=1)
            sstrict = np.any((sub_lab8 > smn[:, None]) & (sub_lab8 < smx[:, None]),
                             axis=1)
            sclean = (smn != smx) & ~sstrict
            if np.any(sclean):
                tu, tv, tp = _march_tets(sub_gid8[sclean], sub_lab8[sclean])
                if tu.shape[0]:
                    roots, rres, pairs, keep, tri_edge = _edges_and_roots(
                        dist, tu, tv, lambda g: flat[g], lambda g: lab_loc[g],
                        njc * 64, minimality_tol)
                    new_idx = -np.ones(roots.shape[0], dtype=np.int64)
                    new_idx[keep] = nv_running + np.arange(int(keep.sum()))
                    vert_blocks.append(roots[keep])
                    resid_blocks.append(rres[keep])
                    vpair_blocks.append(pairs[keep])
                    nv_running += int(keep.sum())
                    tri = new_idx[tri_edge]
                    ok = np.all(tri >= 0, axis=1)
                    tri_blocks.append(tri[ok])
                    tpair_blocks.append(tp[ok].astype(np.int32))
            mixed = (smn != smx) & sstrict
            if np.any(mixed):
                # centers of the still-mixed subcubes, via corner 0 and 7
                g0 = sub_gid8[mixed, 0]
                g7 = sub_gid8[mixed, 7]
                junction_centers.append(0.5 * (flat[g0] + flat[g7]))

    vertices = (np.concatenate(vert_blocks) if vert_blocks
                else np.zeros((0, 3)))
    residuals = np.concatenate(resid_blocks) if resid_blocks else np.zeros(0)
    vertex_pairs = (np.concatenate(vpair_blocks) if vpair_blocks
                    else np.zeros((0, 2), dtype=np.int32))
    triangles = (np.concatenate(tri_blocks) if tri_blocks
                 else np.zeros((0, 3), dtype=np.int64))
    tri_pairs = (np.concatenate(tpair_blocks) if tpair_blocks
                 else np.zeros((0, 2), dtype=np.int32))

    # drop degenerate triangles: duplicated vertex positions or zero area
    if triangles.shape[0]:
        p0 = vertices[triangles[:, 0]]
        p1 = vertices[triangles[:, 1]]
        p2 = vertices[triangles[:, 2]]
        s01 = np.linalg.norm(p1 - p0, axis=1)
        s02 = np.linalg.norm(p2 - p0, axis=1)
        s12 = np.linalg.norm(p2 - p1, axis=1)
        area2 = np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
        good = (np.minimum(np.minimum(s01, s02), s12) > 1e-12) & (area2 > 1e-24)
        triangles = triangles[good]
        tri_pairs = tri_pairs[good]

    return ConflictComplex(
        dimension=3, window=window, res=res, site_ids=scene.site_ids(),
        vertices=vertices, residuals=residuals, vertex_pairs=vertex_pairs,
        edges=np.zeros((0, 2), dtype=np.int64),
        edge_pairs=np.zeros((0, 2), dtype=np.int32),
        triangles=triangles, triangle_pairs=tri_pairs,
        junctions=np.zeros(0, dtype=np.int64),
        junction_cells=(np.concatenate(junction_centers)
                        if junction_centers else np.zeros((0, 3))),
        tie_fraction=n_tie / float(res ** 3), n_tie_cells=n_tie,
        n_cells=res ** 3)


def extract_conflict(scene, window: Window, res: int, workers: int = 1,
                     tie_tol: float = TIE_TOL,
                     minimality_tol: float = MINIMALITY_TOL) -> ConflictComplex:
    """Extract the conflict set of a scene on a lattice window."""
    if int(res) < 1:
        raise SceneError("res must be a positive cell count")
    if scene.dimension == 2:
        return extract_conflict_2d(scene, window, int(res), workers,
                                   tie_tol, minimality_tol)
    return extract_conflict_3d(scene, window, int(res), workers,
                               tie_tol, minimality_tol)

"""Supports on minimal spheres and conflict sets in the geodesic metric.

Around a base point x0 the minimal radius r0 = min_i d(x0, X_i) defines the
sphere of first contact.  The support of a site is its trace on that
sphere; supports are computed analytically per primitive where a closed
form exists (tangency points, circles, subsegment endpoints) and by dense
deterministic sampling otherwise.

Treating the nonempty supports as sites of the sphere with the great-circle
metric gives a lower-dimensional conflict problem: points on S^1, curves on
S^2.  The solver mirrors the Euclidean extractor: label a parameter grid
(uniform angles / icosphere vertices), bisect label changes to angular
residual 1e-9, filter by global minimality, and connect per pair tag.

The annular shadow rebuilds a scene out of radial thickenings of the
supports, the construction used to localize conflict questions to the
sphere; near x0 its nearest-point structure provably matches the original
scene's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .scene import (
    PointSet,
    Scene,
    SceneError,
    Site,
    SupportPart,
    make_scene,
)

__all__ = [
    "SupportSet",
    "SphericalComplex",
    "ConeApprox",
    "min_distance_profile",
    "support_sets",
    "geodesic_distance",
    "label_directions",
    "icosphere",
    "spherical_conflict",
    "cone",
    "annular_shadow",
]

ANGULAR_TOL = 1e-9
MINIMALITY_TOL = 1e-8
_BISECT_ITERS = 60


def _unit_rows(V):
    return V / np.linalg.norm(V, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# supports


@dataclass(frozen=True, eq=False)
class SupportSet:
    """Traces of all sites on the minimal sphere S(x0, r0).

    parts[i] is a tuple of SupportPart pieces for site i; an empty tuple
    means the site does not reach the sphere.  Directions are unit vectors
    seen from x0 (multiply by r0 and add x0 for ambient points).
    """

    x0: np.ndarray
    r0: float
    site_ids: list
    parts: tuple

    @property
    def dim(self):
        return self.x0.shape[0]

    @property
    def k(self):
        return len(self.parts)

    def nonempty(self):
        return [i for i, p in enumerate(self.parts) if p]

    def geodesic_matrix(self, U: np.ndarray) -> np.ndarray:
        """(n, k) great-circle distances from unit directions U to each
        support; +inf columns for empty supports."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        G = np.full((U.shape[0], self.k), np.inf)
        for i, ps in enumerate(self.parts):
            if ps:
                G[:, i] = np.min([p.geodesic_to(U) for p in ps], axis=0)
        return G

    def sample_points(self, i: int, n_circle: int = 512) -> np.ndarray:
        """Ambient sample points of support i (empty (0, dim) if none)."""
        if not self.parts[i]:
            return np.zeros((0, self.dim))
        dirs = np.concatenate([p.sample_dirs(n_circle) for p in self.parts[i]])
        return self.x0 + self.r0 * dirs


def min_distance_profile(scene, x0, tol: float = 1e-9):
    """Minimal site distance r0 at x0 and the indices attaining it.

    Raises when x0 lies inside a site (r0 = 0), where no first-contact
    sphere exists.
    """
    x0 = np.asarray(x0, dtype=float)
    D = scene.distance_matrix(x0[None, :])[0]
    r0 = float(D.min())
    if r0 <= 1e-12:
        raise SceneError(f"base point {x0.tolist()} lies inside a site (r0 = 0)")
    achieving = [i for i in range(len(D)) if D[i] <= r0 + tol]
    return r0, achieving


def support_sets(scene, x0) -> SupportSet:
    """Intersect every site with the minimal sphere around x0."""
    x0 = np.asarray(x0, dtype=float)
    r0, _ = min_distance_profile(scene, x0)
    parts = []
    for s in scene.sites:
        ps = []
        for p in s.primitives:
            ps.extend(p.support_on_sphere(x0, r0))
        parts.append(tuple(ps))
    return SupportSet(x0=x0, r0=r0, site_ids=scene.site_ids(), parts=tuple(parts))


def geodesic_distance(u, v) -> float:
    """Great-circle distance arccos(u . v) between unit vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    for w in (u, v):
        if abs(np.linalg.norm(w) - 1.0) > 1e-10:
            raise ValueError(f"geodesic_distance needs unit vectors, |w| = "
                             f"{np.linalg.norm(w):.12g}")
    return float(np.arccos(np.clip(np.dot(u, v), -1.0, 1.0)))


def label_directions(support: SupportSet, U: np.ndarray):
    """Nearest-support labels and margins for unit directions U."""
    G = support.geodesic_matrix(U)
    lab = np.argmin(G, axis=1).astype(np.int32)
    two = np.partition(G, 1, axis=1)
    return lab, two[:, 1] - two[:, 0]


# ---------------------------------------------------------------------------
# icosphere


@lru_cache(maxsize=None)
def _icosphere_cached(level: int):
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts = _unit_rows(verts)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    for _ in range(level):
        vlist = list(verts)
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            got = cache.get(key)
            if got is None:
                m = vlist[a] + vlist[b]
                m = m / np.linalg.norm(m)
                got = len(vlist)
                vlist.append(m)
                cache[key] = got
            return got

        new_faces = []
        for a, b, c in faces:
            ab = midpoint(int(a), int(b))
            bc = midpoint(int(b), int(c))
            ca = midpoint(int(c), int(a))
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc),
                              (ab, bc, ca)])
        verts = np.asarray(vlist)
        faces = np.asarray(new_faces, dtype=np.int64)
    verts.setflags(write=False)
    faces.setflags(write=False)
    return verts, faces


def icosphere(level: int = 6):
    """Subdivided icosahedron on the unit sphere: (vertices, faces).

    Level 6 has 40962 near-uniform vertices; construction is deterministic
    and cached.
    """
    return _icosphere_cached(int(level))


# ---------------------------------------------------------------------------
# spherical conflict sets


@dataclass(eq=False)
class SphericalComplex:
    """Conflict set of the supports on the unit direction sphere.

    dirs are unit vectors; on S^1 the conflict set is the finite dirs list
    (arcs empty), on S^2 arcs joins dirs into curve segments.  pairs holds
    the two support indices per vertex ((-1, -1) at junction vertices).
    """

    x0: np.ndarray
    r0: float
    dim: int
    site_ids: list
    excluded_site_ids: list
    resolution: int
    dirs: np.ndarray         # (N, dim)
    residuals: np.ndarray    # (N,) angular
    pairs: np.ndarray        # (N, 2)
    arcs: np.ndarray         # (M, 2) indices into dirs
    arc_pairs: np.ndarray    # (M, 2)
    junctions: np.ndarray    # (J,) indices into dirs

    @property
    def n_vertices(self):
        return self.dirs.shape[0]

    def summary(self) -> dict:
        return {
            "dim": self.dim,
            "n_vertices": int(self.dirs.shape[0]),
            "n_arcs": int(self.arcs.shape[0]),
            "n_junctions": int(self.junctions.shape[0]),
            "max_residual": float(self.residuals.max()) if self.residuals.size else 0.0,
            "excluded_sites": list(self.excluded_site_ids),
        }


def _conflict_s1(support: SupportSet, n_scan: int, tol, min_tol):
    th = np.linspace(0.0, 2.0 * math.pi, n_scan, endpoint=False)
    U = np.column_stack([np.cos(th), np.sin(th)])
    G = support.geodesic_matrix(U)
    lab = np.argmin(G, axis=1)
    nxt = np.roll(np.arange(n_scan), -1)
    cross = lab != lab[nxt]
    idx = np.nonzero(cross)[0]
    if idx.size == 0:
        return (np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2), np.int32))
    a = th[idx]
    b = th[idx] + (2.0 * math.pi / n_scan)
    ia = lab[idx]
    ib = lab[nxt[idx]]

    def gmat(ang):
        return support.geodesic_matrix(np.column_stack([np.cos(ang), np.sin(ang)]))

    rows = np.arange(idx.size)
    lo, hi = a.copy(), b.copy()
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        Gm = gmat(mid)
        f = Gm[rows, ia] - Gm[rows, ib]
        pos = f > 0
        hi[pos] = mid[pos]
        lo[~pos] = mid[~pos]
    ang = 0.5 * (lo + hi)
    Gm = gmat(ang)
    gi = Gm[rows, ia]
    gj = Gm[rows, ib]
    resid = np.abs(gi - gj)
    excess = np.maximum(gi, gj) - Gm.min(axis=1)
    keep = excess <= min_tol
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])[keep]
    pairs = np.column_stack([np.minimum(ia, ib), np.maximum(ia, ib)])[keep]
    return dirs, resid[keep], pairs.astype(np.int32)


def _slerp_bisect(support, A, B, ia, ib):
    lo = A.copy()
    hi = B.copy()
    rows = np.arange(A.shape[0])
    for _ in range(_BISECT_ITERS):
        mid = _unit_rows(lo + hi)
        G = support.geodesic_matrix(mid)
        f = G[rows, ia] - G[rows, ib]
        pos = f > 0
        hi[pos] = mid[pos]
        lo[~pos] = mid[~pos]
    x = _unit_rows(lo + hi)
    G = support.geodesic_matrix(x)
    gi = G[rows, ia]
    gj = G[rows, ib]
    return x, np.abs(gi - gj), np.maximum(gi, gj) - G.min(axis=1)


def _refine_sphere_junction(support, c, labels3, tol=ANGULAR_TOL, iters=40):
    """Newton in the tangent plane for a direction equidistant to three
    supports; finite-difference Jacobian.  None when the target residual
    is not reached."""
    i, j, k = labels3
    x = np.asarray(c, dtype=float)
    x = x / np.linalg.norm(x)
    h = 1e-7
    for _ in range(iters):
        G = support.geodesic_matrix(x[None, :])[0]
        F = np.array([G[i] - G[j], G[i] - G[k]])
        if np.max(np.abs(F)) <= tol:
            return x, float(np.max(np.abs(F)))
        # tangent basis at x
        m = int(np.argmin(np.abs(x)))
        e = np.zeros(3)
        e[m] = 1.0
        u = np.cross(x, e)
        u /= np.linalg.norm(u)
        v = np.cross(x, u)
        J = np.empty((2, 2))
        for col, t in enumerate((u, v)):
            xp = _unit_rows((x + h * t)[None, :])[0]
            xm = _unit_rows((x - h * t)[None, :])[0]
            Gp = support.geodesic_matrix(xp[None, :])[0]
            Gm = support.geodesic_matrix(xm[None, :])[0]
            J[0, col] = ((Gp[i] - Gp[j]) - (Gm[i] - Gm[j])) / (2 * h)
            J[1, col] = ((Gp[i] - Gp[k]) - (Gm[i] - Gm[k])) / (2 * h)
        try:
            st = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        sn = float(np.linalg.norm(st))
        if sn > 0.5:
            st *= 0.5 / sn
        x = _unit_rows((x + st[0] * u + st[1] * v)[None, :])[0]
    G = support.geodesic_matrix(x[None, :])[0]
    F = np.array([G[i] - G[j], G[i] - G[k]])
    if np.max(np.abs(F)) <= tol:
        return x, float(np.max(np.abs(F)))
    return None


def _conflict_s2(support: SupportSet, level: int, tol, min_tol):
    V, F = icosphere(level)
    lab, _ = label_directions(support, V)
    lab = lab.astype(np.int64)

    f01 = np.sort(F[:, [0, 1]], axis=1)
    f12 = np.sort(F[:, [1, 2]], axis=1)
    f20 = np.sort(F[:, [2, 0]], axis=1)
    alledges = np.concatenate([f01, f12, f20])
    cross = lab[alledges[:, 0]] != lab[alledges[:, 1]]
    ce = alledges[cross]
    keys = ce[:, 0] * V.shape[0] + ce[:, 1]
    uniq = np.unique(keys)
    eu = uniq // V.shape[0]
    ev = uniq % V.shape[0]
    lu = lab[eu]
    lv = lab[ev]
    loL = np.minimum(lu, lv)
    a_is_u = lu == loL
    A = np.where(a_is_u[:, None], V[eu], V[ev])
    B = np.where(a_is_u[:, None], V[ev], V[eu])
    roots, resid, excess = _slerp_bisect(support, A, B, loL, np.maximum(lu, lv))
    keep = excess <= min_tol
    root_idx = -np.ones(uniq.size, dtype=np.int64)
    root_idx[keep] = np.arange(int(keep.sum()))
    key_to_pos = {int(k): p for p, k in enumerate(uniq)}

    dirs = [roots[keep]]
    residuals = [resid[keep]]
    pairs = [np.column_stack([loL, np.maximum(lu, lv)])[keep].astype(np.int32)]
    nv = int(keep.sum())
    arcs = []
    arc_pairs = []
    junctions = []

    lf = lab[F]  # (nf, 3)
    distinct2 = ((lf[:, 0] != lf[:, 1]) | (lf[:, 0] != lf[:, 2]))
    for fi in np.nonzero(distinct2)[0]:
        tri = F[fi]
        ls = lf[fi]
        labset = sorted(set(int(x) for x in ls))
        epos = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            if ls[a] != ls[b]:
                va, vb = sorted((int(tri[a]), int(tri[b])))
                p = key_to_pos[va * V.shape[0] + vb]
                r = root_idx[p]
                if r >= 0:
                    epos.append(int(r))
        if len(labset) == 2:
            if len(epos) == 2:
                arcs.append((epos[0], epos[1]))
                arc_pairs.append((labset[0], labset[1]))
        else:
            c = _unit_rows(np.mean([dirs[0][e] for e in epos], axis=0)[None, :])[0] \
                if epos else _unit_rows(V[tri].mean(axis=0)[None, :])[0]
            got = _refine_sphere_junction(support, c, labset[:3])
            if got is None:
                continue
            xj, rj = got
            jid = nv
            nv += 1
            dirs.append(xj[None, :])
            residuals.append(np.array([rj]))
            pairs.append(np.array([[-1, -1]], dtype=np.int32))
            junctions.append(jid)
            for e in epos:
                arcs.append((jid, e))
                arc_pairs.append(tuple(pairs[0][e]))

    dirs = np.concatenate(dirs) if dirs else np.zeros((0, 3))
    residuals = np.concatenate(residuals) if residuals else np.zeros(0)
    pairs = np.concatenate(pairs) if pairs else np.zeros((0, 2), np.int32)
    arcs = np.asarray(arcs, dtype=np.int64).reshape(-1, 2)
    arc_pairs = np.asarray(arc_pairs, dtype=np.int32).reshape(-1, 2)
    return dirs, residuals, pairs, arcs, arc_pairs, \
        np.asarray(junctions, dtype=np.int64)


def spherical_conflict(support: SupportSet, resolution: Optional[int] = None,
                       tol: float = ANGULAR_TOL,
                       min_tol: float = MINIMALITY_TOL) -> SphericalComplex:
    """Conflict set of the supports on the direction sphere.

    resolution is the scan count on S^1 (default 2048) and the icosphere
    subdivision level on S^2 (default 6).  Sites with empty supports are
    excluded and recorded.
    """
    nonempty = support.nonempty()
    if len(nonempty) < 2:
        raise SceneError(
            f"spherical conflict needs at least two nonempty supports, "
            f"got {len(nonempty)}")
    excluded = [support.site_ids[i] for i in range(support.k)
                if i not in nonempty]
    if support.dim == 2:
        n_scan = 2048 if resolution is None else int(resolution)
        dirs, resid, pairs = _conflict_s1(support, n_scan, tol, min_tol)
        arcs = np.zeros((0, 2), dtype=np.int64)
        arc_pairs = np.zeros((0, 2), dtype=np.int32)
        junctions = np.zeros(0, dtype=np.int64)
        resolution = n_scan
    else:
        level = 6 if resolution is None else int(resolution)
        dirs, resid, pairs, arcs, arc_pairs, junctions = _conflict_s2(
            support, level, tol, min_tol)
        resolution = level
    return SphericalComplex(
        x0=support.x0, r0=support.r0, dim=support.dim,
        site_ids=support.site_ids, excluded_site_ids=excluded,
        resolution=resolution, dirs=dirs, residuals=resid, pairs=pairs,
        arcs=arcs, arc_pairs=arc_pairs, junctions=junctions)


# ---------------------------------------------------------------------------
# cones


@dataclass(frozen=True, eq=False)
class ConeApprox:
    """Cone over a direction set: the union of rays from the apex."""

    apex: np.ndarray
    dirs: np.ndarray  # (N, dim) unit

    def points(self, radii: Sequence[float]) -> np.ndarray:
        rs = np.asarray(list(radii), dtype=float)
        if np.any(rs <= 0):
            raise ValueError("cone radii must be positive")
        return (self.apex[None, None, :]
                + rs[:, None, None] * self.dirs[None, :, :]).reshape(-1, self.apex.shape[0])

    def ray_distance(self, pts: np.ndarray) -> np.ndarray:
        """Distance from points to the nearest ray of the cone."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v = pts - self.apex
        t = np.maximum(v @ self.dirs.T, 0.0)  # (n, N)
        d2 = np.sum(v * v, axis=1)[:, None] - 2 * t * (v @ self.dirs.T) + t * t
        return np.sqrt(np.maximum(d2.min(axis=1), 0.0))


def cone(x0, spherical: SphericalComplex, radii: Sequence[float]) -> np.ndarray:
    """Point cloud {x0 + r u} over the spherical complex's directions."""
    x0 = np.asarray(x0, dtype=float)
    return ConeApprox(apex=x0, dirs=spherical.dirs).points(radii)


# ---------------------------------------------------------------------------
# annular shadow


def annular_shadow(support: SupportSet, eps: float, n_radial: int = 9,
                   max_dirs_per_part: int = 512) -> Scene:
    """Scene of radial thickenings {x0 + t u : t in [r0, r0+eps]} of the
    nonempty supports, as dense point samples along the rays.

    The inner endpoints t = r0 are sampled exactly, so for query points
    within r0/3 of x0 the distances to a thickened site and to its support
    agree exactly.  Disjointness of the thickened sites is validated; the
    error names the offending pair.
    """
    if eps <= 0:
        raise SceneError("shadow thickness eps must be positive")
    nonempty = support.nonempty()
    if len(nonempty) < 2:
        raise SceneError("annular shadow needs at least two nonempty supports")
    ts = np.linspace(support.r0, support.r0 + eps, int(n_radial))
    sites = []
    for i in nonempty:
        dir_blocks = []
        for p in support.parts[i]:
            d = p.sample_dirs()
            if d.shape[0] > max_dirs_per_part:
                stride = int(math.ceil(d.shape[0] / max_dirs_per_part))
                d = d[::stride]
            dir_blocks.append(d)
        dirs = np.concatenate(dir_blocks)
        pts = (support.x0[None, None, :]
               + ts[:, None, None] * dirs[None, :, :]).reshape(-1, support.dim)
        sites.append(Site(support.site_ids[i], (PointSet(pts),)))
    return make_scene(support.dim, sites, metric="euclidean", check=True)

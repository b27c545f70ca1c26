"""Tangent cones of conflict sets via rescaled sphere slices.

The tangent cone at x0 is the cone over the Hausdorff limit of the
rescaled slices N_eps = (1/eps)(Y ∩ S(x0, eps) − x0).  We replace the
limit by a strictly decreasing eps schedule and report the Hausdorff
distance of each rescaled slice to a reference direction set, with a
monotone-within-jitter verdict.  For conflict sets the reference is the
spherical conflict set of the supports at x0, which the theory predicts
to be exactly the tangent direction set.

Distances between direction sets use the chordal (Euclidean) metric on
unit vectors: equivalent to the geodesic metric up to a factor below
pi/2, and exactly computable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .conflict import ConflictComplex, Window, extract_conflict
from .scene import SceneError
from .spherical import ConeApprox, SphericalComplex, label_directions, \
    min_distance_profile, spherical_conflict, support_sets

__all__ = [
    "RescaledSlice",
    "TangentReport",
    "sphere_slice",
    "hausdorff",
    "tangent_cone_estimate",
    "verify_tangent_cone",
    "territory_direction_agreement",
]

#: pad factor between the largest slice radius and the extraction window
WINDOW_PAD = 1.125
#: default acceptance tolerance on the final-slice Hausdorff distance
ACCEPT_TOL = 0.05
#: allowed relative increase between consecutive Hausdorff values
JITTER = 0.2

# chordal distances below this are indistinguishable from rounding noise
MONOTONE_FLOOR = 1e-7


@dataclass(frozen=True, eq=False)
class RescaledSlice:
    """Unit directions of the complex's intersection with S(x0, eps)."""

    x0: np.ndarray
    eps: float
    dirs: np.ndarray  # (N, dim)

    @property
    def n(self):
        return self.dirs.shape[0]


@dataclass(eq=False)
class TangentReport:
    """Convergence diagnostics of rescaled slices toward a direction set."""

    eps: list
    d_to_reference: list      # per-eps Hausdorff to the reference set (may be empty)
    d_successive: list        # Hausdorff between consecutive slices
    verdict: Optional[str]    # "PASS" / "FAIL" / None when no reference
    accept_tol: float = ACCEPT_TOL
    jitter: float = JITTER
    excluded_sites: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "eps": [float(e) for e in self.eps],
            "d_to_spherical": [float(d) for d in self.d_to_reference],
            "d_successive": [float(d) for d in self.d_successive],
            "verdict": self.verdict,
            "accept_tol": self.accept_tol,
            "jitter": self.jitter,
            "excluded_sites": list(self.excluded_sites),
            "notes": self.notes,
        }


def _edge_circle_roots(A, B, x0, eps):
    """Parameters t in [0, 1] where segments [A, B] cross S(x0, eps).

    Returns (rows, ts): segment indices with one entry per crossing.
    """
    d = B - A
    w = A - x0
    a = np.sum(d * d, axis=1)
    b = 2.0 * np.sum(w * d, axis=1)
    c = np.sum(w * w, axis=1) - eps * eps
    disc = b * b - 4 * a * c
    rows = []
    ts = []
    ok = (disc >= 0) & (a > 0)
    sq = np.zeros_like(disc)
    sq[ok] = np.sqrt(disc[ok])
    for sgn in (-1.0, 1.0):
        t = np.full(a.shape, np.nan)
        t[ok] = (-b[ok] + sgn * sq[ok]) / (2 * a[ok])
        m = ok & (t >= 0.0) & (t <= 1.0)
        if sgn > 0:
            # drop the double root at tangency
            m &= disc > 1e-28
        rows.append(np.nonzero(m)[0])
        ts.append(t[m])
    return np.concatenate(rows), np.concatenate(ts)


def sphere_slice(cplx: ConflictComplex, x0, eps: float,
                 samples_per_crossing: int = 8) -> RescaledSlice:
    """Rescaled slice of the complex with the sphere S(x0, eps).

    Edge crossings are exact quadratic roots; in 3D each triangle crossing
    contributes samples_per_crossing points along the crossing chord,
    projected radially onto the sphere.  eps must be at least 3 grid
    spacings (else the slice would live below the resolved scale) and the
    sphere must fit inside the extraction window.
    """
    x0 = np.asarray(x0, dtype=float)
    h = float(np.max(cplx.window.spacing(cplx.res)))
    if eps < 3.0 * h:
        raise SceneError(
            f"slice radius {eps:g} is below the resolved scale (3 grid "
            f"spacings = {3 * h:g}); re-extract in a smaller window")
    if np.any(x0 - eps < cplx.window.lo) or np.any(x0 + eps > cplx.window.hi):
        raise SceneError(
            f"slice sphere of radius {eps:g} around {x0.tolist()} leaves the "
            f"extraction window")
    V = cplx.vertices
    pts = []
    if cplx.dimension == 2:
        E = cplx.edges
        if E.shape[0]:
            A = V[E[:, 0]]
            B = V[E[:, 1]]
            rows, ts = _edge_circle_roots(A, B, x0, eps)
            if rows.size:
                pts.append(A[rows] + ts[:, None] * (B[rows] - A[rows]))
    else:
        T = cplx.triangles
        if T.shape[0]:
            te = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
            te = np.sort(te, axis=1)
            keys = te[:, 0] * (V.shape[0] + 1) + te[:, 1]
            uniq, inv = np.unique(keys, return_inverse=True)
            ue = np.column_stack([uniq // (V.shape[0] + 1),
                                  uniq % (V.shape[0] + 1)])
            A = V[ue[:, 0]]
            B = V[ue[:, 1]]
            rows, ts = _edge_circle_roots(A, B, x0, eps)
            cross_pts = A[rows] + ts[:, None] * (B[rows] - A[rows])
            # crossing points per unique edge (rarely 2 on one edge)
            per_edge = [[] for _ in range(ue.shape[0])]
            for r, p in zip(rows, cross_pts):
                per_edge[r].append(p)
            tri_edge = inv.reshape(3, -1).T  # (nt, 3) unique-edge ids
            s = np.linspace(0.0, 1.0, samples_per_crossing)
            for nt in range(T.shape[0]):
                got = []
                for e in tri_edge[nt]:
                    got.extend(per_edge[e])
                if len(got) < 2:
                    continue
                for i in range(len(got)):
                    for j in range(i + 1, len(got)):
                        seg = got[i][None, :] + s[:, None] * (got[j] - got[i])[None, :]
                        v = seg - x0
                        n = np.linalg.norm(v, axis=1, keepdims=True)
                        pts.append(x0 + eps * v / n)
    if not pts:
        raise SceneError(f"slice at radius {eps:g} around {x0.tolist()} is empty")
    P = np.concatenate(pts)
    dirs = (P - x0) / eps
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    return RescaledSlice(x0=x0, eps=float(eps), dirs=dirs)


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Hausdorff distance between finite point clouds."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("hausdorff needs nonempty clouds")
    dab = cKDTree(B).query(A, k=1)[0].max()
    dba = cKDTree(A).query(B, k=1)[0].max()
    return float(max(dab, dba))


def _check_schedule(eps_schedule):
    eps = [float(e) for e in eps_schedule]
    if len(eps) < 1 or any(e <= 0 for e in eps):
        raise SceneError("eps schedule must contain positive radii")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise SceneError("eps schedule must be strictly decreasing")
    return eps


def tangent_cone_estimate(cplx: ConflictComplex, x0, eps_schedule):
    """Cone-direction estimate from the smallest slice plus convergence data.

    Returns (ConeApprox, TangentReport); the report's d_successive holds
    Hausdorff distances between consecutive rescaled slices.
    """
    eps = _check_schedule(eps_schedule)
    x0 = np.asarray(x0, dtype=float)
    slices = [sphere_slice(cplx, x0, e) for e in eps]
    d_succ = [hausdorff(a.dirs, b.dirs) for a, b in zip(slices, slices[1:])]
    cone = ConeApprox(apex=x0, dirs=slices[-1].dirs)
    report = TangentReport(eps=eps, d_to_reference=[], d_successive=d_succ,
                           verdict=None)
    return cone, report


def verify_tangent_cone(scene, x0, eps_schedule, res: int = 96,
                        sphere_resolution: Optional[int] = None,
                        accept_tol: float = ACCEPT_TOL,
                        jitter: float = JITTER,
                        workers: int = 1) -> TangentReport:
    """End-to-end check that rescaled conflict slices converge to the
    spherical conflict set of the supports.

    Pipeline: extract the conflict set in a window of half-width
    1.125 x max(eps) around x0, slice at every eps, compute the spherical
    conflict set of the supports at x0, and compare each rescaled slice to
    its direction set under the chordal Hausdorff distance.  Verdict PASS
    when the distance sequence is non-increasing within the jitter factor
    and the final value is at most accept_tol.
    """
    eps = _check_schedule(eps_schedule)
    x0 = np.asarray(x0, dtype=float)
    r0, achieving = min_distance_profile(scene, x0)
    if len(achieving) < 2:
        raise SceneError(
            f"{x0.tolist()} is not a conflict point (single nearest site); "
            f"verify-tangent needs at least two achieving sites")
    support = support_sets(scene, x0)
    sph = spherical_conflict(support, resolution=sphere_resolution)
    if sph.dirs.shape[0] == 0:
        raise SceneError("spherical conflict set is empty at the base point")
    window = Window.cube(WINDOW_PAD * eps[0], scene.dimension, center=x0)
    cplx = extract_conflict(scene, window, res, workers=workers)
    d_ref = []
    slices = []
    for e in eps:
        sl = sphere_slice(cplx, x0, e)
        slices.append(sl)
        d_ref.append(hausdorff(sl.dirs, sph.dirs))
    d_succ = [hausdorff(a.dirs, b.dirs) for a, b in zip(slices, slices[1:])]
    # exact-cone scenes sit at float noise, far below anything a mesh can
    # resolve; the jitter gate only applies above that floor
    ok_mono = all(b <= max(a * (1.0 + jitter), MONOTONE_FLOOR)
                  for a, b in zip(d_ref, d_ref[1:]))
    ok_final = d_ref[-1] <= accept_tol
    verdict = "PASS" if (ok_mono and ok_final) else "FAIL"
    return TangentReport(
        eps=eps, d_to_reference=d_ref, d_successive=d_succ, verdict=verdict,
        accept_tol=accept_tol, jitter=jitter,
        excluded_sites=sph.excluded_site_ids,
        notes={"res": int(res), "r0": float(r0),
               "window_half": float(WINDOW_PAD * eps[0]),
               "n_spherical_vertices": int(sph.dirs.shape[0])})


def territory_direction_agreement(scene, x0, n_dirs: int = 500,
                                  probe_frac: float = 0.02,
                                  band: float = 0.05,
                                  seed: int = 0):
    """Spot check that directions into a territory match the spherical one.

    Classifies random unit directions u two ways: by the nearest site at
    the probe point x0 + probe_frac*r0*u, and by the nearest support under
    the geodesic metric.  Directions within the margin band of either
    boundary are excluded.  Returns (agreement fraction, number compared).
    """
    x0 = np.asarray(x0, dtype=float)
    r0, _ = min_distance_profile(scene, x0)
    support = support_sets(scene, x0)
    rng = np.random.default_rng(seed)
    U = rng.normal(size=(n_dirs, scene.dimension))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    probe = x0 + (probe_frac * r0) * U
    D = scene.distance_matrix(probe)
    lab_e = np.argmin(D, axis=1)
    two = np.partition(D, 1, axis=1)
    margin_e = (two[:, 1] - two[:, 0]) / (probe_frac * r0)
    lab_s, margin_s = label_directions(support, U)
    use = (margin_e > band) & (margin_s > band)
    if not np.any(use):
        return 1.0, 0
    agree = float(np.mean(lab_e[use] == lab_s[use]))
    return agree, int(use.sum())

"""Deterministic geometry and report writers.

2D complexes export as CSV polylines (one row per polyline vertex), 3D
complexes as OBJ meshes with one group per site pair plus a JSON sidecar
carrying residuals and flags.  Spherical complexes use the same
conventions with directions recorded in unit coordinates.  All floats are
written in shortest round-trip decimal form and all JSON is emitted with
sorted keys, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, List

import numpy as np

from .conflict import ConflictComplex
from .scene import SceneError
from .spherical import SphericalComplex, SupportSet

__all__ = [
    "polylines_2d",
    "write_complex_csv",
    "write_complex_obj",
    "write_spherical_csv",
    "write_spherical_obj",
    "write_supports_csv",
    "write_report",
]


def _f(x) -> str:
    return repr(float(x))


def polylines_2d(cplx: ConflictComplex) -> List[List[int]]:
    """Split the edge graph into maximal chains.

    Chains end at vertices of degree != 2 (endpoints, junctions); leftover
    pure cycles are emitted starting at their smallest vertex id.  The
    traversal is deterministic: seeds ascend, and at a fork the smallest
    unvisited neighbor wins.
    """
    E = np.asarray(cplx.edges, dtype=np.int64)
    if E.shape[0] == 0:
        return []
    nbrs: dict = {}
    for a, b in E:
        nbrs.setdefault(int(a), []).append(int(b))
        nbrs.setdefault(int(b), []).append(int(a))
    for v in nbrs:
        nbrs[v].sort()
    used = set()

    def walk(start, first):
        chain = [start, first]
        used.add((min(start, first), max(start, first)))
        prev, cur = start, first
        while len(nbrs[cur]) == 2:
            nxt = nbrs[cur][0] if nbrs[cur][0] != prev else nbrs[cur][1]
            key = (min(cur, nxt), max(cur, nxt))
            if key in used:
                break
            used.add(key)
            chain.append(nxt)
            prev, cur = cur, nxt
        return chain

    chains = []
    for v in sorted(nbrs):
        if len(nbrs[v]) == 2:
            continue
        for w in nbrs[v]:
            key = (min(v, w), max(v, w))
            if key not in used:
                chains.append(walk(v, w))
    # remaining cycles
    for v in sorted(nbrs):
        for w in nbrs[v]:
            key = (min(v, w), max(v, w))
            if key not in used:
                chains.append(walk(v, w))
    return chains


def write_complex_csv(cplx: ConflictComplex, path: str) -> str:
    """2D complex as CSV: vx, vy, residual, pair_i, pair_j, polyline_id."""
    if cplx.dimension != 2:
        raise SceneError("CSV export is for 2D complexes; use OBJ in 3D")
    lines = ["vx,vy,residual,pair_i,pair_j,polyline_id"]
    for pid, chain in enumerate(polylines_2d(cplx)):
        for v in chain:
            x, y = cplx.vertices[v]
            pi, pj = cplx.vertex_pairs[v]
            lines.append(f"{_f(x)},{_f(y)},{_f(cplx.residuals[v])},"
                         f"{int(pi)},{int(pj)},{pid}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _pair_groups(pairs: np.ndarray) -> list:
    uniq = sorted({(int(a), int(b)) for a, b in pairs})
    return uniq


def write_complex_obj(cplx: ConflictComplex, base: str):
    """3D complex as OBJ (one group per site pair) plus a JSON sidecar.

    Returns (obj_path, sidecar_path).
    """
    if cplx.dimension != 3:
        raise SceneError("OBJ export is for 3D complexes; use CSV in 2D")
    obj_path = base + ".obj"
    side_path = base + ".json"
    out = []
    for v in cplx.vertices:
        out.append(f"v {_f(v[0])} {_f(v[1])} {_f(v[2])}")
    T = np.asarray(cplx.triangles, dtype=np.int64)
    P = np.asarray(cplx.triangle_pairs, dtype=np.int64)
    for (a, b) in _pair_groups(P) if T.shape[0] else []:
        out.append(f"g pair_{a}_{b}")
        sel = np.nonzero((P[:, 0] == a) & (P[:, 1] == b))[0]
        for t in sel:
            i, j, k = T[t] + 1
            out.append(f"f {i} {j} {k}")
    with open(obj_path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    sidecar = {
        "site_ids": list(cplx.site_ids),
        "summary": cplx.summary(),
        "window": {"lo": list(cplx.window.lo), "hi": list(cplx.window.hi)},
        "residuals": [float(r) for r in cplx.residuals],
        "junction_cells": [list(map(float, c)) for c in cplx.junction_cells],
        "flags": {
            "tie_fraction": float(cplx.tie_fraction),
            "n_tie_cells": int(cplx.n_tie_cells),
            "n_ambiguous_cells": int(cplx.junction_cells.shape[0]),
        },
    }
    write_report(side_path, sidecar)
    return obj_path, side_path


def write_spherical_csv(sph: SphericalComplex, path: str) -> str:
    """S1 conflict set as CSV: ux, uy, residual, pair_i, pair_j, point_id."""
    if sph.dim != 2:
        raise SceneError("CSV export is for circle conflicts; use OBJ on S2")
    lines = ["ux,uy,residual,pair_i,pair_j,point_id"]
    for i, u in enumerate(sph.dirs):
        pi, pj = sph.pairs[i]
        lines.append(f"{_f(u[0])},{_f(u[1])},{_f(sph.residuals[i])},"
                     f"{int(pi)},{int(pj)},{i}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_spherical_obj(sph: SphericalComplex, base: str):
    """S2 conflict set as OBJ line elements in unit coordinates, plus a
    JSON sidecar.  Returns (obj_path, sidecar_path)."""
    if sph.dim != 3:
        raise SceneError("OBJ export is for sphere conflicts; use CSV on S1")
    obj_path = base + ".obj"
    side_path = base + ".json"
    out = []
    for u in sph.dirs:
        out.append(f"v {_f(u[0])} {_f(u[1])} {_f(u[2])}")
    A = np.asarray(sph.arcs, dtype=np.int64)
    P = np.asarray(sph.arc_pairs, dtype=np.int64)
    for (a, b) in _pair_groups(P) if A.shape[0] else []:
        out.append(f"g pair_{a}_{b}")
        sel = np.nonzero((P[:, 0] == a) & (P[:, 1] == b))[0]
        for t in sel:
            i, j = A[t] + 1
            out.append(f"l {i} {j}")
    with open(obj_path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    side = {
        "x0": [float(v) for v in np.atleast_1d(sph.x0)],
        "r0": float(sph.r0),
        "site_ids": list(sph.site_ids),
        "summary": sph.summary(),
        "residuals": [float(r) for r in sph.residuals],
    }
    write_report(side_path, side)
    return obj_path, side_path


def write_supports_csv(support: SupportSet, path: str,
                       n_circle: int = 512) -> str:
    """Support directions as CSV: site, part, kind, then unit coordinates."""
    dim = support.dim
    cols = "ux,uy" if dim == 2 else "ux,uy,uz"
    lines = [f"site,part,kind,{cols}"]
    for i, sid in enumerate(support.site_ids):
        for j, part in enumerate(support.parts[i]):
            U = part.sample_dirs(n_circle=n_circle)
            for u in U:
                coords = ",".join(_f(c) for c in u)
                lines.append(f"{sid},{j},{part.kind},{coords}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_report(path: str, payload: dict) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path

"""Command-line entry point.

One binary, subcommand style.  Every run writes geometry (CSV/OBJ) and a
JSON report; exit code 0 on success/PASS, 1 when a verdict is FAIL, 2 on
usage or input errors.  All numeric defaults live in the CONFIG table
below, and a fixed configuration produces byte-identical output files at
any worker count.
"""

from __future__ import annotations

import argparse
import re
import sys

import numpy as np

from . import io as cio
from .conflict import Window, extract_conflict
from .demo import run_demo
from .metrics import (build_geodesic_graph, dimension_check, embedding_scan,
                      link_components, no_cusp_check)
from .scene import SceneError, load_scene
from .spherical import min_distance_profile, spherical_conflict, support_sets
from .tangent import verify_tangent_cone

# every numeric default used by the subcommands, in one place
CONFIG = {
    "res_2d": 128,            # extraction resolution in the plane
    "res_3d": 96,             # extraction resolution in space
    "eps": (0.4, 0.2, 0.1, 0.05),   # slice radii for verify-tangent
    "scales": (0.4, 0.2, 0.1),      # probe scales for the embedding scan
    "embed_res": 144,         # extraction resolution for inner distances
    "accept_tol": 0.05,       # final-slice Hausdorff acceptance
    "min_angle_deg": 2.0,     # cusp threshold on branch angles
    "no_cusp_eps": (0.12, 0.09, 0.06),  # slice radii for the cusp check
    "window_pad": 1.125,      # window half-width / largest slice radius
    "link_window_pad": 1.6,   # window half-width / link radius
    "seed": 0,
    "workers": 1,
    "out": "conflict_out",
}


def _floats(text):
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, "
                                         f"got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _window_from(vals, dim) -> Window:
    if len(vals) == 2:
        lo = tuple(vals[0] for _ in range(dim))
        hi = tuple(vals[1] for _ in range(dim))
    elif len(vals) == 2 * dim:
        lo = tuple(vals[0::2])
        hi = tuple(vals[1::2])
    else:
        raise SceneError(
            f"--window needs 2 or {2 * dim} values for a {dim}D scene, "
            f"got {len(vals)}")
    return Window(lo, hi)


def _at_point(vals, dim):
    if vals is None:
        raise SceneError("--at is required for this subcommand")
    if len(vals) != dim:
        raise SceneError(f"--at needs {dim} coordinates, got {len(vals)}")
    return np.array(vals, dtype=float)


def _config_echo(args, fields):
    """Reproducibility echo for reports.  Worker count is omitted on
    purpose: it must never influence output bytes."""
    out = {"command": args.command}
    for f in fields:
        v = getattr(args, f, None)
        if isinstance(v, tuple):
            v = list(v)
        out[f] = v
    return out


def _default_res(scene):
    return CONFIG["res_2d"] if scene.dimension == 2 else CONFIG["res_3d"]


def _write_geometry(cplx, base):
    if cplx.dimension == 2:
        return [cio.write_complex_csv(cplx, base + ".csv")]
    return list(cio.write_complex_obj(cplx, base))


def cmd_extract(args) -> int:
    scene = load_scene(args.scene)
    res = args.res or _default_res(scene)
    window = _window_from(args.window, scene.dimension)
    cplx = extract_conflict(scene, window, res, workers=args.workers)
    paths = _write_geometry(cplx, args.out)
    report = {
        "config": _config_echo(args, ["scene", "window", "res"]),
        "summary": cplx.summary(),
        "geometry": [p.replace("\\", "/") for p in paths],
    }
    cio.write_report(args.out + ".report.json", report)
    s = cplx.summary()
    print(f"extracted {s['n_vertices']} vertices, "
          f"{s['n_edges'] or s['n_triangles']} cells, "
          f"tie fraction {s['tie_fraction']:g} -> {paths[0]}")
    return 0


def cmd_supports(args) -> int:
    scene = load_scene(args.scene)
    x0 = _at_point(args.at, scene.dimension)
    r0, achieving = min_distance_profile(scene, x0)
    support = support_sets(scene, x0)
    path = cio.write_supports_csv(support, args.out + ".supports.csv")
    report = {
        "config": _config_echo(args, ["scene", "at"]),
        "r0": r0,
        "achieving_sites": [scene.site_ids()[i] for i in achieving],
        "parts": {
            sid: [p.kind for p in support.parts[i]]
            for i, sid in enumerate(support.site_ids)
        },
        "geometry": [path],
    }
    cio.write_report(args.out + ".report.json", report)
    print(f"r0 = {r0:g}, achieving sites: "
          f"{', '.join(report['achieving_sites'])} -> {path}")
    return 0


def cmd_sphere_conf(args) -> int:
    scene = load_scene(args.scene)
    x0 = _at_point(args.at, scene.dimension)
    support = support_sets(scene, x0)
    sph = spherical_conflict(support, resolution=args.res)
    if sph.dim == 2:
        paths = [cio.write_spherical_csv(sph, args.out + ".csv")]
    else:
        paths = list(cio.write_spherical_obj(sph, args.out))
    report = {
        "config": _config_echo(args, ["scene", "at", "res"]),
        "summary": sph.summary(),
        "geometry": paths,
    }
    cio.write_report(args.out + ".report.json", report)
    print(f"spherical conflict: {sph.dirs.shape[0]} vertices, "
          f"{sph.arcs.shape[0]} arcs -> {paths[0]}")
    return 0


def cmd_verify_tangent(args) -> int:
    scene = load_scene(args.scene)
    x0 = _at_point(args.at, scene.dimension)
    eps = args.eps or CONFIG["eps"]
    res = args.res or _default_res(scene)
    tol = args.tol or CONFIG["accept_tol"]
    report = verify_tangent_cone(scene, x0, eps, res=res, accept_tol=tol,
                                 workers=args.workers)
    payload = report.to_dict()
    payload["config"] = _config_echo(args, ["scene", "at", "eps", "res",
                                            "tol"])
    path = args.report or (args.out + ".report.json")
    cio.write_report(path, payload)
    ds = ", ".join(f"{d:.4f}" for d in report.d_to_reference)
    print(f"verify-tangent: d_to_spherical = [{ds}] -> {report.verdict}")
    return 0 if report.verdict == "PASS" else 1


def cmd_embedding(args) -> int:
    scene = load_scene(args.scene)
    x0 = _at_point(args.at, scene.dimension)
    scales = args.scales or CONFIG["scales"]
    res = args.res or CONFIG["embed_res"]
    if args.window:
        window = _window_from(args.window, scene.dimension)
    else:
        window = Window.cube(CONFIG["window_pad"] * max(scales),
                             scene.dimension, center=x0)
    cplx = extract_conflict(scene, window, res, workers=args.workers)
    graph = build_geodesic_graph(cplx)
    rep = embedding_scan(graph, cplx, x0, scales)
    payload = rep.to_dict()
    payload["config"] = _config_echo(args, ["scene", "at", "scales", "res"])
    cio.write_report(args.out + ".report.json", payload)
    rs = ", ".join(f"{r:.3f}" for r in rep.ratios)
    print(f"embedding: ratios [{rs}] -> {rep.verdict}")
    return 0


def cmd_no_cusp(args) -> int:
    scene = load_scene(args.scene)
    y0 = _at_point(args.at, scene.dimension)
    eps = args.eps or CONFIG["no_cusp_eps"]
    res = args.res or CONFIG["res_2d"]
    min_angle = args.tol or CONFIG["min_angle_deg"]
    rep = no_cusp_check(scene, y0, eps_schedule=eps, min_angle_deg=min_angle,
                        res=res, workers=args.workers)
    rep["config"] = _config_echo(args, ["scene", "at", "eps", "res", "tol"])
    cio.write_report(args.out + ".report.json", rep)
    print(f"no-cusp: {rep['n_branches']} branches, min angle "
          f"{min(rep['pairwise_angles_deg'] or [float('nan')]):.2f} deg "
          f"-> {rep['verdict']}")
    return 0 if rep["verdict"] == "PASS" else 1


def cmd_link(args) -> int:
    scene = load_scene(args.scene)
    x0 = _at_point(args.at, scene.dimension)
    if args.eps is None or len(args.eps) != 1:
        raise SceneError("--eps needs exactly one radius for link counting")
    eps = args.eps[0]
    res = args.res or _default_res(scene)
    if args.window:
        window = _window_from(args.window, scene.dimension)
    else:
        window = Window.cube(CONFIG["link_window_pad"] * eps,
                             scene.dimension, center=x0)
    cplx = extract_conflict(scene, window, res, workers=args.workers)
    count = link_components(cplx, x0, eps)
    report = {
        "config": _config_echo(args, ["scene", "at", "eps", "res"]),
        "eps": eps,
        "components": count,
    }
    cio.write_report(args.out + ".report.json", report)
    print(f"link components at eps={eps:g}: {count}")
    return 0


def cmd_dim_check(args) -> int:
    scene = load_scene(args.scene)
    res = args.res or _default_res(scene)
    window = _window_from(args.window, scene.dimension)
    cplx = extract_conflict(scene, window, res, workers=args.workers)
    rep = dimension_check(cplx)
    rep["config"] = _config_echo(args, ["scene", "window", "res"])
    cio.write_report(args.out + ".report.json", rep)
    print(f"dim-check: {rep['n_cells']} cells of dimension "
          f"{rep['cell_dimension']}, tie fraction {rep['tie_fraction']:g} "
          f"-> {rep['verdict']}")
    return 0 if rep["verdict"] == "PASS" else 1


def cmd_demo(args) -> int:
    summary = run_demo(args.out, workers=args.workers, seed=args.seed)
    print(f"demo: tangent {summary['tangent_verdict']}, embedding "
          f"{summary['embedding_verdict']}, links germ/cone "
          f"{summary['link_germ']}/{summary['link_cone']} -> "
          f"{'PASS' if summary['pass'] else 'FAIL'}")
    return 0 if summary["pass"] else 1


def _add_common(p, scene=True, at=False, window=False, eps=False,
                scales=False):
    if scene:
        p.add_argument("--scene", required=True, help="scene JSON file")
    if at:
        p.add_argument("--at", type=_floats, default=None,
                       help="base point x,y[,z]")
    if window:
        p.add_argument("--window", type=_floats, default=None,
                       help="xmin,xmax or xmin,xmax,ymin,ymax[,zmin,zmax]")
    if eps:
        p.add_argument("--eps", type=_floats, default=None,
                       help="comma-separated slice radii")
    if scales:
        p.add_argument("--scales", type=_floats, default=None,
                       help="comma-separated probe scales")
    p.add_argument("--res", type=int, default=None, help="grid resolution")
    p.add_argument("--tol", type=float, default=None,
                   help="verdict tolerance (distance or degrees)")
    p.add_argument("--seed", type=int, default=CONFIG["seed"])
    p.add_argument("--out", default=CONFIG["out"], help="output base path")
    p.add_argument("--workers", type=int, default=CONFIG["workers"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="conflict",
        description="conflict sets of disjoint sites: extraction, spherical "
                    "conflicts, tangent cones and metric diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract the conflict set in a window")
    _add_common(p, window=True)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("supports", help="supports on the minimal sphere")
    _add_common(p, at=True)
    p.set_defaults(fn=cmd_supports)

    p = sub.add_parser("sphere-conf",
                       help="spherical conflict set of the supports")
    _add_common(p, at=True)
    p.set_defaults(fn=cmd_sphere_conf)

    p = sub.add_parser("verify-tangent",
                       help="rescaled slices vs spherical conflict")
    _add_common(p, at=True, eps=True)
    p.add_argument("--report", default=None, help="report JSON path")
    p.set_defaults(fn=cmd_verify_tangent)

    p = sub.add_parser("embedding", help="inner/outer distance ratio scan")
    _add_common(p, at=True, window=True, scales=True)
    p.set_defaults(fn=cmd_embedding)

    p = sub.add_parser("no-cusp", help="branch angles at a 2D conflict point")
    _add_common(p, at=True, eps=True)
    p.set_defaults(fn=cmd_no_cusp)

    p = sub.add_parser("link", help="link component count at a point")
    _add_common(p, at=True, window=True, eps=True)
    p.set_defaults(fn=cmd_link)

    p = sub.add_parser("dim-check", help="codimension-1 cell validation")
    _add_common(p, window=True)
    p.set_defaults(fn=cmd_dim_check)

    p = sub.add_parser("demo", help="built-in end-to-end demonstration")
    p.add_argument("example", choices=["paper-example"],
                   help="which demonstration to run")
    p.add_argument("--seed", type=int, default=CONFIG["seed"])
    p.add_argument("--out", default="demo_out", help="output directory")
    p.add_argument("--workers", type=int, default=CONFIG["workers"])
    p.set_defaults(fn=cmd_demo)

    return ap


_VALUE_FLAGS = {"--window", "--at", "--eps", "--scales", "--tol"}
_NUMBERY = re.compile(r"^-[\d.][\d.,eE+-]*$")


def _join_negative_values(argv):
    """Glue numeric values that start with a minus sign onto their flag
    (argparse would otherwise read them as options): --at -1,0 -> --at=-1,0."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok in _VALUE_FLAGS and i + 1 < len(argv)
                and _NUMBERY.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = ap.parse_args(_join_negative_values(list(argv)))
    try:
        return args.fn(args)
    except SceneError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

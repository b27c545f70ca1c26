"""Command-line interface: exit codes, argument parsing, report files."""

import json
import subprocess
import sys

import numpy as np
import pytest

from confset.cli import main
from confset.scene import scene_to_dict
from confset.scenes import (circle_points_scene, equilateral_scene,
                            taxicab_pair_scene, two_point_scene,
                            walls_and_poles_scene)


def _write_scene(path, scene):
    path.write_text(json.dumps(scene_to_dict(scene)))
    return str(path)


@pytest.fixture
def two_points(tmp_path):
    return _write_scene(tmp_path / "two_points.json", two_point_scene())


@pytest.fixture
def walls_poles_file(tmp_path):
    return _write_scene(tmp_path / "walls_poles.json", walls_and_poles_scene())


def test_extract_writes_csv_and_report(two_points, tmp_path):
    out = str(tmp_path / "bisector")
    rc = main(["extract", "--scene", two_points,
               "--window", "-2,2", "--res", "64", "--out", out])
    assert rc == 0
    rows = (tmp_path / "bisector.csv").read_text().strip().splitlines()
    assert rows[0].startswith("vx,vy")
    assert len(rows) > 10
    rep = json.loads((tmp_path / "bisector.report.json").read_text())
    assert rep["config"]["res"] == 64
    assert "workers" not in rep["config"]
    assert rep["summary"]["n_vertices"] == len(rows) - 1


def test_window_accepts_negative_separate_token(two_points, tmp_path):
    out = str(tmp_path / "w")
    rc = main(["extract", "--scene", two_points,
               "--window", "-1.5,1.5,-1,1", "--res", "32", "--out", out])
    assert rc == 0
    rep = json.loads((tmp_path / "w.report.json").read_text())
    assert rep["config"]["window"] == [-1.5, 1.5, -1.0, 1.0]


def test_window_arity_error(two_points, tmp_path):
    rc = main(["extract", "--scene", two_points, "--window", "-2,2,0",
               "--out", str(tmp_path / "x")])
    assert rc == 2


def test_missing_scene_file_is_a_usage_error(tmp_path):
    rc = main(["extract", "--scene", str(tmp_path / "nope.json"),
               "--window", "-1,1", "--out", str(tmp_path / "x")])
    assert rc == 2


def test_supports_report(walls_poles_file, tmp_path):
    out = str(tmp_path / "sup")
    rc = main(["supports", "--scene", walls_poles_file,
               "--at", "0,0,0", "--out", out])
    assert rc == 0
    rep = json.loads((tmp_path / "sup.report.json").read_text())
    assert rep["r0"] == pytest.approx(1.0)
    assert sorted(rep["achieving_sites"]) == ["poles", "walls"]
    header = (tmp_path / "sup.supports.csv").read_text().splitlines()[0]
    assert header == "site,part,kind,ux,uy,uz"


def test_sphere_conf_2d_and_3d(tmp_path, walls_poles_file):
    ring = _write_scene(tmp_path / "ring.json", circle_points_scene(5, seed=7))
    rc = main(["sphere-conf", "--scene", ring, "--at", "0,0",
               "--out", str(tmp_path / "s1")])
    assert rc == 0
    assert (tmp_path / "s1.csv").exists()

    rc = main(["sphere-conf", "--scene", walls_poles_file, "--at", "0,0,0",
               "--res", "4", "--out", str(tmp_path / "s2")])
    assert rc == 0
    assert (tmp_path / "s2.obj").exists()
    side = json.loads((tmp_path / "s2.json").read_text())
    assert side["site_ids"] == ["walls", "poles"]


def test_verify_tangent_pass_and_report_flag(two_points, tmp_path):
    rep_path = tmp_path / "deep" / "tangent.json"
    rc = main(["verify-tangent", "--scene", two_points, "--at", "0,0.5",
               "--eps", "0.4,0.2,0.1", "--res", "64",
               "--out", str(tmp_path / "vt"), "--report", str(rep_path)])
    assert rc == 0
    rep = json.loads(rep_path.read_text())
    assert rep["verdict"] == "PASS"
    assert rep["eps"] == [0.4, 0.2, 0.1]
    assert rep["config"]["at"] == [0.0, 0.5]


def test_verify_tangent_at_interior_point_is_input_error(two_points, tmp_path, capsys):
    rc = main(["verify-tangent", "--scene", two_points, "--at", "0.5,0",
               "--out", str(tmp_path / "vt")])
    assert rc == 2
    assert "not a conflict point" in capsys.readouterr().err


def test_no_cusp_exit_codes(tmp_path):
    tri = _write_scene(tmp_path / "tri.json", equilateral_scene())
    rc = main(["no-cusp", "--scene", tri, "--at", "0,0",
               "--out", str(tmp_path / "nc")])
    assert rc == 0
    rep = json.loads((tmp_path / "nc.report.json").read_text())
    assert rep["verdict"] == "PASS"
    assert rep["n_branches"] == 3


def test_link_requires_single_eps(two_points, tmp_path):
    rc = main(["link", "--scene", two_points, "--at", "0,0.5",
               "--eps", "0.3,0.1", "--out", str(tmp_path / "ln")])
    assert rc == 2
    rc = main(["link", "--scene", two_points, "--at", "0,0.5",
               "--eps", "0.3", "--res", "64", "--out", str(tmp_path / "ln")])
    assert rc == 0
    rep = json.loads((tmp_path / "ln.report.json").read_text())
    assert rep["components"] == 2


def test_dim_check_flags_taxicab(two_points, tmp_path):
    rc = main(["dim-check", "--scene", two_points, "--window", "-2,2",
               "--res", "48", "--out", str(tmp_path / "dc")])
    assert rc == 0
    taxi = _write_scene(tmp_path / "taxi.json", taxicab_pair_scene())
    rc = main(["dim-check", "--scene", taxi, "--window", "-1,2",
               "--res", "48", "--out", str(tmp_path / "dt")])
    assert rc == 1
    rep = json.loads((tmp_path / "dt.report.json").read_text())
    assert rep["verdict"] == "FAIL"
    assert rep["tie_fraction"] > 0.05


def test_reports_are_byte_deterministic(two_points, tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    for out, workers in ((a, "1"), (b, "6")):
        rc = main(["extract", "--scene", two_points, "--window", "-2,2",
                   "--res", "48", "--workers", workers, "--out", out])
        assert rc == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    ra = json.loads((tmp_path / "a.report.json").read_text())
    rb = json.loads((tmp_path / "b.report.json").read_text())
    ra.pop("geometry"), rb.pop("geometry")  # differ by the out base only
    assert ra == rb


def test_console_entry_point_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "confset.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    for name in ("extract", "supports", "sphere-conf", "verify-tangent",
                 "embedding", "no-cusp", "link", "dim-check", "demo"):
        assert name in out.stdout


def test_demo_accepts_only_the_known_example():
    rc = subprocess.run([sys.executable, "-m", "confset.cli", "demo",
                         "not-a-demo"], capture_output=True, text=True)
    assert rc.returncode == 2
    assert "paper-example" in rc.stderr

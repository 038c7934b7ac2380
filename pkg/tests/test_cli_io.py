import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normalplanes import curve_families as fam
from normalplanes.cli_io import (
    ENV_TOLERANCES,
    REPORT_SCHEMA,
    format_curve_csv,
    main,
    parse_curve_csv,
    read_curve_csv,
    write_curve_csv,
)
from normalplanes.geom_core import CurveSamples
from normalplanes.sphere_map import SphereAssociation, s1_of_s


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def verify(capsys, path, *extra):
    code, out, err = run(capsys, "verify", "--in", path, *extra)
    doc = json.loads(out) if out else None
    if doc is not None:
        jsonschema.validate(doc, REPORT_SCHEMA)
    return code, doc, err


@pytest.fixture
def plane_csv(tmp_path, capsys):
    path = tmp_path / "plane.csv"
    code, _, _ = run(capsys, "generate", "--family", "plane-involute", "--c", 1, "--epsilon", 1,
                     "--s-min", 1.001, "--s-max", 10, "--samples", 512, "--out", path)
    assert code == 0
    return path


def _row_near(curve, s):
    i = int(np.argmin(np.abs(curve.s_values - s)))
    return curve.s_values[i], curve.points[i]


def test_generate_plane_involute(plane_csv):
    text = plane_csv.read_text()
    assert "\ns,x,y,z\n" in text and "# family: plane-involute" in text and "# param.c: 1.0" in text
    curve, _ = read_curve_csv(plane_csv)
    assert len(curve) == 512 and curve.epsilon == 1
    s, p = _row_near(curve, 2.0)
    assert np.allclose(p, fam.plane_involute_point(1.0, 1, s), atol=1e-14)
    at_two = [np.interp(2.0, curve.s_values, curve.points[:, k]) for k in range(3)]
    assert np.allclose(at_two, [2.7635465, 0.6023373, 0], atol=1e-4)


def test_generate_twisted(tmp_path, capsys):
    path = tmp_path / "tw.csv"
    assert run(capsys, "generate", "--family", "twisted-example", "--c", 1, "--epsilon", 1,
               "--s-min", 1.001, "--s-max", 10, "--out", path)[0] == 0
    curve, _ = read_curve_csv(path)
    at_two = [np.interp(2.0, curve.s_values, curve.points[:, k]) for k in range(3)]
    assert np.allclose(at_two, [1.9085969, 0.5977104, 2.0], atol=1e-4)


def test_generate_domain_violation(capsys):
    code, out, err = run(capsys, "generate", "--family", "plane-involute", "--c", 1, "--epsilon", 1,
                         "--s-min", 0.5, "--s-max", 3)
    assert code == 1 and out == ""
    assert "εs ≥ c²" in error_of(err)["message"]


@pytest.mark.parametrize(
    "argv",
    [
        ["generate", "--family", "nope"],
        ["generate", "--family", "plane-involute"],
        ["generate", "--family", "plane-involute", "--c", "1", "--epsilon", "2"],
        ["generate", "--family", "sphere-circle", "--height", "1.5"],
        ["generate", "--family", "constant-curvature-np", "--r", "1", "--h", "2", "--s-min", "1", "--s-max", "2"],
        ["generate", "--family", "circle-involute", "--radius", "2", "--s-min", "-1", "--s-max", "1"],
        ["verify"],
        ["verify", "--in", "/nonexistent/curve.csv"],
        ["figures", "--figure", "3", "--out-dir", "x"],
        [],
    ],
)
def test_error_paths_are_single_line_json(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert set(error_of(err)) == {"error", "message"}


def test_verify_plane(plane_csv, capsys):
    code, doc, _ = verify(capsys, plane_csv)
    assert code == 0
    assert doc["flags"]["constant_normal_distance"]["value"] and doc["flags"]["plane"]["value"]
    assert doc["distances"]["normal"]["mean"] == pytest.approx(2, abs=1e-6)
    assert doc["claims"]["passed"]
    assert doc["fixed_point"]["rank_deficient_dirs"] == [pytest.approx([0, 0, 1], abs=1e-9)]


def _write(path, s, pts, label=""):
    write_curve_csv(CurveSamples(np.asarray(s), np.asarray(pts), label=label), path)
    return path


def test_verify_unit_circle(tmp_path, capsys):
    s = np.linspace(0, 5, 200)
    path = _write(tmp_path / "c.csv", s, np.stack([np.cos(s), np.sin(s), 0 * s], axis=1), "circle")
    code, doc, _ = verify(capsys, path)
    assert code == 0 and doc["flags"]["spherical"]["value"]


def test_verify_helix(tmp_path, capsys):
    s = np.linspace(0.5, 12, 400)
    w = 1 / np.hypot(1.0, 0.5)
    path = _write(tmp_path / "h.csv", s, np.stack([np.cos(w * s), np.sin(w * s), 0.5 * w * s], axis=1), "helix")
    code, doc, _ = verify(capsys, path)
    assert code == 0
    flag = doc["flags"]["constant_normal_distance"]
    assert flag["value"] is False and flag["deviation"] > 1e-2


def test_verify_failing_claim_exits_two(tmp_path, capsys):
    s = np.linspace(0.5, 12, 400)
    w = 1 / np.hypot(1.0, 0.5)
    path = _write(tmp_path / "fake.csv", s, np.stack([np.cos(w * s), np.sin(w * s), 0.5 * w * s], axis=1),
                  "plane-involute")
    code, doc, err = verify(capsys, path)
    assert code == 2
    assert not doc["claims"]["passed"] and "constant_normal_distance" in doc["claims"]["failed"]
    assert error_of(err)["error"] == "verification"


def test_verify_parse_failure(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("s,x,y,z\n1,2,3\n")
    code, doc, err = verify(capsys, bad)
    assert code == 1 and doc is None
    assert error_of(err)["error"] == "parse"


@pytest.mark.parametrize(
    "argv",
    [
        ["--family", "twisted-example", "--c", "0.5", "--epsilon", "-1"],
        ["--family", "circle-involute", "--radius", "2"],
        ["--family", "sphere-circle", "--height", "0.5"],
        ["--family", "rectifying-lift", "--a", "1.5"],
        ["--family", "constant-curvature-np", "--r", "1", "--h", "2"],
    ],
)
def test_every_family_verifies(argv, tmp_path, capsys):
    path = tmp_path / "g.csv"
    assert run(capsys, "generate", *argv, "--out", path)[0] == 0
    code, doc, _ = verify(capsys, path)
    assert code == 0, doc["claims"]


def test_project_and_lift(tmp_path, capsys):
    src = tmp_path / "tw.csv"
    run(capsys, "generate", "--family", "twisted-example", "--c", 1, "--epsilon", 1, "--out", src)
    sphere = tmp_path / "sphere.csv"
    assert run(capsys, "project", "--in", src, "--c", 1, "--epsilon", 1, "--out", sphere)[0] == 0
    assert "\ns1,x,y,z\n" in sphere.read_text()
    projected, _ = read_curve_csv(sphere)
    assert np.max(np.abs(np.linalg.norm(projected.points, axis=1) - 1)) < 1e-9

    back = tmp_path / "back.csv"
    assert run(capsys, "lift", "--in", sphere, "--out", back)[0] == 0  # c, eps from metadata
    original, lifted = read_curve_csv(src)[0], read_curve_csv(back)[0]
    assert np.max(np.abs(original.points - lifted.points)) < 1e-8


def test_lift_of_latitude_circle_matches_twisted(tmp_path, capsys):
    s1 = s1_of_s(SphereAssociation(1.0, 1), fam.branch_grid(1.0, 1, 300, 1.1, 9.0))
    circle = tmp_path / "circle.csv"
    assert run(capsys, "generate", "--family", "sphere-circle", "--height", 1 / np.sqrt(2),
               "--s-min", s1[0], "--s-max", s1[-1], "--samples", 300, "--out", circle)[0] == 0
    out = tmp_path / "lifted.csv"
    assert run(capsys, "lift", "--in", circle, "--c", 1, "--epsilon", 1, "--out", out)[0] == 0
    lifted, _ = read_curve_csv(out)
    assert np.max(np.abs(lifted.points - fam.twisted_example_point(1.0, 1, lifted.s_values))) < 1e-8


def test_project_rejects_unrelated_curve(tmp_path, capsys):
    s = np.linspace(1.2, 12, 400)
    w = 1 / np.hypot(1.0, 0.5)
    path = _write(tmp_path / "h.csv", s, np.stack([np.cos(w * s), np.sin(w * s), 0.5 * w * s], axis=1))
    code, out, err = run(capsys, "project", "--in", path, "--c", 1, "--epsilon", 1)
    assert code == 2 and out == ""
    assert "association undefined" in error_of(err)["message"]


def test_tolerance_overrides(plane_csv, capsys, monkeypatch):
    monkeypatch.setenv(ENV_TOLERANCES, json.dumps({"tol_eq": 1e-5, "tol_const": 1e-3}))
    _, doc, _ = verify(capsys, plane_csv)
    assert doc["tolerances"]["tol_eq"] == 1e-5 and doc["tolerances"]["tol_const"] == 1e-3
    _, doc, _ = verify(capsys, plane_csv, "--tol-const", "1e-7")
    assert doc["tolerances"]["tol_eq"] == 1e-5 and doc["tolerances"]["tol_const"] == 1e-7
    monkeypatch.setenv(ENV_TOLERANCES, "{not json")
    code, doc, err = verify(capsys, plane_csv)
    assert code == 1 and error_of(err)["error"] == "tolerances"


def test_report_numbers_are_finite(plane_csv, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(capsys, "verify", "--in", plane_csv, "--out", out)[0] == 0
    text = out.read_text()
    assert "NaN" not in text and "Infinity" not in text
    jsonschema.validate(json.loads(text), REPORT_SCHEMA)


def test_figures(tmp_path, capsys):
    for figure in (1, 2):
        assert run(capsys, "figures", "--figure", figure, "--c", 1, "--out-dir", tmp_path)[0] == 0
    plus, _ = read_curve_csv(tmp_path / "figure1_plus.csv")
    minus, notes = read_curve_csv(tmp_path / "figure1_minus.csv")
    assert "at a distance 2c^2 = 2(1)^2 = 2 from the origin" in notes[0]
    for curve in (plus, minus):
        rho2 = np.sum(curve.points**2, axis=1)
        assert np.max(np.abs(rho2 - 4 * np.abs(curve.s_values))) < 1e-9 * rho2.max()
    # mirror images: same distance profile as a function of eps*s
    assert np.max(np.abs(np.linalg.norm(plus.points, axis=1) - np.linalg.norm(minus.points, axis=1)[::-1])) < 1e-10
    twisted, _ = read_curve_csv(tmp_path / "figure2_plus.csv")
    assert np.allclose(twisted.points[:, 2], np.sqrt(2) * np.sqrt(twisted.s_values), atol=1e-12)
    assert "stroke-dasharray" in (tmp_path / "figure2.svg").read_text()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "normalplanes", "generate", "--family", "plane-involute", "--c", "1",
         "--samples", "64"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("# family: plane-involute")


CURVES = {
    "plane": lambda: fam.gen_plane_involute(0.7, -1, fam.branch_grid(0.7, -1, 64)),
    "twisted": lambda: fam.gen_twisted_example(1.3, 1, fam.branch_grid(1.3, 1, 64)),
    "involute": lambda: fam.gen_circle_involute(2.0, 0.5, -1, np.linspace(-3, 0.3, 64)),
    "ccnp": lambda: fam.gen_constant_curvature_np(fam.ConstantCurvatureNP(1.0, 2.0, 1), np.linspace(1.5, 3, 64)),
}


@pytest.mark.parametrize("name", sorted(CURVES))
def test_csv_round_trip_is_byte_stable(name):
    text = format_curve_csv(CURVES[name](), comments=["a note"])
    curve, notes = parse_curve_csv(text)
    assert notes == ["a note"]
    assert format_curve_csv(curve, notes) == text


@settings(max_examples=40, deadline=None)
@given(
    s=st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=20, unique=True),
    seed=st.integers(0, 2**32 - 1),
)
def test_csv_round_trip_property(s, seed):
    s = np.sort(np.array(s))
    pts = np.random.default_rng(seed).normal(size=(len(s), 3)) * 1e-3
    curve = CurveSamples(s, pts, arclength=False, label="random", params={"k": 0.1})
    text = format_curve_csv(curve)
    back, _ = parse_curve_csv(text)
    assert np.array_equal(back.s_values, curve.s_values) and np.array_equal(back.points, curve.points)
    assert format_curve_csv(back) == text

import csv
import io
import json
from fractions import Fraction

import pytest

from whitney.cli import main

ORIGIN = json.dumps({"dim": 1, "parts": [{"type": "point", "coords": ["0"]}]})
IDENTITY = json.dumps({"builtin": "poly", "coeffs": [0, 1], "order": 1})


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_decompose_example(capsys):
    code, out, _ = run(capsys, "decompose", "--set", ORIGIN, "--region=1/4:4", "--levels=-2:2")
    assert code == 0
    cubes = json.loads(out)["cubes"]
    assert len(cubes) == 4
    assert all(c["separation_ok"] for c in cubes)


def test_decompose_csv_and_text(capsys):
    code, out, _ = run(capsys, "decompose", "--set", ORIGIN, "--region=1/4:4", "--levels=-2:2", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][0] == "level" and len(rows) == 5
    code, out, _ = run(capsys, "decompose", "--set", ORIGIN, "--region=1/4:4", "--levels=-2:2", "--format", "text")
    assert code == 0 and len(out.splitlines()) == 4


def test_decompose_requires_region(capsys):
    code, _, err = run(capsys, "decompose", "--set", ORIGIN)
    assert code == 2 and "region" in err


def test_eval_identity(capsys):
    code, out, _ = run(capsys, "eval", "--set", ORIGIN, "--jet", IDENTITY, "--point", "7/4",
                       "--deriv", "1", "--precision", "16")
    assert code == 0
    r = json.loads(out)
    assert abs(Fraction(r["decimal"]) - 1) <= Fraction(1, 2**16)
    assert r["precision"] >= 16


def test_eval_on_F(capsys):
    code, out, _ = run(capsys, "eval", "--set", ORIGIN, "--jet", IDENTITY, "--point", "0", "--precision", "16")
    assert code == 0
    assert abs(Fraction(json.loads(out)["decimal"])) <= Fraction(2, 2**16)


def test_eval_constant_jet(capsys):
    jet = json.dumps({"builtin": "poly", "coeffs": ["3/2"], "order": 0})
    F = json.dumps({"dim": 1, "parts": [{"type": "point", "coords": ["0"]}, {"type": "point", "coords": ["1"]}]})
    for p in ("-3", "1/2", "5/7"):
        code, out, _ = run(capsys, "eval", "--set", F, "--jet", jet, "--point", p, "--precision", "12")
        assert code == 0
        assert abs(Fraction(json.loads(out)["decimal"]) - Fraction(3, 2)) <= Fraction(1, 2**12)


def test_grid_identity(capsys, tmp_path):
    out_file = tmp_path / "g.csv"
    code, _, _ = run(capsys, "grid", "--set", ORIGIN, "--jet", IDENTITY, "--region=-2:2", "--resolution", "33",
                     "--precision", "16", "--out", str(out_file))
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert len(rows) == 33
    for r in rows:
        assert abs(Fraction(r["value"]) - Fraction(r["x1"])) <= Fraction(1, 2**16)


def test_grid_byte_identical(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(capsys, "grid", "--set", ORIGIN, "--jet", IDENTITY, "--region=-1:3", "--resolution", "9",
                   "--seed", "5", "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_grid_inside_complement_ball(capsys):
    code, out, _ = run(capsys, "grid", "--set", ORIGIN, "--jet", IDENTITY, "--region=1:2", "--resolution", "5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and all(r["branch"] == "outsideF" for r in rows)


def test_bounds_table(capsys):
    code, out, _ = run(capsys, "bounds", "--order", "3")
    assert code == 0
    t = json.loads(out)
    assert [r["H"] for r in t["scalar"][:3]] == [1, 4, 768]


def test_check_cubes_passes(capsys):
    code, out, _ = run(capsys, "check", "--suite", "cubes", "--seed", "42", "--set", ORIGIN)
    assert code == 0
    lines = [json.loads(l) for l in out.splitlines()]
    assert lines and all(l["passed"] for l in lines)


def test_check_detects_corrupted_set(capsys):
    bad = json.dumps({"dim": 1, "parts": [{"type": "point", "coords": ["0"]}],
                      "extra_complement": [{"center": ["0"], "radius": "1/2"}]})
    code, out, _ = run(capsys, "check", "--suite", "cubes", "--set", bad)
    assert code != 0
    assert any(not json.loads(l)["passed"] for l in out.splitlines())


@pytest.mark.parametrize("argv", [
    ["eval", "--set", "{not json", "--jet", IDENTITY, "--point", "1"],
    ["eval", "--set", ORIGIN, "--jet", IDENTITY, "--point", "1", "--deriv", "2"],
    ["grid", "--set", ORIGIN, "--jet", IDENTITY, "--region=0:1", "--resolution", "5000"],
    ["eval", "--set", ORIGIN, "--jet", IDENTITY, "--point", "1", "--eps", "1/4"],
    ["eval", "--set", json.dumps({"dim": 1, "parts": [{"type": "torus"}]}), "--jet", IDENTITY, "--point", "1"],
], ids=["malformed-json", "order-too-high", "oversize-grid", "bad-eps", "bad-part"])
def test_usage_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("whitney:")


def test_empty_set_exit_3(capsys):
    code, _, err = run(capsys, "decompose", "--set", json.dumps({"dim": 1, "parts": []}), "--region=0:1")
    assert code == 3 and err

import json
import math
from pathlib import Path

import pytest

from qgraph.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_spectrum_golden(capsys):
    code, out, _ = run(capsys, "spectrum", DATA / "interval.json")
    assert code == 0
    assert out == "[0, 9.8696044, 39.4784176]\n"


def test_spectrum_details_and_window(capsys):
    code, out, _ = run(capsys, "spectrum", DATA / "loop.json", "--hi", 160, "--details")
    assert code == 0
    rows = json.loads(out)
    assert [r["multiplicity"] for r in rows] == [1, 2, 2]
    assert rows[1]["lambda"] == pytest.approx(4 * math.pi ** 2, rel=1e-8)


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"hi": 12.0, "lo": 5.0}))
    _, out, _ = run(capsys, "spectrum", DATA / "interval.json", "--config", cfg)
    assert json.loads(out) == pytest.approx([math.pi ** 2])
    _, out, _ = run(capsys, "spectrum", DATA / "interval.json", "--config", cfg, "--hi", 50)
    assert json.loads(out) == pytest.approx([math.pi ** 2, 4 * math.pi ** 2])


def test_dtn_reports_poles_inline(capsys):
    code, out, _ = run(capsys, "dtn", DATA / "pendant.json", "--root", "root", "--lam", 1.0, (math.pi / 2) ** 2)
    assert code == 0
    rows = json.loads(out)
    assert rows[0]["value"] == pytest.approx(math.tan(1.0), rel=1e-8)
    assert rows[1]["value"] is None and "singular" in rows[1]["error"]


def test_residues(capsys):
    _, out, _ = run(capsys, "residues", DATA / "pendant.json", "--root", "root", "--hi", 10)
    (pole,) = json.loads(out)
    assert pole["residue"] == pytest.approx(-math.pi ** 2 / 2, rel=1e-6)
    assert pole["applicable"] is True


def test_decorate_reduce(capsys):
    _, out, _ = run(capsys, "decorate-reduce", DATA / "interval.json", "--decoration", DATA / "pendant.json",
                    "--root", "root", "--hi", 30)
    doc = json.loads(out)
    explicit = [x for x in doc["explicit"] if all(abs(x - p) > 1e-5 for p in doc["excluded"])]
    assert doc["reduced"] == pytest.approx(explicit, abs=1e-6)


def test_flatband_and_discrete_scar(capsys):
    _, out, _ = run(capsys, "flatband", DATA / "necklace.json", "--lam", math.pi ** 2)
    assert json.loads(out)["flat"] is True
    _, out, _ = run(capsys, "flatband", DATA / "diamond.json", "--discrete", "--lam", 0)
    assert json.loads(out) == {"lambda": 0, "flat": True}
    _, out, _ = run(capsys, "scar", DATA / "diamond.json", "--discrete", "--exact", "--lam", 0)
    assert json.loads(out) == [["b", 0, 1.0], ["c", 0, -1.0]]


def test_quantum_scar(capsys):
    code, out, _ = run(capsys, "scar", DATA / "necklace.json", "--lam", math.pi ** 2)
    assert code == 0
    doc = json.loads(out)
    assert doc["route"] == "resonant" and doc["residual"] < 1e-8
    assert {e["edge"] for e in doc["support"]} == {"r0", "r1"}


def test_bands_csv_has_lf_endings(capsys, tmp_path):
    target = tmp_path / "bands.csv"
    code, _, _ = run(capsys, "bands", DATA / "chain.json", "--nk", 4, "--hi", 10, "-o", target)
    assert code == 0
    raw = target.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "k,lambda"
    rows = [tuple(map(float, line.split(","))) for line in lines[1:]]
    # cos(sqrt(lam)) = cos(k) on the grid k = 0, pi/2, pi, 3pi/2
    assert rows[0][0] == 0.0 and abs(rows[0][1]) < 1e-9
    assert rows[1] == pytest.approx((math.pi / 2, math.pi ** 2 / 4))
    assert [r[0] for r in rows].count(math.pi) == 2


def test_gaps_and_certificate(capsys):
    _, out, _ = run(capsys, "gaps", DATA / "chain.json", "--nk", 16, "--hi", 20)
    assert json.loads(out)["gaps"] == []
    lam0 = (math.pi / 2) ** 2
    code, out, _ = run(capsys, "gap-cert", DATA / "chain.json", "--decoration", DATA / "pendant.json",
                       "--root", "root", "--lam", lam0, "--width", 0.8, "--nlam", 80, "--nk", 16)
    assert code == 0
    lo, hi = json.loads(out)["gap"]
    assert lo < lam0 < hi


def test_schnol_family(capsys):
    _, out, _ = run(capsys, "schnol-bound", "--family", "chain", "--lam", 1, "--radii", 5, 10)
    rows = json.loads(out)
    assert [r["r"] for r in rows] == [5.0, 10.0]
    assert all(r["norm2"] >= r["J"] for r in rows)


def test_subdivide_round_trip(capsys):
    _, out, _ = run(capsys, "subdivide", DATA / "interval.json", "--edge", "e", "--at", 0.25)
    doc = json.loads(out)
    assert sorted(e["length"] for e in doc["edges"]) == [0.25, 0.75]


def test_exit_code_bad_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": [1,\n  }')
    code, _, err = run(capsys, "spectrum", bad)
    assert code == 2
    assert f"{bad}:2:" in err


def test_exit_code_missing_file(capsys):
    code, _, err = run(capsys, "spectrum", "/nonexistent/graph.json")
    assert code == 2 and "graph.json" in err


def test_exit_code_invalid_graph(capsys, tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"vertices": [0, 1], "edges": [{"from": 0, "to": 1, "length": -1}]}))
    code, _, err = run(capsys, "spectrum", g)
    assert code == 2 and "nonpositive" in err


def test_exit_code_certificate_not_found(capsys):
    code, _, _ = run(capsys, "gap-cert", DATA / "chain.json", "--decoration", DATA / "pendant.json",
                     "--root", "root", "--lam", 1.0, "--width", 0.3, "--nlam", 40, "--nk", 8)
    assert code == 4


def test_exit_code_empty_window(capsys):
    code, _, err = run(capsys, "spectrum", DATA / "interval.json", "--lo", 5, "--hi", 1)
    assert code == 2 and "window" in err


def test_exit_code_solver_failure(capsys):
    code, _, err = run(capsys, "scar", DATA / "necklace.json", "--lam", math.pi ** 2, "--route", "kernel")
    assert code == 3 and "solver failure" in err

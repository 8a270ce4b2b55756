import csv
import json

import pytest

from bnepoly.cli import main


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


BQ = {"game": {"kind": "bilinear-quadratic"}, "quantizer": {"counts": [6, 6]},
      "solver": {"degree": 1}, "seed": 0}


def test_solve_writes_results_and_is_deterministic(tmp_path):
    cfg = _write(tmp_path, "c.json", BQ)
    out = tmp_path / "out"
    assert main(["solve", cfg, "--output-dir", str(out)]) == 0
    first = (out / "result.json").read_bytes()
    assert main(["--output-dir", str(out), "solve", cfg]) == 0
    assert (out / "result.json").read_bytes() == first
    doc = json.loads(first)
    assert doc["converged"] and doc["kantorovich_bound"] > 0
    assert doc["config"]["quantizer"]["counts"] == [6, 6]
    rows = list(csv.reader(open(out / "curves.csv")))
    assert rows[0] == ["theta", "f_1", "f_2"] and len(rows) == 1001
    assert not (out / ".lock").exists()


def test_per_player_curves_when_domains_differ(tmp_path):
    cfg = _write(tmp_path, "c.json", {
        "game": {"kind": "rent-seeking", "type_domains": [[0.01, 1.01], [0.01, 2.01]]},
        "quantizer": {"counts": [5, 10]}, "solver": {"degree": 2, "gap_tol": 1e-6}})
    out = tmp_path / "o"
    assert main(["solve", cfg, "--output-dir", str(out)]) == 0
    assert (out / "curves_player1.csv").exists() and (out / "curves_player2.csv").exists()


def test_not_converged_exit_code(tmp_path):
    cfg = _write(tmp_path, "c.json", {"game": {"kind": "rent-seeking"}, "quantizer": {"counts": 5},
                                      "solver": {"degree": 2, "outer_max_sweeps": 1}})
    assert main(["solve", cfg, "--output-dir", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("body,field", [
    ({"game": {"kind": "bilinear"}, "quantizer": {"counts": [0, 2]}}, "quantizer.counts"),
    ({"game": {"kind": "nope"}, "quantizer": {"counts": 2}}, "game.kind"),
    ({"game": {"kind": "bilinear"}, "quantizer": {"counts": 2}, "solver": {"damping": 2}},
     "solver.damping"),
    ({"game": {"kind": "bilinear"}}, "config.quantizer"),
    ('{"game": {"kind": \n "bilinear",}}', "line 2"),
])
def test_config_errors_name_the_field(tmp_path, capsys, body, field):
    cfg = _write(tmp_path, "c.json", body)
    assert main(["solve", cfg, "--output-dir", str(tmp_path / "o")]) == 1
    assert field in capsys.readouterr().err


def test_missing_file_and_bad_command(tmp_path):
    assert main(["solve", str(tmp_path / "none.json")]) == 1
    assert main(["frobnicate"]) == 1


def test_lock_file_blocks_second_run(tmp_path, capsys):
    cfg = _write(tmp_path, "c.json", BQ)
    out = tmp_path / "out"
    out.mkdir()
    (out / ".lock").write_text("1")
    assert main(["solve", cfg, "--output-dir", str(out)]) == 1
    assert "locked" in capsys.readouterr().err


def test_quantize_command(tmp_path):
    cfg = _write(tmp_path, "c.json", {"game": {"kind": "rent-seeking"},
                                      "quantizer": {"mode": "monte-carlo", "counts": 20}})
    out = tmp_path / "q"
    assert main(["quantize", cfg, "--output-dir", str(out), "--seed", "4"]) == 0
    doc = json.loads((out / "quantize.json").read_text())
    assert len(doc["atoms"]) == 20 and doc["kantorovich_bound"] is None
    assert doc["dispersion_exact"] is False and doc["config"]["seed"] == 4


def test_oracle_command(tmp_path):
    cfg = _write(tmp_path, "c.json", {"game": {"kind": "bilinear"}, "quantizer": {"counts": 11},
                                      "solver": {"degree": 1},
                                      "oracle": {"type_points": 11, "action_levels": 6}})
    out = tmp_path / "or"
    assert main(["oracle", cfg, "--output-dir", str(out), "--threads", "2"]) == 0
    doc = json.loads((out / "oracle.json").read_text())
    assert len(doc["fixed_points"]) == 2
    assert all("max_abs_diff" in c for c in doc["comparison"])


def test_study_command(tmp_path):
    cfg = _write(tmp_path, "c.json", {
        "game": {"kind": "rent-seeking"}, "quantizer": {"counts": [8, 8]},
        "solver": {"gap_tol": 1e-6}, "study": {"axis": "degree", "levels": [2, 3]}})
    out = tmp_path / "st"
    assert main(["study", cfg, "--output-dir", str(out)]) == 0
    doc = json.loads((out / "study.json").read_text())
    assert doc["curves"] == ["curves_level2.csv", "curves_level3.csv"]
    assert len(doc["successive_sup_diffs"]) == 1


def test_plugin_game(tmp_path):
    cfg = _write(tmp_path, "c.json", {"game": {"kind": "plugin", "name": "bnepoly.games:bilinear_quadratic"},
                                      "quantizer": {"counts": 4}, "solver": {"degree": 1}})
    assert main(["solve", cfg, "--output-dir", str(tmp_path / "p")]) == 0

import json

import numpy as np
import pytest

from cmlab.cli import main
from cmlab.degrees import DegreeSequence
from cmlab.graph import HalfEdgeGraph


def run_cli(*argv):
    return main(list(argv))


def test_gen_degrees_contract(tmp_path, capsys):
    assert run_cli("gen-degrees", "--n", "10", "--tau", "3.5", "--cf", "1") == 0
    out = capsys.readouterr().out
    d = DegreeSequence.from_text(out)
    assert d.n == 10
    assert d.ell % 2 == 0
    assert (np.diff(d.degrees) <= 0).all()


def test_gen_degrees_iid_deterministic(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    run_cli("gen-degrees", "--n", "50", "--tau", "3.5", "--cf", "1",
            "--iid", "--seed", "5", "--out", str(a))
    run_cli("gen-degrees", "--n", "50", "--tau", "3.5", "--cf", "1",
            "--iid", "--seed", "5", "--out", str(b))
    assert a.read_text() == b.read_text()


def test_realize_deterministic(tmp_path):
    degf = tmp_path / "d.txt"
    run_cli("gen-degrees", "--n", "30", "--tau", "3.5", "--cf", "1",
            "--out", str(degf))
    g1 = tmp_path / "g1.txt"
    g2 = tmp_path / "g2.txt"
    assert run_cli("realize", "--degrees", str(degf), "--seed", "7",
                   "--out", str(g1)) == 0
    assert run_cli("realize", "--degrees", str(degf), "--seed", "7",
                   "--out", str(g2)) == 0
    assert g1.read_text() == g2.read_text()
    g = HalfEdgeGraph.from_text(g1.read_text())
    assert g.n == 30


def test_realize_simple_flag(tmp_path):
    degf = tmp_path / "d.txt"
    degf.write_text(DegreeSequence.from_degrees([1, 1]).to_text())
    out = tmp_path / "g.txt"
    assert run_cli("realize", "--degrees", str(degf), "--seed", "1",
                   "--simple", "--out", str(out)) == 0
    assert "1 2" in out.read_text()


def test_percolate_outputs_degrees(tmp_path, capsys):
    degf = tmp_path / "d.txt"
    run_cli("gen-degrees", "--n", "500", "--tau", "3.5", "--cf", "1",
            "--out", str(degf))
    assert run_cli("percolate", "--degrees", str(degf), "--tau", "3.5",
                   "--seed", "3") == 0
    out = capsys.readouterr().out
    dp = DegreeSequence.from_text(out)
    assert dp.n == 500
    assert dp.ell % 2 == 0


def test_explore_trace_csv(tmp_path, capsys):
    gf = tmp_path / "g.txt"
    gf.write_text(HalfEdgeGraph.from_edges(3, [(0, 1), (1, 2)]).to_text())
    assert run_cli("explore", "--graph", str(gf), "--start", "1") == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "step,S,A,M,QV,discovered_vertex"
    assert len(out) == 4  # S(0), two steps, header


def test_mass_csv(tmp_path, capsys):
    gf = tmp_path / "g.txt"
    gf.write_text(HalfEdgeGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)]).to_text())
    assert run_cli("mass", "--graph", str(gf), "--rank", "1",
                   "--deltas", "0.5,2.0", "--tau", "3.5") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "delta,value,argmin_vertex"
    assert len(lines) == 3


def test_bp_height_json(tmp_path, capsys):
    degf = tmp_path / "d.txt"
    run_cli("gen-degrees", "--n", "2000", "--tau", "3.5", "--cf", "0.4",
            "--out", str(degf))
    assert run_cli("bp-height", "--degrees", str(degf), "--tau", "3.5",
                   "--eps", "0.1", "--trials", "50", "--seed", "2") == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["flag"] == "pass"
    assert rec["violations"] == 0
    assert rec["law_mean"] < 1.0


def test_check_assumptions_json(tmp_path, capsys):
    degf = tmp_path / "d.txt"
    run_cli("gen-degrees", "--n", "300", "--tau", "3.5", "--cf", "1",
            "--out", str(degf))
    assert run_cli("check-assumptions", "--degrees", str(degf),
                   "--tau", "3.5") == 0
    checks = json.loads(capsys.readouterr().out)
    assert any(c["name"] == "degree_one_density" and c["flag"] == "pass"
               for c in checks)


def test_experiment_minimal_config(tmp_path, capsys):
    out_t = tmp_path / "t.jsonl"
    out_s = tmp_path / "s.json"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "tau": 3.5, "lambda": 0.0, "n_list": [100], "trials": 2,
        "master_seed": 42, "mode": "direct-critical",
        "delta_grid": [0.5], "out_trials": str(out_t), "out_summary": str(out_s),
    }))
    assert run_cli("experiment", "--config", str(cfg)) == 0
    lines = out_t.read_text().strip().splitlines()
    assert len(lines) == 2
    summary = json.loads(out_s.read_text())
    assert "per_n" in summary and "100" in summary["per_n"]


def test_usage_error_exit_code_1(capsys):
    assert run_cli("gen-degrees", "--n", "10") == 1           # missing --tau
    assert run_cli("bogus-command") == 1
    assert run_cli("gen-degrees", "--n", "10", "--tau", "3.5", "--frob") == 1


def test_runtime_error_exit_code_2(tmp_path, capsys):
    assert run_cli("realize", "--degrees", str(tmp_path / "missing.txt"),
                   "--seed", "1") == 2
    # odd total degree is a runtime failure, not a usage failure
    degf = tmp_path / "odd.txt"
    degf.write_text("# n=3 ell=5\n3\n1\n1\n")
    assert run_cli("realize", "--degrees", str(degf), "--seed", "1") == 2

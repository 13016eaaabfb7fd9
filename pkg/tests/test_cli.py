"""Command-line contract: output formats, determinism, exit codes, config files."""

from __future__ import annotations

import csv
import json

import pytest

from splitlab import cli


def run_cli(capsys, *argv) -> tuple[int, str, str]:
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_simulate_zero_ball_tree(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--family", "bst", "--n", "0", "--reps", "1")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["family", "b", "s", "s0", "s1", "n", "replicate", "path_length", "wiener_index"]
    assert rows[1] == ["binary_search_tree", "2", "1", "1", "0", "0", "0", "0", "0"]


def test_simulate_is_byte_identical_for_same_seed(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--family", "med3", "--n", "60", "120", "--reps", "4", "--seed", "9"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().count(b"\r\n") == 9  # header + 8 rows, RFC-4180 line endings
    # a different seed must change the body
    c = tmp_path / "c.csv"
    assert cli.main(args[:-2] + ["--seed", "10", "--out", str(c)]) == 0
    assert a.read_bytes() != c.read_bytes()


def test_simulate_more_reps_extends_prefix(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["simulate", "--family", "bst", "--n", "40", "--reps", "3", "--seed", "5", "--out", str(a)])
    cli.main(["simulate", "--family", "bst", "--n", "40", "--reps", "6", "--seed", "5", "--out", str(b)])
    short = a.read_text().splitlines()
    long = b.read_text().splitlines()
    assert long[: len(short)] == short


def test_invalid_tree_parameters_exit_2(capsys):
    code, _, err = run_cli(
        capsys, "simulate", "--family", "bst", "--n", "10", "--s", "1", "--s0", "5"
    )
    assert code == 2
    assert "0 <= s_0 <= s" in err


def test_unknown_family_exit_2(capsys):
    code, _, err = run_cli(capsys, "simulate", "--family", "ternary_trie", "--n", "5")
    assert code == 2
    assert "invalid configuration" in err


def test_unwritable_output_exit_3(capsys):
    code, _, err = run_cli(
        capsys, "simulate", "--family", "bst", "--n", "5", "--out", "/nonexistent/dir/x.csv"
    )
    assert code == 3
    assert "output error" in err


def test_config_file_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": [7], "reps": 2, "seed": 123}))
    code, out, _ = run_cli(
        capsys, "simulate", "--family", "bst", "--n", "999", "--reps", "50", "--config", str(cfg)
    )
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert len(rows) == 3  # header + 2 replicates
    assert all(r[5] == "7" for r in rows[1:])


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run_cli(capsys, "simulate", "--family", "bst", "--n", "5", "--config", str(cfg))
    assert code == 2
    assert "bogus" in err


def test_constants_json_report(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, _, _ = run_cli(
        capsys, "constants", "--family", "bst", "--n-max", "1000", "--out", str(out_path)
    )
    assert code == 0
    payload = json.loads(out_path.read_text())
    assert payload["schema_version"] == "1"
    assert payload["mu_inv"] == pytest.approx(2.0)
    assert payload["c_p"] == pytest.approx(-2.8456, abs=0.05)
    assert payload["params"] == {"b": 2, "s": 1, "s0": 1, "s1": 0}


def test_constants_table_dump_has_17_digit_floats(tmp_path):
    table_path = tmp_path / "table.csv"
    code = cli.main(
        ["constants", "--family", "bst", "--n-max", "1000",
         "--out", str(tmp_path / "r.json"), "--table-out", str(table_path)]
    )
    assert code == 0
    rows = list(csv.reader(table_path.read_text().splitlines()))
    assert rows[0] == ["n", "mean_path", "mean_wiener"]
    assert rows[4][1] == format(8.0 / 3.0, ".17g")  # E[P_3] = 8/3, 17 significant digits


def test_chain_trajectories_csv(capsys):
    code, out, _ = run_cli(
        capsys, "chain", "--family", "bst", "--start", "500", "--stop-size", "20",
        "--reps", "5", "--seed", "3",
    )
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["replicate", "steps", "stopped_state", "stopped_value"]
    assert len(rows) == 6
    assert all(int(r[2]) <= 20 for r in rows[1:])


def test_chain_requires_a_stopping_rule(capsys):
    code, _, err = run_cli(capsys, "chain", "--family", "bst", "--start", "100")
    assert code == 2
    assert "stop" in err


def test_chain_pushforward_mass(capsys):
    code, out, _ = run_cli(
        capsys, "chain", "--family", "bst", "--mode", "pushforward",
        "--start", "200", "--stop-size", "15",
    )
    assert code == 0
    rows = list(csv.reader(out.splitlines()))[1:]
    total = sum(float(r[1]) for r in rows)
    assert total == pytest.approx(1.0, abs=1e-9)
    assert len(rows) == 16


def test_fixedpoint_json_and_samples(tmp_path, capsys):
    out_path = tmp_path / "fp.json"
    samples_path = tmp_path / "samples.csv"
    code, _, _ = run_cli(
        capsys, "fixedpoint", "--family", "bst", "--pop", "15000", "--iters", "10",
        "--out", str(out_path), "--samples-out", str(samples_path),
    )
    assert code == 0
    payload = json.loads(out_path.read_text())
    assert payload["schema_version"] == "1"
    assert payload["certificate"]["pass"] is True
    assert 0.2 < payload["variance"] < 0.7
    assert len(payload["w2_curve"]) == 10
    rows = samples_path.read_text().splitlines()
    assert rows[0] == "x" and len(rows) == 15001


def test_verify_subset_quick_exits_zero(tmp_path, capsys):
    out_path = tmp_path / "verify.json"
    code, out, _ = run_cli(
        capsys, "verify", "--quick", "--criteria", "2,8", "--out", str(out_path)
    )
    assert code == 0
    assert "criterion  2 [PASS]" in out
    assert "criterion  8 [PASS]" in out
    assert "2/2 checks passed" in out
    payload = json.loads(out_path.read_text())
    assert payload["schema_version"] == "1"
    assert [r["criterion"] for r in payload["results"]] == [2, 8]
    assert all(r["passed"] for r in payload["results"])


def test_verify_rejects_bad_criteria(capsys):
    code, _, err = run_cli(capsys, "verify", "--quick", "--criteria", "0,99")
    assert code == 2
    assert "1..12" in err


def test_family_flags_reach_the_splitter(capsys):
    code, out, _ = run_cli(
        capsys, "simulate", "--family", "dirichlet", "--b", "4", "--alpha", "2.0",
        "--n", "30", "--reps", "1", "--seed", "1",
    )
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[1][0] == "dirichlet" and rows[1][1] == "4"

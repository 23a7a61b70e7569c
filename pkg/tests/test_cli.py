import csv
import io
import json

import pytest

from rumorperc import cli
from rumorperc.experiments import SWEEP_CSV_COLUMNS


def run(argv, capsys):
    code = cli.run_command(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_prints_summary(capsys):
    code, out, _ = run(["simulate", "--graph", "complete:64", "--trials", "200", "--seed", "7"], capsys)
    assert code == 0
    obj = json.loads(out)
    assert obj["master_seed"] == 7 and obj["trials"] == 200 and obj["protocol"] == "push"


def test_sweep_writes_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, stdout, _ = run(["sweep", "--graph", "complete:64", "--p", "0.05,0.1,0.25,0.5,1.0",
                           "--trials", "200", "--out", str(out)], capsys)
    assert code == 0 and stdout == ""
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 5
    assert tuple(rows[0]) == SWEEP_CSV_COLUMNS
    assert [float(r["p"]) for r in rows] == [0.05, 0.1, 0.25, 0.5, 1.0]
    assert float(rows[-1]["ratio_95"]) == 1.0


def test_seed_env_override(monkeypatch, capsys):
    monkeypatch.setenv("RUMORPERC_SEED", "99")
    _, out, _ = run(["simulate", "--graph", "complete:16", "--trials", "100"], capsys)
    assert json.loads(out)["master_seed"] == 99
    _, out, _ = run(["simulate", "--graph", "complete:16", "--trials", "100", "--seed", "3"], capsys)
    assert json.loads(out)["master_seed"] == 3
    monkeypatch.delenv("RUMORPERC_SEED")
    _, out, _ = run(["simulate", "--graph", "complete:16", "--trials", "100"], capsys)
    assert json.loads(out)["master_seed"] == cli.DEFAULT_SEED


def test_byte_identical_outputs(tmp_path, capsys):
    args = ["sweep", "--graph", "regular:64:4", "--p", "0.5,1", "--trials", "150", "--seed", "5"]
    assert run(args + ["--out", str(tmp_path / "a.json")], capsys)[0] == 0
    assert run(args + ["--out", str(tmp_path / "b.json")], capsys)[0] == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_gen_graph_round_trip(tmp_path, capsys):
    path = tmp_path / "g.txt"
    assert run(["gen-graph", "--graph", "hypercube:4", "--out", str(path)], capsys)[0] == 0
    assert path.read_text().splitlines()[0] == "16 32"
    code, out, _ = run(["simulate", "--graph-file", str(path), "--trials", "100", "--protocol", "pwr"], capsys)
    assert code == 0 and json.loads(out)["n"] == 16


def test_config_file_mirrors_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"graph": "complete:32", "p": [0.5, 1.0], "trials": 120, "seed": 4,
                               "format": "csv"}))
    code, out, _ = run(["sweep", "--config", str(cfg)], capsys)
    assert code == 0 and len(out.splitlines()) == 3 and out.splitlines()[1].endswith(",120,4")
    code, out, _ = run(["sweep", "--config", str(cfg), "--trials", "100"], capsys)
    assert out.splitlines()[1].endswith(",100,4")
    cfg.write_text(json.dumps({"graph": "complete:32", "colour": "red"}))
    code, _, err = run(["sweep", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in err


def test_couple_command(capsys):
    code, out, _ = run(["couple", "--graph", "complete:16", "--p", "1.0", "--T", "8", "--trials", "3"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["T"] == 8 and len(rep["runs"]) == 3


@pytest.mark.parametrize("argv", [
    ["simulate", "--graph", "complete:8", "--bogus"],
    ["simulate"],
    ["simulate", "--graph", "complete:8", "--graph-file", "x"],
    ["simulate", "--graph", "cycle:8"],
    ["sweep", "--graph", "complete:8"],
    ["sweep", "--graph", "complete:8", "--p", "1.5"],
    ["simulate", "--graph", "complete:8", "--trials", "10"],
    ["couple", "--graph", "complete:8", "--p", "0.5", "--T", "5"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and "error" in err


def test_unwritable_output(tmp_path, capsys):
    code, _, err = run(["simulate", "--graph", "complete:8", "--trials", "100",
                        "--out", str(tmp_path / "missing" / "x.json")], capsys)
    assert code == 2 and "missing" in err


def test_verify_exit_codes(monkeypatch, capsys):
    code, out, _ = run(["verify", "--suite", "claim", "--budget", "0.02", "--seed", "1"], capsys)
    assert code == 0 and json.loads(out)["passed"]
    monkeypatch.setattr(cli, "verify_suite", lambda *a: {"passed": False, "checks": []})
    assert run(["verify"], capsys)[0] == 1


@pytest.mark.parametrize("command", ["gen-graph", "simulate", "sweep", "verify", "couple"])
def test_help_documents_csv_schema(command, capsys):
    code, out, _ = run([command, "--help"], capsys)
    assert code == 0
    flat = " ".join(out.split())
    assert ", ".join(SWEEP_CSV_COLUMNS) in flat
    assert "--seed" in out and "--out" in out and "--config" in out

import csv
import io
import json

import pytest

from qembed import cli as cli_mod
from qembed.cli import main
from qembed.linalg import NumericalFailure, parse_matrix_dump
from qembed.report import SCHEMA


def run_json(capsys, args):
    rc = main(args)
    out = capsys.readouterr().out
    return rc, json.loads(out)


def test_verify_single_lemma(capsys):
    rc, rep = run_json(capsys, ["verify", "--lemma", "second-moment", "--samples", "4000"])
    assert rc == 0
    assert rep["schema"] == SCHEMA
    assert rep["verdicts"] == {"second-moment": "pass"}
    assert rep["runtime_seconds"] is None
    assert "trials" not in rep


def test_full_flag_includes_trials(capsys):
    rc, rep = run_json(capsys, ["bounds", "--full"])
    assert rc == 0 and len(rep["trials"]) == len(rep["aggregates"]["table"]) >= 2


def test_bounds_with_ranks(capsys):
    rc, rep = run_json(capsys, ["bounds", "--family", "rank-r", "--rank", "1", "--rank", "3"])
    assert rc == 0
    assert set(rep["verdicts"]) == {"rank-1-orthogonal-projectors:norm_ratio", "rank-3-orthogonal-projectors:norm_ratio"}


def test_timing_flag(capsys):
    rc, rep = run_json(capsys, ["bounds", "--timing"])
    assert rc == 0 and rep["runtime_seconds"] >= 0


def test_seed_forms_are_equivalent(capsys):
    _, a = run_json(capsys, ["fingerprint", "--seed", "255"])
    _, b = run_json(capsys, ["fingerprint", "--seed", "0xff"])
    assert a == b and a["seed"] == 255


@pytest.mark.parametrize("args", [
    ["verify", "--lemma", "nope"],
    ["fingerprint", "--seed", "-3"],
    ["fingerprint", "--seed", "0x1ffffffffffffffff"],
    ["embed", "--epsilon", "1.5"],
    ["embed", "--dim", "8", "--target-dim", "9"],
    ["game", "--family", "rank-r-orthogonal-projectors", "--dim", "3", "--rank", "2"],
    ["jl", "--target-dims", "a,b"],
    ["no-such-command"],
])
def test_usage_errors(args, capsys):
    assert main(args) == 3


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "verify" in capsys.readouterr().out


def test_failing_verdict_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli_mod.ExperimentReport, "passed", property(lambda self: False))
    assert main(["bounds"]) == 2


def test_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise NumericalFailure("eigensolver did not converge", residual=1.0)

    monkeypatch.setattr(cli_mod.ex, "lower_bound_report", boom)
    assert main(["bounds"]) == 4
    assert "numerical failure" in capsys.readouterr().err


def test_csv_output(capsys):
    assert main(["two-norm", "--trials", "50", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("trial,stream_id,ratio2sq\r\n")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 50


def test_out_file(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert main(["bounds", "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(path.read_text())["experiment_id"] == "bounds"
    assert path.read_text().endswith("\n")


def test_dump_writes_matrices_to_stderr(capsys):
    assert main(["game", "--rounds", "100", "--dump"]) == 0
    err = capsys.readouterr().err
    blocks = [b for b in err.split("# ") if b.strip()]
    assert [b.splitlines()[0] for b in blocks] == ["rho", "sigma"]
    rho = parse_matrix_dump("\n".join(blocks[0].splitlines()[1:]))
    assert rho.shape == (2, 2) and rho[0, 0] == 1


def test_game_trace_csv(tmp_path, capsys):
    path = tmp_path / "trace.csv"
    assert main(["game", "--rounds", "200", "--trace", str(path)]) == 0
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 200
    assert set(rows[0]) == {"round", "preparation", "outcome", "correct"}


def test_game_optimal_m_fixed_u(capsys):
    rc, rep = run_json(capsys, ["game", "--rounds", "20000", "--strategy", "optimal-M", "--adversary", "fixed-U"])
    assert rc == 0
    assert rep["aggregates"]["analytic_success"] == pytest.approx(0.75)


def test_embed_and_jl_small(capsys):
    rc, rep = run_json(capsys, ["embed", "--dim", "16", "--trials", "10"])
    assert rc == 0 and rep["params"]["e"] == 12
    rc, rep = run_json(capsys, ["jl", "--dim", "64", "--target-dims", "8,32", "--trials", "2"])
    assert rc == 0 and [r["e"] for r in rep["aggregates"]["sweep"]] == [8, 32]

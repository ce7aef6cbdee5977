"""End-to-end command-line checks, run in process through cli.main."""

import json

import pytest

from absorbing_mdp import deterministic_stationary
from absorbing_mdp.cli import main
from absorbing_mdp.serialize import model_to_dict, save_json

from conftest import chain_model


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_list_runs(capsys):
    rc, out, err = run(capsys, "list")
    assert rc == 0
    for name in ("example1:", "example2:", "remark1:", "remark2:"):
        assert name in out
    assert "batteries:" in out


def test_occupation_json_exact(capsys):
    rc, out, err = run(
        capsys,
        "occupation",
        "--zoo",
        "example1",
        "--strategy",
        "spread_first:4",
        "--solver",
        "unroll",
        "--horizon",
        "2",
        "--format",
        "json",
        "--no-timestamp",
    )
    assert rc == 0, err
    doc = json.loads(out)
    assert doc["method"] == "unroll"
    assert doc["total_mass"] == "2/1"
    assert doc["expected_hitting_time"] == "2/1"
    assert doc["tail_bound"] == "0/1"
    assert doc["measure"]["format"] == "absorbing-mdp/measure"
    assert "generated_at" not in doc


def test_occupation_x0_override(capsys):
    rc, out, err = run(
        capsys,
        "occupation",
        "--zoo",
        "example1",
        "--strategy",
        "point_first",
        "--x0",
        "0:1/2",
        "--solver",
        "unroll",
        "--horizon",
        "2",
        "--format",
        "json",
        "--no-timestamp",
    )
    assert rc == 0, err
    assert json.loads(out)["x0"] == "0:1/2"


def test_occupation_tables(capsys):
    common = (
        "occupation",
        "--zoo",
        "example2",
        "--strategy",
        "always_branch",
        "--trunc-states",
        "80",
    )
    rc, out, _ = run(capsys, *common, "--format", "md")
    assert rc == 0
    assert out.startswith("# occupation measure (example2, strategy always_branch)")
    assert "| state | action | weight | mass |" in out
    assert "total mass:" in out

    rc, out, _ = run(capsys, *common, "--format", "csv")
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "state,action,weight,mass"
    assert any(line.startswith("total_mass,") for line in lines)


def test_unknown_instance_is_input_error(capsys):
    rc, _, err = run(capsys, "occupation", "--zoo", "mystery", "--strategy", "x")
    assert rc == 2
    assert "unknown instance" in err


def test_unknown_strategy_is_input_error(capsys):
    rc, _, err = run(capsys, "occupation", "--zoo", "example1", "--strategy", "sprint")
    assert rc == 2
    assert "unknown strategy" in err


def test_unroll_needs_horizon(capsys):
    rc, _, err = run(
        capsys,
        "occupation",
        "--zoo",
        "example1",
        "--strategy",
        "point_first",
        "--solver",
        "unroll",
    )
    assert rc == 2
    assert "--horizon" in err


def test_countable_budget_refusal_is_analysis_failure(capsys):
    # depth-64 ladder holds more live states than the default budget
    rc, _, err = run(
        capsys,
        "occupation",
        "--zoo",
        "example2",
        "--strategy",
        "always_branch",
        "--solver",
        "countable",
    )
    assert rc == 1
    assert err.startswith("error:")


def test_auto_solver_refusal_suggests_flags(capsys):
    rc, _, err = run(
        capsys, "occupation", "--zoo", "example2", "--strategy", "always_branch"
    )
    assert rc == 2
    assert "--solver unroll" in err and "--trunc-states" in err


def test_model_file_source(tmp_path, capsys):
    path = tmp_path / "chain.json"
    save_json(str(path), model_to_dict(chain_model(), {"go": deterministic_stationary(default="fwd")}))

    rc, out, err = run(
        capsys,
        "occupation",
        "--model",
        str(path),
        "--strategy",
        "go",
        "--x0",
        "A",
        "--format",
        "json",
        "--no-timestamp",
    )
    assert rc == 0, err
    doc = json.loads(out)
    assert doc["source"] == str(path)
    assert doc["total_mass"] == "2/1"

    # a file-sourced model carries no default initial state
    rc, _, err = run(capsys, "occupation", "--model", str(path), "--strategy", "go")
    assert rc == 2
    assert "--x0" in err


def test_absorption_json(capsys):
    rc, out, err = run(
        capsys,
        "absorption",
        "--zoo",
        "example2",
        "--family",
        "climb_then_linger",
        "--n-max",
        "8",
        "--trunc-states",
        "80",
        "--format",
        "json",
        "--no-timestamp",
    )
    assert rc == 0, err
    doc = json.loads(out)
    assert doc["format"] == "absorbing-mdp/absorption-report"
    assert doc["n_max"] == 8
    assert doc["verdict"] in ("non_uniform_witness", "decays", "inconclusive")
    assert len(doc["tail_rows"]) == len(doc["strategies"])


def _convergence_argv(tol: str):
    return (
        "convergence",
        "--zoo",
        "example1",
        "--family",
        "spread_first",
        "--limit",
        "point_first",
        "--battery",
        "w-poly",
        "--horizon",
        "2",
        "--tol",
        tol,
        "--format",
        "json",
        "--no-timestamp",
    )


def test_convergence_json(capsys):
    # family gaps along m = 1..20 scale like 1/m; the final third sits
    # comfortably under 0.1
    rc, out, err = run(capsys, *_convergence_argv("0.1"))
    assert rc == 0, err
    doc = json.loads(out)
    assert doc["verdict"] == "converges"
    assert doc["family"] == "spread_first"
    assert doc["limit"] == "point_first"
    assert doc["caveat"]


def test_convergence_honest_divergence_still_exits_zero(capsys):
    rc, out, err = run(capsys, *_convergence_argv("1e-9"))
    assert rc == 0, err
    assert json.loads(out)["verdict"] == "diverges"


def test_convergence_unknown_battery(capsys):
    rc, _, err = run(
        capsys,
        "convergence",
        "--zoo",
        "example1",
        "--family",
        "spread_first",
        "--limit",
        "point_first",
        "--battery",
        "loud",
    )
    assert rc == 2
    assert "unknown battery" in err


def test_no_timestamp_output_is_reproducible(tmp_path, capsys):
    argv = (
        "occupation",
        "--zoo",
        "remark2",
        "--strategy",
        "only",
        "--format",
        "json",
    )
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, *argv, "--no-timestamp", "-o", str(a))[0] == 0
    assert run(capsys, *argv, "--no-timestamp", "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()

    rc, out, _ = run(capsys, *argv)
    assert rc == 0
    assert "generated_at" in json.loads(out)


def test_reproduce_target_csv(capsys):
    rc, out, err = run(
        capsys, "reproduce", "--target", "remark2", "--format", "csv"
    )
    assert rc == 0, err
    lines = out.splitlines()
    assert lines[0] == "id,acceptance,passed,expected,computed"
    assert all(",True," in line for line in lines[1:])


def test_reproduce_unknown_target(capsys):
    rc, _, err = run(capsys, "reproduce", "--target", "nothing")
    assert rc == 2
    assert "unknown target" in err

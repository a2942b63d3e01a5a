"""CLI behavior: schemas, determinism, exit codes."""

import json

import pytest

from foelner.cli import _HANDLERS, RunConfig, build_parser, main, run
from foelner.errors import ConvergenceError


def run_cli(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out.read_bytes() if out.exists() else b""


def test_group_exhaustive_report(tmp_path):
    code, raw = run_cli(
        ["group", "--group", "free:2", "--radius", "2", "--mode", "exhaustive"], tmp_path
    )
    assert code == 0
    doc = json.loads(raw)
    res = doc["results"]
    assert res["ratio_rational"] == "12/17"
    assert res["set_size"] == 17
    assert res["boundary_size"] == 12
    assert len(res["best_set"]) == 17
    assert res["best_set"][0] == "e"
    assert doc["config"]["command"] == "group"


def test_group_balls_json_and_csv(tmp_path):
    code, raw = run_cli(
        ["group", "--group", "abelian:2", "--radius", "5", "--mode", "balls"], tmp_path
    )
    assert code == 0
    res = json.loads(raw)["results"]
    assert len(res["history"]) == 5
    assert res["history"][-1]["ratio_rational"] == "20/61"

    code, raw = run_cli(
        ["group", "--group", "abelian:2", "--radius", "5", "--mode", "balls", "--format", "csv"],
        tmp_path,
        name="out.csv",
    )
    assert code == 0
    lines = raw.decode().strip().splitlines()
    assert lines[0] == "radius,set_size,boundary_size,ratio_rational,ratio_float,method"
    assert len(lines) == 6


def test_group_search_seed_required(tmp_path, capsys):
    code = main(["group", "--group", "abelian:2", "--radius", "4", "--mode", "search"])
    assert code == 2
    assert "seed" in capsys.readouterr().err


def test_group_bad_spec(tmp_path, capsys):
    code = main(["group", "--group", "braid:3", "--radius", "2", "--mode", "exhaustive"])
    assert code == 2


def test_exhaustive_cap_exit_code(capsys):
    code = main(["group", "--group", "free:2", "--radius", "3", "--mode", "exhaustive"])
    assert code == 2
    assert "cap" in capsys.readouterr().err


def test_witness_report(tmp_path):
    code, raw = run_cli(["witness", "--n", "2", "--k", "8", "--depth", "6"], tmp_path)
    assert code == 0
    res = json.loads(raw)["results"]
    assert abs(res["certified_epsilon"] - 1.25) < 1e-12
    assert abs(res["formula_epsilon"] - 1.25) < 1e-9
    assert abs(res["limit_epsilon"] - 1.224744871391589) < 1e-12
    assert {r["label"] for r in res["per_unitary"]} == {"L[a1]", "L[a2]"}


def test_witness_sweep_csv(tmp_path):
    code, raw = run_cli(
        ["witness", "--n", "2", "--k-max", "16", "--formula-only", "--format", "csv"],
        tmp_path,
        name="sweep.csv",
    )
    assert code == 0
    lines = raw.decode().strip().splitlines()
    assert lines[0] == "k,epsilon"
    assert len(lines) == 17


def test_scan_report(tmp_path):
    code, raw = run_cli(
        ["scan", "--n", "2", "--rank", "3", "--radius", "3", "--iters", "50", "--seed", "5"],
        tmp_path,
    )
    assert code == 0
    res = json.loads(raw)["results"]
    assert res["best_objective"] > 0.05
    assert len(res["frame"]) == 3
    objs = [h["objective"] for h in res["history"]]
    assert objs == sorted(objs, reverse=True)


def test_scan_seed_required(capsys):
    code = main(["scan", "--n", "2", "--rank", "3", "--radius", "3", "--iters", "10"])
    assert code == 2


def test_audit_report(tmp_path):
    args = ["audit", "--rank", "3", "--radius", "4", "--seed", "9", "--frames", "4", "--paper-mode"]
    code, raw = run_cli(args, tmp_path)
    assert code == 0
    doc = json.loads(raw)
    res = doc["results"]
    assert res["set_identities"]["disjoint_ok"]
    assert res["set_identities"]["corrected_cover_ok"]
    assert not res["set_identities"]["literal_cover_holds"]
    assert abs(res["thresholds"]["paper"] - 1 / 7) < 1e-12
    assert abs(res["thresholds"]["derived"] - 0.058925565) < 1e-9
    assert res["verdict"] == "consistent"
    assert res["frames_evaluated"] == 4
    assert res["paper_trace"]["chain_closes"]
    assert res["min_max_commutator_ratio"] > 0.05
    assert doc["warnings"]


def test_identity_check(tmp_path):
    code, raw = run_cli(["identity-check", "--trials", "10", "--seed", "1"], tmp_path)
    assert code == 0
    res = json.loads(raw)["results"]
    assert res["agreements_within_1e-9"] == res["checks"] == 30
    assert res["max_abs_difference"] < 1e-9
    assert res["max_ratio"] <= res["ratio_upper_bound"] + 1e-12
    assert res["max_defect"] <= 2.0


def test_identity_check_hundred_trials(tmp_path):
    code, raw = run_cli(["identity-check", "--trials", "100", "--seed", "1"], tmp_path)
    assert code == 0
    res = json.loads(raw)["results"]
    assert res["trials"] == 100
    assert res["agreements_within_1e-9"] == res["checks"]
    assert res["max_abs_difference"] < 1e-9


@pytest.mark.parametrize(
    "argv",
    [
        ["group", "--group", "free:2", "--radius", "2", "--mode", "exhaustive"],
        ["group", "--group", "abelian:2", "--radius", "8", "--mode", "search", "--iters", "300", "--seed", "4"],
        ["group", "--group", "free:3", "--radius", "4", "--mode", "balls"],
        ["witness", "--n", "3", "--k", "4", "--depth", "3"],
        ["scan", "--n", "2", "--rank", "2", "--radius", "3", "--iters", "40", "--seed", "2"],
        ["audit", "--rank", "2", "--radius", "3", "--seed", "2", "--frames", "3"],
        ["identity-check", "--trials", "5", "--seed", "3"],
    ],
)
def test_determinism_byte_identical(argv, tmp_path):
    _, first = run_cli(argv, tmp_path, name="a.json")
    _, second = run_cli(argv, tmp_path, name="b.json")
    assert first == second
    assert first  # non-empty


def test_audit_threads_do_not_change_payload(tmp_path, monkeypatch):
    argv = ["audit", "--rank", "2", "--radius", "3", "--seed", "8", "--frames", "4"]
    monkeypatch.setenv("FOELNER_THREADS", "1")
    _, one = run_cli(argv, tmp_path, name="t1.json")
    monkeypatch.setenv("FOELNER_THREADS", "3")
    _, three = run_cli(argv, tmp_path, name="t3.json")
    assert one == three


def test_convergence_error_maps_to_exit_3(monkeypatch, capsys):
    def boom(cfg):
        raise ConvergenceError("forced")

    monkeypatch.setitem(_HANDLERS, "witness", boom)
    code = main(["witness", "--n", "2", "--k", "2", "--depth", "2"])
    assert code == 3
    assert "non-convergence" in capsys.readouterr().err


def test_run_config_echo_includes_everything():
    cfg = RunConfig("witness", {"n": 2, "k": 2, "depth": 2, "k_max": None, "formula_only": False}, None, None, "json")
    rep = run(cfg)
    assert rep.config["command"] == "witness"
    assert rep.config["n"] == 2
    assert rep.config["format"] == "json"
    assert "wall" not in json.dumps(rep.payload())


def test_parser_rejects_unknown_mode():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["group", "--group", "free:2", "--radius", "2", "--mode", "huge"])


def test_csv_unavailable_for_non_tabular(capsys):
    code = main(["witness", "--n", "2", "--k", "2", "--depth", "2", "--format", "csv"])
    assert code == 2

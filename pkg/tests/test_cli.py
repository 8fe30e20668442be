import csv

import pytest

from dfrc.cli import main, run_method, validation_checks
from dfrc.scenario_io import load_manifest

from conftest import bundled, designed


def test_design_fig2(tmp_path):
    assert main(["design", "fig2", "--out", str(tmp_path)]) == 0
    m = load_manifest(tmp_path)
    assert m["comm_sinr_db"][0] == pytest.approx(4.7, abs=0.5)


def test_design_exceeding_gain_is_infeasible(tmp_path):
    code = main(["design", "--scenario", "fig2", "--out", str(tmp_path),
                 "--override", "radar.required_sinr_db=60"])
    assert code == 2
    assert load_manifest(tmp_path)["status"] == "infeasible"


def test_malformed_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("[1, 2")
    assert main(["design", str(p), "--out", str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_scenario_argument():
    with pytest.raises(SystemExit):
        main(["design"])


def test_compare_single_method_matches_design(tmp_path):
    assert main(["compare", "fig4", "--methods", "comm_guarantee", "--no-ambiguity",
                 "--out", str(tmp_path / "c")]) == 0
    assert main(["design", "fig4", "--out", str(tmp_path / "d")]) == 0
    a = (tmp_path / "c" / "comm_guarantee" / "manifest.json").read_bytes()
    b = (tmp_path / "d" / "manifest.json").read_bytes()
    assert a == b


def test_ambiguity_smoke_and_determinism(tmp_path):
    args = ["ambiguity", "fig12", "--methods", "priority_comb,comm_guarantee", "--trials", "10",
            "--seed", "5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ["ambiguity_chirp.csv", "ambiguity_comm_guarantee.csv", "chirp_similarity.csv"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    with open(tmp_path / "a" / "chirp_similarity.csv") as fh:
        rows = {r["method"]: float(r["chirp_similarity"]) for r in csv.DictReader(fh)}
    assert rows["priority_comb"] < 1e-12 < rows["comm_guarantee"]


def test_sweep(tmp_path):
    code = main(["sweep", "fig4", "--param", "design.required_comm_sinr_db", "--values", "5", "20",
                 "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["status"] for r in rows] == ["ok", "ok"]
    assert float(rows[0]["comm_fraction"]) < float(rows[1]["comm_fraction"])


def test_validate(capsys):
    assert main(["validate", "fig4"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 3


def test_validation_checks_on_cached_design():
    checks = validation_checks(bundled("fig2"), designed("fig2", "radar_guarantee"))
    assert all(passed for _, passed, _ in checks)


def test_unknown_method_rejected():
    from dfrc.array_model import DomainError
    with pytest.raises(DomainError):
        run_method(bundled("fig2"), "nope")

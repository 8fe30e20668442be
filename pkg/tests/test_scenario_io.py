import json

import numpy as np
import pytest

from dfrc.design_guarantee import DesignReport
from dfrc.link_metrics import db
from dfrc.scenario_io import (ScenarioError, apply_overrides, build_scenario, bundled_names,
                              export_report, load_manifest, load_scenario, read_config,
                              bundled_path)

from conftest import bundled, designed

BASE = {"radar": {"sector": {"angles_deg": [0.0]}}}


def test_fig2_values():
    s = load_scenario("fig2")
    assert s.geometry.num_elements == 10 and s.geometry.spacing_wavelengths == 0.5
    assert db(s.radar.required_sinr) == pytest.approx(15.0)
    assert db(s.radar.worst_case_input_snr) == pytest.approx(-34.0)
    assert s.radar.pulse_len == 100 and len(s.radar.sector) == 6
    (node,) = s.nodes
    assert np.rad2deg(node.los_angle) == pytest.approx(17.0)
    assert db(node.input_snr) == pytest.approx(-5.0)
    assert node.symbol_len == 10


def test_all_bundled_scenarios_load():
    names = bundled_names()
    for expected in ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig8_constrained",
                     "fig9", "fig10", "fig11", "fig12"]:
        assert expected in names
    for n in names:
        load_scenario(n)


def test_missing_sector_is_an_error():
    with pytest.raises(ScenarioError, match="radar.sector"):
        build_scenario({"radar": {}})


def test_unknown_key_reports_path():
    bad = {"radar": {"sector": {"angles_deg": [0.0]}, "pulse_lenn": 3}}
    with pytest.raises(ScenarioError, match="radar.pulse_lenn"):
        build_scenario(bad)


def test_out_of_range_angle_rejected():
    bad = dict(BASE, nodes=[{"angle_deg": 95.0, "input_snr_db": 0.0}])
    with pytest.raises(ScenarioError, match="nodes.0.angle_deg"):
        build_scenario(bad)


def test_duplicate_node_angles_allowed():
    cfg = dict(BASE, nodes=[{"angle_deg": 20.0, "input_snr_db": 0.0}] * 2)
    assert len(build_scenario(cfg).nodes) == 2


def test_explicit_channel():
    cfg = dict(BASE, nodes=[{"channel_re": [1.0] * 10, "input_snr_db": 0.0}])
    s = build_scenario(cfg)
    assert np.vdot(s.nodes[0].channel, s.nodes[0].channel).real == pytest.approx(10.0)


def test_overrides_dotted_paths():
    raw = read_config(bundled_path("fig2"))
    out = apply_overrides(raw, ["radar.required_sinr_db=20", "nodes.0.angle_deg=-10",
                                "design.method=\"comm_guarantee\""])
    assert out["radar"]["required_sinr_db"] == 20
    assert out["nodes"][0]["angle_deg"] == -10
    assert out["design"]["method"] == "comm_guarantee"
    assert raw["radar"]["required_sinr_db"] == 15.0
    with pytest.raises(ScenarioError):
        apply_overrides(raw, ["no_equals_sign"])


def test_bad_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{nope")
    with pytest.raises(ScenarioError):
        load_scenario(p)
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "absent.json")


def test_export_round_trip_and_determinism(tmp_path):
    s, rep = bundled("fig2"), designed("fig2", "radar_guarantee")
    m1 = export_report(rep, s, tmp_path / "a")
    export_report(rep, s, tmp_path / "b")
    for f in m1["files"] + ["manifest.json"]:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    back = load_manifest(tmp_path / "a")
    assert back == json.loads(json.dumps(m1))
    assert back["comm_sinr_db"][0] == float(db(rep.achieved_comm_sinr[0]))
    assert back["radar_power_fraction"] == rep.power_split[0]


def test_fig2_eigenspectrum_has_one_dominant_entry(tmp_path):
    s, rep = bundled("fig2"), designed("fig2", "radar_guarantee")
    export_report(rep, s, tmp_path)
    rows = (tmp_path / "radar_eigenspectrum.csv").read_text().splitlines()[1:]
    fractions = [float(r.split(",")[2]) for r in rows]
    assert fractions[0] > 0.99


def test_infeasible_report_writes_manifest_only(tmp_path):
    rep = DesignReport(method="radar_guarantee", status="infeasible", diagnostics={"reason": "x"})
    m = export_report(rep, bundled("fig2"), tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.json"]
    assert m["status"] == "infeasible" and m["files"] == []

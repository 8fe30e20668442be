from dfrc.scenario_io import build_scenario


def small_scenario(nodes, xi_db=-25.0, M=6, gamma_r_db=15.0, gamma_c_db=5.0, width=0.5,
                   rank_cap=None, **design):
    """Scenario dict built in code; ``nodes`` is a list of (angle_deg, snr_db)."""
    d = {"required_comm_sinr_db": gamma_c_db, "radar_rank_cap": rank_cap}
    d.update(design)
    return build_scenario({
        "name": "small",
        "array": {"num_elements": M},
        "radar": {"sector": {"center_deg": 0.0, "width_beamwidths": width, "step_beamwidths": 0.1},
                  "worst_case_input_snr_db": xi_db, "required_sinr_db": gamma_r_db},
        "nodes": [{"angle_deg": a, "input_snr_db": s} for a, s in nodes],
        "design": d,
    })

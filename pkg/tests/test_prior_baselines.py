import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfrc.array_model import AngleGrid, ArrayGeometry, DomainError, steering
from dfrc.design_guarantee import recover_precoders
from dfrc.link_metrics import db
from dfrc.prior_baselines import (DesiredPattern, build_desired_pattern, l1_metric, l2_metric,
                                  mse_design, zf_design)

from conftest import bundled, designed
from helpers import small_scenario

GEO = ArrayGeometry(10)
GRID = AngleGrid.sine_uniform(181)
SECTOR = AngleGrid.sector(GEO)


def test_zero_margin_is_sector_indicator():
    p = build_desired_pattern(SECTOR, 0.0, GRID)
    s = np.sin(GRID.as_array())
    assert np.array_equal(p.levels > 0, np.abs(s) <= 0.05 + 1e-12)


def test_margin_widens_monotonically():
    counts = [build_desired_pattern(SECTOR, m, GRID).levels.sum() for m in (0, 0.05, 0.1, 0.2)]
    assert counts == sorted(counts) and counts[0] < counts[-1]
    with pytest.raises(DomainError):
        build_desired_pattern(SECTOR, -0.1, GRID)


def test_full_circle_sector_gives_all_ones():
    full = AngleGrid.from_degrees([-90.0, 0.0, 90.0])
    assert np.all(build_desired_pattern(full, 0.0, GRID).levels == 1)


def test_desired_pattern_validation():
    with pytest.raises(DomainError):
        DesiredPattern(GRID, np.ones(3))


def test_l1_trivial_and_flat_match():
    p = build_desired_pattern(AngleGrid.from_degrees([-90.0, 90.0]), 0.0, GRID)
    assert l1_metric(np.zeros((10, 10)), 0.0, p, GEO) == 0.0
    c = 3.0
    assert l1_metric(c / 10 * np.eye(10), c, p, GEO) == pytest.approx(0.0, abs=1e-20)
    assert l1_metric(c / 10 * np.eye(10), c + 0.5, p, GEO) == pytest.approx(0.25)


def test_l2_values():
    assert l2_metric(np.eye(10), [], GEO) == 0.0
    assert l2_metric(np.eye(10), [0.1], GEO) == 0.0
    t1, t2 = 0.0, np.arcsin(0.2)  # orthogonal steering vectors for M=10
    assert l2_metric(np.eye(10), [t1, t2], GEO) == pytest.approx(0.0, abs=1e-20)
    t2 = 0.05
    a1, a2 = steering(GEO, t1), steering(GEO, t2)
    R = np.outer(a1, a1.conj())
    expected = abs(np.vdot(a2, a1)) ** 2 * abs(np.vdot(a1, a1)) ** 2
    assert l2_metric(R, [t1, t2], GEO) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_l1_midpoint_convexity(seed):
    r = np.random.default_rng(seed)
    p = build_desired_pattern(SECTOR, 0.05, GRID)

    def rand():
        B = r.standard_normal((10, 3)) + 1j * r.standard_normal((10, 3))
        return B @ B.conj().T, float(r.normal(0, 10))
    (R1, a1), (R2, a2) = rand(), rand()
    mid = l1_metric((R1 + R2) / 2, (a1 + a2) / 2, p, GEO)
    assert mid <= 0.5 * (l1_metric(R1, a1, p, GEO) + l1_metric(R2, a2, p, GEO)) + 1e-9


def test_own_pattern_gives_zero_objective():
    s = small_scenario([(40, 0)], xi_db=-25.0, gamma_c_db=3.0)
    first = mse_design(s)
    R = first.covariances.R
    grid = AngleGrid.sine_uniform(61)
    A = np.stack([steering(s.geometry, t) for t in grid])
    levels = np.real(np.einsum("qm,mn,qn->q", A.conj(), R, A))
    target = DesiredPattern(grid, levels)
    again = mse_design(s, pattern=target)
    assert again.diagnostics["objective_L"] == pytest.approx(0.0, abs=1e-5)
    assert again.diagnostics["alpha"] == pytest.approx(1.0, abs=1e-3)


def test_zf_single_node_tiny_threshold():
    s = small_scenario([(30, -5)], gamma_c_db=-20.0, eval_grid_points=61)
    rep = zf_design(s)
    assert rep.feasible


def test_zf_needs_threshold():
    s = small_scenario([(30, -5)], gamma_c_db=None)
    with pytest.raises(DomainError):
        zf_design(s)


def test_fig12_zf_removes_interference():
    # holds for the recovered precoder; rank reduction and row renormalization
    # afterwards shift the null slightly
    s = bundled("fig12")
    W = recover_precoders(designed("fig12", "zf").covariances, s.nodes)
    g = s.nodes[0].channel
    desired = abs(np.vdot(g, W.W_c[:, 0])) ** 2
    interference = np.sum(np.abs(g.conj() @ W.W) ** 2) - desired
    assert interference <= 1e-6 * desired


def test_fig12_zf_beats_mse_and_both_meet_threshold():
    mse, zf = designed("fig12", "mse"), designed("fig12", "zf")
    gc = bundled("fig12").design.required_comm_sinr
    assert zf.achieved_comm_sinr[0] >= mse.achieved_comm_sinr[0] >= gc * (1 - 1e-6)


def test_fig12_zf_radar_null_at_node():
    s = bundled("fig12")
    cov = designed("fig12", "zf").covariances
    Rr = cov.R - cov.R_sum
    def pat(th):
        a = steering(s.geometry, th)
        return max(float(np.real(np.vdot(a, Rr @ a))), 0.0)
    peak = max(pat(t) for t in s.radar.sector)
    assert db(pat(s.nodes[0].los_angle) / peak) <= -20.0

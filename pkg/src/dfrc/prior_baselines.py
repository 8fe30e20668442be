"""Beampattern-matching baselines: the MSE design and its zero-forcing variant.

Both minimize ``L1 + w L2``, where ``L1`` is the mean squared mismatch
between the transmitted power pattern and a scaled desired pattern and
``L2`` penalizes cross-correlation between target directions. Transmit power
per element is factored out of the covariance, so it does not appear here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .array_model import AngleGrid, ArrayGeometry, DomainError, steering_matrix
from .conic_core import Affine, ConicProblem, MatrixAffine, Tolerances, solve
from .design_guarantee import DesignReport, finalize_design


@dataclass(frozen=True)
class DesiredPattern:
    grid: AngleGrid
    levels: np.ndarray
    target_angles: tuple = ()
    crosscorr_weight: float = 0.0

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        if levels.shape != (len(self.grid),):
            raise DomainError("one desired level per grid angle is required")
        if np.any(levels < 0):
            raise DomainError("desired levels must be nonnegative")
        object.__setattr__(self, "levels", levels)


def build_desired_pattern(sector: AngleGrid, margin: float, grid: AngleGrid,
                          target_angles=(), crosscorr_weight: float = 0.0) -> DesiredPattern:
    """Indicator of the sector widened by ``margin`` (sine units) on both sides."""
    if margin < 0:
        raise DomainError("margin must be nonnegative")
    s = np.sin(sector.as_array())
    lo, hi = s.min() - margin, s.max() + margin
    sg = np.sin(grid.as_array())
    eps = 1e-12
    levels = ((sg >= lo - eps) & (sg <= hi + eps)).astype(float)
    return DesiredPattern(grid, levels, tuple(target_angles), crosscorr_weight)


def l1_metric(R, alpha: float, pattern: DesiredPattern, geometry: ArrayGeometry) -> float:
    A = steering_matrix(geometry, pattern.grid.as_array())
    power = np.real(np.einsum("mq,mn,nq->q", A.conj(), np.asarray(R), A))
    return float(np.mean((alpha * pattern.levels - power) ** 2))


def l2_metric(R, target_angles, geometry: ArrayGeometry) -> float:
    """Mean squared cross-correlation between target directions; 0 for fewer than two."""
    q = len(target_angles)
    if q <= 1:
        return 0.0
    A = steering_matrix(geometry, np.asarray(target_angles))
    C = A.conj().T @ np.asarray(R) @ A
    iu = np.triu_indices(q, k=1)
    return float(2.0 / (q * q - q) * np.sum(np.abs(C[iu]) ** 2))


def build_mse_problem(scenario, gamma_c: float, pattern: DesiredPattern,
                      zero_forcing: bool = False) -> ConicProblem:
    geometry = scenario.geometry
    M = geometry.num_elements
    K = len(scenario.nodes)
    prob = ConicProblem(psd_vars=[("R", M)] + [(f"R_{k}", M) for k in range(K)],
                        scalar_vars=["alpha", "s"])
    for m in range(M):
        e = np.zeros((M, M), dtype=complex)
        e[m, m] = 1.0
        prob.eq.append(Affine({"R": e}, -1.0, label=f"power[{m}]"))
    if K:
        terms = {"R": 1.0}
        terms.update({f"R_{k}": -1.0 for k in range(K)})
        prob.psd.append(MatrixAffine(terms, label="radar_cov"))
    for k, node in enumerate(scenario.nodes):
        gg = np.outer(node.channel, node.channel.conj())
        prob.ineq.append(Affine({f"R_{k}": (node.symbol_len + gamma_c) * gg, "R": -gamma_c * gg},
                                -gamma_c, label=f"comm[{k}]"))
        if zero_forcing:
            prob.eq.append(Affine({"R": gg, f"R_{k}": -gg}, 0.0, label=f"zf[{k}]"))

    # epigraph s >= L1 + w L2 as a rotated cone ||(2v, s - 1)|| <= s + 1
    A = steering_matrix(geometry, pattern.grid.as_array())
    Q = A.shape[1]
    cone = []
    for q in range(Q):
        aa = np.outer(A[:, q], A[:, q].conj())
        cone.append(Affine({"alpha": pattern.levels[q] / np.sqrt(Q), "R": -aa / np.sqrt(Q)}))
    nt = len(pattern.target_angles)
    if pattern.crosscorr_weight > 0 and nt > 1:
        T = steering_matrix(geometry, np.asarray(pattern.target_angles))
        wgt = np.sqrt(pattern.crosscorr_weight * 2.0 / (nt * nt - nt))
        for q1 in range(nt - 1):
            for q2 in range(q1 + 1, nt):
                B = np.outer(T[:, q1], T[:, q2].conj())  # tr(R B) = a2^H R a1
                cone.append(Affine({"R": wgt * 0.5 * (B + B.conj().T)}))
                cone.append(Affine({"R": wgt * 0.5 * (-1j * B + (-1j * B).conj().T)}))
    cone = [Affine({k: 2.0 * c for k, c in e.terms.items()}, 2.0 * e.const) for e in cone]
    prob.soc.append([Affine({"s": 1.0}, 1.0), Affine({"s": 1.0}, -1.0)] + cone)
    prob.objective = Affine({"s": -1.0})
    return prob


def _default_pattern(scenario) -> DesiredPattern:
    d = scenario.design
    grid = AngleGrid.sine_uniform(d.eval_grid_points)
    margin = d.pattern_margin_beamwidths * scenario.geometry.beamwidth_sine
    return build_desired_pattern(scenario.radar.sector, margin, grid,
                                 d.target_angles, d.crosscorr_weight)


def _pattern_design(scenario, gamma_c, pattern, zero_forcing, method,
                    tolerances: Tolerances) -> DesignReport:
    gamma_c = scenario.design.required_comm_sinr if gamma_c is None else gamma_c
    if gamma_c is None or not gamma_c > 0:
        raise DomainError(f"{method} needs a positive comm SINR threshold")
    pattern = pattern or _default_pattern(scenario)
    out = solve(build_mse_problem(scenario, gamma_c, pattern, zero_forcing), tolerances)
    if not out.feasible:
        return DesignReport(method=method, status="infeasible",
                            diagnostics={"reason": f"solver status {out.status.value}"})

    def check(r):
        return bool(np.all(r.achieved_comm_sinr >= gamma_c * (1 - 1e-6)))

    report = finalize_design(scenario, method, out, range(len(scenario.nodes)),
                             scenario.design.radar_rank_cap, [], check=check)
    report.diagnostics["objective_L"] = l1_metric(report.covariances.R, out.solution["alpha"],
                                                   pattern, scenario.geometry) \
        + pattern.crosscorr_weight * l2_metric(report.covariances.R, pattern.target_angles,
                                               scenario.geometry)
    report.diagnostics["alpha"] = out.solution["alpha"]
    return report


def mse_design(scenario, gamma_c: Optional[float] = None, pattern: Optional[DesiredPattern] = None,
               tolerances: Tolerances = Tolerances()) -> DesignReport:
    return _pattern_design(scenario, gamma_c, pattern, False, "mse", tolerances)


def zf_design(scenario, gamma_c: Optional[float] = None, pattern: Optional[DesiredPattern] = None,
              tolerances: Tolerances = Tolerances()) -> DesignReport:
    """MSE design with every node's received interference forced to zero."""
    return _pattern_design(scenario, gamma_c, pattern, True, "zf", tolerances)

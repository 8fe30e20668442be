"""Radar-guarantee and communication-guarantee precoder design.

Both methods bisect, in dB, over the threshold of the subsystem being
maximized. Each step solves the covariance-domain feasibility problem with a
surplus variable ``t`` maximized on the maximized subsystem's constraints.
Precoders are recovered from the covariance solution at the final lower limit.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .array_model import DomainError, steering
from .conic_core import (RANK_TOL, Affine, ConicOutcome, ConicProblem, MatrixAffine, Status,
                         Tolerances, eigenspectrum, hermitian_part, psd_factor, solve)
from .link_metrics import (CovarianceSolution, Precoder, SecondaryNode, comm_sinrs, db, from_db,
                           gamma_c_max, gamma_r_max, radar_sinr_over)

log = logging.getLogger(__name__)


class Mode(enum.Enum):
    RADAR_GUARANTEE = "radar_guarantee"
    COMM_GUARANTEE = "comm_guarantee"


@dataclass
class GuaranteeConfig:
    mode: Mode
    fixed_threshold: float
    bisection_tol_db: float = 0.1
    floor_db: Optional[float] = None
    radar_rank_cap: Optional[int] = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not self.bisection_tol_db > 0:
            raise DomainError("bisection tolerance must be positive")
        if not self.fixed_threshold > 0:
            raise DomainError("fixed threshold must be positive")
        if self.floor_db is None:
            self.floor_db = -20.0 if self.mode is Mode.RADAR_GUARANTEE else 0.0

    @classmethod
    def for_scenario(cls, scenario, mode: Mode) -> "GuaranteeConfig":
        d = scenario.design
        if mode is Mode.RADAR_GUARANTEE:
            if scenario.radar.required_sinr is None:
                raise DomainError("radar guarantee needs radar.required_sinr_db")
            return cls(mode, scenario.radar.required_sinr, d.bisection_tol_db,
                       d.comm_floor_db, d.radar_rank_cap)
        if d.required_comm_sinr is None:
            raise DomainError("communication guarantee needs design.required_comm_sinr_db")
        return cls(mode, d.required_comm_sinr, d.bisection_tol_db, d.radar_floor_db,
                   d.radar_rank_cap)


@dataclass
class DesignReport:
    method: str
    status: str
    precoder: Optional[Precoder] = None
    covariances: Optional[CovarianceSolution] = None
    achieved_comm_sinr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    achieved_radar_sinr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    power_split: tuple = (0.0, 0.0)
    bisection_trace: list = field(default_factory=list)
    served: tuple = ()
    threshold_db: Optional[float] = None
    bracket_db: Optional[tuple] = None
    pre_reduction: Optional[dict] = None
    guarantee_met: Optional[bool] = None
    radar_eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == "ok"

    @property
    def achieved_radar_sinr_min(self) -> float:
        if self.achieved_radar_sinr.size == 0:
            return 0.0
        return float(np.min(self.achieved_radar_sinr))

    @property
    def radar_fraction(self) -> float:
        return self.power_split[0]

    @property
    def comm_fraction(self) -> float:
        return self.power_split[1]


# ---------------------------------------------------------------------------
# Feasibility problem
# ---------------------------------------------------------------------------

def _rk(k: int) -> str:
    return f"R_{k}"


def _comm_expr(node: SecondaryNode, k: int, gamma_c: float) -> Affine:
    """``g^H((N_c + G_c) R_k - G_c R) g - G_c``, nonnegative iff the SINR meets ``G_c``."""
    gg = np.outer(node.channel, node.channel.conj())
    return Affine({_rk(k): (node.symbol_len + gamma_c) * gg, "R": -gamma_c * gg},
                  -gamma_c, label=f"comm[{k}]")


def _radar_expr(scenario, angle: float, subset, gamma_r: float) -> Affine:
    """``M xi a^H(N_r R - (N_r + G_r) sum R_k) a - G_r``."""
    M = scenario.geometry.num_elements
    xi = scenario.radar.worst_case_input_snr
    Nr = scenario.radar.pulse_len
    a = steering(scenario.geometry, angle)
    aa = np.outer(a, a.conj())
    terms = {"R": Nr * M * xi * aa}
    for k in subset:
        terms[_rk(k)] = -(Nr + gamma_r) * M * xi * aa
    return Affine(terms, -gamma_r, label=f"radar[{np.rad2deg(angle):.3f}deg]")


def build_feasibility(scenario, gamma_c: float, gamma_r: float,
                      node_subset: Optional[Sequence[int]] = None,
                      surplus: Optional[Mode] = None) -> ConicProblem:
    """Covariance-domain feasibility problem for fixed comm/radar thresholds.

    ``surplus`` adds a scalar ``t`` bounded by the comm constraints
    (radar guarantee) or the radar constraints (comm guarantee) and maximizes it.
    """
    if gamma_c <= 0 or gamma_r <= 0:
        raise DomainError("thresholds must be strictly positive")
    if len(scenario.radar.sector) == 0:
        raise DomainError("empty search sector")
    M = scenario.geometry.num_elements
    subset = list(range(len(scenario.nodes))) if node_subset is None else sorted(node_subset)

    prob = ConicProblem(psd_vars=[("R", M)] + [(_rk(k), M) for k in subset])
    for m in range(M):
        e = np.zeros((M, M), dtype=complex)
        e[m, m] = 1.0
        prob.eq.append(Affine({"R": e}, -1.0, label=f"power[{m}]"))
    if subset:
        terms = {"R": 1.0}
        terms.update({_rk(k): -1.0 for k in subset})
        prob.psd.append(MatrixAffine(terms, label="radar_cov"))

    comm = [_comm_expr(scenario.nodes[k], k, gamma_c) for k in subset]
    radar = [_radar_expr(scenario, th, subset, gamma_r) for th in scenario.radar.sector]
    prob.ineq.extend(comm)
    prob.ineq.extend(radar)

    if surplus is not None:
        bounded = comm if surplus is Mode.RADAR_GUARANTEE else radar
        if not bounded:
            raise DomainError("surplus objective needs at least one bounding constraint")
        prob.scalar_vars.append("t")
        for e in bounded:
            terms = dict(e.terms)
            terms["t"] = -1.0
            prob.ineq.append(Affine(terms, e.const, label="surplus:" + e.label))
        prob.objective = Affine({"t": 1.0})
    return prob


def covariances_from(outcome: ConicOutcome, num_nodes: int, M: int) -> CovarianceSolution:
    sol = outcome.solution
    R_k = [hermitian_part(sol[_rk(k)]) if _rk(k) in sol else np.zeros((M, M), dtype=complex)
           for k in range(num_nodes)]
    return CovarianceSolution(R=hermitian_part(sol["R"]), R_k=R_k)


# ---------------------------------------------------------------------------
# Precoder recovery
# ---------------------------------------------------------------------------

def recover_precoders(solution: CovarianceSolution, nodes: Sequence[SecondaryNode]) -> Precoder:
    """Constructive recovery of ``W_c`` and ``W_r`` from a covariance solution.

    ``w_k = R_k g_k / sqrt(g_k^H R_k g_k)`` keeps each node's desired-signal
    power; the radar block factors the PSD remainder ``R - W_c W_c^H``.
    Nodes with (numerically) zero desired power get a zero column.
    """
    R = hermitian_part(solution.R)
    M = R.shape[0]
    W_c = np.zeros((M, len(nodes)), dtype=complex)
    scale = max(float(np.trace(R).real), 1e-300)
    for k, node in enumerate(nodes):
        Rk = hermitian_part(solution.R_k[k])
        g = node.channel
        q = float(np.real(np.vdot(g, Rk @ g)))
        if q <= RANK_TOL * scale * np.vdot(g, g).real:
            continue
        W_c[:, k] = Rk @ g / np.sqrt(q)
    W_r = psd_factor(R - W_c @ W_c.conj().T)
    return Precoder(W_c, W_r)


def reduce_radar_waveforms(W: Precoder, target_rank: int) -> Precoder:
    """Keep the ``target_rank`` strongest radar waveforms, then renormalize rows.

    Every row of the full precoder is rescaled so that each antenna again
    transmits unit power.
    """
    if target_rank < 1:
        raise DomainError("target_rank must be >= 1")
    W_r = psd_factor(W.W_r @ W.W_r.conj().T, rank_cap=target_rank)
    full = np.hstack([W.W_c, W_r])
    row_power = np.sum(np.abs(full) ** 2, axis=1)
    if np.any(row_power <= 0):
        raise DomainError("cannot renormalize a precoder with an all-zero row")
    full = full / np.sqrt(row_power)[:, None]
    K_c = W.W_c.shape[1]
    return Precoder(full[:, :K_c], full[:, K_c:])


# ---------------------------------------------------------------------------
# Bisection designs
# ---------------------------------------------------------------------------

def _metrics(scenario, W: Precoder) -> dict:
    comm = comm_sinrs(W, scenario.nodes) if scenario.nodes else np.zeros(0)
    radar = radar_sinr_over(W, scenario.radar, scenario.geometry)
    return {"comm_sinr": comm, "radar_sinr": radar, "power_split": W.power_split()}


def finalize_design(scenario, method: str, outcome: ConicOutcome, served: Sequence[int],
                    rank_cap: Optional[int], trace: list, threshold_db=None, bracket=None,
                    check=None) -> DesignReport:
    """Recover, optionally reduce, and evaluate a design from a solved problem."""
    M = scenario.geometry.num_elements
    cov = covariances_from(outcome, len(scenario.nodes), M)
    W = recover_precoders(cov, scenario.nodes)
    before = _metrics(scenario, W)
    radar_eigs = eigenspectrum(W.W_r @ W.W_r.conj().T)
    pre = None
    if rank_cap is not None and W.W_r.shape[1] > rank_cap:
        pre = {"comm_sinr": before["comm_sinr"], "radar_sinr_min": float(np.min(before["radar_sinr"])),
               "power_split": before["power_split"]}
        W = reduce_radar_waveforms(W, rank_cap)
    after = _metrics(scenario, W)
    active = tuple(k for k in served if np.any(W.W_c[:, k]))
    report = DesignReport(
        method=method, status="ok", precoder=W, covariances=cov,
        achieved_comm_sinr=after["comm_sinr"], achieved_radar_sinr=after["radar_sinr"],
        power_split=after["power_split"], bisection_trace=list(trace), served=active,
        threshold_db=threshold_db, bracket_db=bracket, pre_reduction=pre,
        radar_eigenvalues=radar_eigs,
        diagnostics={"max_violation": outcome.max_violation, "iterations": outcome.iterations,
                     "surplus_t": (outcome.solution or {}).get("t")},
    )
    if check is not None:
        report.guarantee_met = bool(check(report))
    return report


def _terminated(method: str, trace: list, reason: str) -> DesignReport:
    return DesignReport(method=method, status="infeasible", bisection_trace=list(trace),
                        diagnostics={"reason": reason})


def bisect_db(probe, lo: float, hi: float, tol: float):
    """Bisection in dB following the probe-floor-first rule.

    ``probe(x_db)`` returns a ConicOutcome. Returns ``(best, lo, hi, trace)``
    with ``best`` None if the floor itself is infeasible.
    """
    trace = []
    out = probe(lo)
    trace.append((lo, out.status.value))
    if not out.feasible:
        if out.status is Status.NUMERICAL_FAILURE:
            log.info("numerical failure at floor %.3f dB treated as infeasible", lo)
        return None, lo, hi, trace
    best = out
    hi = max(hi, lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        out = probe(mid)
        trace.append((mid, out.status.value))
        if out.feasible:
            lo, best = mid, out
        else:
            if out.status is Status.NUMERICAL_FAILURE:
                log.info("numerical failure at %.4f dB treated as infeasible", mid)
            hi = mid
    return best, lo, hi, trace


def radar_guarantee(scenario, config: Optional[GuaranteeConfig] = None) -> DesignReport:
    """Maximize the minimum comm SINR subject to a radar SINR guarantee."""
    method = Mode.RADAR_GUARANTEE.value
    config = config or GuaranteeConfig.for_scenario(scenario, Mode.RADAR_GUARANTEE)
    if config.mode is not Mode.RADAR_GUARANTEE:
        raise DomainError("radar_guarantee needs a RADAR_GUARANTEE config")
    gamma_r = config.fixed_threshold
    if not scenario.nodes:
        raise DomainError("radar guarantee needs at least one secondary node")
    if gamma_r > gamma_r_max(scenario.radar, scenario.geometry) * (1 + 1e-12):
        return _terminated(method, [(config.floor_db, Status.INFEASIBLE.value)],
                           "radar threshold exceeds the maximum processing gain")

    def probe(x_db):
        prob = build_feasibility(scenario, float(from_db(x_db)), gamma_r,
                                 surplus=Mode.RADAR_GUARANTEE)
        return solve(prob, config.tolerances)

    hi = float(db(gamma_c_max(scenario.nodes, scenario.geometry)))
    best, lo, hi, trace = bisect_db(probe, config.floor_db, hi, config.bisection_tol_db)
    if best is None:
        return _terminated(method, trace, "infeasible at the comm SINR floor")

    def check(r):
        return r.achieved_radar_sinr_min >= gamma_r * (1 - 1e-6)

    return finalize_design(scenario, method, best, range(len(scenario.nodes)),
                           config.radar_rank_cap, trace, lo, (lo, hi), check)


def comm_guarantee(scenario, config: Optional[GuaranteeConfig] = None,
                   node_subset: Optional[Sequence[int]] = None) -> DesignReport:
    """Maximize the minimum radar SINR over the sector subject to comm guarantees.

    ``node_subset`` restricts which nodes are served; the others get no
    transmissions.
    """
    method = Mode.COMM_GUARANTEE.value
    config = config or GuaranteeConfig.for_scenario(scenario, Mode.COMM_GUARANTEE)
    if config.mode is not Mode.COMM_GUARANTEE:
        raise DomainError("comm_guarantee needs a COMM_GUARANTEE config")
    gamma_c = config.fixed_threshold
    subset = list(range(len(scenario.nodes))) if node_subset is None else sorted(node_subset)
    if subset and gamma_c > gamma_c_max([scenario.nodes[k] for k in subset],
                                        scenario.geometry) * (1 + 1e-12):
        return _terminated(method, [(config.floor_db, Status.INFEASIBLE.value)],
                           "comm threshold exceeds the maximum achievable SINR")

    def probe(x_db):
        prob = build_feasibility(scenario, gamma_c, float(from_db(x_db)), subset,
                                 surplus=Mode.COMM_GUARANTEE)
        return solve(prob, config.tolerances)

    hi = float(db(gamma_r_max(scenario.radar, scenario.geometry)))
    best, lo, hi, trace = bisect_db(probe, config.floor_db, hi, config.bisection_tol_db)
    if best is None:
        return _terminated(method, trace, "infeasible at the radar SINR floor")

    def check(r):
        return all(r.achieved_comm_sinr[k] >= gamma_c * (1 - 1e-6) for k in subset)

    return finalize_design(scenario, method, best, subset, config.radar_rank_cap, trace,
                           lo, (lo, hi), check)

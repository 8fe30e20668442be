"""Radar-priority design: close as many communication links as the radar
guarantee allows, then hand all spare power to the radar via a
communication-guarantee solve restricted to the chosen nodes."""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .array_model import DomainError
from .conic_core import Tolerances, solve
from .design_guarantee import DesignReport, GuaranteeConfig, Mode, build_feasibility, comm_guarantee

log = logging.getLogger(__name__)

MAX_ENUMERATED_NODES = 20
POWER_TIE_TOL = 1e-6


class Variant(enum.Enum):
    COMBINATORIAL = "combinatorial"
    GREEDY = "greedy"


@dataclass(frozen=True)
class PrioritySpec:
    gamma_r: float
    gamma_c: float
    variant: Variant = Variant.COMBINATORIAL

    def __post_init__(self):
        if not (self.gamma_r > 0 and self.gamma_c > 0):
            raise DomainError("priority thresholds must be positive")

    @classmethod
    def for_scenario(cls, scenario, variant: Optional[Variant] = None) -> "PrioritySpec":
        if scenario.radar.required_sinr is None or scenario.design.required_comm_sinr is None:
            raise DomainError("radar priority needs both radar and comm SINR thresholds")
        v = variant or Variant(scenario.design.priority_variant)
        return cls(scenario.radar.required_sinr, scenario.design.required_comm_sinr, v)


def subset_feasible(scenario, subset: Sequence[int], gamma_c: float, gamma_r: float,
                    tolerances: Tolerances = Tolerances()) -> bool:
    """Can every node in ``subset`` reach ``gamma_c`` under the radar guarantee?"""
    if any(not 0 <= k < len(scenario.nodes) for k in subset):
        raise DomainError(f"subset {tuple(subset)} references unknown nodes")
    out = solve(build_feasibility(scenario, gamma_c, gamma_r, subset), tolerances)
    if not out.feasible and out.status.value == "numerical_failure":
        log.warning("solver failure for subset %s treated as infeasible", tuple(subset))
    return out.feasible


def _finish(scenario, spec: PrioritySpec, subset) -> DesignReport:
    d = scenario.design
    config = GuaranteeConfig(Mode.COMM_GUARANTEE, spec.gamma_c, d.bisection_tol_db,
                             d.radar_floor_db, d.radar_rank_cap)
    return comm_guarantee(scenario, config, node_subset=subset)


def _relabel(report: DesignReport, method: str, subset, extra: dict) -> DesignReport:
    report.method = method
    report.served = tuple(subset) if report.feasible else ()
    report.diagnostics.update(extra)
    return report


def _closes_links(spec: PrioritySpec, subset):
    def check(r):
        return all(r.achieved_comm_sinr[k] >= spec.gamma_c * (1 - 1e-6) for k in subset) and \
            r.achieved_radar_sinr_min >= spec.gamma_r * (1 - 1e-6)
    return check


def priority_combinatorial(scenario, spec: Optional[PrioritySpec] = None) -> DesignReport:
    """Exhaustive search for the largest jointly closable set of links.

    Subsets are visited by increasing size then lexicographically. Feasibility
    is downward closed (dropping a node relaxes every constraint), so a
    superset of a known-infeasible subset is marked infeasible without a solve.
    Ties at the largest size go to the subset whose finished design spends
    the least power on communications.
    """
    spec = spec or PrioritySpec.for_scenario(scenario, Variant.COMBINATORIAL)
    K = len(scenario.nodes)
    if K > MAX_ENUMERATED_NODES:
        raise DomainError(f"{K} nodes is too many to enumerate; use the greedy variant")

    feasible, infeasible = [], []
    for size in range(K + 1):
        for subset in itertools.combinations(range(K), size):
            if any(set(bad) <= set(subset) for bad in infeasible):
                continue
            if subset_feasible(scenario, subset, spec.gamma_c, spec.gamma_r):
                feasible.append(subset)
            else:
                infeasible.append(subset)
    method = "priority_combinatorial"
    if not feasible:
        report = DesignReport(method=method, status="infeasible",
                              diagnostics={"reason": "radar guarantee infeasible with no links"})
        return report

    best_size = max(len(s) for s in feasible)
    candidates = [s for s in feasible if len(s) == best_size]
    best, best_power = None, None
    powers = {}
    for subset in candidates:
        rep = _finish(scenario, spec, subset)
        power = rep.comm_fraction if rep.feasible else float("inf")
        powers[subset] = power
        if best is None or power < best_power - POWER_TIE_TOL:
            best, best_power = (subset, rep), power
    subset, report = best
    report = _relabel(report, method, subset, {
        "feasible_subsets": [list(s) for s in feasible],
        "candidate_comm_power": {",".join(map(str, s)): p for s, p in powers.items()},
    })
    if report.feasible:
        report.guarantee_met = _closes_links(spec, subset)(report)
    return report


def priority_greedy(scenario, spec: Optional[PrioritySpec] = None) -> DesignReport:
    """Serve nodes in order of increasing communication power need.

    Each individually closable node is ranked by the comm power fraction of
    a single-node communication-guarantee design; nodes are then admitted one
    at a time while the joint problem stays feasible.
    """
    spec = spec or PrioritySpec.for_scenario(scenario, Variant.GREEDY)
    K = len(scenario.nodes)
    method = "priority_greedy"
    singles = {}
    for k in range(K):
        if subset_feasible(scenario, (k,), spec.gamma_c, spec.gamma_r):
            singles[k] = _finish(scenario, spec, (k,))
    need = {k: (r.comm_fraction if r.feasible else float("inf")) for k, r in singles.items()}
    # ties within POWER_TIE_TOL fall back to node index
    def rank(k):
        p = need[k]
        return (p // POWER_TIE_TOL if p != float("inf") else float("inf"), k)

    order = sorted(need, key=rank)

    chosen = []
    for k in order:
        trial = tuple(sorted(chosen + [k]))
        if len(trial) == 1 or subset_feasible(scenario, trial, spec.gamma_c, spec.gamma_r):
            chosen.append(k)
    chosen = tuple(sorted(chosen))

    if len(chosen) == 1:
        report = singles[chosen[0]]
    else:
        if not chosen and not subset_feasible(scenario, (), spec.gamma_c, spec.gamma_r):
            return DesignReport(method=method, status="infeasible",
                                diagnostics={"reason": "radar guarantee infeasible with no links"})
        report = _finish(scenario, spec, chosen)
    report = _relabel(report, method, chosen, {
        "singleton_feasible": sorted(singles),
        "ranking": order,
        "singleton_comm_power": {str(k): need[k] for k in order},
    })
    if report.feasible:
        report.guarantee_met = _closes_links(spec, chosen)(report)
    return report


def radar_priority(scenario, spec: Optional[PrioritySpec] = None) -> DesignReport:
    spec = spec or PrioritySpec.for_scenario(scenario)
    if spec.variant is Variant.GREEDY:
        return priority_greedy(scenario, spec)
    return priority_combinatorial(scenario, spec)

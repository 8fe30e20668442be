import itertools

import numpy as np
import pytest

from dfrc.array_model import DomainError
from dfrc.design_guarantee import comm_guarantee
from dfrc.design_priority import (PrioritySpec, Variant, priority_combinatorial, priority_greedy,
                                  radar_priority, subset_feasible)
from dfrc.link_metrics import from_db

from helpers import small_scenario

GC, GR = from_db(5.0), from_db(15.0)


def test_spec_validation_and_defaults():
    with pytest.raises(DomainError):
        PrioritySpec(0.0, 1.0)
    s = small_scenario([(30, -5)])
    spec = PrioritySpec.for_scenario(s)
    assert spec.variant is Variant.COMBINATORIAL
    assert spec.gamma_c == pytest.approx(GC)


def test_unknown_node_rejected():
    s = small_scenario([(30, -5)])
    with pytest.raises(DomainError):
        subset_feasible(s, (3,), GC, GR)


def test_feasibility_is_downward_closed():
    s = small_scenario([(-60, -6), (20, -6), (55, -6)], xi_db=-26.0)
    feas = {sub: subset_feasible(s, sub, GC, GR)
            for n in range(4) for sub in itertools.combinations(range(3), n)}
    for sub, ok in feas.items():
        if ok:
            for n in range(len(sub)):
                for smaller in itertools.combinations(sub, n):
                    assert feas[smaller]


def test_all_links_closable_reduces_to_comm_guarantee():
    s = small_scenario([(-50, -2), (45, -2)], xi_db=-25.0)
    rep = priority_combinatorial(s)
    assert rep.served == (0, 1)
    ref = comm_guarantee(s)
    assert rep.power_split == pytest.approx(ref.power_split, abs=1e-9)
    assert rep.guarantee_met


def test_node_inside_sector_is_not_served():
    s = small_scenario([(1.0, -8), (60, -5)], xi_db=-26.5)
    for variant in Variant:
        rep = radar_priority(s, PrioritySpec(GR, GC, variant))
        assert 0 not in rep.served


def test_greedy_ranking_recorded():
    s = small_scenario([(-50, -3), (45, -6)], xi_db=-25.0)
    rep = priority_greedy(s)
    assert rep.method == "priority_greedy"
    assert set(rep.diagnostics["ranking"]) <= {0, 1}
    needs = [rep.diagnostics["singleton_comm_power"][str(k)] for k in rep.diagnostics["ranking"]]
    assert needs == sorted(needs)


def test_no_links_when_radar_alone_fails():
    s = small_scenario([(40, -5)], xi_db=-29.0)
    assert priority_combinatorial(s).status == "infeasible"
    assert priority_greedy(s).status == "infeasible"

import math

import pytest
from hypothesis import given, strategies as st

from conftest import placement, small_random, tiny_instance, uniform_instance
from ponplace.model import GenConfig, Placement, generate_instance
from ponplace.network import build_routing_map
from ponplace.power import evaluate
from ponplace.solve import (InfeasibleStart, Objective, Status, local_search_improve,
                            solve_bfd, solve_exhaustive, solve_local)
from ponplace.solve._data import build_search_data
from ponplace.solve.exhaustive import all_placements
from ponplace.solve.heuristics import pair_start, repair_placement


def test_bfd_tiny(tiny):
    r = solve_bfd(tiny, "pc+pn", build_routing_map(tiny.topology, tiny.power))
    assert r.status is Status.FEASIBLE
    assert r.placement == placement(0, 0) and r.objective_value == 251.0


def test_bfd_step_through():
    # 1.5 opens a server, 1.4 does not fit beside it and opens the second,
    # 1.0 fits exactly into the first server's remaining 1.0 GHz
    inst = uniform_instance(3, [1.5, 1.4, 1.0], [2.5, 2.5])
    r = solve_bfd(inst, "pc", build_routing_map(inst.topology, inst.power))
    assert r.status is Status.FEASIBLE
    assert r.placement == placement(0, 1, 0)


def test_bfd_three_items_two_small_servers_is_infeasible():
    # no two of 1.5 / 1.4 / 1.0 GHz fit together on a 2.0 GHz server
    inst = uniform_instance(3, [1.5, 1.4, 1.0], [2.0, 2.0])
    rm = build_routing_map(inst.topology, inst.power)
    assert solve_bfd(inst, "pc", rm).status is Status.INFEASIBLE
    assert solve_exhaustive(inst, "pc", rm).status is Status.INFEASIBLE


def test_bfd_counts_new_onus_under_pc_plus_pn():
    # server 0 cannot hold both; VM 2 talks to VM 0, so pc+pn puts it next to VM 0
    t = {(0, 2): 1.0}
    inst = uniform_instance(3, [1.2, 0.9, 0.6], [2.0, 2.0, 2.0], t)
    rm = build_routing_map(inst.topology, inst.power)
    pn = solve_bfd(inst, "pc+pn", rm)
    assert pn.placement[2] == pn.placement[0]
    assert pn.breakdown.pn_w == 0.0


def test_bfd_never_optimal_status():
    for seed in range(10):
        inst = generate_instance(GenConfig(num_vms=8, seed=seed, traffic_density=0.05))
        r = solve_bfd(inst, "pc", build_routing_map(inst.topology, inst.power))
        assert r.status in (Status.FEASIBLE, Status.INFEASIBLE)


def _worst_feasible(inst, obj):
    rm = build_routing_map(inst.topology, inst.power)
    worst, wp = -math.inf, None
    for hosts in all_placements(inst):
        p = Placement(dict(enumerate(hosts)))
        b, rep = evaluate(inst, p, rm)
        if rep.feasible and obj.value_of(b) > worst:
            worst, wp = obj.value_of(b), p
    return wp


def test_local_search_keeps_optimum(tiny):
    rm = build_routing_map(tiny.topology, tiny.power)
    opt = solve_exhaustive(tiny, "pc+pn", rm).placement
    assert local_search_improve(tiny, "pc+pn", rm, opt, seed=3) == opt


def test_local_search_from_worst_reaches_bfd(tiny):
    rm = build_routing_map(tiny.topology, tiny.power)
    for obj in Objective:
        worst = _worst_feasible(tiny, obj)
        p = local_search_improve(tiny, obj, rm, worst)
        b, _ = evaluate(tiny, p, rm)
        assert obj.value_of(b) <= solve_bfd(tiny, obj, rm).objective_value


def test_local_search_deterministic():
    inst = generate_instance(GenConfig(num_vms=10, seed=4, traffic_density=0.05))
    rm = build_routing_map(inst.topology, inst.power)
    start = solve_bfd(inst, "pc+pn", rm).placement
    a = local_search_improve(inst, "pc+pn", rm, start, seed=9)
    b = local_search_improve(inst, "pc+pn", rm, start, seed=9)
    assert a == b


def test_local_search_respects_budget():
    inst = generate_instance(GenConfig(num_vms=10, seed=4, traffic_density=0.05))
    rm = build_routing_map(inst.topology, inst.power)
    start = solve_bfd(inst, "pc+pn", rm).placement
    assert local_search_improve(inst, "pc+pn", rm, start, max_evaluations=0) == start


def test_local_search_rejects_infeasible_start():
    inst = uniform_instance(2, 1.5, [2.0, 2.0])
    with pytest.raises(InfeasibleStart):
        local_search_improve(inst, "pc", build_routing_map(inst.topology, inst.power),
                             placement(0, 0))


@given(seed=st.integers(0, 100_000), objective=st.sampled_from(list(Objective)),
       ls_seed=st.integers(0, 1000))
def test_dominance_chain(seed, objective, ls_seed):
    inst = small_random(seed)
    rm = build_routing_map(inst.topology, inst.power)
    bfd = solve_bfd(inst, objective, rm)
    ex = solve_exhaustive(inst, objective, rm)
    if bfd.placement is None:
        return
    assert ex.objective_value <= bfd.objective_value + 1e-9
    ls = local_search_improve(inst, objective, rm, bfd.placement, seed=ls_seed)
    b, rep = evaluate(inst, ls, rm)
    assert rep.feasible
    assert ex.objective_value - 1e-9 <= objective.value_of(b) <= bfd.objective_value + 1e-9


def test_repair_finds_placement_bfd_misses():
    found = 0
    for seed in range(40):
        inst = generate_instance(GenConfig(num_vms=15, seed=seed))
        rm = build_routing_map(inst.topology, inst.power)
        if solve_bfd(inst, "pc", rm).placement is not None:
            continue
        p = repair_placement(inst, "pc", rm, seed=0, max_evaluations=50_000)
        if p is not None:
            assert evaluate(inst, p, rm)[1].feasible
            found += 1
    assert found > 0


def test_repair_is_deterministic():
    inst = generate_instance(GenConfig(num_vms=15, seed=1))
    rm = build_routing_map(inst.topology, inst.power)
    a = repair_placement(inst, "pc", rm, seed=2, max_evaluations=20_000)
    b = repair_placement(inst, "pc", rm, seed=2, max_evaluations=20_000)
    assert a == b


def test_pair_start_uses_roomy_servers():
    # ten VMs near 1.5 GHz; only the largest server can take the two smallest
    inst = generate_instance(GenConfig(num_vms=10, seed=2, traffic_density=0.05,
                                       req_range_ghz=(1.3, 1.7)))
    rm = build_routing_map(inst.topology, inst.power)
    data = build_search_data(inst, "pc", rm)
    host = pair_start(data, 50_000)
    assert host is not None
    p = data.placement_of(host)
    b, rep = evaluate(inst, p, rm)
    assert rep.feasible and b.active_servers == 9
    assert solve_bfd(inst, "pc", rm).breakdown.active_servers == 10


def test_solve_local_status_and_dominance():
    for seed in range(5):
        inst = generate_instance(GenConfig(num_vms=10, seed=seed, traffic_density=0.05))
        rm = build_routing_map(inst.topology, inst.power)
        loc = solve_local(inst, "pc+pn", rm, seed=1)
        bfd = solve_bfd(inst, "pc+pn", rm)
        assert loc.status is Status.FEASIBLE
        assert loc.objective_value <= bfd.objective_value + 1e-9

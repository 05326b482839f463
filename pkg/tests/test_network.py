import math
import random

import pytest
from hypothesis import given, strategies as st

from conftest import placement, small_random, tiny_instance, uniform_instance
from ponplace.model import (Instance, Placement, PowerParams, ServerSpec, Topology,
                            TrafficMatrix, VmSpec)
from ponplace.network import (Channel, ChannelKind, NetworkLoad, build_routing_map,
                              check_network_feasible, derive_loads)

DEFAULT = build_routing_map(Topology(), PowerParams())


def test_default_map_three_channels_per_pair():
    assert len(DEFAULT.channels) == 12
    for (i, j), chans in DEFAULT.channels.items():
        assert i != j
        kinds = [c.kind for c in chans]
        assert kinds == [ChannelKind.AWGR, ChannelKind.AWGR, ChannelKind.OLT]


def test_default_pair_capacity_is_30():
    for i, j in DEFAULT.rack_pairs():
        assert DEFAULT.pair_capacity(i, j) == sum(c.capacity_gbps for c in DEFAULT.channels[i, j])
        assert DEFAULT.pair_capacity(i, j) == 30.0


def test_single_rack_map_is_empty():
    assert build_routing_map(Topology(1, 7, 4, 2, 1), PowerParams()).channels == {}


def test_cyclic_wavelength_rule():
    topo = Topology(4, 7, 4, 3, 2)
    rm = build_routing_map(topo, PowerParams(wavelength_capacity_gbps=2.5))
    for (i, j), chans in rm.channels.items():
        awgr = [c for c in chans if c.kind is ChannelKind.AWGR]
        assert [c.wavelength_id for c in awgr] == [(i + j + a) % 4 for a in range(3)]
        assert all(c.wavelength_id < topo.num_wavelengths for c in awgr)
        olt = [c for c in chans if c.kind is ChannelKind.OLT]
        assert len(olt) == 2 and all(c.wavelength_id is None for c in olt)
        assert all(c.capacity_gbps == 2.5 for c in chans)


def test_colocated_pair_has_zero_load():
    inst = tiny_instance()
    load = derive_loads(inst, placement(0, 0), build_routing_map(inst.topology, inst.power))
    assert not any(load.egress_gbps.values()) and not any(load.ingress_gbps.values())
    assert not any(load.channel_flow_gbps.values())
    assert load.active_onus() == []


def test_inter_rack_split_equal_channels():
    inst = uniform_instance(2, 0.5, [2.0] * 4, {(0, 1): 3.0}, Topology(2, 2, 4, 2, 1))
    rm = build_routing_map(inst.topology, inst.power)
    load = derive_loads(inst, placement(0, 2), rm)
    assert load.rack_demand_gbps[(0, 1)] == 3.0
    assert [load.channel_flow_gbps[(0, 1, c)] for c in range(3)] == [1.0, 1.0, 1.0]
    assert load.egress_gbps[0] == 3.0 and load.ingress_gbps[2] == 3.0
    assert load.rack_demand_gbps[(1, 0)] == 0.0


def test_intra_rack_loads_onus_only():
    inst = uniform_instance(2, 0.5, [2.0] * 4, {(0, 1): 2.0}, Topology(2, 2, 4, 2, 1))
    load = derive_loads(inst, placement(0, 1), build_routing_map(inst.topology, inst.power))
    assert load.egress_gbps[0] == 2.0 and load.ingress_gbps[1] == 2.0
    assert load.egress_gbps[1] == 0.0 and load.ingress_gbps[0] == 0.0
    assert not any(load.channel_flow_gbps.values())
    assert load.active_onus() == [0, 1]


def test_unequal_channels_split_proportionally():
    inst = uniform_instance(2, 0.5, [2.0] * 2, {(0, 1): 6.0}, Topology(2, 1, 4, 1, 1))
    rm = build_routing_map(inst.topology, inst.power)
    rm.channels[(0, 1)] = (rm.channels[(0, 1)][0], Channel(ChannelKind.OLT, 20.0))
    load = derive_loads(inst, placement(0, 1), rm)
    assert load.channel_flow_gbps[(0, 1, 0)] == pytest.approx(2.0)
    assert load.channel_flow_gbps[(0, 1, 1)] == pytest.approx(4.0)


def test_zero_load_feasible():
    inst = tiny_instance()
    rm = build_routing_map(inst.topology, inst.power)
    assert check_network_feasible(derive_loads(inst, placement(0, 0), rm), inst, rm).feasible


def test_egress_overload_names_server_and_excess():
    inst = uniform_instance(2, 0.5, [2.0] * 2, {(0, 1): 12.0})
    rm = build_routing_map(inst.topology, inst.power)
    rep = check_network_feasible(derive_loads(inst, placement(0, 1), rm), inst, rm)
    kinds = {(v.kind, v.subject): v.excess for v in rep.violations}
    assert kinds[("onu-egress", (0,))] == pytest.approx(2.0)
    assert kinds[("onu-ingress", (1,))] == pytest.approx(2.0)
    assert "server 0" in rep.violations[0].message


def test_rack_pair_overload():
    # 31 Gbps from rack 0 to rack 1 over 3 x 10 Gbps channels; ONUs are
    # given ample capacity so only the rack pair is violated
    topo = Topology(2, 4, 4, 2, 1)
    t = {(0, 4): 8.0, (1, 5): 8.0, (2, 6): 8.0, (3, 7): 7.0}
    servers = tuple(ServerSpec(i, i // 4, 2.0) for i in range(8))
    inst = Instance(topo, servers, tuple(VmSpec(i, 0.5) for i in range(8)), TrafficMatrix(t),
                    PowerParams())
    rm = build_routing_map(topo, inst.power)
    rep = check_network_feasible(derive_loads(inst, placement(*range(8)), rm), inst, rm)
    (v,) = rep.violations
    assert v.kind == "rack-pair" and v.subject == (0, 1)
    assert v.excess == pytest.approx(1.0)


def _random_placement(inst, rng):
    ids = [s.server_id for s in inst.servers]
    return Placement({v.vm_id: rng.choice(ids) for v in inst.vms})


@given(seed=st.integers(0, 10_000), pseed=st.integers(0, 10_000))
def test_conservation_and_split_exactness(seed, pseed):
    inst = small_random(seed, density=0.6)
    rm = build_routing_map(inst.topology, inst.power)
    pl = _random_placement(inst, random.Random(pseed))
    p = derive_loads(inst, pl, rm)
    inter = math.fsum(t for (u, v), t in inst.traffic.items() if pl[u] != pl[v])
    assert math.fsum(p.egress_gbps.values()) == pytest.approx(inter, abs=1e-9)
    assert math.fsum(p.ingress_gbps.values()) == pytest.approx(inter, abs=1e-9)
    for (i, j), d in p.rack_demand_gbps.items():
        flows = math.fsum(p.channel_flow_gbps[(i, j, c)] for c in range(len(rm.channels[i, j])))
        assert math.isclose(flows, d, rel_tol=1e-9, abs_tol=1e-12)
    assert all(x >= 0 for x in p.egress_gbps.values())


def _components(load: NetworkLoad):
    return (list(load.egress_gbps.values()) + list(load.ingress_gbps.values())
            + list(load.channel_flow_gbps.values()) + list(load.rack_demand_gbps.values()))


@given(seed=st.integers(0, 10_000), pseed=st.integers(0, 10_000))
def test_colocating_a_pair_never_increases_any_load(seed, pseed):
    # v keeps only its demands with u, so moving v next to u can only remove
    # traffic; with other partners the move may split v from one of them
    inst = small_random(seed, density=0.6)
    if not len(inst.traffic):
        return
    rng = random.Random(pseed)
    (u, v), _ = rng.choice(list(inst.traffic.items()))
    kept = {k: t for k, t in inst.traffic.items() if v not in k or set(k) == {u, v}}
    inst = Instance(inst.topology, inst.servers, inst.vms, TrafficMatrix(kept), inst.power)
    rm = build_routing_map(inst.topology, inst.power)
    p = _random_placement(inst, rng)
    moved = dict(p.host)
    moved[v] = p[u]
    before = _components(derive_loads(inst, p, rm))
    after = _components(derive_loads(inst, Placement(moved), rm))
    assert all(x <= y + 1e-12 for x, y in zip(after, before))


def test_colocating_can_split_a_third_partner():
    # u on server 0, v and w together on server 1; moving v to u separates v, w
    t = {(0, 1): 1.0, (1, 2): 5.0}
    inst = uniform_instance(3, 0.4, [2.0] * 2, t)
    rm = build_routing_map(inst.topology, inst.power)
    before = derive_loads(inst, placement(0, 1, 1), rm)
    after = derive_loads(inst, placement(0, 0, 1), rm)
    assert after.egress_gbps[0] > before.egress_gbps[0]


@given(seed=st.integers(0, 10_000), pseed=st.integers(0, 10_000),
       perm_seed=st.integers(0, 10_000))
def test_rack_relabelling_permutes_loads(seed, pseed, perm_seed):
    inst = small_random(seed, density=0.6, topo=Topology(3, 2, 4, 2, 1))
    rng = random.Random(pseed)
    p = _random_placement(inst, rng)
    perm = list(range(3))
    random.Random(perm_seed).shuffle(perm)
    spr = inst.topology.servers_per_rack
    # server k of rack r becomes server k of rack perm[r]
    smap = {s.server_id: perm[s.rack_id] * spr + s.server_id % spr for s in inst.servers}
    servers = tuple(ServerSpec(smap[s.server_id], perm[s.rack_id], s.capacity_ghz)
                    for s in inst.servers)
    inst2 = Instance(inst.topology, servers, inst.vms, inst.traffic, inst.power)
    p2 = Placement({v: smap[s] for v, s in p.host.items()})
    rm = build_routing_map(inst.topology, inst.power)
    a, b = derive_loads(inst, p, rm), derive_loads(inst2, p2, rm)
    for s, g in a.egress_gbps.items():
        assert b.egress_gbps[smap[s]] == g
        assert b.ingress_gbps[smap[s]] == a.ingress_gbps[s]
    for (i, j), d in a.rack_demand_gbps.items():
        assert b.rack_demand_gbps[(perm[i], perm[j])] == d

import itertools
import json

import pytest
from hypothesis import given, strategies as st

from conftest import uniform_instance
from ponplace.model import (GenConfig, Instance, InstanceError, ParseError, Placement,
                            PowerParams, SchemaError, ServerSpec, Topology, TrafficMatrix,
                            VmSpec, generate_instance, instance_to_dict, load_instance,
                            load_placement, save_instance, save_placement, validate_instance)
from ponplace.network import build_routing_map
from ponplace.power import evaluate


def test_power_params_defaults():
    p = PowerParams()
    assert (p.server_max_w, p.server_idle_w, p.onu_power_w, p.onu_capacity_gbps) == \
        (301.0, 201.0, 2.5, 10.0)
    assert p.dynamic_w == 100.0


@pytest.mark.parametrize("kw", [dict(server_max_w=200.0), dict(server_idle_w=-1.0),
                                dict(onu_power_w=-0.5), dict(onu_capacity_gbps=0.0),
                                dict(wavelength_capacity_gbps=-1.0)])
def test_power_params_reject(kw):
    with pytest.raises(InstanceError):
        PowerParams(**kw)


def test_topology_default_cell():
    t = Topology()
    assert (t.num_racks, t.servers_per_rack, t.num_wavelengths, t.num_awgrs,
            t.olt_paths_per_rack_pair) == (4, 7, 4, 2, 1)
    assert t.num_servers == 28
    with pytest.raises(InstanceError):
        Topology(num_racks=0)


def test_default_five_vm_instance_is_clean():
    inst = generate_instance(GenConfig(num_vms=5, seed=3))
    inst = Instance(inst.topology, inst.servers, tuple(VmSpec(v.vm_id, 0.3) for v in inst.vms),
                    inst.traffic, inst.power)
    rep = validate_instance(inst)
    assert rep.valid and not rep.warnings


def test_oversized_vm_is_a_violation():
    caps = [1.8, 2.0, 2.5, 2.75]
    inst = uniform_instance(1, 3.0, caps)
    rep = validate_instance(inst)
    assert not rep.valid
    (issue,) = rep.violations
    assert issue.kind == "oversized-vm"
    assert "exceeds every server capacity" in issue.message


def test_traffic_triangle_warning_matches_brute_force():
    # three 1.5 GHz VMs, 6 Gbps on every directed edge; only pairs fit a server
    topo = Topology(2, 2, 4, 2, 1)
    t = {(u, v): 6.0 for u in range(3) for v in range(3) if u != v}
    inst = uniform_instance(3, 1.5, [2.75] * 4, t, topo)
    rep = validate_instance(inst)
    assert rep.valid
    assert [w.kind for w in rep.warnings] == ["onu-overload"] * 3
    routing = build_routing_map(topo, inst.power)
    feasible = [h for h in itertools.product(range(4), repeat=3)
                if evaluate(inst, Placement(dict(enumerate(h))), routing)[1].feasible]
    assert feasible == []


def test_light_traffic_no_warning():
    t = {(0, 1): 6.0, (1, 0): 6.0}
    inst = uniform_instance(2, 0.4, [2.0, 2.0], t)
    assert validate_instance(inst).warnings == ()


def test_structural_violations_reported():
    topo = Topology(1, 2, 4, 2, 1)
    servers = (ServerSpec(0, 0, 2.0), ServerSpec(1, 3, 2.0))
    inst = Instance(topo, servers, (VmSpec(0, 0.5), VmSpec(0, 0.4)),
                    TrafficMatrix({(0, 5): 1.0}), PowerParams(), max_active_servers=9)
    kinds = {i.kind for i in validate_instance(inst).violations}
    assert {"rack", "duplicate-vm", "traffic-endpoint", "max-active", "topology"} <= kinds


def test_generate_is_deterministic():
    a = save_instance(generate_instance(GenConfig(seed=7)))
    b = save_instance(generate_instance(GenConfig(seed=7)))
    assert a == b
    assert a != save_instance(generate_instance(GenConfig(seed=8)))


def test_generate_default_ranges():
    inst = generate_instance(GenConfig(num_vms=10))
    assert len(inst.vms) == 10 and len(inst.servers) == 28
    assert all(0.1 <= v.requirement_ghz <= 0.5 for v in inst.vms)
    assert all(1.8 <= s.capacity_ghz <= 2.75 for s in inst.servers)
    assert all(0.1 <= t <= 4.0 for _, t in inst.traffic.items())
    assert [s.rack_id for s in inst.servers] == [i // 7 for i in range(28)]


def test_zero_density_has_no_traffic():
    assert len(generate_instance(GenConfig(num_vms=12, traffic_density=0.0)).traffic) == 0


def test_full_density_is_all_pairs():
    inst = generate_instance(GenConfig(num_vms=6, traffic_density=1.0))
    assert len(inst.traffic) == 30


def test_thousand_generated_instances_in_range_and_valid():
    for seed in range(1000):
        cfg = GenConfig(num_vms=seed % 21, seed=seed, req_range_ghz=(0.2, 0.9),
                        traffic_density=0.3)
        inst = generate_instance(cfg)
        assert validate_instance(inst).valid
        assert all(0.2 <= v.requirement_ghz <= 0.9 for v in inst.vms)
        assert all(1.8 <= s.capacity_ghz <= 2.75 for s in inst.servers)
        assert all(0.1 <= t <= 4.0 and u != v for (u, v), t in inst.traffic.items())


@pytest.mark.parametrize("kw", [dict(num_vms=-1), dict(req_range_ghz=(0.5, 0.1)),
                                dict(traffic_density=1.5), dict(seed=-3),
                                dict(cap_range_ghz=(0.0, 1.0))])
def test_genconfig_rejects(kw):
    with pytest.raises(InstanceError):
        GenConfig(**kw)


ranges = st.tuples(st.floats(0.05, 3.0), st.floats(0.0, 2.0)).map(lambda p: (p[0], p[0] + p[1]))


@given(seed=st.integers(0, 2**64 - 1), n=st.integers(0, 12), req=ranges, cap=ranges,
       traffic=ranges, density=st.floats(0.0, 1.0))
def test_generated_values_inside_closed_ranges(seed, n, req, cap, traffic, density):
    cfg = GenConfig(num_vms=n, seed=seed, req_range_ghz=req, cap_range_ghz=cap,
                    traffic_range_gbps=traffic, traffic_density=density)
    inst = generate_instance(cfg)
    assert all(req[0] <= v.requirement_ghz <= req[1] for v in inst.vms)
    assert all(cap[0] <= s.capacity_ghz <= cap[1] for s in inst.servers)
    assert all(traffic[0] <= t <= traffic[1] for _, t in inst.traffic.items())
    assert load_instance(save_instance(inst)) == inst


def test_round_trip_default():
    inst = generate_instance(GenConfig(num_vms=15, seed=11))
    text = save_instance(inst)
    back = load_instance(text)
    assert back == inst
    assert save_instance(back) == text


def test_round_trip_optional_fields():
    inst = uniform_instance(2, 0.5, [2.0, 2.0], {(1, 0): 2.0}, max_active_servers=1)
    inst = Instance(inst.topology, inst.servers, inst.vms, inst.traffic,
                    PowerParams(idle_when_unused=True), 1)
    assert load_instance(save_instance(inst)) == inst


def test_map_ordering_normalized():
    a = TrafficMatrix({(2, 0): 1.0, (0, 1): 2.0})
    b = TrafficMatrix({(0, 1): 2.0, (2, 0): 1.0})
    assert list(a.items()) == list(b.items()) == [((0, 1), 2.0), ((2, 0), 1.0)]


def test_missing_power_names_the_field():
    doc = instance_to_dict(generate_instance(GenConfig(num_vms=3)))
    del doc["power"]
    with pytest.raises(SchemaError) as err:
        load_instance(json.dumps(doc))
    assert err.value.field == "power"


def test_missing_nested_field():
    doc = instance_to_dict(generate_instance(GenConfig(num_vms=3)))
    del doc["vms"][1]["requirement_ghz"]
    with pytest.raises(SchemaError) as err:
        load_instance(json.dumps(doc))
    assert err.value.field == "vms[1].requirement_ghz"


def test_negative_rate_rejected():
    doc = instance_to_dict(generate_instance(GenConfig(num_vms=4, traffic_density=1.0)))
    doc["traffic"][0]["gbps"] = -1.0
    with pytest.raises(InstanceError, match="rate"):
        load_instance(json.dumps(doc))


def test_parse_error_has_location():
    with pytest.raises(ParseError) as err:
        load_instance('{\n  "topology": [1,\n}')
    assert err.value.line == 3


def test_wrong_type_rejected():
    doc = instance_to_dict(generate_instance(GenConfig(num_vms=2)))
    doc["servers"][0]["capacity_ghz"] = "fast"
    with pytest.raises(SchemaError, match=r"servers\[0\].capacity_ghz"):
        load_instance(json.dumps(doc))


def test_oversized_instance_still_loads():
    inst = uniform_instance(1, 3.0, [2.0, 2.5])
    assert load_instance(save_instance(inst)) == inst


def test_placement_round_trip_and_errors():
    p = Placement({2: 5, 0: 1, 1: 1})
    assert p.vector() == (1, 1, 5)
    assert load_placement(save_placement(p)) == p
    with pytest.raises(SchemaError, match="assigned twice"):
        load_placement('{"host": [{"vm": 0, "server": 1}, {"vm": 0, "server": 2}]}')
    with pytest.raises(SchemaError):
        load_placement('{"hosts": []}')

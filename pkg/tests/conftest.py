import os

import pytest
from hypothesis import HealthCheck, settings

from ponplace.model import (GenConfig, Instance, Placement, PowerParams, ServerSpec, Topology,
                            TrafficMatrix, VmSpec, generate_instance)
from ponplace.network import build_routing_map

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SMALL = Topology(2, 2, 4, 2, 1)
TRIPLE = Topology(2, 3, 4, 2, 1)


def tiny_instance(split_traffic=1.0) -> Instance:
    """Two 0.5 GHz VMs exchanging ``split_traffic`` Gbps each way, four
    2.0 GHz servers in two racks."""
    servers = tuple(ServerSpec(i, i // 2, 2.0) for i in range(4))
    vms = (VmSpec(0, 0.5), VmSpec(1, 0.5))
    t = {(0, 1): split_traffic, (1, 0): split_traffic} if split_traffic else {}
    return Instance(SMALL, servers, vms, TrafficMatrix(t), PowerParams())


def uniform_instance(n_vms, req, caps, traffic=None, topo=None, **kw) -> Instance:
    topo = topo or Topology(1, len(caps), 4, 2, 1)
    servers = tuple(ServerSpec(i, i // topo.servers_per_rack, c) for i, c in enumerate(caps))
    reqs = req if isinstance(req, (list, tuple)) else [req] * n_vms
    vms = tuple(VmSpec(i, r) for i, r in enumerate(reqs))
    return Instance(topo, servers, vms, TrafficMatrix(traffic or {}), PowerParams(), **kw)


def small_random(seed, n_vms=None, topo=None, density=None, req=(0.3, 1.6),
                 traffic=(0.5, 8.0)) -> Instance:
    """Enumerable instance where capacity, ONU and rack-pair limits all bite
    now and then. Shape parameters left as None are drawn from the seed."""
    import random
    r = random.Random(seed * 7919 + 17)
    if topo is None:
        topo = r.choice([SMALL, TRIPLE, Topology(3, 2, 4, 1, 1), Topology(1, 4, 4, 2, 1)])
    if n_vms is None:
        n_vms = r.randint(1, 5)
    if density is None:
        density = r.choice([0.0, 0.3, 0.6])
    cfg = GenConfig(num_vms=n_vms, topology=topo, seed=seed, req_range_ghz=req,
                    traffic_density=density, traffic_range_gbps=traffic,
                    power=PowerParams(wavelength_capacity_gbps=r.choice([10.0, 4.0])))
    return generate_instance(cfg)


def routing_of(inst):
    return build_routing_map(inst.topology, inst.power)


def placement(*hosts) -> Placement:
    return Placement(dict(enumerate(hosts)))


@pytest.fixture
def tiny():
    return tiny_instance()


# acceptance verdicts, echoed in the terminal summary so they survive capture
ACCEPTANCE: list[str] = []


def record_verdict(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

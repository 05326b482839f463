"""Processing and networking power of a placement."""
from __future__ import annotations

from dataclasses import dataclass

from .model import Instance, Placement, PowerParams
from .network import (FEAS_TOL, FeasibilityReport, NetworkLoad, RoutingMap,
                      Violation, check_network_feasible, derive_loads)


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class PowerBreakdown:
    pc_w: float
    pn_w: float
    total_w: float
    active_servers: int
    active_onus: int

    def to_dict(self) -> dict:
        return {"pc_w": self.pc_w, "pn_w": self.pn_w, "total_w": self.total_w,
                "active_servers": self.active_servers, "active_onus": self.active_onus}


def server_power(util_ghz: float, capacity_ghz: float, p: PowerParams) -> float:
    """Linear idle-to-max curve; an unloaded server is switched off (0 W)."""
    if util_ghz < 0 or util_ghz > capacity_ghz + FEAS_TOL:
        raise ValueError(f"utilization {util_ghz} outside [0, {capacity_ghz}]")
    if util_ghz == 0:
        return p.server_idle_w if p.idle_when_unused else 0.0
    return p.server_idle_w + p.dynamic_w * util_ghz / capacity_ghz


def _utilization(inst: Instance, placement: Placement) -> dict[int, float]:
    known_vms = {v.vm_id for v in inst.vms}
    if set(placement.host) != known_vms:
        missing = sorted(known_vms - set(placement.host))
        extra = sorted(set(placement.host) - known_vms)
        raise PlacementError(f"placement is not total over the VMs "
                             f"(missing {missing}, unknown {extra})")
    util = {s.server_id: 0.0 for s in inst.servers}
    for v in inst.vms:
        s = placement[v.vm_id]
        if s not in util:
            raise PlacementError(f"VM {v.vm_id} placed on unknown server {s}")
        util[s] += v.requirement_ghz
    return util


def evaluate_with_loads(inst: Instance, placement: Placement, routing: RoutingMap
                        ) -> tuple[PowerBreakdown, FeasibilityReport, NetworkLoad]:
    util = _utilization(inst, placement)
    p = inst.power
    bad = []
    pc = 0.0
    active = 0
    for srv in inst.servers:
        u = util[srv.server_id]
        if u > srv.capacity_ghz + FEAS_TOL:
            bad.append(Violation("server-capacity", (srv.server_id,), u - srv.capacity_ghz,
                                 f"server {srv.server_id} load {u:.6g} GHz exceeds "
                                 f"capacity {srv.capacity_ghz:.6g}"))
            pc += p.server_idle_w + p.dynamic_w * u / srv.capacity_ghz
        else:
            pc += server_power(u, srv.capacity_ghz, p)
        if u > 0:
            active += 1
    m = inst.max_active_servers
    if m is not None and active > m:
        bad.append(Violation("max-active", (), float(active - m),
                             f"{active} active servers exceed the limit of {m}"))
    load = derive_loads(inst, placement, routing)
    report = FeasibilityReport(tuple(bad)) + check_network_feasible(load, inst, routing)
    onus = len(load.active_onus())
    pn = p.onu_power_w * onus
    return PowerBreakdown(pc, pn, pc + pn, active, onus), report, load


def evaluate(inst: Instance, placement: Placement, routing: RoutingMap
             ) -> tuple[PowerBreakdown, FeasibilityReport]:
    """Power breakdown plus feasibility; infeasible placements are still priced."""
    breakdown, report, _ = evaluate_with_loads(inst, placement, routing)
    return breakdown, report

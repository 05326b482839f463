"""Rack-pair routing map and per-placement ONU / channel loads.

Capacity is fluid: a rack pair's demand is split over its channels in
proportion to channel capacity, so a channel overloads exactly when the
rack pair's aggregate capacity is exceeded.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .model import Instance, Placement, PowerParams, Topology

# absolute slack on every capacity comparison
FEAS_TOL = 1e-9


class ChannelKind(str, enum.Enum):
    AWGR = "awgr"
    OLT = "olt"


@dataclass(frozen=True)
class Channel:
    kind: ChannelKind
    capacity_gbps: float
    wavelength_id: int | None = None


@dataclass(frozen=True)
class RoutingMap:
    num_racks: int
    channels: dict[tuple[int, int], tuple[Channel, ...]] = field(default_factory=dict)

    def pair_capacity(self, i: int, j: int) -> float:
        return math.fsum(c.capacity_gbps for c in self.channels.get((i, j), ()))

    def rack_pairs(self):
        return self.channels.keys()


def build_routing_map(topology: Topology, power: PowerParams) -> RoutingMap:
    """Every ordered rack pair gets one channel per AWGR plus its OLT paths.

    AWGR ``a`` carries rack pair (i, j) on wavelength (i + j + a) mod W.
    """
    W = topology.num_wavelengths
    cap = power.wavelength_capacity_gbps
    channels = {}
    for i in range(topology.num_racks):
        for j in range(topology.num_racks):
            if i == j:
                continue
            chans = [Channel(ChannelKind.AWGR, cap, (i + j + a) % W)
                     for a in range(topology.num_awgrs)]
            chans += [Channel(ChannelKind.OLT, cap)] * topology.olt_paths_per_rack_pair
            channels[(i, j)] = tuple(chans)
    return RoutingMap(topology.num_racks, channels)


@dataclass(frozen=True)
class NetworkLoad:
    egress_gbps: dict[int, float]
    ingress_gbps: dict[int, float]
    channel_flow_gbps: dict[tuple[int, int, int], float]
    rack_demand_gbps: dict[tuple[int, int], float]

    def active_onus(self) -> list[int]:
        """Servers carrying any inter-server traffic, ascending."""
        return [s for s in self.egress_gbps
                if self.egress_gbps[s] > 0 or self.ingress_gbps[s] > 0]

    def to_dict(self) -> dict:
        return {
            "egress_gbps": [{"server": s, "gbps": g} for s, g in self.egress_gbps.items()],
            "ingress_gbps": [{"server": s, "gbps": g} for s, g in self.ingress_gbps.items()],
            "rack_demand_gbps": [{"src_rack": i, "dst_rack": j, "gbps": g}
                                 for (i, j), g in self.rack_demand_gbps.items()],
            "channel_flow_gbps": [{"src_rack": i, "dst_rack": j, "channel": c, "gbps": g}
                                  for (i, j, c), g in self.channel_flow_gbps.items()],
        }


def derive_loads(inst: Instance, placement: Placement, routing: RoutingMap) -> NetworkLoad:
    rack = {s.server_id: s.rack_id for s in inst.servers}
    egress = {s.server_id: 0.0 for s in inst.servers}
    ingress = dict(egress)
    demand = {pair: 0.0 for pair in routing.rack_pairs()}
    for (u, v), t in inst.traffic.items():
        hu, hv = placement[u], placement[v]
        if hu == hv:
            continue
        egress[hu] += t
        ingress[hv] += t
        if rack[hu] != rack[hv]:
            demand[(rack[hu], rack[hv])] += t
    flows = {}
    for (i, j), chans in routing.channels.items():
        total = routing.pair_capacity(i, j)
        for c, ch in enumerate(chans):
            flows[(i, j, c)] = demand[(i, j)] * (ch.capacity_gbps / total)
    return NetworkLoad(egress, ingress, flows, demand)


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: tuple
    excess: float
    message: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "subject": list(self.subject),
                "excess": self.excess, "message": self.message}


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __add__(self, other: "FeasibilityReport") -> "FeasibilityReport":
        return FeasibilityReport(self.violations + other.violations)


def check_network_feasible(load: NetworkLoad, inst: Instance,
                           routing: RoutingMap) -> FeasibilityReport:
    cap = inst.power.onu_capacity_gbps
    out = []
    for s, g in load.egress_gbps.items():
        if g > cap + FEAS_TOL:
            out.append(Violation("onu-egress", (s,), g - cap,
                                 f"server {s} egress {g:.6g} Gbps exceeds ONU "
                                 f"capacity {cap:.6g} by {g - cap:.6g}"))
    for s, g in load.ingress_gbps.items():
        if g > cap + FEAS_TOL:
            out.append(Violation("onu-ingress", (s,), g - cap,
                                 f"server {s} ingress {g:.6g} Gbps exceeds ONU "
                                 f"capacity {cap:.6g} by {g - cap:.6g}"))
    for (i, j), d in load.rack_demand_gbps.items():
        pc = routing.pair_capacity(i, j)
        if d > pc + FEAS_TOL:
            out.append(Violation("rack-pair", (i, j), d - pc,
                                 f"rack pair ({i}, {j}) demand {d:.6g} Gbps exceeds "
                                 f"channel capacity {pc:.6g} by {d - pc:.6g}"))
    return FeasibilityReport(tuple(out))

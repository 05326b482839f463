"""Domain types, validation, seeded instance generation and the JSON schema.

All types are frozen dataclasses and can be shared freely between workers.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class SchemaError(ValueError):
    """A document does not follow the instance/placement schema.

    ``field`` carries the dotted path of the offending entry.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ParseError(ValueError):
    """Malformed JSON text, with the location reported by the decoder."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class InstanceError(ValueError):
    """A structurally well-formed document violates an instance invariant."""


@dataclass(frozen=True)
class PowerParams:
    server_max_w: float = 301.0
    server_idle_w: float = 201.0
    onu_power_w: float = 2.5
    onu_capacity_gbps: float = 10.0
    wavelength_capacity_gbps: float = 10.0
    # unused servers draw idle power instead of being switched off
    idle_when_unused: bool = False

    def __post_init__(self):
        if not self.server_max_w > self.server_idle_w >= 0:
            raise InstanceError("need server_max_w > server_idle_w >= 0")
        if self.onu_power_w < 0:
            raise InstanceError("onu_power_w must be >= 0")
        if not self.onu_capacity_gbps > 0:
            raise InstanceError("onu_capacity_gbps must be > 0")
        if not self.wavelength_capacity_gbps > 0:
            raise InstanceError("wavelength_capacity_gbps must be > 0")

    @property
    def dynamic_w(self) -> float:
        return self.server_max_w - self.server_idle_w


@dataclass(frozen=True)
class Topology:
    num_racks: int = 4
    servers_per_rack: int = 7
    num_wavelengths: int = 4
    num_awgrs: int = 2
    olt_paths_per_rack_pair: int = 1

    def __post_init__(self):
        for name in ("num_racks", "servers_per_rack", "num_wavelengths",
                     "num_awgrs", "olt_paths_per_rack_pair"):
            if getattr(self, name) < 1:
                raise InstanceError(f"topology.{name} must be >= 1")

    @property
    def num_servers(self) -> int:
        return self.num_racks * self.servers_per_rack


@dataclass(frozen=True)
class ServerSpec:
    server_id: int
    rack_id: int
    capacity_ghz: float


@dataclass(frozen=True)
class VmSpec:
    vm_id: int
    requirement_ghz: float


@dataclass(frozen=True)
class TrafficMatrix:
    """Directed inter-VM demands in Gbps keyed by ``(src, dst)``."""

    demands: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        # normalize ordering so equal matrices serialize identically
        object.__setattr__(self, "demands", dict(sorted(self.demands.items())))

    def __len__(self):
        return len(self.demands)

    def items(self):
        return self.demands.items()

    def rate(self, src: int, dst: int) -> float:
        return self.demands.get((src, dst), 0.0)


@dataclass(frozen=True)
class Instance:
    topology: Topology
    servers: tuple[ServerSpec, ...]
    vms: tuple[VmSpec, ...]
    traffic: TrafficMatrix
    power: PowerParams
    max_active_servers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "servers",
                           tuple(sorted(self.servers, key=lambda s: s.server_id)))
        object.__setattr__(self, "vms", tuple(sorted(self.vms, key=lambda v: v.vm_id)))

    def server(self, server_id: int) -> ServerSpec:
        return self._server_index()[server_id]

    def vm(self, vm_id: int) -> VmSpec:
        return self._vm_index()[vm_id]

    def _server_index(self) -> dict[int, ServerSpec]:
        idx = self.__dict__.get("_srv_idx")
        if idx is None:
            idx = {s.server_id: s for s in self.servers}
            object.__setattr__(self, "_srv_idx", idx)
        return idx

    def _vm_index(self) -> dict[int, VmSpec]:
        idx = self.__dict__.get("_vm_idx")
        if idx is None:
            idx = {v.vm_id: v for v in self.vms}
            object.__setattr__(self, "_vm_idx", idx)
        return idx

    @property
    def max_capacity_ghz(self) -> float:
        return max((s.capacity_ghz for s in self.servers), default=0.0)

    @property
    def total_requirement_ghz(self) -> float:
        return math.fsum(v.requirement_ghz for v in self.vms)


@dataclass(frozen=True)
class Placement:
    """Total map from vm_id to hosting server_id."""

    host: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "host", dict(sorted(self.host.items())))

    def __getitem__(self, vm_id: int) -> int:
        return self.host[vm_id]

    def vector(self) -> tuple[int, ...]:
        """Host ids ordered by vm_id (the tie-break key)."""
        return tuple(self.host.values())


@dataclass(frozen=True)
class GenConfig:
    num_vms: int = 10
    req_range_ghz: tuple[float, float] = (0.1, 0.5)
    cap_range_ghz: tuple[float, float] = (1.8, 2.75)
    traffic_range_gbps: tuple[float, float] = (0.1, 4.0)
    traffic_density: float = 0.2
    topology: Topology = field(default_factory=Topology)
    seed: int = 0
    power: PowerParams = field(default_factory=PowerParams)
    max_active_servers: int | None = None

    def __post_init__(self):
        if self.num_vms < 0:
            raise InstanceError("num_vms must be >= 0")
        for name in ("req_range_ghz", "cap_range_ghz", "traffic_range_gbps"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise InstanceError(f"{name}: lo > hi")
            if lo <= 0:
                raise InstanceError(f"{name}: values must be positive")
        if not 0.0 <= self.traffic_density <= 1.0:
            raise InstanceError("traffic_density must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise InstanceError("seed must be a 64-bit unsigned integer")


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Issue:
    kind: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Issue, ...] = ()
    warnings: tuple[Issue, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations


# neighbour sets above this size are not enumerated for the ONU warning
_MAX_SUBSET_DEGREE = 16


def _onu_relief_possible(inst: Instance, vm_id: int) -> bool:
    """Can some co-located subset of neighbours bring the VM's own
    inter-server ingress and egress under the ONU capacity on one server?"""
    p = inst.power
    out = {d: t for (s, d), t in inst.traffic.items() if s == vm_id}
    inn = {s: t for (s, d), t in inst.traffic.items() if d == vm_id}
    nbrs = sorted(set(out) | set(inn))
    egress, ingress = math.fsum(out.values()), math.fsum(inn.values())
    cap = inst.max_capacity_ghz
    req = inst.vm(vm_id).requirement_ghz
    if len(nbrs) > _MAX_SUBSET_DEGREE:
        # only the whole closure is tried
        subsets = [(), tuple(nbrs)]
    else:
        subsets = itertools.chain.from_iterable(
            itertools.combinations(nbrs, k) for k in range(len(nbrs) + 1))
    for sub in subsets:
        load = req + math.fsum(inst.vm(u).requirement_ghz for u in sub)
        if load > cap + 1e-9:
            continue
        e = egress - math.fsum(out.get(u, 0.0) for u in sub)
        i = ingress - math.fsum(inn.get(u, 0.0) for u in sub)
        if e <= p.onu_capacity_gbps + 1e-9 and i <= p.onu_capacity_gbps + 1e-9:
            return True
    return False


def validate_instance(inst: Instance) -> ValidationReport:
    """Collect invariant violations and feasibility warnings; never raises."""
    bad: list[Issue] = []
    warn: list[Issue] = []
    topo = inst.topology

    ids = [s.server_id for s in inst.servers]
    if len(set(ids)) != len(ids):
        bad.append(Issue("duplicate-server", "duplicate server ids"))
    if len(inst.servers) != topo.num_servers:
        bad.append(Issue("topology", f"expected {topo.num_servers} servers, "
                                     f"got {len(inst.servers)}"))
    per_rack: dict[int, int] = {}
    for s in inst.servers:
        if s.server_id < 0:
            bad.append(Issue("server-id", f"server {s.server_id} has a negative id"))
        if not 0 <= s.rack_id < topo.num_racks:
            bad.append(Issue("rack", f"server {s.server_id} has rack {s.rack_id} "
                                     f"outside 0..{topo.num_racks - 1}"))
        if not (s.capacity_ghz > 0 and math.isfinite(s.capacity_ghz)):
            bad.append(Issue("capacity", f"server {s.server_id} capacity must be > 0"))
        per_rack[s.rack_id] = per_rack.get(s.rack_id, 0) + 1
    for r, k in sorted(per_rack.items()):
        if k != topo.servers_per_rack:
            bad.append(Issue("topology", f"rack {r} holds {k} servers, "
                                         f"expected {topo.servers_per_rack}"))

    vm_ids = [v.vm_id for v in inst.vms]
    if len(set(vm_ids)) != len(vm_ids):
        bad.append(Issue("duplicate-vm", "duplicate VM ids"))
    cap = inst.max_capacity_ghz
    for v in inst.vms:
        if v.vm_id < 0:
            bad.append(Issue("vm-id", f"VM {v.vm_id} has a negative id"))
        if not (v.requirement_ghz > 0 and math.isfinite(v.requirement_ghz)):
            bad.append(Issue("requirement", f"VM {v.vm_id} requirement must be > 0"))
        elif v.requirement_ghz > cap + 1e-9:
            bad.append(Issue("oversized-vm",
                             f"VM {v.vm_id} exceeds every server capacity "
                             f"({v.requirement_ghz} > {cap} GHz)"))

    known = set(vm_ids)
    for (src, dst), t in inst.traffic.items():
        if src not in known or dst not in known:
            bad.append(Issue("traffic-endpoint",
                             f"traffic ({src}, {dst}) references an undeclared VM"))
        if src == dst:
            bad.append(Issue("self-demand", f"VM {src} has traffic to itself"))
        if not (t > 0 and math.isfinite(t)):
            bad.append(Issue("traffic-rate", f"traffic ({src}, {dst}) rate must be "
                                             "positive and finite"))

    m = inst.max_active_servers
    if m is not None and not 1 <= m <= len(inst.servers):
        bad.append(Issue("max-active", f"max_active_servers={m} outside "
                                       f"1..{len(inst.servers)}"))

    if not bad:
        cap_onu = inst.power.onu_capacity_gbps
        for v in inst.vms:
            eg = math.fsum(t for (s, _), t in inst.traffic.items() if s == v.vm_id)
            ing = math.fsum(t for (_, d), t in inst.traffic.items() if d == v.vm_id)
            if max(eg, ing) > cap_onu and not _onu_relief_possible(inst, v.vm_id):
                warn.append(Issue(
                    "onu-overload",
                    f"VM {v.vm_id} demands {max(eg, ing):.6g} Gbps on one direction "
                    f"and no co-location of its neighbours fits one server"))
    return ValidationReport(tuple(bad), tuple(warn))


# ---------------------------------------------------------------- generation

def generate_instance(cfg: GenConfig) -> Instance:
    """Draw a random instance.

    Draw order is fixed: server capacities by server id, then VM
    requirements by vm id, then for every ordered pair (u, v), u != v, in
    lexicographic order one density coin and, when it lands, one rate.
    Servers are numbered rack by rack.
    """
    rng = np.random.default_rng(cfg.seed)
    topo = cfg.topology
    servers = []
    for sid in range(topo.num_servers):
        c = float(rng.uniform(*cfg.cap_range_ghz))
        servers.append(ServerSpec(sid, sid // topo.servers_per_rack, c))
    vms = [VmSpec(i, float(rng.uniform(*cfg.req_range_ghz))) for i in range(cfg.num_vms)]
    demands = {}
    for u in range(cfg.num_vms):
        for v in range(cfg.num_vms):
            if u == v:
                continue
            if rng.random() < cfg.traffic_density:
                demands[(u, v)] = float(rng.uniform(*cfg.traffic_range_gbps))
    return Instance(topo, tuple(servers), tuple(vms), TrafficMatrix(demands),
                    cfg.power, cfg.max_active_servers)


# ---------------------------------------------------------------- serialization

_TOPO_KEYS = ("num_racks", "servers_per_rack", "num_wavelengths", "num_awgrs",
              "olt_paths_per_rack_pair")
_POWER_KEYS = ("server_max_w", "server_idle_w", "onu_power_w", "onu_capacity_gbps",
               "wavelength_capacity_gbps")


def instance_to_dict(inst: Instance) -> dict:
    doc = {
        "topology": {k: getattr(inst.topology, k) for k in _TOPO_KEYS},
        "servers": [{"id": s.server_id, "rack": s.rack_id, "capacity_ghz": s.capacity_ghz}
                    for s in inst.servers],
        "vms": [{"id": v.vm_id, "requirement_ghz": v.requirement_ghz} for v in inst.vms],
        "traffic": [{"src": s, "dst": d, "gbps": t} for (s, d), t in inst.traffic.items()],
        "power": {k: getattr(inst.power, k) for k in _POWER_KEYS},
    }
    if inst.power.idle_when_unused:
        doc["power"]["idle_when_unused"] = True
    if inst.max_active_servers is not None:
        doc["max_active_servers"] = inst.max_active_servers
    return doc


def save_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None


def _get(obj, key, where):
    if not isinstance(obj, dict):
        raise SchemaError(where or "<root>", "expected an object")
    if key not in obj:
        raise SchemaError(f"{where}.{key}" if where else key, "missing")
    return obj[key]


def _num(x, where, integer=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(where, "expected a number")
    if integer:
        if isinstance(x, float) and not x.is_integer():
            raise SchemaError(where, "expected an integer")
        if x < 0:
            raise SchemaError(where, "expected a non-negative integer")
        return int(x)
    return float(x)


def _list(x, where):
    if not isinstance(x, list):
        raise SchemaError(where, "expected a list")
    return x


def instance_from_dict(doc) -> Instance:
    topo_doc = _get(doc, "topology", "")
    topo = Topology(**{k: _num(_get(topo_doc, k, "topology"), f"topology.{k}", True)
                       for k in _TOPO_KEYS})
    servers = []
    for i, s in enumerate(_list(_get(doc, "servers", ""), "servers")):
        w = f"servers[{i}]"
        servers.append(ServerSpec(_num(_get(s, "id", w), f"{w}.id", True),
                                  _num(_get(s, "rack", w), f"{w}.rack", True),
                                  _num(_get(s, "capacity_ghz", w), f"{w}.capacity_ghz")))
    vms = []
    for i, v in enumerate(_list(_get(doc, "vms", ""), "vms")):
        w = f"vms[{i}]"
        vms.append(VmSpec(_num(_get(v, "id", w), f"{w}.id", True),
                          _num(_get(v, "requirement_ghz", w), f"{w}.requirement_ghz")))
    demands = {}
    for i, t in enumerate(_list(_get(doc, "traffic", ""), "traffic")):
        w = f"traffic[{i}]"
        key = (_num(_get(t, "src", w), f"{w}.src", True),
               _num(_get(t, "dst", w), f"{w}.dst", True))
        if key in demands:
            raise SchemaError(w, f"duplicate demand {key}")
        demands[key] = _num(_get(t, "gbps", w), f"{w}.gbps")
    power_doc = _get(doc, "power", "")
    kw = {k: _num(_get(power_doc, k, "power"), f"power.{k}") for k in _POWER_KEYS}
    kw["idle_when_unused"] = bool(power_doc.get("idle_when_unused", False))
    power = PowerParams(**kw)
    cap = doc.get("max_active_servers")
    if cap is not None:
        cap = _num(cap, "max_active_servers", True)
    inst = Instance(topo, tuple(servers), tuple(vms), TrafficMatrix(demands), power, cap)
    # oversized VMs stay loadable so infeasible instances can be stored and solved
    fatal = [i for i in validate_instance(inst).violations if i.kind != "oversized-vm"]
    if fatal:
        raise InstanceError("; ".join(i.message for i in fatal))
    return inst


def load_instance(text: str) -> Instance:
    """Parse an instance document.

    Raises ParseError for malformed JSON, SchemaError naming the field for
    missing or mistyped entries, and InstanceError when invariants fail.
    """
    return instance_from_dict(_loads(text))


def placement_to_dict(p: Placement) -> dict:
    return {"host": [{"vm": v, "server": s} for v, s in p.host.items()]}


def save_placement(p: Placement) -> str:
    return json.dumps(placement_to_dict(p), indent=2) + "\n"


def placement_from_dict(doc) -> Placement:
    host = {}
    for i, e in enumerate(_list(_get(doc, "host", ""), "host")):
        w = f"host[{i}]"
        vm = _num(_get(e, "vm", w), f"{w}.vm", True)
        if vm in host:
            raise SchemaError(w, f"VM {vm} assigned twice")
        host[vm] = _num(_get(e, "server", w), f"{w}.server", True)
    return Placement(host)


def load_placement(text: str) -> Placement:
    return placement_from_dict(_loads(text))

"""Flat array view of an instance, shared by both kernel backends."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..model import Instance
from ..network import FEAS_TOL, RoutingMap

# relative tolerance when comparing objective values (ties)
OBJ_TOL = 1e-9


class Objective(str, enum.Enum):
    PC_ONLY = "pc"
    PC_PLUS_PN = "pc+pn"

    @classmethod
    def parse(cls, text) -> "Objective":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("_", "").replace(" ", "")
        for obj in cls:
            if key in (obj.value, obj.name.lower().replace("_", "")):
                return obj
        raise ValueError(f"unknown objective {text!r} (use 'pc' or 'pc+pn')")

    def value_of(self, breakdown) -> float:
        return breakdown.total_w if self is Objective.PC_PLUS_PN else breakdown.pc_w


@dataclass(frozen=True, eq=False)
class SearchData:
    n: int
    S: int
    R: int
    vm_ids: tuple
    server_ids: tuple
    req: np.ndarray
    order: np.ndarray
    rem: np.ndarray
    minreq: np.ndarray
    cap: np.ndarray
    rack: np.ndarray
    by_cap: np.ndarray
    out_ptr: np.ndarray
    out_nbr: np.ndarray
    out_rate: np.ndarray
    in_ptr: np.ndarray
    in_nbr: np.ndarray
    in_rate: np.ndarray
    chan_cap: np.ndarray
    idle: float
    dyn: float
    onu_w: float
    onu_cap: float
    use_pn: int
    max_active: int
    idle_unused: int
    # pairwise server-incompatible VMs: count among order[d:], and the
    # smallest such requirement
    big: np.ndarray
    big_min: float
    # VMs above a third of the largest capacity (at most two share a
    # server): count among order[d:]
    mid: np.ndarray
    # per VM index: has a demand partner it can never share a server with
    forced: np.ndarray
    # forced VMs inside the incompatible set: count among order[d:]
    fclq: np.ndarray
    fc_min: float
    tol_feas: float = FEAS_TOL
    tol_obj: float = OBJ_TOL

    def host_array(self, placement) -> np.ndarray:
        sidx = {s: i for i, s in enumerate(self.server_ids)}
        return np.array([sidx[placement[v]] for v in self.vm_ids], dtype=np.int32)

    def placement_of(self, host):
        from ..model import Placement
        return Placement({v: self.server_ids[int(h)] for v, h in zip(self.vm_ids, host)})


def _csr(n, edges):
    ptr = np.zeros(n + 1, dtype=np.int32)
    for a, _, _ in edges:
        ptr[a + 1] += 1
    np.cumsum(ptr, out=ptr)
    nbr = np.array([b for _, b, _ in edges], dtype=np.int32)
    rate = np.array([t for _, _, t in edges], dtype=np.float64)
    return ptr, nbr, rate


def build_search_data(inst: Instance, objective, routing: RoutingMap) -> SearchData:
    objective = Objective.parse(objective)
    vm_ids = tuple(v.vm_id for v in inst.vms)
    server_ids = tuple(s.server_id for s in inst.servers)
    vidx = {v: i for i, v in enumerate(vm_ids)}
    n, S, R = len(vm_ids), len(server_ids), inst.topology.num_racks

    req = np.array([v.requirement_ghz for v in inst.vms], dtype=np.float64)
    order = np.array(sorted(range(n), key=lambda i: (-req[i], i)), dtype=np.int32)
    rem = np.zeros(n + 1)
    minreq = np.full(n + 1, np.inf)
    for d in range(n - 1, -1, -1):
        rem[d] = rem[d + 1] + req[order[d]]
        minreq[d] = min(minreq[d + 1], req[order[d]])

    cap = np.array([s.capacity_ghz for s in inst.servers], dtype=np.float64)
    rack = np.array([s.rack_id for s in inst.servers], dtype=np.int32)
    by_cap = np.array(sorted(range(S), key=lambda i: (-cap[i], i)), dtype=np.int32)

    # CSR rows are VMs in index order, neighbours ascending
    out_edges = sorted((vidx[u], vidx[v], t) for (u, v), t in inst.traffic.items())
    in_edges = sorted((vidx[v], vidx[u], t) for (u, v), t in inst.traffic.items())
    out_ptr, out_nbr, out_rate = _csr(n, out_edges)
    in_ptr, in_nbr, in_rate = _csr(n, in_edges)

    chan_cap = np.full(R * R, np.inf)
    for i in range(R):
        for j in range(R):
            if i != j:
                chan_cap[i * R + j] = routing.pair_capacity(i, j)

    # a largest set of VMs no two of which fit on one server together: all
    # VMs above half the largest capacity, plus the biggest other VM that
    # cannot join even the smallest of them
    cmax = float(cap.max()) if S else 0.0
    limit = cmax + FEAS_TOL
    is_big = [bool(req[order[d]] > limit / 2) for d in range(n)]
    nb = sum(is_big)
    if 0 < nb < n and req[order[nb]] + req[order[nb - 1]] > limit:
        is_big[nb] = True
    big = np.zeros(n + 1, dtype=np.int32)
    for d in range(n - 1, -1, -1):
        big[d] = big[d + 1] + is_big[d]
    big_min = min((req[order[d]] for d in range(n) if is_big[d]), default=np.inf)
    mid = np.zeros(n + 1, dtype=np.int32)
    for d in range(n - 1, -1, -1):
        mid[d] = mid[d + 1] + bool(req[order[d]] > limit / 3)
    forced = np.zeros(n, dtype=np.int32)
    for (u, v), _ in inst.traffic.items():
        if req[vidx[u]] + req[vidx[v]] > limit:
            forced[vidx[u]] = forced[vidx[v]] = 1
    fclq = np.zeros(n + 1, dtype=np.int32)
    for d in range(n - 1, -1, -1):
        fclq[d] = fclq[d + 1] + bool(is_big[d] and forced[order[d]])
    fc_min = min((req[order[d]] for d in range(n) if is_big[d] and forced[order[d]]),
                 default=np.inf)

    p = inst.power
    max_active = S if inst.max_active_servers is None else int(inst.max_active_servers)
    return SearchData(
        n, S, R, vm_ids, server_ids, req, order, rem, minreq, cap, rack, by_cap,
        out_ptr, out_nbr, out_rate, in_ptr, in_nbr, in_rate, chan_cap,
        float(p.server_idle_w), float(p.dynamic_w), float(p.onu_power_w),
        float(p.onu_capacity_gbps), int(objective is Objective.PC_PLUS_PN),
        max_active, int(p.idle_when_unused), big, float(big_min), mid, forced, fclq,
        float(fc_min))

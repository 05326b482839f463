"""Exact depth-first branch-and-bound.

VMs are branched in decreasing requirement order; children are servers in
increasing order of incremental objective. A node is pruned when its bound
exceeds the incumbent, or matches it and cannot lead to a lexicographically
smaller host vector, so the returned optimum is the same tie-broken placement
the exhaustive oracle picks.

The bound charges idle power for the fewest extra servers the unplaced VMs
need, taking the largest of three counts: total GHz against the biggest free
capacities, VMs too large to share any server, and VMs above a third of a
server, which pair up at most two per server and only where a server can
hold a pair. Dynamic power is the cheapest fractional fill of the remaining
requirement, or a per-VM charge when the large VMs must go to distinct
servers. Under pc+pn the ONUs already carrying split traffic are added, plus
those that unplaced VMs will force on because a partner can never share
their server. The incumbent is seeded from the heuristics.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

from ..model import Instance
from ..network import FEAS_TOL, RoutingMap
from . import kernel
from ._data import Objective, build_search_data
from .result import Status, finish


@dataclass(frozen=True)
class Budget:
    time_limit: float = math.inf
    node_limit: int | None = None


def _oversized(inst: Instance) -> bool:
    cap = inst.max_capacity_ghz
    return any(v.requirement_ghz > cap + FEAS_TOL for v in inst.vms)


def _warm_start(inst, objective, routing, data):
    """Best of BFD, penalty repair and pair packing, as a host vector, or None.

    Bounded by evaluation count rather than wall time so the seed (and hence
    any TIMEOUT incumbent) does not depend on machine speed.
    """
    from .heuristics import pair_start, repair_placement, solve_bfd
    ev = kernel.Evaluator(data)
    cands = []
    bfd = solve_bfd(inst, objective, routing)
    if bfd.placement is not None:
        cands.append(data.host_array(bfd.placement).tolist())
    rep = repair_placement(inst, objective, routing, max_evaluations=WARM_START_EVALUATIONS)
    if rep is not None:
        cands.append(data.host_array(rep).tolist())
    if data.n > 0:
        h = pair_start(data, WARM_START_EVALUATIONS)
        if h is not None:
            cands.append(h)
    best = None
    for h in cands:
        feas, pc, pn = ev.evaluate(h)
        if feas:
            key = (pc + pn if data.use_pn else pc, h)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]


WARM_START_EVALUATIONS = 50_000


def solve_branch_and_bound(inst: Instance, objective, routing: RoutingMap,
                           budget: Budget | None = None, backend=None,
                           warm_start: bool = True):
    """Exact search. ``warm_start`` seeds the incumbent from the heuristics;
    this changes only speed, never the returned optimum."""
    objective = Objective.parse(objective)
    budget = budget or Budget()
    t0 = time.perf_counter()
    if _oversized(inst):
        return finish(inst, objective, routing, None, Status.INFEASIBLE, math.inf, 0, t0)
    data = build_search_data(inst, objective, routing)
    impl = kernel.backend(backend)
    node_limit = -1 if budget.node_limit is None else int(budget.node_limit)
    init = _warm_start(inst, objective, routing, data) if warm_start else None
    remaining = budget.time_limit - (time.perf_counter() - t0)
    code, host, obj, lb, nodes = impl.branch_and_bound(data, node_limit,
                                                       float(max(remaining, 0.0)), init)
    placement = data.placement_of(host) if host is not None else None
    if code == kernel.OPTIMAL:
        return finish(inst, objective, routing, placement, Status.OPTIMAL, None, nodes, t0)
    if code == kernel.INFEASIBLE:
        return finish(inst, objective, routing, None, Status.INFEASIBLE, math.inf, nodes, t0)
    return finish(inst, objective, routing, placement, Status.TIMEOUT, lb, nodes, t0)


def lower_bound(inst: Instance, objective, partial: dict, routing: RoutingMap | None = None,
                backend=None) -> float:
    """Admissible bound on every feasible completion of ``partial``.

    ``partial`` maps vm_id to server_id for the already assigned VMs. Returns
    ``inf`` when the partial assignment already violates a capacity.
    """
    from ..network import build_routing_map
    routing = routing or build_routing_map(inst.topology, inst.power)
    data = build_search_data(inst, objective, routing)
    sidx = {s: i for i, s in enumerate(data.server_ids)}
    host = [sidx[partial[v]] if v in partial else -1 for v in data.vm_ids]
    return kernel.backend(backend).partial_bound(data, host)

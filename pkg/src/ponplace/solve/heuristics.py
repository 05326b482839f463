"""Best-Fit-Decreasing construction and first-improvement local search."""
from __future__ import annotations

import math
import random
import time

from ..model import Instance, Placement
from ..network import RoutingMap
from . import _kernel_py, kernel
from ._data import OBJ_TOL, Objective, build_search_data
from .result import Status, finish


class InfeasibleStart(ValueError):
    pass


def solve_bfd(inst: Instance, objective, routing: RoutingMap):
    """Place VMs largest first on the server with the smallest increase in
    fixed power (idle of a newly opened server, ONUs newly switched on under
    pc+pn). Among already open servers the tightest fit wins; a new server is
    chosen by smallest total increment, i.e. the largest one."""
    objective = Objective.parse(objective)
    t0 = time.perf_counter()
    data = build_search_data(inst, objective, routing)
    st = _kernel_py._Search(data)
    root = st.bound(st.rem[0], st.minreq[0], st.big[0], st.mid[0], st.fclq[0])
    for d in range(data.n):
        v = st.order[d]
        rv = st.req[v]
        best_key, best_s = None, -1
        for s in range(data.S):
            if st.load[s] + rv > st.cap[s] + st.tol:
                continue
            opening = st.cnt[s] == 0
            if opening and st.active >= st.max_active:
                continue
            onus0 = st.onus
            mark, old_load, old_dyn = len(st.log), st.load[s], st.dynsum
            ok = st.assign(v, s)
            fixed = st.idle if opening and not st.idle_unused else 0.0
            if st.use_pn:
                fixed += st.onu_w * (st.onus - onus0)
            st.unassign(v, s, mark, old_load, old_dyn)
            if not ok:
                continue
            if opening:
                key = (fixed, 1, st.dyn * rv / st.cap[s], s)
            else:
                key = (fixed, 0, st.cap[s] - (st.load[s] + rv), s)
            if best_key is None or key < best_key:
                best_key, best_s = key, s
        if best_s < 0:
            return finish(inst, objective, routing, None, Status.INFEASIBLE, root,
                          data.n, t0)
        st.assign(v, best_s)
    feas, _, _ = kernel.evaluate_host(data, st.host)
    if not feas:
        return finish(inst, objective, routing, None, Status.INFEASIBLE, root, data.n, t0)
    return finish(inst, objective, routing, data.placement_of(st.host), Status.FEASIBLE,
                  root, data.n, t0)


def _descend(data, host, rng, max_evaluations, deadline, penalised):
    """First-improvement descent over single-VM moves and two-VM swaps.

    The score is ``(excess, objective)`` compared lexicographically when
    ``penalised`` is set (infeasible placements are walked towards
    feasibility), otherwise infeasible neighbours are simply rejected.
    Returns ``(host, excess, objective, evaluations)``.
    """
    ev = kernel.Evaluator(data)
    use_pn = data.use_pn

    def score(h):
        feas, pc, pn = ev.evaluate(h)
        obj = pc + pn if use_pn else pc
        if feas:
            return 0.0, obj
        return (ev.excess(h) if penalised else math.inf), obj

    n, S = data.n, data.S
    host = list(host)
    cur_ex, cur = score(host)
    evals = 0
    improved = True
    while improved:
        improved = False
        moves = [(0, v, s) for v in range(n) for s in range(S) if s != host[v]]
        moves += [(1, u, v) for u in range(n) for v in range(u + 1, n) if host[u] != host[v]]
        rng.shuffle(moves)
        for kind, a, b in moves:
            if evals >= max_evaluations or time.perf_counter() > deadline:
                return host, cur_ex, cur, evals
            cand = host.copy()
            if kind == 0:
                cand[a] = b
            else:
                cand[a], cand[b] = host[b], host[a]
            evals += 1
            ex, val = score(cand)
            if ex < cur_ex - 1e-12 or (
                    ex <= cur_ex + 1e-12 and val < cur - OBJ_TOL * max(1.0, abs(cur))):
                host, cur_ex, cur = cand, ex, val
                improved = True
                break
    return host, cur_ex, cur, evals


def local_search_improve(inst: Instance, objective, routing: RoutingMap, start: Placement,
                         max_evaluations: int = 200_000, time_limit: float = math.inf,
                         seed: int = 0) -> Placement:
    """First-improvement descent over single-VM moves and two-VM swaps.

    Each pass scans the joint neighbourhood in an order shuffled by a
    ``random.Random(seed)`` stream and restarts after the first strictly
    improving feasible neighbour. Stops at a local optimum or when the
    evaluation/time budget runs out.
    """
    objective = Objective.parse(objective)
    data = build_search_data(inst, objective, routing)
    host = data.host_array(start).tolist()
    feas, _, _ = kernel.evaluate_host(data, host)
    if not feas:
        raise InfeasibleStart("local search needs a feasible start placement")
    host, _, _, _ = _descend(data, host, random.Random(seed), max_evaluations,
                             time.perf_counter() + time_limit, penalised=False)
    return data.placement_of(host)


def _capacity_packing(data):
    """Best-fit decreasing on GHz alone, opening the largest free server."""
    load = [0.0] * data.S
    used = [False] * data.S
    cap = data.cap.tolist()
    req = data.req.tolist()
    host = [-1] * data.n
    by_cap = data.by_cap.tolist()
    for v in data.order.tolist():
        best, best_res = -1, math.inf
        for s in range(data.S):
            res = cap[s] - load[s] - req[v]
            if used[s] and res >= -data.tol_feas and res < best_res:
                best, best_res = s, res
        if best < 0:
            for s in by_cap:
                if not used[s] and cap[s] - req[v] >= -data.tol_feas:
                    best = s
                    break
        if best < 0:
            return None
        host[v] = best
        used[best] = True
        load[best] += req[v]
    return host


def _pair_packing(data):
    """Match large VMs into pairs that share a server, as many as capacity
    allows, before placing the rest one per server.

    Greedy BFD fills the largest servers with single large VMs; when the
    requirements sit just above a third of a server, the cheapest layout
    instead gives the few roomy servers one pair each.
    """
    cap = data.cap.tolist()
    req = data.req.tolist()
    tol = data.tol_feas
    order = data.order.tolist()
    limit = max(cap) + tol if cap else 0.0
    pairs = []
    i, j = len(order) - 1, 0
    while j < i:
        if req[order[i]] + req[order[j]] <= limit:
            pairs.append((order[j], order[i]))
            i -= 1
        j += 1
    host = [-1] * data.n
    used = [False] * data.S
    ascending = data.by_cap.tolist()[::-1]
    for a, b in sorted(pairs, key=lambda p: -(req[p[0]] + req[p[1]])):
        for s in ascending:
            if not used[s] and cap[s] >= req[a] + req[b] - tol:
                host[a] = host[b] = s
                used[s] = True
                break
    for v in order:
        if host[v] >= 0:
            continue
        for s in data.by_cap.tolist():
            if not used[s] and cap[s] >= req[v] - tol:
                host[v] = s
                used[s] = True
                break
        if host[v] < 0:
            return None
    return host


def pair_start(data, max_evaluations: int, seed: int = 0):
    """Pair packing followed by a penalised descent; a feasible host vector
    or None."""
    host = _pair_packing(data)
    if host is None:
        return None
    host, ex, _, _ = _descend(data, host, random.Random(seed), max_evaluations,
                              math.inf, penalised=True)
    return host if ex == 0.0 else None


def repair_placement(inst: Instance, objective, routing: RoutingMap, seed: int = 0,
                     max_evaluations: int = 200_000, time_limit: float = math.inf,
                     restarts: int = 8) -> Placement | None:
    """Search for a feasible, low-power placement when greedy construction
    fails on network limits.

    Starts from a GHz-only packing and descends on (total excess, objective);
    a local minimum with positive excess is perturbed by relocating a few
    random VMs and the descent resumes, up to ``restarts`` times. Returns None
    if no feasible placement was found within the budget.
    """
    objective = Objective.parse(objective)
    data = build_search_data(inst, objective, routing)
    if data.n == 0:
        return data.placement_of([])
    host = _capacity_packing(data)
    if host is None:
        return None
    rng = random.Random(seed)
    deadline = time.perf_counter() + time_limit
    budget = max_evaluations
    for attempt in range(restarts + 1):
        host, ex, _, used = _descend(data, host, rng, budget, deadline, penalised=True)
        budget -= used
        if ex == 0.0:
            return data.placement_of(host)
        if budget <= 0 or time.perf_counter() > deadline:
            break
        for v in rng.sample(range(data.n), min(3, data.n)):
            host[v] = rng.randrange(data.S)
    return None


def solve_local(inst: Instance, objective, routing: RoutingMap, seed: int = 0,
                time_limit: float = math.inf):
    """BFD (or, when BFD gets stuck on network limits, penalty repair)
    followed by local search; never claims optimality. INFEASIBLE here only
    means no feasible placement was found."""
    objective = Objective.parse(objective)
    t0 = time.perf_counter()
    start = solve_bfd(inst, objective, routing)
    placement = start.placement
    if placement is None:
        placement = repair_placement(inst, objective, routing, seed=seed,
                                     time_limit=time_limit)
        if placement is None:
            return start
    p = local_search_improve(inst, objective, routing, placement,
                             time_limit=time_limit, seed=seed)
    return finish(inst, objective, routing, p, Status.FEASIBLE, start.lower_bound_w,
                  start.nodes_explored, t0)

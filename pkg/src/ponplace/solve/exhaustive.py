"""Brute-force oracle.

Every host vector is enumerated in lexicographic order and scored with
vectorized numpy; none of the search kernel's code is involved, so this can
serve as an independent reference for the branch-and-bound.
"""
from __future__ import annotations

import itertools
import time

import numpy as np

from ..network import FEAS_TOL
from ._data import OBJ_TOL, Objective
from .result import SolveResult, Status, finish

DEFAULT_ENUMERATION_CAP = 10**7
_CHUNK = 1 << 16


class EnumerationCapExceeded(ValueError):
    pass


def _score_chunk(H, inst, sidx, vidx, cap, rack, chan, idle, dyn, p):
    """Feasibility mask, pc and pn for a block of host vectors (rows)."""
    N, n = H.shape
    S = len(cap)
    R = inst.topology.num_racks
    req = np.array([v.requirement_ghz for v in inst.vms])
    onehot = H[:, :, None] == np.arange(S)[None, None, :]           # N x n x S
    load = np.einsum("nvs,v->ns", onehot, req)
    used = onehot.any(axis=1)
    feas = np.all(load <= cap[None, :] + FEAS_TOL, axis=1)
    active = used.sum(axis=1)
    if inst.max_active_servers is not None:
        feas &= active <= inst.max_active_servers
    eg = np.zeros((N, S))
    ing = np.zeros((N, S))
    rd = np.zeros((N, R, R))
    touched = np.zeros((N, S), dtype=bool)
    rows = np.arange(N)
    for (u, v), t in inst.traffic.items():
        hu, hv = H[:, vidx[u]], H[:, vidx[v]]
        split = hu != hv
        w = np.where(split, t, 0.0)
        np.add.at(eg, (rows, hu), w)
        np.add.at(ing, (rows, hv), w)
        touched[rows[split], hu[split]] = True
        touched[rows[split], hv[split]] = True
        ru, rv = rack[hu], rack[hv]
        np.add.at(rd, (rows, ru, rv), np.where(ru != rv, w, 0.0))
    cap_onu = p.onu_capacity_gbps + FEAS_TOL
    feas &= np.all(eg <= cap_onu, axis=1) & np.all(ing <= cap_onu, axis=1)
    feas &= np.all(rd <= chan[None, :, :] + FEAS_TOL, axis=(1, 2))
    dynamic = np.where(used, idle + dyn * load / cap[None, :], idle if p.idle_when_unused else 0.0)
    pc = dynamic.sum(axis=1)
    pn = p.onu_power_w * touched.sum(axis=1)
    return feas, pc, pn


def enumerate_optima(inst, routing, objectives=tuple(Objective),
                     cap_limit=DEFAULT_ENUMERATION_CAP):
    """Best host vector (server-id tuple ordered by vm_id) per objective.

    Among placements within the relative tie tolerance of the minimum, the
    lexicographically smallest host vector wins. Returns a dict mapping each
    objective to a tuple of server ids, or None when nothing is feasible.
    """
    objectives = [Objective.parse(o) for o in objectives]
    n, S = len(inst.vms), len(inst.servers)
    if S ** n > cap_limit:
        raise EnumerationCapExceeded(f"{S}^{n} placements exceed the cap of {cap_limit}")
    server_ids = [s.server_id for s in inst.servers]
    sidx = {s: i for i, s in enumerate(server_ids)}
    vidx = {v.vm_id: i for i, v in enumerate(inst.vms)}
    cap = np.array([s.capacity_ghz for s in inst.servers])
    rack = np.array([s.rack_id for s in inst.servers])
    R = inst.topology.num_racks
    chan = np.full((R, R), np.inf)
    for (i, j) in routing.rack_pairs():
        chan[i, j] = routing.pair_capacity(i, j)
    p = inst.power

    # running (value, flat index) per objective; rows come in lex order
    best_val = {o: np.inf for o in objectives}
    cands: dict = {o: [] for o in objectives}
    total = S ** n
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        H = np.empty((len(idx), n), dtype=np.int64)
        rest = idx.copy()
        for k in range(n - 1, -1, -1):
            H[:, k] = rest % S
            rest //= S
        if n:
            feas, pc, pn = _score_chunk(H, inst, sidx, vidx, cap, rack, chan,
                                        p.server_idle_w, p.dynamic_w, p)
        else:
            zero = np.zeros(1)
            feas = np.ones(1, dtype=bool)
            pc = zero + (p.server_idle_w * S if p.idle_when_unused else 0.0)
            pn = zero
        for o in objectives:
            val = pc + pn if o is Objective.PC_PLUS_PN else pc
            val = np.where(feas, val, np.inf)
            m = val.min()
            if not np.isfinite(m):
                continue
            best_val[o] = min(best_val[o], m)
            # keep everything that might tie with the final minimum
            keep = val <= m + OBJ_TOL * max(1.0, abs(m))
            cands[o].extend(zip(val[keep].tolist(), idx[keep].tolist()))
    out = {}
    for o in objectives:
        m = best_val[o]
        if not np.isfinite(m):
            out[o] = None
            continue
        tol = OBJ_TOL * max(1.0, abs(m))
        flat = min(i for v, i in cands[o] if v <= m + tol)
        vec = []
        for _ in range(n):
            vec.append(flat % S)
            flat //= S
        out[o] = tuple(server_ids[h] for h in reversed(vec))
    return out


def solve_exhaustive(inst, objective, routing, cap_limit=DEFAULT_ENUMERATION_CAP) -> SolveResult:
    objective = Objective.parse(objective)
    t0 = time.perf_counter()
    best = enumerate_optima(inst, routing, (objective,), cap_limit)[objective]
    n, S = len(inst.vms), len(inst.servers)
    if best is None:
        return finish(inst, objective, routing, None, Status.INFEASIBLE, np.inf,
                      S ** n, t0)
    placement = dict(zip((v.vm_id for v in inst.vms), best))
    return finish(inst, objective, routing, placement, Status.OPTIMAL, None, S ** n, t0)


def all_placements(inst):
    """Iterate every host vector as a tuple of server ids (lex order)."""
    ids = [s.server_id for s in inst.servers]
    return itertools.product(ids, repeat=len(inst.vms))

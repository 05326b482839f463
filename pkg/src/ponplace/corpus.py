"""Reference corpus: small instances whose expected optima come from the
exhaustive oracle (or are trivial), stored as ``<dir>/<name>/instance.json``
and ``<dir>/<name>/expected.json``.

``regenerate_corpus`` rebuilds every file from the recipes below; running it
twice yields byte-identical files. ``run_corpus`` re-solves each entry with
the exact solvers and compares against the stored expectations.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from .model import (GenConfig, Instance, PowerParams, ServerSpec, Topology, TrafficMatrix,
                    VmSpec, generate_instance, load_instance, placement_to_dict,
                    save_instance)
from .network import build_routing_map
from .solve import Objective, solve_branch_and_bound, solve_exhaustive

DERIVED = "[DERIVED: exhaustive oracle]"
TRIVIAL = "[TRIVIAL]"


def _tiny_colocation() -> Instance:
    topo = Topology(2, 2, 4, 2, 1)
    servers = tuple(ServerSpec(i, i // 2, 2.0) for i in range(4))
    vms = (VmSpec(0, 0.5), VmSpec(1, 0.5))
    return Instance(topo, servers, vms, TrafficMatrix({(0, 1): 1.0, (1, 0): 1.0}),
                    PowerParams())


def _empty() -> Instance:
    topo = Topology(2, 2, 4, 2, 1)
    servers = tuple(ServerSpec(i, i // 2, 2.0) for i in range(4))
    return Instance(topo, servers, (), TrafficMatrix({}), PowerParams())


def _oversized() -> Instance:
    topo = Topology(2, 2, 4, 2, 1)
    servers = tuple(ServerSpec(i, i // 2, 2.0 + 0.25 * i) for i in range(4))
    return Instance(topo, servers, (VmSpec(0, 3.0), VmSpec(1, 0.5)), TrafficMatrix({}),
                    PowerParams())


def _pn_tradeoff() -> Instance:
    # three 1.0 GHz VMs on 2.0 GHz servers: every 2+1 split costs the same
    # Pc, but only keeping VMs 0 and 2 together avoids ONU power
    topo = Topology(1, 2, 4, 2, 1)
    servers = (ServerSpec(0, 0, 2.0), ServerSpec(1, 0, 2.0))
    vms = (VmSpec(0, 1.0), VmSpec(1, 1.0), VmSpec(2, 1.0))
    return Instance(topo, servers, vms, TrafficMatrix({(0, 2): 3.0, (2, 0): 1.5}),
                    PowerParams())


def _onu_bound() -> Instance:
    # two VMs that cannot share a server exchange 12 Gbps: no placement
    # respects the 10 Gbps ONU limit
    topo = Topology(2, 1, 4, 2, 1)
    servers = (ServerSpec(0, 0, 2.0), ServerSpec(1, 1, 2.0))
    vms = (VmSpec(0, 1.5), VmSpec(1, 1.5))
    return Instance(topo, servers, vms, TrafficMatrix({(0, 1): 12.0}), PowerParams())


def recipes() -> list[tuple[str, Instance, str]]:
    """``(name, instance, provenance)`` for every corpus entry, in order."""
    out = [
        ("tiny-colocation", _tiny_colocation(), DERIVED),
        ("empty", _empty(), TRIVIAL),
        ("infeasible-oversized", _oversized(), TRIVIAL),
        ("pn-tradeoff", _pn_tradeoff(), DERIVED),
        ("infeasible-onu", _onu_bound(), DERIVED),
    ]
    small = Topology(2, 2, 4, 2, 1)
    for seed in range(6):
        cfg = GenConfig(num_vms=4, topology=small, seed=seed, req_range_ghz=(0.3, 1.5),
                        traffic_density=0.5, traffic_range_gbps=(0.5, 8.0))
        out.append((f"small-{seed}", generate_instance(cfg), DERIVED))
    for seed in range(3):
        cfg = GenConfig(num_vms=4, seed=seed)
        out.append((f"default-topology-{seed}", generate_instance(cfg), DERIVED))
    return out


def expected_for(inst: Instance, provenance: str) -> dict:
    routing = build_routing_map(inst.topology, inst.power)
    doc = {}
    for obj in Objective:
        res = solve_exhaustive(inst, obj, routing)
        entry = {"status": res.status.value, "provenance": provenance}
        if res.placement is not None:
            b = res.breakdown
            entry.update(objective_w=res.objective_value, pc_w=b.pc_w, pn_w=b.pn_w,
                         total_w=b.total_w, active_servers=b.active_servers,
                         active_onus=b.active_onus,
                         placement=placement_to_dict(res.placement))
        doc[obj.value] = entry
    return doc


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def regenerate_corpus(root: str) -> list[str]:
    names = []
    for name, inst, prov in recipes():
        d = os.path.join(root, name)
        os.makedirs(d, exist_ok=True)
        with open(os.path.join(d, "instance.json"), "w", encoding="utf-8", newline="") as fh:
            fh.write(save_instance(inst))
        with open(os.path.join(d, "expected.json"), "w", encoding="utf-8", newline="") as fh:
            fh.write(_dump(expected_for(inst, prov)))
        names.append(name)
    return names


@dataclass(frozen=True)
class EntryResult:
    name: str
    passed: bool
    diff: str = ""


def _compare(name, solver, res, exp) -> list[str]:
    diffs = []
    if res.status.value != exp["status"]:
        return [f"{solver}: status {res.status.value} != {exp['status']}"]
    if res.placement is None:
        return diffs
    b = res.breakdown
    got = {"objective_w": res.objective_value, "pc_w": b.pc_w, "pn_w": b.pn_w,
           "total_w": b.total_w, "active_servers": b.active_servers,
           "active_onus": b.active_onus, "placement": placement_to_dict(res.placement)}
    for k, v in got.items():
        if v != exp[k]:
            diffs.append(f"{solver}: {k} {v!r} != {exp[k]!r}")
    return diffs


def entries(root: str) -> list[str]:
    return sorted(d for d in os.listdir(root)
                  if os.path.isfile(os.path.join(root, d, "expected.json")))


def load_entry(root: str, name: str):
    with open(os.path.join(root, name, "instance.json"), encoding="utf-8") as fh:
        inst = load_instance(fh.read())
    with open(os.path.join(root, name, "expected.json"), encoding="utf-8") as fh:
        expected = json.load(fh)
    return inst, expected


def run_corpus(root: str = "corpus") -> list[EntryResult]:
    """Re-solve every entry with the oracle and branch-and-bound; results
    must equal the stored expectations exactly."""
    out = []
    for name in entries(root):
        inst, expected = load_entry(root, name)
        routing = build_routing_map(inst.topology, inst.power)
        diffs = []
        for obj in Objective:
            exp = expected[obj.value]
            diffs += _compare(name, f"exhaustive/{obj.value}",
                              solve_exhaustive(inst, obj, routing), exp)
            res = solve_branch_and_bound(inst, obj, routing)
            if exp["status"] == "OPTIMAL" and res.status.value == "OPTIMAL":
                # branch-and-bound may differ only in the last bits of sums
                if not math.isclose(res.objective_value, exp["objective_w"],
                                    rel_tol=1e-9, abs_tol=1e-9):
                    diffs.append(f"bnb/{obj.value}: objective {res.objective_value!r} "
                                 f"!= {exp['objective_w']!r}")
                if placement_to_dict(res.placement) != exp["placement"]:
                    diffs.append(f"bnb/{obj.value}: placement differs")
            elif res.status.value != exp["status"]:
                diffs.append(f"bnb/{obj.value}: status {res.status.value} != {exp['status']}")
        out.append(EntryResult(name, not diffs, "; ".join(diffs)))
    return out

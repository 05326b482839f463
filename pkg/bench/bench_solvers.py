"""Time branch-and-bound against BFD across instance sizes, and the compiled
search kernel against its pure-Python twin.

    python bench/bench_solvers.py                 # default sizes
    python bench/bench_solvers.py --vms 5,10 --seeds 3 --time-limit 10

The size sweep reports median wall time, BFD's mean excess over the B&B
result and the B&B status counts. The kernel comparison runs both backends
for the same fixed number of search nodes.
"""
from __future__ import annotations

import argparse
import statistics
import time

from ponplace.model import GenConfig, generate_instance
from ponplace.network import build_routing_map
from ponplace.solve import Budget, Objective, solve_bfd, solve_branch_and_bound
from ponplace.solve.kernel import BACKEND


def _ints(text):
    return tuple(int(x) for x in text.split(","))


def bench_sizes(vm_counts, seeds, time_limit, density, objective):
    rows = []
    for n in vm_counts:
        bfd_t, bnb_t, gap, status = [], [], [], {}
        for seed in seeds:
            inst = generate_instance(GenConfig(num_vms=n, seed=seed, traffic_density=density))
            routing = build_routing_map(inst.topology, inst.power)
            t0 = time.perf_counter()
            bfd = solve_bfd(inst, objective, routing)
            bfd_t.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            res = solve_branch_and_bound(inst, objective, routing, Budget(time_limit=time_limit))
            bnb_t.append(time.perf_counter() - t0)
            status[res.status.value] = status.get(res.status.value, 0) + 1
            if bfd.placement is not None and res.placement is not None:
                gap.append(bfd.objective_value / res.objective_value - 1.0)
        rows.append((n, bfd_t, bnb_t, gap, status, sum(1 for _ in seeds)))
    return rows


def bench_kernels(nodes, objective):
    """Search-node throughput of each kernel on one instance that needs a
    long search (10 VMs near 1.5 GHz each), warm start off."""
    inst = generate_instance(GenConfig(num_vms=10, seed=2, traffic_density=0.05,
                                       req_range_ghz=(1.3, 1.7)))
    routing = build_routing_map(inst.topology, inst.power)
    out = []
    for backend in ("cython", "python"):
        if backend == "cython" and BACKEND != "cython":
            continue
        t0 = time.perf_counter()
        res = solve_branch_and_bound(inst, objective, routing, Budget(node_limit=nodes),
                                     backend=backend, warm_start=False)
        dt = time.perf_counter() - t0
        out.append((backend, res.nodes_explored, dt))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--vms", type=_ints, default=(5, 10, 15, 20))
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--time-limit", type=float, default=30.0)
    ap.add_argument("--kernel-nodes", type=int, default=100_000,
                    help="node budget for the kernel comparison")
    ap.add_argument("--density", type=float, default=0.05)
    ap.add_argument("--objective", default="pc+pn")
    a = ap.parse_args(argv)
    objective = Objective.parse(a.objective)
    print(f"B&B ({BACKEND} kernel) against BFD, objective {objective.value}, "
          f"density {a.density}, {a.time_limit:g} s limit")
    print(f"{'vms':>4} {'seeds':>5} {'bfd ms':>9} {'bnb ms':>10} {'bfd gap':>8}  status")
    for n, bfd_t, bnb_t, gap, status, k in bench_sizes(a.vms, range(a.seeds), a.time_limit,
                                                       a.density, objective):
        g = f"{100 * statistics.mean(gap):7.2f}%" if gap else "       -"
        st = " ".join(f"{s}={c}" for s, c in sorted(status.items()))
        print(f"{n:>4} {k:>5} {1e3 * statistics.median(bfd_t):9.2f} "
              f"{1e3 * statistics.median(bnb_t):10.1f} {g}  {st}")
    print()
    print(f"kernel throughput, {a.kernel_nodes} nodes, warm start off")
    rates = {}
    for backend, nodes, dt in bench_kernels(a.kernel_nodes, objective):
        rates[backend] = nodes / dt
        print(f"{backend:>7}: {nodes:>8} nodes in {dt:7.3f} s = {rates[backend]:10.0f} nodes/s")
    if len(rates) == 2:
        print(f"speed-up: {rates['cython'] / rates['python']:.1f}x")


if __name__ == "__main__":
    main()

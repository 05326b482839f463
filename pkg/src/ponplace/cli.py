"""``ponplace`` command line."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import experiment as exp
from .milp import MpsNameError, build_model, export_lp, export_mps
from .model import (GenConfig, InstanceError, ParseError, SchemaError, generate_instance,
                    load_instance, load_placement, save_instance)
from .network import build_routing_map
from .power import PlacementError, evaluate_with_loads
from .solve import Budget, Objective, solve_bfd, solve_branch_and_bound, solve_local
from .solve.result import Status

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_NO_INCUMBENT = 0, 1, 2, 3


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _range(text):
    lo, hi = (float(x) for x in text.split(","))
    return lo, hi


def cmd_generate(a) -> int:
    cfg = GenConfig(num_vms=a.vms, seed=a.seed, traffic_density=a.density,
                    req_range_ghz=a.req_range, cap_range_ghz=a.cap_range,
                    traffic_range_gbps=a.traffic_range)
    inst = generate_instance(cfg)
    _emit(save_instance(inst), a.out)
    print(f"{len(inst.vms)} VMs, {len(inst.servers)} servers, {len(inst.traffic.demands)} "
          f"demands, total requirement {inst.total_requirement_ghz:.3f} GHz",
          file=sys.stderr)
    return EXIT_OK


def solve_instance(inst, objective, solver, time_limit, node_limit=None, seed=0):
    routing = build_routing_map(inst.topology, inst.power)
    if solver == "bnb":
        return solve_branch_and_bound(inst, objective, routing,
                                      Budget(time_limit=time_limit, node_limit=node_limit))
    if solver == "bfd":
        return solve_bfd(inst, objective, routing)
    return solve_local(inst, objective, routing, seed=seed, time_limit=time_limit)


def cmd_solve(a) -> int:
    inst = load_instance(_read(a.instance))
    res = solve_instance(inst, Objective.parse(a.objective), a.solver, a.time_limit,
                         a.node_limit, a.seed)
    _emit(json.dumps(res.to_dict(timing=not a.omit_timing), indent=2) + "\n", a.out)
    print(f"{res.status.value}: {res.objective.value} = {res.objective_value:.6f} W",
          file=sys.stderr)
    if res.status is Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    if res.status is Status.TIMEOUT and res.placement is None:
        return EXIT_NO_INCUMBENT
    return EXIT_OK


def cmd_evaluate(a) -> int:
    inst = load_instance(_read(a.instance))
    placement = load_placement(_read(a.placement))
    routing = build_routing_map(inst.topology, inst.power)
    breakdown, report, load = evaluate_with_loads(inst, placement, routing)
    doc = {**breakdown.to_dict(), "feasible": report.feasible,
           "violations": [{"kind": v.kind, "subject": v.subject, "excess": v.excess,
                           "message": v.message} for v in report.violations],
           "loads": load.to_dict()}
    _emit(json.dumps(doc, indent=2) + "\n", a.out)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_export(a) -> int:
    inst = load_instance(_read(a.instance))
    model = build_model(inst, a.objective, build_routing_map(inst.topology, inst.power))
    fmt = a.format or (os.path.splitext(a.out or "")[1].lstrip(".") or "lp")
    if fmt == "lp":
        text = export_lp(model)
    elif fmt == "mps":
        text = export_mps(model, names="strict" if a.strict_names else "auto")
    else:
        raise ValueError(f"export supports lp or mps, not {fmt!r}")
    _emit(text, a.out)
    return EXIT_OK


def cmd_experiment(a) -> int:
    sweeps = [exp.FIG2, exp.FIG3] if a.sweep == "both" else [a.sweep.upper()]
    rows = []
    for sweep in sweeps:
        kw = dict(sweep=sweep, seeds=tuple(range(a.seed, a.seed + a.seeds)),
                  solver=a.solver, time_limit=a.time_limit, node_limit=a.node_limit,
                  traffic_density=a.density)
        if a.objective:
            kw["objectives"] = (Objective.parse(a.objective),)
        if a.vm_counts:
            kw["vm_counts"] = tuple(int(x) for x in a.vm_counts.split(","))
        if a.avg_reqs:
            kw["avg_req_sweep_ghz"] = tuple(float(x) for x in a.avg_reqs.split(","))
        rows += exp.run_experiment(exp.ExperimentConfig(**kw))
    out = a.out or "results"
    if a.format == "csv" and out.endswith(".csv"):
        _emit(exp.rows_to_csv(rows, timing=not a.omit_timing), out)
        summary = exp.summarize(rows)
    else:
        summary = exp.write_outputs(rows, out, timing=not a.omit_timing)
    print(exp.summary_line(summary))
    return EXIT_OK


def cmd_corpus(a) -> int:
    from .corpus import regenerate_corpus, run_corpus
    if a.regenerate:
        for name in regenerate_corpus(a.dir):
            print(f"wrote {name}")
        return EXIT_OK
    results = run_corpus(a.dir)
    bad = 0
    for r in results:
        print(("PASS " if r.passed else "FAIL ") + r.name + ("" if r.passed else f": {r.diff}"))
        bad += not r.passed
    return EXIT_OK if bad == 0 else EXIT_ERROR


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 so that 2 always means "infeasible"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ponplace",
                                description="Power-minimising VM placement in a PON data centre")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("--instance", required=True, help="instance JSON file")
        sp.add_argument("--out", help="output path (default: stdout)")

    g = sub.add_parser("generate", help="draw a random instance")
    common(g, instance=False)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--vms", type=int, default=10)
    g.add_argument("--density", type=float, default=0.2,
                   help="probability that an ordered VM pair exchanges traffic")
    g.add_argument("--req-range", type=_range, default=(0.1, 0.5), metavar="LO,HI")
    g.add_argument("--cap-range", type=_range, default=(1.8, 2.75), metavar="LO,HI")
    g.add_argument("--traffic-range", type=_range, default=(0.1, 4.0), metavar="LO,HI")
    g.set_defaults(func=cmd_generate)

    def solver_flags(sp):
        sp.add_argument("--objective", default="pc+pn", help="pc or pc+pn")
        sp.add_argument("--solver", choices=exp.SOLVERS, default="bnb")
        sp.add_argument("--time-limit", type=float, default=60.0, metavar="SECONDS")
        sp.add_argument("--node-limit", type=int, default=None,
                        help="search-node budget (machine independent)")
        sp.add_argument("--omit-timing", action="store_true",
                        help="write runtime_ms as 0 so outputs are byte-reproducible")

    s = sub.add_parser("solve", help="solve one instance")
    common(s)
    solver_flags(s)
    s.add_argument("--seed", type=int, default=0, help="local-search shuffle seed")
    s.add_argument("--format", choices=["json"], default="json")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="power and feasibility of a given placement")
    common(e)
    e.add_argument("--placement", required=True)
    e.add_argument("--format", choices=["json"], default="json")
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("export", help="write the MILP as CPLEX-LP or fixed MPS")
    common(x)
    x.add_argument("--objective", default="pc+pn")
    x.add_argument("--format", choices=["lp", "mps"])
    x.add_argument("--strict-names", action="store_true",
                   help="fail instead of renaming when MPS names exceed 8 characters")
    x.set_defaults(func=cmd_export)

    r = sub.add_parser("experiment", help="run the objective-comparison sweeps")
    r.add_argument("--sweep", choices=["fig2", "fig3", "both"], default="both")
    r.add_argument("--seed", type=int, default=0, help="first instance seed")
    r.add_argument("--seeds", type=int, default=10, help="number of seeds per point")
    solver_flags(r)
    r.set_defaults(objective=None)
    r.add_argument("--density", type=float, default=0.05)
    r.add_argument("--vm-counts", help="comma list for the VM-count sweep")
    r.add_argument("--avg-reqs", help="comma list of mean requirements (GHz)")
    r.add_argument("--out", help="output directory (default: results)")
    r.add_argument("--format", choices=["csv"], default="csv")
    r.set_defaults(func=cmd_experiment)

    c = sub.add_parser("corpus", help="check or regenerate the reference corpus")
    c.add_argument("--dir", default="corpus")
    c.add_argument("--regenerate", action="store_true")
    c.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, SchemaError, ParseError, InstanceError, PlacementError,
            MpsNameError, ValueError) as err:
        print(f"ponplace: error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

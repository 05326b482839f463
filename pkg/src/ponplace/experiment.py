"""Objective-comparison sweeps: power versus VM count, and power versus
average VM requirement, each solved under both objectives.

Every (point, seed, objective) triple becomes one CSV row. Rows are produced
in sweep order regardless of how many worker processes ran them, so reruns
with the same flags write identical files (given that no solve hits its time
limit; see ``node_limit`` for a machine-independent budget).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .model import GenConfig, generate_instance
from .network import build_routing_map
from .solve import Budget, Objective, solve_bfd, solve_branch_and_bound, solve_local
from .solve.result import Status

FIG2, FIG3 = "FIG2", "FIG3"

COLUMNS = ("figure", "point", "seed", "objective", "solver", "status", "n_vms",
           "avg_req_ghz", "pc_w", "pn_w", "total_w", "active_servers", "active_onus",
           "lower_bound_w", "gap", "runtime_ms")

MEAN_COLUMNS = ("figure", "point", "objective", "n_vms", "avg_req_ghz", "n_solved",
                "n_timeout", "n_infeasible", "mean_pc_w", "mean_pn_w", "mean_total_w")

SOLVERS = ("bnb", "bfd", "local")


def _avg_req_default():
    return tuple(round(0.3 + 0.2 * i, 10) for i in range(12))


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep.

    FIG2 varies the VM count at the base requirement range; FIG3 fixes
    ``fig3_num_vms`` and shifts the requirement range to
    ``[m - req_halfwidth_ghz, m + req_halfwidth_ghz]`` for each mean ``m``.
    Instance seeds are the listed seeds themselves, shared across points
    (common random numbers), so neighbouring points differ only in the swept
    quantity's draws.
    """
    sweep: str = FIG2
    vm_counts: tuple[int, ...] = (5, 10, 15, 20)
    avg_req_sweep_ghz: tuple[float, ...] = field(default_factory=_avg_req_default)
    fig3_num_vms: int = 10
    req_halfwidth_ghz: float = 0.2
    seeds: tuple[int, ...] = tuple(range(10))
    objectives: tuple[Objective, ...] = (Objective.PC_ONLY, Objective.PC_PLUS_PN)
    solver: str = "bnb"
    time_limit: float = 60.0
    node_limit: int | None = None
    # sparser than the generator default so 15-20 VM instances stay feasible
    traffic_density: float = 0.05
    base: GenConfig = field(default_factory=GenConfig)

    def __post_init__(self):
        sweep = self.sweep.upper()
        if sweep not in (FIG2, FIG3):
            raise ValueError(f"unknown sweep {self.sweep!r}")
        object.__setattr__(self, "sweep", sweep)
        object.__setattr__(self, "objectives",
                           tuple(Objective.parse(o) for o in self.objectives))
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if not self.seeds or not self.objectives:
            raise ValueError("seeds and objectives must be non-empty")
        if sweep == FIG2 and not self.vm_counts:
            raise ValueError("vm_counts must be non-empty")
        if sweep == FIG3:
            if not self.avg_req_sweep_ghz:
                raise ValueError("avg_req_sweep_ghz must be non-empty")
            if min(self.avg_req_sweep_ghz) - self.req_halfwidth_ghz <= 0:
                raise ValueError("requirement range would include non-positive values")

    def points(self) -> list[tuple[int, float, GenConfig]]:
        """``(n_vms, avg_req, generator config without seed)`` per sweep point."""
        base = replace(self.base, traffic_density=self.traffic_density)
        if self.sweep == FIG2:
            lo, hi = base.req_range_ghz
            return [(n, (lo + hi) / 2, replace(base, num_vms=n)) for n in self.vm_counts]
        h = self.req_halfwidth_ghz
        return [(self.fig3_num_vms, m,
                 replace(base, num_vms=self.fig3_num_vms, req_range_ghz=(m - h, m + h)))
                for m in self.avg_req_sweep_ghz]

    def tasks(self) -> list[tuple]:
        return [(self.sweep, k, seed, obj.value, self.solver, self.time_limit,
                 self.node_limit, n, avg, replace(gen, seed=seed))
                for k, (n, avg, gen) in enumerate(self.points())
                for seed in self.seeds for obj in self.objectives]


def _solve(inst, objective, solver, time_limit, node_limit, seed):
    routing = build_routing_map(inst.topology, inst.power)
    if solver == "bnb":
        return solve_branch_and_bound(inst, objective, routing,
                                      Budget(time_limit=time_limit, node_limit=node_limit))
    if solver == "bfd":
        return solve_bfd(inst, objective, routing)
    return solve_local(inst, objective, routing, seed=seed, time_limit=time_limit)


def run_task(task) -> dict:
    figure, point, seed, obj, solver, time_limit, node_limit, n, avg, gen = task
    inst = generate_instance(gen)
    res = _solve(inst, Objective.parse(obj), solver, time_limit, node_limit, seed)
    have = res.placement is not None
    b = res.breakdown
    return {
        "figure": figure, "point": point, "seed": seed, "objective": obj,
        "solver": solver, "status": res.status.value, "n_vms": n, "avg_req_ghz": avg,
        "pc_w": b.pc_w if have else None, "pn_w": b.pn_w if have else None,
        "total_w": b.total_w if have else None,
        "active_servers": b.active_servers if have else None,
        "active_onus": b.active_onus if have else None,
        "lower_bound_w": res.lower_bound_w, "gap": res.gap if have else None,
        "runtime_ms": res.runtime_ms,
        "placement": res.placement,
    }


def worker_count(n_tasks: int) -> int:
    env = os.environ.get("PONPLACE_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    tasks = cfg.tasks()
    workers = worker_count(len(tasks)) if workers is None else workers
    if workers <= 1:
        return [run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order
        return list(pool.map(run_task, tasks, chunksize=1))


# ---------------------------------------------------------------- outputs

def _cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf")
    return str(x)


def rows_to_csv(rows, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(0.0 if c == "runtime_ms" and not timing else r[c]) for c in COLUMNS])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = dict(rec)
        for c in ("point", "seed", "n_vms"):
            row[c] = int(row[c])
        for c in ("avg_req_ghz", "pc_w", "pn_w", "total_w", "lower_bound_w", "gap",
                  "runtime_ms"):
            row[c] = float(row[c]) if row[c] != "" else None
        for c in ("active_servers", "active_onus"):
            row[c] = int(row[c]) if row[c] != "" else None
        out.append(row)
    return out


def _solved(r) -> bool:
    return r["status"] in (Status.OPTIMAL.value, Status.FEASIBLE.value)


def point_means(rows) -> list[dict]:
    """Mean power per (figure, point, objective) over solved rows; TIMEOUT
    and INFEASIBLE rows are counted but left out of the means."""
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r["figure"], r["point"], r["objective"]), []).append(r)
    out = []
    for (fig, point, obj), rs in groups.items():
        ok = [r for r in rs if _solved(r)]

        def mean(key, ok=ok):
            return statistics.fmean(r[key] for r in ok) if ok else None
        out.append({
            "figure": fig, "point": point, "objective": obj, "n_vms": rs[0]["n_vms"],
            "avg_req_ghz": rs[0]["avg_req_ghz"], "n_solved": len(ok),
            "n_timeout": sum(r["status"] == Status.TIMEOUT.value for r in rs),
            "n_infeasible": sum(r["status"] == Status.INFEASIBLE.value for r in rs),
            "mean_pc_w": mean("pc_w"), "mean_pn_w": mean("pn_w"),
            "mean_total_w": mean("total_w"),
        })
    return out


def means_to_csv(means) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MEAN_COLUMNS)
    for m in means:
        w.writerow([_cell(m[c]) for c in MEAN_COLUMNS])
    return buf.getvalue()


def pn_reduction(rows, figure: str | None = None) -> dict:
    """Networking-power reduction of pc+pn against pc.

    Per point the reduction is ``1 - mean(Pn_pc+pn) / mean(Pn_pc)`` over the
    seeds where both objectives were solved (paired); points where the pc
    objective uses no ONU at all are skipped. Also reports the best single
    (seed, point) reduction and any pair where pc+pn used more Pn.
    """
    pairs: dict[tuple, dict] = {}
    for r in rows:
        if figure and r["figure"] != figure:
            continue
        pairs.setdefault((r["figure"], r["point"], r["seed"]), {})[r["objective"]] = r
    per_point: dict[tuple, list] = {}
    witness = None
    worse = []
    for (fig, point, seed), d in sorted(pairs.items()):
        a, b = d.get(Objective.PC_ONLY.value), d.get(Objective.PC_PLUS_PN.value)
        if a is None or b is None or not (_solved(a) and _solved(b)):
            continue
        per_point.setdefault((fig, point), []).append((a["pn_w"], b["pn_w"]))
        if b["pn_w"] > a["pn_w"] + 1e-9:
            worse.append({"figure": fig, "point": point, "seed": seed})
        if a["pn_w"] > 0:
            red = 1.0 - b["pn_w"] / a["pn_w"]
            if witness is None or red > witness["reduction"]:
                witness = {"figure": fig, "point": point, "seed": seed, "reduction": red}
    points = []
    for (fig, point), ps in sorted(per_point.items()):
        ma = statistics.fmean(p[0] for p in ps)
        mb = statistics.fmean(p[1] for p in ps)
        points.append({"figure": fig, "point": point, "pairs": len(ps), "mean_pn_pc": ma,
                       "mean_pn_pcpn": mb,
                       "reduction": (1.0 - mb / ma) if ma > 0 else None})
    valid = [p for p in points if p["reduction"] is not None]
    best = max(valid, key=lambda p: p["reduction"]) if valid else None
    return {"points": points, "max_mean": best, "max_single": witness, "pcpn_worse": worse}


def summarize(rows) -> dict:
    red = pn_reduction(rows)
    return {
        "rows": len(rows),
        "timeouts": sum(r["status"] == Status.TIMEOUT.value for r in rows),
        "infeasible": sum(r["status"] == Status.INFEASIBLE.value for r in rows),
        "max_mean_pn_reduction": red["max_mean"],
        "max_single_pn_reduction": red["max_single"],
        "pcpn_worse_pairs": red["pcpn_worse"],
        "per_point": red["points"],
    }


def summary_line(summary: dict) -> str:
    best = summary["max_mean_pn_reduction"]
    if best is None:
        head = "max Pn reduction: n/a (no point with networking power under pc)"
    else:
        head = (f"max Pn reduction of pc+pn vs pc: {100 * best['reduction']:.1f}% "
                f"({best['figure']} point {best['point']})")
    return (f"{head}; rows={summary['rows']} timeouts={summary['timeouts']} "
            f"infeasible={summary['infeasible']}")


def _x_of(fig):
    return ("n_vms", "Number of VMs") if fig == FIG2 else ("avg_req_ghz",
                                                         "Average VM requirement (GHz)")


def plot_script(rows, means) -> str:
    """Self-contained gnuplot script (inline data blocks): total and
    networking power per figure, mean lines over per-seed points."""
    figs = [f for f in (FIG2, FIG3) if any(m["figure"] == f for m in means)]
    out = ["# gnuplot script; render with: gnuplot plot.gp",
           "set terminal pngcairo size 1200,%d" % (450 * max(1, len(figs))),
           "set output 'power.png'",
           "set key top left",
           "set grid"]
    objs = sorted({m["objective"] for m in means})
    for fig in figs:
        key, _ = _x_of(fig)
        for obj in objs:
            tag = f"{fig}_{obj.replace('+', 'p')}"
            out.append(f"$mean_{tag} << EOD")
            for m in sorted((m for m in means if m["figure"] == fig and m["objective"] == obj),
                            key=lambda m: m["point"]):
                if m["mean_total_w"] is not None:
                    out.append(f"{m[key]!r} {m['mean_total_w']!r} {m['mean_pn_w']!r}")
            out.append("EOD")
            out.append(f"$seed_{tag} << EOD")
            for r in rows:
                if r["figure"] == fig and r["objective"] == obj and _solved(r):
                    out.append(f"{r[key]!r} {r['total_w']!r} {r['pn_w']!r}")
            out.append("EOD")
    out.append(f"set multiplot layout {max(1, len(figs))},2")
    for fig in figs:
        _, label = _x_of(fig)
        for col, title in ((2, "Total power (W)"), (3, "Networking power (W)")):
            out.append(f"set xlabel '{label}'")
            out.append(f"set ylabel '{title}'")
            series = []
            for obj in objs:
                tag = f"{fig}_{obj.replace('+', 'p')}"
                series.append(f"$mean_{tag} using 1:{col} with linespoints title '{obj} mean'")
                series.append(f"$seed_{tag} using 1:{col} with points pt 7 ps 0.4 "
                              f"title '{obj} per seed'")
            out.append("plot " + ", \\\n     ".join(series))
    out.append("unset multiplot")
    return "\n".join(out) + "\n"


def write_outputs(rows, out_dir: str, timing: bool = True) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    means = point_means(rows)
    summary = summarize(rows)
    files = {
        "results.csv": rows_to_csv(rows, timing),
        "means.csv": means_to_csv(means),
        "plot.gp": plot_script(rows, means),
        "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
    }
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return summary

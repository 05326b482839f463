import json
from dataclasses import replace

import pytest

from ponplace import experiment as exp
from ponplace.cli import main
from ponplace.model import generate_instance, save_instance
from ponplace.network import build_routing_map
from ponplace.power import evaluate
from ponplace.solve import Objective

SMALL_FIG2 = exp.ExperimentConfig(sweep="fig2", vm_counts=(3, 5), seeds=(0, 1, 2),
                                  node_limit=50_000)
SMALL_FIG3 = exp.ExperimentConfig(sweep="fig3", avg_req_sweep_ghz=(0.5, 1.5), seeds=(0, 1),
                                  node_limit=50_000)


@pytest.fixture(scope="module")
def fig2_rows():
    return exp.run_experiment(SMALL_FIG2, workers=1)


@pytest.fixture(scope="module")
def fig3_rows():
    return exp.run_experiment(SMALL_FIG3, workers=1)


def test_default_row_arithmetic():
    cfg = exp.ExperimentConfig()
    assert len(cfg.tasks()) == 4 * 10 * 2
    fig3 = exp.ExperimentConfig(sweep="fig3")
    assert len(fig3.tasks()) == 12 * 10 * 2
    assert fig3.avg_req_sweep_ghz[0] == 0.3 and fig3.avg_req_sweep_ghz[-1] == 2.5


def test_fig3_points_keep_the_mean():
    for n, avg, gen in exp.ExperimentConfig(sweep="fig3").points():
        lo, hi = gen.req_range_ghz
        assert n == 10 and (lo + hi) / 2 == pytest.approx(avg)


def test_fig2_points_use_base_range():
    pts = exp.ExperimentConfig().points()
    assert [p[0] for p in pts] == [5, 10, 15, 20]
    assert all(avg == pytest.approx(0.3) for _, avg, _ in pts)
    assert all(gen.traffic_density == 0.05 for _, _, gen in pts)


@pytest.mark.parametrize("kw", [dict(sweep="fig4"), dict(seeds=()), dict(vm_counts=()),
                                dict(solver="cplex"), dict(objectives=()),
                                dict(sweep="fig3", avg_req_sweep_ghz=()),
                                dict(sweep="fig3", avg_req_sweep_ghz=(0.1,))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        exp.ExperimentConfig(**kw)


def test_row_count_and_order(fig2_rows):
    assert len(fig2_rows) == 2 * 3 * 2
    keys = [(r["point"], r["seed"], r["objective"]) for r in fig2_rows]
    assert keys == sorted(keys, key=lambda k: (k[0], k[1], k[2] != "pc"))
    assert set(exp.rows_to_csv(fig2_rows).splitlines()[0].split(",")) == set(exp.COLUMNS)


def test_rows_revalidate_against_evaluator(fig2_rows, fig3_rows):
    cfgs = {exp.FIG2: SMALL_FIG2, exp.FIG3: SMALL_FIG3}
    for r in fig2_rows + fig3_rows:
        if r["placement"] is None:
            continue
        _, _, gen = cfgs[r["figure"]].points()[r["point"]]
        inst = generate_instance(replace(gen, seed=r["seed"]))
        b, rep = evaluate(inst, r["placement"], build_routing_map(inst.topology, inst.power))
        assert rep.feasible
        assert b.pc_w == pytest.approx(r["pc_w"], abs=1e-6)
        assert b.pn_w == pytest.approx(r["pn_w"], abs=1e-6)
        assert b.total_w == pytest.approx(r["total_w"], abs=1e-6)


def test_row_matches_cli_evaluate(fig3_rows, tmp_path, capsys):
    r = next(r for r in fig3_rows if r["objective"] == "pc" and r["pn_w"])
    _, _, gen = SMALL_FIG3.points()[r["point"]]
    inst = generate_instance(replace(gen, seed=r["seed"]))
    (tmp_path / "i.json").write_text(save_instance(inst))
    doc = {"host": [{"vm": v, "server": s} for v, s in sorted(r["placement"].host.items())]}
    (tmp_path / "p.json").write_text(json.dumps(doc))
    main(["evaluate", "--instance", str(tmp_path / "i.json"),
          "--placement", str(tmp_path / "p.json")])
    out = json.loads(capsys.readouterr().out)
    assert out["total_w"] == pytest.approx(r["total_w"], abs=1e-6)


def test_parallel_matches_serial(fig2_rows):
    par = exp.run_experiment(SMALL_FIG2, workers=2)
    assert exp.rows_to_csv(par, timing=False) == exp.rows_to_csv(fig2_rows, timing=False)


def test_csv_roundtrip(fig2_rows):
    text = exp.rows_to_csv(fig2_rows, timing=False)
    back = exp.read_csv(text)
    assert exp.rows_to_csv(back, timing=False) == text
    assert all(r["runtime_ms"] == 0.0 for r in back)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("PONPLACE_THREADS", "3")
    assert exp.worker_count(100) == 3
    assert exp.worker_count(2) == 2
    monkeypatch.setenv("PONPLACE_THREADS", "0")
    assert exp.worker_count(5) == 1


def _row(point, seed, obj, pn, status="OPTIMAL", total=None):
    return {"figure": "FIG3", "point": point, "seed": seed, "objective": obj, "status": status,
            "n_vms": 10, "avg_req_ghz": 0.3 + 0.2 * point, "pc_w": 400.0, "pn_w": pn,
            "total_w": total if total is not None else 400.0 + (pn or 0.0)}


def test_pn_reduction_paired_means():
    rows = [_row(0, 0, "pc", 10.0), _row(0, 0, "pc+pn", 5.0),
            _row(0, 1, "pc", 10.0), _row(0, 1, "pc+pn", 0.0),
            _row(1, 0, "pc", 0.0), _row(1, 0, "pc+pn", 0.0),
            # unpaired seed: only one objective solved
            _row(0, 2, "pc", 20.0), _row(0, 2, "pc+pn", None, status="TIMEOUT")]
    red = exp.pn_reduction(rows)
    p0, p1 = red["points"]
    assert p0["pairs"] == 2 and p0["reduction"] == pytest.approx(0.75)
    assert p1["reduction"] is None
    assert red["max_mean"]["point"] == 0
    assert red["max_single"] == {"figure": "FIG3", "point": 0, "seed": 1, "reduction": 1.0}
    assert red["pcpn_worse"] == []


def test_pn_reduction_reports_worse_pairs():
    red = exp.pn_reduction([_row(0, 0, "pc", 5.0), _row(0, 0, "pc+pn", 7.5)])
    assert red["pcpn_worse"] == [{"figure": "FIG3", "point": 0, "seed": 0}]


def test_point_means_skip_unsolved():
    rows = [_row(0, 0, "pc", 10.0), _row(0, 1, "pc", None, status="TIMEOUT"),
            _row(0, 2, "pc", None, status="INFEASIBLE")]
    rows[1]["pc_w"] = rows[1]["total_w"] = None
    rows[2]["pc_w"] = rows[2]["total_w"] = None
    (m,) = exp.point_means(rows)
    assert (m["n_solved"], m["n_timeout"], m["n_infeasible"]) == (1, 1, 1)
    assert m["mean_pn_w"] == 10.0 and m["mean_total_w"] == 410.0


def test_fig3_pn_never_worse(fig3_rows):
    assert exp.pn_reduction(fig3_rows)["pcpn_worse"] == []


def test_outputs_written(fig2_rows, fig3_rows, tmp_path):
    summary = exp.write_outputs(fig2_rows + fig3_rows, str(tmp_path), timing=False)
    gp = (tmp_path / "plot.gp").read_text()
    assert sum(ln.startswith("plot ") for ln in gp.splitlines()) == 4
    assert "$mean_FIG2_pcppn" in gp and "$seed_FIG3_pc" in gp
    assert "Networking power (W)" in gp and "Total power (W)" in gp
    means = (tmp_path / "means.csv").read_text().splitlines()
    assert means[0].split(",") == list(exp.MEAN_COLUMNS)
    assert len(means) == 1 + (2 + 2) * 2
    assert json.loads((tmp_path / "summary.json").read_text())["rows"] == summary["rows"]
    assert "max Pn reduction" in exp.summary_line(summary)


def test_summary_line_without_networking():
    line = exp.summary_line(exp.summarize([_row(0, 0, "pc", 0.0), _row(0, 0, "pc+pn", 0.0)]))
    assert "n/a" in line


def test_timeout_rows_keep_incumbent():
    cfg = exp.ExperimentConfig(sweep="fig3", avg_req_sweep_ghz=(1.5,), seeds=(2,),
                               objectives=(Objective.PC_ONLY,), node_limit=0)
    (r,) = exp.run_experiment(cfg, workers=1)
    assert r["status"] == "TIMEOUT"
    assert r["total_w"] is not None and r["gap"] >= 0.0
    assert exp.point_means([r])[0]["n_timeout"] == 1

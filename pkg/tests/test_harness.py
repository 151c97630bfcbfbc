import json
import math
import time

import pytest

from optbench import gen_erdos_renyi, gen_regular, maxcut_qubo
from optbench.harness import (
    ConfigError,
    ExperimentConfig,
    RunRecord,
    SolverSpec,
    _tts_task,
    config_hash,
    derive_seed,
    emit_report,
    fob_by_solver,
    grid_search,
    instance_from_dict,
    instance_hash,
    instance_id,
    instance_to_dict,
    load_records,
    oracle_table,
    run_bsf_experiment,
    run_tts_experiment,
    save_records,
    summarize_groups,
    write_instance_files,
)


def small_instances(n=6, count=4, base_seed=0):
    return [gen_regular(n, 3, seed=base_seed + i) for i in range(count)]


# ----------------------------------------------------------------------
# Identities
# ----------------------------------------------------------------------

def test_derive_seed_deterministic_and_distinct():
    a = derive_seed(1, "inst", "sa")
    assert a == derive_seed(1, "inst", "sa")
    assert a != derive_seed(1, "inst", "ts")
    assert a != derive_seed(2, "inst", "sa")


def test_instance_identity_stable():
    inst = gen_regular(8, 3, seed=3)
    again = gen_regular(8, 3, seed=3)
    assert instance_hash(inst) == instance_hash(again)
    assert instance_id(inst) == instance_id(again)


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


# ----------------------------------------------------------------------
# TTS protocol
# ----------------------------------------------------------------------

def test_tts_exhaustive_solver_path():
    cfg = ExperimentConfig(
        scenario="tts",
        solvers=[SolverSpec("exhaustive", "exhaustive")],
        instances=small_instances(count=2),
        seed=1,
    )
    records = run_tts_experiment(cfg)
    assert len(records) == 2
    for record in records:
        assert record.status == "ok"
        assert record.metrics["p_star"] == 1.0
        assert record.metrics["tts"] == pytest.approx(record.timing["solve"])


def test_tts_includes_qaoa_layer_metrics():
    cfg = ExperimentConfig(
        scenario="tts",
        solvers=[SolverSpec("qaoa8", "qaoa", {"p": 8})],
        instances=small_instances(count=2),
        seed=2,
    )
    records = run_tts_experiment(cfg)
    for record in records:
        assert record.status == "ok"
        assert 0.0 < record.metrics["p_star"] <= 1.0
        assert record.metrics["tts_layers"] >= 1
        assert record.metrics["tts"] == pytest.approx(
            record.metrics["tts_layers"] * 1e-6
        )


def test_tts_zero_hit_heuristic_records_infinite_tts():
    # A single local-search restart can miss the optimum; hunt a seed where
    # it does, then check the record carries an infinite TTS through
    # serialization and back.
    for seed in range(60):
        inst = gen_regular(14, 3, seed=seed)
        poly = maxcut_qubo(inst)
        _, best = poly.argmin_exhaustive()
        spec = SolverSpec("ls1", "ls", {"restarts": 1})
        record = _tts_task((inst, spec, seed, 26))
        if record.metrics["p_star"] == 0.0:
            assert record.metrics["tts"] == math.inf
            payload = record.to_dict()
            assert payload["metrics"]["tts"] == "inf"
            back = RunRecord.from_dict(json.loads(json.dumps(payload)))
            assert back.metrics["tts"] == math.inf
            return
    pytest.fail("no missing restart found within 60 seeds")


def test_tts_skips_oversized_instances():
    inst = gen_regular(30, 3, seed=0)
    cfg = ExperimentConfig(
        scenario="tts",
        solvers=[SolverSpec("sa", "sa", {"reads": 2, "sweeps": 2})],
        instances=[inst],
        seed=0,
        oracle_cap=20,
    )
    records = run_tts_experiment(cfg)
    assert records[0].status == "skipped"
    assert "cap" in records[0].error


def test_tts_deterministic_modulo_timing():
    cfg = ExperimentConfig(
        scenario="tts",
        solvers=[
            SolverSpec("sa", "sa", {"reads": 20, "sweeps": 5}),
            SolverSpec("ts", "ts", {"restarts": 10}),
        ],
        instances=small_instances(count=3),
        seed=7,
    )
    first = run_tts_experiment(cfg)
    second = run_tts_experiment(cfg)
    for a, b in zip(first, second):
        assert a.best_cost == b.best_cost
        assert a.metrics["p_star"] == b.metrics["p_star"]
        assert a.metrics["ar"] == b.metrics["ar"]
        assert a.seed == b.seed


# ----------------------------------------------------------------------
# BSF protocol
# ----------------------------------------------------------------------

def test_bsf_at_least_one_call_when_budget_tiny():
    cfg = ExperimentConfig(
        scenario="bsf",
        solvers=[SolverSpec("sa", "sa", {"reads": 5, "sweeps": 5})],
        instances=small_instances(count=1),
        seed=3,
        time_limit=1e-9,
    )
    records = run_bsf_experiment(cfg)
    assert records[0].calls == 1
    assert records[0].total_draws == 5


def test_bsf_single_solver_roster_gets_fob_one():
    cfg = ExperimentConfig(
        scenario="bsf",
        solvers=[SolverSpec("sa", "sa", {"reads": 5, "sweeps": 5})],
        instances=small_instances(count=3),
        seed=4,
        time_limit=0.05,
    )
    records = run_bsf_experiment(cfg)
    assert fob_by_solver(records)["sa"] == 1.0


def test_bsf_dominant_solver_takes_all_credit():
    # The exhaustive solver always returns the optimum; a single random
    # bipartition essentially never does on these instances.  Verify the
    # dominance before asserting the FOB split.
    instances = [gen_erdos_renyi(16, 0.5, seed=40 + i) for i in range(4)]
    weak = SolverSpec("weak", "sa", {"reads": 1, "sweeps": 1, "t0": 1e9, "alpha": 0.5})
    cfg = ExperimentConfig(
        scenario="bsf",
        solvers=[SolverSpec("oracle", "exhaustive"), weak],
        instances=instances,
        seed=5,
        time_limit=1e-9,
    )
    records = run_bsf_experiment(cfg, max_calls=1)
    by_solver = {}
    for record in records:
        by_solver.setdefault(record.solver, []).append(record)
    optima = {instance_id(i): maxcut_qubo(i).argmin_exhaustive()[1] for i in instances}
    strictly_worse = all(
        r.best_cost > optima[r.instance_id] + 1e-9 for r in by_solver["weak"]
    )
    if not strictly_worse:
        pytest.skip("random sample hit an optimum; dominance premise broken")
    fobs = fob_by_solver(records)
    assert fobs["oracle"] == 1.0
    assert fobs["weak"] == 0.0


def test_bsf_deterministic_with_fixed_call_budget():
    cfg = ExperimentConfig(
        scenario="bsf",
        solvers=[
            SolverSpec("sa", "sa", {"reads": 4, "sweeps": 4}),
            SolverSpec("ls", "ls", {"restarts": 4}),
        ],
        instances=small_instances(n=8, count=3),
        seed=11,
        time_limit=60.0,
    )
    first = run_bsf_experiment(cfg, max_calls=2)
    second = run_bsf_experiment(cfg, max_calls=2)
    for a, b in zip(first, second):
        assert a.best_cost == b.best_cost
        assert a.total_draws == b.total_draws
        assert a.calls == b.calls == 2
        assert a.metrics == b.metrics


def test_bsf_budget_respected_between_calls():
    cfg = ExperimentConfig(
        scenario="bsf",
        solvers=[SolverSpec("sa", "sa", {"reads": 40, "sweeps": 20})],
        instances=[gen_regular(30, 3, seed=1)],
        seed=6,
        time_limit=0.25,
    )
    start = time.perf_counter()
    records = run_bsf_experiment(cfg)
    elapsed = time.perf_counter() - start
    record = records[0]
    assert record.calls >= 1
    # the loop only checks between calls: overshoot is at most ~one call
    per_call = elapsed / record.calls
    assert elapsed < 0.25 + 3 * per_call + 0.2


def test_bsf_failed_solver_excluded_from_pool():
    cfg = ExperimentConfig(
        scenario="bsf",
        solvers=[
            SolverSpec("sa", "sa", {"reads": 3, "sweeps": 3}),
            SolverSpec("gw", "gw", {"hyperplanes": 10, "max_sweeps": 1}),
        ],
        instances=small_instances(count=1),
        seed=8,
        time_limit=1e-9,
    )
    records = run_bsf_experiment(cfg)
    by_solver = {r.solver: r for r in records}
    assert by_solver["gw"].status == "failed"
    assert "c_hat" not in by_solver["gw"].metrics
    assert by_solver["sa"].metrics["c_hat"] == 1.0


# ----------------------------------------------------------------------
# Grid search
# ----------------------------------------------------------------------

def test_grid_single_cell_returned():
    spec = SolverSpec("sa", "sa", {"reads": 5})
    result = grid_search(spec, {"sweeps": [5]}, small_instances(count=2), master_seed=0)
    assert result.best_params == {"sweeps": 5}
    assert len(result.table) == 1


def test_grid_empty_rejected():
    with pytest.raises(ConfigError):
        grid_search(SolverSpec("sa", "sa"), {}, small_instances(count=1))


def test_grid_disjointness_guard():
    tuning = small_instances(count=2)
    benchmark_ids = {instance_id(tuning[0])}
    with pytest.raises(ConfigError):
        grid_search(
            SolverSpec("sa", "sa"),
            {"sweeps": [2]},
            tuning,
            benchmark_ids=benchmark_ids,
        )


def test_grid_selects_argmin_of_table_and_calibrates_sweeps():
    spec = SolverSpec("sa", "sa", {"reads": 100})
    tuning = [gen_regular(12, 3, seed=70 + i) for i in range(10)]
    result = grid_search(spec, {"sweeps": [1, 20]}, tuning, master_seed=1)
    values = {tuple(cell.items()): value for cell, value in result.table}
    best_value = min(values.values())
    assert values[tuple(result.best_params.items())] == best_value
    # calibration on this fixed tuning set: annealing long enough to reach
    # the optimum beats one-sweep restarts on mean time to solution
    assert result.best_params == {"sweeps": 20}


# ----------------------------------------------------------------------
# Reporting and persistence
# ----------------------------------------------------------------------

def test_emit_report_round_trip(tmp_path):
    cfg = ExperimentConfig(
        scenario="tts",
        solvers=[SolverSpec("sa", "sa", {"reads": 10, "sweeps": 5})],
        instances=small_instances(count=3),
        seed=9,
    )
    records = run_tts_experiment(cfg)
    written = emit_report(records, tmp_path)
    names = {p.name for p in written}
    assert "records.jsonl" in names
    assert "summary.txt" in names
    loaded = load_records(tmp_path / "records.jsonl")
    assert len(loaded) == len(records)
    assert loaded[0].metrics.keys() == records[0].metrics.keys()
    summary = (tmp_path / "summary.txt").read_text()
    assert "median" in summary and "p12.5" in summary and "p87.5" in summary


def test_group_table_counts_cover_all_records():
    cfg = ExperimentConfig(
        scenario="tts",
        solvers=[SolverSpec("sa", "sa", {"reads": 5, "sweeps": 5})],
        instances=small_instances(n=6, count=2) + small_instances(n=8, count=2, base_seed=50),
        seed=10,
        num_groups=2,
    )
    records = run_tts_experiment(cfg)
    rows = summarize_groups(records, "tts")
    assert sum(r["count"] for r in rows) == len(records)
    assert {r["group"] for r in rows} == {0, 1}


def test_save_load_handles_infinity(tmp_path):
    record = RunRecord(
        instance_id="x", instance_hash="h", solver="s", solver_kind="sa",
        config_hash="c", seed=0, scenario="tts", size=5,
        metrics={"tts": math.inf},
    )
    path = tmp_path / "r.jsonl"
    save_records([record], path)
    text = path.read_text()
    assert '"inf"' in text
    assert load_records(path)[0].metrics["tts"] == math.inf


def test_instance_files_round_trip(tmp_path):
    from optbench import gen_tsp_circular

    instances = small_instances(count=2) + [gen_tsp_circular(5, 0.8, seed=1)]
    written = write_instance_files(instances, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest) == 3
    payload = instance_to_dict(instances[2])
    rebuilt = instance_from_dict(json.loads(json.dumps(payload)))
    assert rebuilt.num_locations == 5
    import numpy as np

    assert np.allclose(rebuilt.distances, instances[2].distances, atol=1e-12)


def test_oracle_table_handles_caps():
    rows = oracle_table(small_instances(count=1) + [gen_regular(30, 3, seed=2)], cap=20)
    assert rows[0]["status"] == "ok"
    assert "optimal_cost" in rows[0]
    assert rows[1]["status"] == "skipped"


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(scenario="nope", solvers=[SolverSpec("sa", "sa")], instances=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(scenario="tts", solvers=[], instances=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(
            scenario="bsf",
            solvers=[SolverSpec("sa", "sa")],
            instances=[],
            time_limit=0.0,
        )
    with pytest.raises(ConfigError):
        SolverSpec("x", "mystery")


def test_bsf_exhaustive_terminates_early():
    cfg = ExperimentConfig(
        scenario="bsf",
        solvers=[SolverSpec("oracle", "exhaustive")],
        instances=small_instances(count=1),
        seed=12,
        time_limit=30.0,
    )
    records = run_bsf_experiment(cfg)
    assert records[0].calls == 1
    assert records[0].metrics["terminated_early"] is True

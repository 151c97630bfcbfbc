"""Experiment orchestration: configs, protocols, persistence, reports.

Two scenario protocols are provided.  ``tts`` draws a fixed number of
reads per solver, estimates the optimal-sampling probability against the
exhaustive oracle (exactly for simulated circuits) and reports
time-to-solution.  ``bsf`` repeats solver calls until a wall-clock budget
expires, pools the best cost found across the roster and reports relative
errors and the fraction-of-overall-best.

Records serialize as JSON lines with infinities encoded as the token
"inf"; reports add per-group tables (median with a 12.5..87.5 percentile
interval) and two-column plot data files.
"""

from __future__ import annotations

import configparser
import hashlib
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .formulations import maxcut_qubo
from .instances import (
    MaxCutInstance,
    TspInstance,
    gen_erdos_renyi,
    gen_regular,
    gen_tsp_circular,
    gen_tsp_planar,
    read_edge_list,
    write_edge_list,
)
from .metrics import MetricContext, approximation_ratio, bsf_relative, equal_frequency_bins, fob, tts, tts_oh
from .model import SampleSet, SizeCapError, Stopwatch, Timing, merge
from .qaoa import (
    GeneratorParams,
    expand_generator,
    layer_ledger,
    qaoa_qubo_simulate,
    tts_layers,
)
from .solvers import (
    SaConfig,
    TsConfig,
    goemans_williamson,
    local_search_maxcut,
    simulated_annealing,
    tabu_search,
    tsp_exhaustive,
)

SECONDS_PER_CNOT_LAYER = 1e-6

SOLVER_KINDS = ("sa", "ts", "ls", "greedy", "gw", "exhaustive", "qaoa")


class ConfigError(ValueError):
    """Bad experiment configuration (maps to CLI exit code 1)."""


# ----------------------------------------------------------------------
# Identities and seeds
# ----------------------------------------------------------------------

def _stable_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def instance_hash(inst: MaxCutInstance | TspInstance) -> str:
    if isinstance(inst, MaxCutInstance):
        body = f"maxcut;{inst.num_nodes};" + ";".join(
            f"{u},{v},{w!r}" for u, v, w in inst.edges
        )
    else:
        body = f"tsp;{inst.num_locations};" + ";".join(
            repr(x) for x in inst.distances.ravel()
        )
    return _stable_hash(body)[:16]


def instance_id(inst: MaxCutInstance | TspInstance) -> str:
    meta = inst.metadata
    label = meta.get("label")
    if label:
        return str(label)
    kind = meta.get("generator", "unknown")
    size = inst.num_nodes if isinstance(inst, MaxCutInstance) else inst.num_locations
    return f"{kind}-n{size}-{instance_hash(inst)[:8]}"


def config_hash(params: dict) -> str:
    return _stable_hash(json.dumps(params, sort_keys=True, default=str))[:16]


def derive_seed(master_seed: int, *keys) -> int:
    """Deterministic per-task seed from the master seed and context keys."""
    text = f"{master_seed}|" + "|".join(str(k) for k in keys)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


# ----------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------

@dataclass
class SolverSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in SOLVER_KINDS:
            raise ConfigError(f"unknown solver kind {self.kind!r}")


@dataclass
class ExperimentConfig:
    scenario: str
    solvers: list[SolverSpec]
    instances: list
    seed: int = 0
    time_limit: float = 10.0
    oracle_cap: int = 26
    num_groups: int | None = None
    output_dir: Path | None = None
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.scenario not in ("tts", "bsf"):
            raise ConfigError(f"scenario must be 'tts' or 'bsf', got {self.scenario!r}")
        if not self.solvers:
            raise ConfigError("solver roster is empty")
        if self.scenario == "bsf" and self.time_limit <= 0.0:
            raise ConfigError("bsf scenarios need time_limit > 0")
        names = [s.name for s in self.solvers]
        if len(set(names)) != len(names):
            raise ConfigError("solver names must be unique")


def _parse_scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _parse_list(text: str) -> list:
    return [_parse_scalar(part.strip()) for part in text.split(",") if part.strip()]


def load_config(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    loaded = parser.read(path)
    if not loaded:
        raise ConfigError(f"config file {path} not found")
    return parser


def build_instances(section: dict, master_seed: int) -> list:
    """Materialize the instance dataset described by an [instances] section."""
    kind = section.get("kind")
    if kind is None:
        raise ConfigError("[instances] section needs a 'kind' key")
    if kind == "files":
        pattern = section.get("glob")
        if not pattern:
            raise ConfigError("instances kind 'files' needs a 'glob' key")
        paths = sorted(Path().glob(pattern))
        if not paths:
            raise ConfigError(f"no instance files match {pattern!r}")
        out = []
        for p in paths:
            inst = read_edge_list(p)
            inst.metadata["label"] = p.stem
            out.append(inst)
        return out
    sizes = section.get("sizes")
    if sizes is None:
        raise ConfigError("[instances] section needs a 'sizes' key")
    sizes = _parse_list(sizes) if isinstance(sizes, str) else list(sizes)
    count = int(section.get("count", 10))
    out = []
    for size in sizes:
        for index in range(count):
            seed = derive_seed(master_seed, "instance", kind, size, index)
            if kind == "regular":
                inst = gen_regular(int(size), int(section.get("degree", 3)), seed)
            elif kind == "erdos_renyi":
                inst = gen_erdos_renyi(
                    int(size),
                    float(section.get("density", 0.5)),
                    seed,
                    weights=section.get("weights", "unit"),
                )
            elif kind == "tsp_circular":
                inst = gen_tsp_circular(int(size), float(section.get("sigma", 1.0)), seed)
            elif kind == "tsp_planar":
                inst = gen_tsp_planar(int(size), seed)
            else:
                raise ConfigError(f"unknown instance kind {kind!r}")
            inst.metadata["label"] = f"{kind}-n{size}-{index:03d}"
            out.append(inst)
    return out


def parse_experiment(parser: configparser.ConfigParser,
                     overrides: dict | None = None) -> ExperimentConfig:
    overrides = overrides or {}
    if "experiment" not in parser:
        raise ConfigError("config needs an [experiment] section")
    exp = dict(parser["experiment"])
    exp.update({k: v for k, v in overrides.items() if v is not None})
    solvers = []
    for name in parser.sections():
        if not name.startswith("solver:"):
            continue
        body = dict(parser[name])
        kind = body.pop("kind", name.split(":", 1)[1])
        params = {k: _parse_scalar(v) for k, v in body.items()}
        solvers.append(SolverSpec(name=name.split(":", 1)[1], kind=kind, params=params))
    if "instances" not in parser:
        raise ConfigError("config needs an [instances] section")
    seed = int(exp.get("seed", 0))
    instances = build_instances(dict(parser["instances"]), seed)
    output = exp.get("output")
    return ExperimentConfig(
        scenario=str(exp.get("scenario", "tts")),
        solvers=solvers,
        instances=instances,
        seed=seed,
        time_limit=float(exp.get("time_limit", 10.0)),
        oracle_cap=int(exp.get("oracle_cap", 26)),
        num_groups=int(exp["groups"]) if "groups" in exp else None,
        output_dir=Path(output) if output else None,
        jobs=int(exp.get("jobs", 1)),
    )


# ----------------------------------------------------------------------
# Records
# ----------------------------------------------------------------------

@dataclass
class RunRecord:
    """One solver-on-instance execution with its configuration snapshot."""

    instance_id: str
    instance_hash: str
    solver: str
    solver_kind: str
    config_hash: str
    seed: int
    scenario: str
    size: int
    status: str = "ok"
    error: str | None = None
    group: int | None = None
    best_cost: float | None = None
    total_draws: int = 0
    calls: int = 0
    timing: dict = field(default_factory=dict)
    cpu_time: float = 0.0
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _sanitize(asdict(self))

    @classmethod
    def from_dict(cls, payload: dict) -> "RunRecord":
        data = dict(payload)
        data["metrics"] = {k: _restore(v) for k, v in data.get("metrics", {}).items()}
        data["timing"] = {k: _restore(v) for k, v in data.get("timing", {}).items()}
        if data.get("best_cost") is not None:
            data["best_cost"] = _restore(data["best_cost"])
        return cls(**data)


def _sanitize(value):
    """Make nested data JSON safe: non-finite floats become tokens."""
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
    return value


def _restore(value):
    if value == "inf":
        return math.inf
    if value == "-inf":
        return -math.inf
    if value == "nan":
        return math.nan
    return value


def save_records(records: Sequence[RunRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict()) + "\n")


def load_records(path: str | Path) -> list[RunRecord]:
    records = []
    with Path(path).open() as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(RunRecord.from_dict(json.loads(line)))
    return records


# ----------------------------------------------------------------------
# Solver invocation
# ----------------------------------------------------------------------

def run_classical_solver(spec: SolverSpec, inst: MaxCutInstance, seed: int) -> SampleSet:
    params = dict(spec.params)
    if spec.kind == "sa":
        cfg = SaConfig(
            reads=int(params.get("reads", 100)),
            sweeps=int(params.get("sweeps", 20)),
            t0=params.get("t0"),
            alpha=params.get("alpha"),
            kb=float(params.get("kb", 1.0)),
            seed=seed,
        )
        return simulated_annealing(maxcut_qubo(inst), cfg)
    if spec.kind == "ts":
        cfg = TsConfig(
            restarts=int(params.get("restarts", 100)),
            iterations=int(params["iterations"]) if "iterations" in params else None,
            tenure=int(params["tenure"]) if "tenure" in params else None,
            seed=seed,
        )
        return tabu_search(maxcut_qubo(inst), cfg)
    if spec.kind in ("ls", "greedy"):
        return local_search_maxcut(inst, restarts=int(params.get("restarts", 100)), seed=seed)
    if spec.kind == "gw":
        return goemans_williamson(
            inst,
            hyperplanes=int(params.get("hyperplanes", 1000)),
            seed=seed,
            tol=float(params.get("tol", 1e-7)),
            patience=int(params.get("patience", 50)),
            max_sweeps=int(params.get("max_sweeps", 20_000)),
        )
    if spec.kind == "exhaustive":
        watch = Stopwatch()
        poly = maxcut_qubo(inst)
        watch.lap()
        x, cost = poly.argmin_exhaustive(cap=int(params.get("cap", 26)))
        t_solve = watch.lap()
        sample = SampleSet.from_draws(inst.num_nodes, [(x, cost)],
                                      info={"solver": "exhaustive"})
        sample.timing = Timing(0.0, t_solve, watch.lap())
        return sample
    raise ConfigError(f"solver kind {spec.kind!r} is not a sampling solver")


def _qaoa_schedule(params: dict) -> tuple[int, np.ndarray, np.ndarray]:
    p = int(params.get("p", 8))
    if "theta_beta" in params and "theta_gamma" in params:
        gp = GeneratorParams(np.asarray(params["theta_beta"], dtype=float),
                             np.asarray(params["theta_gamma"], dtype=float))
    else:
        gp = GeneratorParams.ramp()
    beta, gamma = expand_generator(gp, p)
    return p, beta, gamma


# ----------------------------------------------------------------------
# Scenario protocols
# ----------------------------------------------------------------------

def _tts_task(args) -> RunRecord:
    inst, spec, master_seed, oracle_cap = args
    poly = maxcut_qubo(inst)
    iid = instance_id(inst)
    record = RunRecord(
        instance_id=iid,
        instance_hash=instance_hash(inst),
        solver=spec.name,
        solver_kind=spec.kind,
        config_hash=config_hash(spec.params),
        seed=derive_seed(master_seed, iid, spec.name),
        scenario="tts",
        size=inst.num_nodes,
    )
    cpu_start = time.process_time()
    try:
        x_star, c_star = poly.argmin_exhaustive(cap=oracle_cap)
    except SizeCapError as exc:
        record.status = "skipped"
        record.error = str(exc)
        return record
    ctx = MetricContext(optimal_cost=c_star)
    try:
        if spec.kind == "qaoa":
            p, beta, gamma = _qaoa_schedule(spec.params)
            dist = qaoa_qubo_simulate(poly, beta, gamma, optimal_cost=c_star)
            ledger = layer_ledger("maxcut", inst, p)
            layers = tts_layers(dist, ledger)
            seconds_per_layer = float(
                spec.params.get("seconds_per_layer", SECONDS_PER_CNOT_LAYER)
            )
            record.metrics = {
                "p_star": dist.p_star,
                "tts": layers * seconds_per_layer,
                "tts_layers": layers,
                "qaoa_p": p,
            }
            if c_star != 0.0:
                record.metrics["ar"] = approximation_ratio(dist, ctx)
            record.best_cost = c_star if dist.p_star > 0 else None
        else:
            sample = run_classical_solver(spec, inst, record.seed)
            m = sample.total_draws
            hits = sum(
                count for _, count, cost in sample.items() if cost <= c_star + 1e-9
            )
            p_star = hits / m
            record.best_cost = sample.best()[1]
            record.total_draws = m
            record.timing = asdict(sample.timing)
            record.metrics = {
                "p_star": p_star,
                "tts": tts(sample, p_star),
                "tts_oh": tts_oh(sample, p_star),
            }
            if c_star != 0.0:  # ratios are undefined on a zero optimum
                bsf = bsf_relative(sample, ctx)
                record.metrics["ar"] = approximation_ratio(sample, ctx)
                record.metrics["c"] = bsf.c
                record.metrics["relative_error"] = bsf.relative_error
    except Exception as exc:  # recorded, not raised: one bad run must not kill a sweep
        record.status = "failed"
        record.error = f"{type(exc).__name__}: {exc}"
    record.cpu_time = time.process_time() - cpu_start
    return record


def run_tts_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """Fixed-read protocol with oracle-based success probabilities."""
    tasks = [
        (inst, spec, cfg.seed, cfg.oracle_cap)
        for inst in cfg.instances
        for spec in cfg.solvers
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(_tts_task, tasks))
    else:
        records = [_tts_task(task) for task in tasks]
    _assign_groups(records, cfg.num_groups)
    return records


def _bsf_instance(args) -> list[RunRecord]:
    inst, solvers, master_seed, time_limit, max_calls = args
    iid = instance_id(inst)
    records = []
    for spec in solvers:
        record = RunRecord(
            instance_id=iid,
            instance_hash=instance_hash(inst),
            solver=spec.name,
            solver_kind=spec.kind,
            config_hash=config_hash(spec.params),
            seed=derive_seed(master_seed, iid, spec.name),
            scenario="bsf",
            size=inst.num_nodes,
        )
        cpu_start = time.process_time()
        merged: SampleSet | None = None
        calls = 0
        start = time.perf_counter()
        try:
            while calls == 0 or (
                time.perf_counter() - start < time_limit
                and (max_calls is None or calls < max_calls)
            ):
                call_seed = derive_seed(master_seed, iid, spec.name, calls)
                sample = run_classical_solver(spec, inst, call_seed)
                merged = sample if merged is None else merge(merged, sample)
                calls += 1
                if spec.kind == "exhaustive":
                    # proven optimal: terminate before the budget like a
                    # bound-certifying solver would
                    record.metrics["terminated_early"] = True
                    break
        except Exception as exc:
            record.status = "failed"
            record.error = f"{type(exc).__name__}: {exc}"
            records.append(record)
            continue
        record.calls = calls
        record.total_draws = merged.total_draws
        record.best_cost = merged.best()[1]
        record.timing = asdict(merged.timing)
        record.cpu_time = time.process_time() - cpu_start
        records.append(record)
    _attach_pooled_metrics(records)
    return records


def _attach_pooled_metrics(records: list[RunRecord]) -> None:
    """Fill relative-cost metrics against the best cost pooled per instance."""
    pool = [r.best_cost for r in records if r.status == "ok" and r.best_cost is not None]
    if not pool:
        return
    reference = min(pool)
    for record in records:
        if record.status != "ok" or record.best_cost is None:
            continue
        if abs(record.best_cost - reference) <= 1e-9:
            c_hat = 1.0
        elif reference == 0.0:
            continue
        else:
            c_hat = record.best_cost / reference
        record.metrics["c_hat"] = c_hat
        record.metrics["relative_error"] = abs(1.0 - c_hat)


def run_bsf_experiment(cfg: ExperimentConfig, max_calls: int | None = None) -> list[RunRecord]:
    """Repeat-until-time-limit protocol with pooled best-found comparison.

    The wall-clock budget is checked between calls, so an in-flight call
    always completes and at least one call runs per solver.  ``max_calls``
    optionally fixes the call count, which makes the non-timing outputs
    deterministic for a fixed seed regardless of machine speed.
    """
    tasks = [
        (inst, cfg.solvers, cfg.seed, cfg.time_limit, max_calls)
        for inst in cfg.instances
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            grouped = list(pool.map(_bsf_instance, tasks))
    else:
        grouped = [_bsf_instance(task) for task in tasks]
    records = [record for group in grouped for record in group]
    _assign_groups(records, cfg.num_groups)
    return records


def _assign_groups(records: list[RunRecord], num_groups: int | None) -> None:
    sizes_by_instance: dict[str, int] = {}
    for record in records:
        sizes_by_instance[record.instance_id] = record.size
    ids = sorted(sizes_by_instance)
    sizes = [sizes_by_instance[i] for i in ids]
    if not sizes:
        return
    if num_groups is None:
        num_groups = min(5, len(set(sizes)))
    bins = equal_frequency_bins(sizes, num_groups)
    mapping = dict(zip(ids, bins))
    for record in records:
        record.group = mapping[record.instance_id]


# ----------------------------------------------------------------------
# Grid search
# ----------------------------------------------------------------------

@dataclass
class GridResult:
    solver: str
    objective: str
    best_params: dict
    table: list[tuple[dict, float]]


def grid_search(
    spec: SolverSpec,
    grid: dict[str, list],
    tuning_instances: Sequence,
    master_seed: int = 0,
    objective: str = "tts",
    oracle_cap: int = 26,
    benchmark_ids: Iterable[str] | None = None,
) -> GridResult:
    """Exhaustive sweep of a parameter grid, scored by a mean TTS-style metric.

    Evaluates every cell of the Cartesian product on the tuning set and
    returns the cell with the smallest mean objective; ties keep the
    first-listed cell.  When ``benchmark_ids`` is given, any overlap with
    the tuning instances is a hard error (tuning and benchmarking must use
    separate datasets).
    """
    if not grid:
        raise ConfigError("parameter grid is empty")
    if objective not in ("tts", "tts_oh", "relative_error", "ar_gap"):
        raise ConfigError(f"unknown grid objective {objective!r}")
    tuning_ids = {instance_id(inst) for inst in tuning_instances}
    if benchmark_ids is not None:
        overlap = tuning_ids & set(benchmark_ids)
        if overlap:
            raise ConfigError(
                f"tuning and benchmark sets overlap on {sorted(overlap)[:5]}"
            )
    keys = list(grid)
    table: list[tuple[dict, float]] = []
    best_params: dict | None = None
    best_value = math.inf
    for combo in itertools.product(*(grid[k] for k in keys)):
        cell = dict(zip(keys, combo))
        cell_spec = SolverSpec(spec.name, spec.kind, {**spec.params, **cell})
        values = []
        for inst in tuning_instances:
            record = _tts_task((inst, cell_spec, master_seed, oracle_cap))
            if record.status != "ok":
                values.append(math.inf)
                continue
            if objective == "ar_gap":
                values.append(1.0 - record.metrics.get("ar", 0.0))
            else:
                values.append(record.metrics.get(objective, math.inf))
        mean_value = float(np.mean(values)) if values else math.inf
        table.append((cell, mean_value))
        if mean_value < best_value:
            best_value = mean_value
            best_params = cell
    if best_params is None:
        best_params = table[0][0]
    return GridResult(solver=spec.name, objective=objective,
                      best_params=best_params, table=table)


# ----------------------------------------------------------------------
# Reporting
# ----------------------------------------------------------------------

# config echoes recorded per run but meaningless to aggregate
NON_AGGREGATED_METRICS = {"qaoa_p", "terminated_early"}


def _quantiles(values: list[float]) -> tuple[float, float, float]:
    """(median, 12.5th, 87.5th percentile): the 75% interval around the median."""
    finite = [v for v in values if not math.isinf(v) and not math.isnan(v)]
    if not finite:
        return math.inf, math.inf, math.inf
    arr = np.array(finite)
    return (
        float(np.median(arr)),
        float(np.percentile(arr, 12.5)),
        float(np.percentile(arr, 87.5)),
    )


def summarize_groups(records: Sequence[RunRecord], metric: str) -> list[dict]:
    """Per (group, solver) table rows: count, median and 75% interval."""
    rows = []
    groups = sorted({r.group for r in records if r.group is not None})
    solvers = sorted({r.solver for r in records})
    for group in groups:
        members = [r for r in records if r.group == group]
        sizes = sorted({r.size for r in members})
        for solver in solvers:
            values = [
                r.metrics[metric]
                for r in members
                if r.solver == solver and r.status == "ok" and metric in r.metrics
            ]
            if not values:
                continue
            median, low, high = _quantiles(values)
            rows.append(
                {
                    "group": group,
                    "sizes": f"{sizes[0]}-{sizes[-1]}",
                    "solver": solver,
                    "count": len(values),
                    "finite": sum(1 for v in values if not math.isinf(v)),
                    "median": median,
                    "p12.5": low,
                    "p87.5": high,
                }
            )
    return rows


def fob_by_solver(records: Sequence[RunRecord]) -> dict[str, float]:
    """Fraction of instances on which each solver matched the pooled best."""
    solvers = sorted({r.solver for r in records})
    out = {}
    for solver in solvers:
        values = [
            r.metrics["c_hat"]
            for r in records
            if r.solver == solver and r.status == "ok" and "c_hat" in r.metrics
        ]
        if values:
            out[solver] = fob(values)
    return out


def _format_table(rows: list[dict]) -> str:
    if not rows:
        return "(no rows)\n"
    headers = list(rows[0])
    widths = {
        h: max(len(h), *(len(_fmt(r[h])) for r in rows)) for h in headers
    }
    lines = ["  ".join(h.ljust(widths[h]) for h in headers)]
    for row in rows:
        lines.append("  ".join(_fmt(row[h]).ljust(widths[h]) for h in headers))
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.6g}"
    return str(value)


def emit_report(records: Sequence[RunRecord], out_dir: str | Path) -> list[Path]:
    """Write records, group summaries and plot-ready data files.

    Returns the list of files written: ``records.jsonl``, ``summary.txt``,
    per-metric/per-solver ``plot_*.dat`` (size, median, 12.5th and 87.5th
    percentiles) and, for pooled scenarios, ``fob.txt``.
    """
    if not records:
        raise ValueError("no records to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    records_path = out / "records.jsonl"
    save_records(records, records_path)
    written.append(records_path)

    metrics_present = sorted(
        {m for r in records for m in r.metrics} - NON_AGGREGATED_METRICS
    )
    sections = []
    for metric in metrics_present:
        rows = summarize_groups(records, metric)
        if rows:
            sections.append(f"== {metric} ==\n" + _format_table(rows))
    fob_map = fob_by_solver(records)
    if fob_map:
        fob_rows = [{"solver": s, "fob": v} for s, v in sorted(fob_map.items())]
        sections.append("== fob ==\n" + _format_table(fob_rows))
        fob_path = out / "fob.txt"
        fob_path.write_text(_format_table(fob_rows))
        written.append(fob_path)
    summary_path = out / "summary.txt"
    summary_path.write_text("\n".join(sections) if sections else "(no metrics)\n")
    written.append(summary_path)

    solvers = sorted({r.solver for r in records})
    for metric in metrics_present:
        for solver in solvers:
            by_size: dict[int, list[float]] = {}
            for r in records:
                if r.solver == solver and r.status == "ok" and metric in r.metrics:
                    by_size.setdefault(r.size, []).append(r.metrics[metric])
            if not by_size:
                continue
            lines = ["# size median p12.5 p87.5"]
            for size in sorted(by_size):
                median, low, high = _quantiles(by_size[size])
                lines.append(f"{size} {_fmt(median)} {_fmt(low)} {_fmt(high)}")
            plot_path = out / f"plot_{metric}_{solver}.dat"
            plot_path.write_text("\n".join(lines) + "\n")
            written.append(plot_path)

    pareto_path = _emit_pareto(records, solvers, out)
    if pareto_path is not None:
        written.append(pareto_path)
    return written


def _emit_pareto(records: Sequence[RunRecord], solvers: list[str],
                 out: Path) -> Path | None:
    """Per-solver (median runtime, median relative error) points, marking
    the non-dominated ones."""
    from .metrics import pareto_front

    points = {}
    for solver in solvers:
        runtimes, errors = [], []
        for r in records:
            if r.solver != solver or r.status != "ok":
                continue
            if "relative_error" not in r.metrics:
                continue
            runtime = r.metrics.get("tts", r.timing.get("solve"))
            if runtime is None:
                continue
            runtimes.append(runtime)
            errors.append(r.metrics["relative_error"])
        if runtimes:
            med_r, _, _ = _quantiles(runtimes)
            med_e, _, _ = _quantiles(errors)
            points[solver] = (med_r, med_e)
    if len(points) < 2:
        return None
    front = set(pareto_front(list(points.values())))
    lines = ["# solver runtime relative_error on_front"]
    for solver, point in sorted(points.items()):
        lines.append(
            f"{solver} {_fmt(point[0])} {_fmt(point[1])} {int(point in front)}"
        )
    path = out / "pareto.dat"
    path.write_text("\n".join(lines) + "\n")
    return path


# ----------------------------------------------------------------------
# Instance dataset persistence
# ----------------------------------------------------------------------

def instance_to_dict(inst: MaxCutInstance | TspInstance) -> dict:
    if isinstance(inst, MaxCutInstance):
        return {
            "type": "maxcut",
            "num_nodes": inst.num_nodes,
            "edges": [[u, v, w] for u, v, w in inst.edges],
            "metadata": _sanitize(inst.metadata),
        }
    payload = {
        "type": "tsp",
        "metadata": _sanitize(inst.metadata),
    }
    if inst.coordinates is not None:
        payload["coordinates"] = inst.coordinates.tolist()
    else:
        payload["distances"] = inst.distances.tolist()
    return payload


def instance_from_dict(payload: dict):
    if payload["type"] == "maxcut":
        return MaxCutInstance(
            num_nodes=payload["num_nodes"],
            edges=tuple((int(u), int(v), float(w)) for u, v, w in payload["edges"]),
            metadata=dict(payload.get("metadata", {})),
        )
    if payload["type"] == "tsp":
        if "coordinates" in payload:
            coords = np.asarray(payload["coordinates"], dtype=np.float64)
            diff = coords[:, None, :] - coords[None, :, :]
            distances = np.sqrt((diff ** 2).sum(axis=-1))
            return TspInstance(distances=distances, coordinates=coords,
                               metadata=dict(payload.get("metadata", {})))
        return TspInstance(
            distances=np.asarray(payload["distances"], dtype=np.float64),
            metadata=dict(payload.get("metadata", {})),
        )
    raise ConfigError(f"unknown instance type {payload.get('type')!r}")


def write_instance_files(instances: Sequence, out_dir: str | Path) -> list[Path]:
    """Persist a dataset: edge lists for graphs, JSON for tour instances."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    manifest = []
    for inst in instances:
        iid = instance_id(inst)
        if isinstance(inst, MaxCutInstance):
            path = out / f"{iid}.txt"
            write_edge_list(inst, path)
        else:
            path = out / f"{iid}.json"
            path.write_text(json.dumps(instance_to_dict(inst)))
        manifest.append({"id": iid, "file": path.name,
                         "hash": instance_hash(inst)})
        written.append(path)
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))
    written.append(manifest_path)
    return written


def oracle_table(instances: Sequence, cap: int = 26, tour_cap: int = 10) -> list[dict]:
    """Exhaustive optima for a dataset (skips instances over the caps)."""
    rows = []
    for inst in instances:
        iid = instance_id(inst)
        row = {"id": iid, "hash": instance_hash(inst)}
        try:
            if isinstance(inst, MaxCutInstance):
                x, cost = maxcut_qubo(inst).argmin_exhaustive(cap=cap)
                row.update({"optimal_bitstring": x, "optimal_cost": cost})
            else:
                result = tsp_exhaustive(inst, cap=tour_cap)
                row.update(
                    {
                        "optimal_tour": list(result.tour),
                        "optimal_length": result.optimal_length,
                        "worst_length": result.worst_length,
                    }
                )
            row["status"] = "ok"
        except SizeCapError as exc:
            row["status"] = "skipped"
            row["error"] = str(exc)
        rows.append(row)
    return rows

import json

from optbench.cli import main
from optbench.harness import load_records


CONFIG = """
[experiment]
scenario = tts
seed = 5
output = {out}

[instances]
kind = regular
sizes = 6
count = 2
degree = 3

[solver:sa]
kind = sa
reads = 10
sweeps = 5

[solver:exhaustive]
kind = exhaustive
"""

BSF_CONFIG = """
[experiment]
scenario = bsf
seed = 5
time_limit = 0.05
output = {out}

[instances]
kind = regular
sizes = 8
count = 2
degree = 3

[solver:sa]
kind = sa
reads = 5
sweeps = 5

[solver:ls]
kind = ls
restarts = 5
"""

GRID_CONFIG = """
[experiment]
scenario = tts
seed = 2

[instances]
kind = regular
sizes = 6
count = 2
degree = 3

[solver:sa]
kind = sa
reads = 10

[grid:sa]
sweeps = 2, 5
"""


def write_config(tmp_path, template):
    out = tmp_path / "out"
    path = tmp_path / "bench.cfg"
    path.write_text(template.format(out=out))
    return path, out


def test_run_tts_and_report(tmp_path, capsys):
    cfg, out = write_config(tmp_path, CONFIG)
    assert main(["run", "--config", str(cfg)]) == 0
    records = load_records(out / "records.jsonl")
    assert len(records) == 4  # 2 instances x 2 solvers
    assert (out / "summary.txt").exists()
    report_dir = tmp_path / "report2"
    assert main(["report", "--records", str(out / "records.jsonl"),
                 "--out", str(report_dir)]) == 0
    assert (report_dir / "summary.txt").exists()


def test_run_bsf(tmp_path):
    cfg, out = write_config(tmp_path, BSF_CONFIG)
    assert main(["run", "--config", str(cfg)]) == 0
    records = load_records(out / "records.jsonl")
    assert all(r.scenario == "bsf" for r in records)
    assert (out / "fob.txt").exists()


def test_generate_and_oracle(tmp_path):
    cfg, _ = write_config(tmp_path, CONFIG)
    data_dir = tmp_path / "data"
    assert main(["generate", "--config", str(cfg), "--out", str(data_dir)]) == 0
    manifest = json.loads((data_dir / "manifest.json").read_text())
    assert len(manifest) == 2
    oracle_dir = tmp_path / "oracle"
    assert main(["oracle", "--config", str(cfg), "--out", str(oracle_dir)]) == 0
    rows = [json.loads(line) for line in (oracle_dir / "oracle.jsonl").read_text().splitlines()]
    assert all(row["status"] == "ok" for row in rows)


def test_tune(tmp_path):
    path = tmp_path / "bench.cfg"
    path.write_text(GRID_CONFIG)
    out = tmp_path / "tuned"
    assert main(["tune", "--config", str(path), "--out", str(out)]) == 0
    best = json.loads((out / "best_params.json").read_text())
    assert best["sa"]["sweeps"] in (2, 5)
    assert (out / "grid_sa.txt").exists()


def test_missing_config_is_config_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 1


def test_bad_arguments_exit_one():
    assert main(["run"]) == 1


def test_jobs_flag_parallel_run(tmp_path):
    cfg, out = write_config(tmp_path, CONFIG)
    assert main(["run", "--config", str(cfg), "--jobs", "2"]) == 0
    assert len(load_records(out / "records.jsonl")) == 4


def test_runtime_failure_exits_two(tmp_path):
    missing = tmp_path / "missing.jsonl"
    assert main(["report", "--records", str(missing), "--out", str(tmp_path)]) == 2

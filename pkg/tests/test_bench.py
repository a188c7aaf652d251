import json

import pytest

from wattflow.bench import (
    ExperimentConfig,
    ExperimentError,
    ExperimentReport,
    measure_worker_count,
    run_experiment,
)


class TestConfig:
    def test_defaults_are_valid(self):
        cfg = ExperimentConfig()
        assert cfg.offered_per_second == 1000.0

    def test_offered_load_matches_parameters(self):
        cfg = ExperimentConfig(bridges=20, sensorsPerBridge=1000, periodMs=1000)
        assert cfg.offered_per_second == 20_000

    def test_worker_counts_must_ascend(self):
        with pytest.raises(ExperimentError):
            ExperimentConfig(workerCounts=[4, 2, 1])

    def test_rejects_nonpositive(self):
        with pytest.raises(ExperimentError):
            ExperimentConfig(bridges=0)

    def test_from_json(self, tmp_path):
        path = tmp_path / "bench.json"
        path.write_text(json.dumps({"bridges": 3, "workerCounts": [1, 2], "repetitions": 4}))
        cfg = ExperimentConfig.from_json(path)
        assert cfg.bridges == 3
        assert cfg.workerCounts == [1, 2]
        assert cfg.repetitions == 4


class TestReport:
    def test_csv_and_summary_files(self, tmp_path):
        report = ExperimentReport(
            offered_per_second=1000.0,
            rows=[
                {"workers": 1, "repetition": 0, "records_per_sec": 500.0},
                {"workers": 1, "repetition": 1, "records_per_sec": 520.0},
            ],
            summary={1: {"median": 500.0, "q1": 500.0, "q3": 520.0, "iqr": 20.0, "samples": 2}},
            environment={"cpu_count": 2},
        )
        out = tmp_path / "report.csv"
        report.write_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "workers,repetition,records_per_sec"
        assert len(lines) == 3
        summary = json.loads((tmp_path / "report.summary.json").read_text())
        assert summary["summary"]["1"]["median"] == 500.0
        assert summary["offered_per_second"] == 1000.0


@pytest.mark.slow
class TestSmallExperiment:
    def test_low_load_matches_offered_and_conserves(self, tmp_path):
        """Below capacity, every count processes ~the offered load; after the
        feed stops and the backlog drains, processed equals published."""
        cfg = ExperimentConfig(
            bridges=2,
            sensorsPerBridge=15,
            periodMs=100,
            partitions=4,
            workerCounts=[1],
            repetitions=3,
            measureWindowSec=1.5,
            warmupSec=2.5,
        )
        result = measure_worker_count(cfg, tmp_path / "run", 2, drain=True)
        offered = cfg.offered_per_second
        for rate in result.samples:
            assert abs(rate - offered) / offered < 0.05
        assert result.processed_after_drain == result.published

    def test_run_experiment_report_shape(self, tmp_path):
        cfg = ExperimentConfig(
            bridges=1,
            sensorsPerBridge=10,
            periodMs=100,
            partitions=2,
            workerCounts=[1, 2],
            repetitions=3,
            measureWindowSec=1.0,
            warmupSec=2.0,
        )
        report = run_experiment(cfg, tmp_path / "exp", tmp_path / "report.csv")
        assert set(report.summary) == {1, 2}
        for wc, entry in report.summary.items():
            samples = [r["records_per_sec"] for r in report.rows if r["workers"] == wc]
            assert len(samples) == 3
            assert entry["median"] in samples  # order statistic, not an interpolation
            assert entry["iqr"] >= 0
        assert (tmp_path / "report.summary.json").exists()

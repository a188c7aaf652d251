"""Scalability harness: offered load vs. processed records/s per worker count.

For each worker count the harness builds a fresh log directory, registers a
hierarchy matching the simulated sensors, spawns that many aggregator worker
processes plus a simulator process, lets the pipeline warm up past the
rebalance transient, and then samples every worker's processed-records
counter at measurement window edges. Repetitions are consecutive windows of
one continuous run; the report carries their median (a true order statistic)
and interquartile range.

Absolute throughput depends entirely on the host; the experiment validates
the scaling shape, not any particular number.
"""

from __future__ import annotations

import csv
import json
import os
import shutil
import signal
import socket
import statistics
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import httpx

from ..aggregator.metrics import parse_metrics
from ..aggregator.worker import GROUP_ID
from ..bridge.simulator import sim_hierarchy
from ..msglog import (
    TOPIC_AGGREGATED,
    TOPIC_GROUPED,
    TOPIC_RECORDS,
    Broker,
    group_lag,
    group_members,
)
from ..registry import Registry


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    bridges: int = 2
    sensorsPerBridge: int = 50
    periodMs: int = 100
    partitions: int = 8
    workerCounts: list[int] = field(default_factory=lambda: [1, 2, 4])
    repetitions: int = 10
    measureWindowSec: float = 3.0
    warmupSec: float = 10.0
    seed: int = 1

    def __post_init__(self):
        if min(self.bridges, self.sensorsPerBridge, self.periodMs, self.partitions,
               self.repetitions) < 1 or self.measureWindowSec <= 0:
            raise ExperimentError("all experiment parameters must be >= 1")
        if self.workerCounts != sorted(self.workerCounts) or min(self.workerCounts) < 1:
            raise ExperimentError("workerCounts must be ascending and >= 1")

    @property
    def offered_per_second(self) -> float:
        return self.bridges * self.sensorsPerBridge * 1000.0 / self.periodMs

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "rb") as f:
            return cls(**json.loads(f.read()))


@dataclass
class ExperimentReport:
    offered_per_second: float
    rows: list[dict]  # workers, repetition, records_per_sec
    summary: dict[int, dict]  # workers -> {median, q1, q3, iqr, samples}
    environment: dict

    def write_csv(self, path: str | Path):
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=["workers", "repetition", "records_per_sec"])
            writer.writeheader()
            writer.writerows(self.rows)
        summary_path = Path(path).with_suffix(".summary.json")
        summary_path.write_text(
            json.dumps(
                {
                    "offered_per_second": self.offered_per_second,
                    "environment": self.environment,
                    "summary": {str(k): v for k, v in self.summary.items()},
                },
                indent=2,
            )
        )


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _terminate(proc: subprocess.Popen, timeout: float = 10.0):
    if proc.poll() is None:
        proc.send_signal(signal.SIGTERM)
        try:
            proc.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait(timeout=timeout)


class WorkerProcs:
    """Spawned aggregator workers plus their metrics scrape targets."""

    def __init__(self, log_dir: Path, store_dir: Path, count: int, idle_sleep: float):
        self.ports = [free_port() for _ in range(count)]
        self.procs = [
            subprocess.Popen(
                [
                    sys.executable, "-m", "wattflow", "aggregator",
                    "--log-dir", str(log_dir),
                    "--store-dir", str(store_dir),
                    "--instance-id", f"bench-w{i:02d}",
                    "--metrics-port", str(port),
                    "--idle-sleep", str(idle_sleep),
                ],
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
            )
            for i, port in enumerate(self.ports)
        ]

    def processed_total(self, client: httpx.Client) -> int:
        total = 0
        for port in self.ports:
            text = client.get(f"http://127.0.0.1:{port}/metrics").text
            total += parse_metrics(text)["processed_records_total"]
        return total

    def wait_ready(self, broker: Broker, timeout_s: float = 30.0, settle_s: float = 1.5):
        client = httpx.Client(timeout=2.0)
        deadline = time.monotonic() + timeout_s
        joined = False
        try:
            while time.monotonic() < deadline:
                for proc in self.procs:
                    if proc.poll() is not None:
                        raise ExperimentError(
                            f"worker exited with {proc.returncode} before joining"
                        )
                up = 0
                for port in self.ports:
                    try:
                        client.get(f"http://127.0.0.1:{port}/healthz")
                        up += 1
                    except httpx.HTTPError:
                        break
                if up == len(self.ports) and len(group_members(broker, GROUP_ID)) == len(self.procs):
                    joined = True
                    break
                time.sleep(0.2)
        finally:
            client.close()
        if not joined:
            raise ExperimentError(
                f"{len(self.procs)} workers did not join group {GROUP_ID!r} within {timeout_s}s"
            )
        # settle: every member must observe the final assignment (their next
        # group sync) before load starts, or fenced commits force redelivery
        time.sleep(settle_s)

    def stop(self):
        for proc in self.procs:
            _terminate(proc)


def _start_simulator(cfg: ExperimentConfig, log_dir: Path) -> subprocess.Popen:
    return subprocess.Popen(
        [
            sys.executable, "-m", "wattflow", "simulate",
            "--log-dir", str(log_dir),
            "--bridges", str(cfg.bridges),
            "--sensors", str(cfg.sensorsPerBridge),
            "--period-ms", str(cfg.periodMs),
            "--seed", str(cfg.seed),
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )


def _prepare_run_dir(cfg: ExperimentConfig, run_dir: Path) -> tuple[Path, Path]:
    if run_dir.exists():
        shutil.rmtree(run_dir)
    log_dir = run_dir / "log"
    store_dir = run_dir / "store"
    broker = Broker(log_dir)
    for topic in (TOPIC_RECORDS, TOPIC_GROUPED, TOPIC_AGGREGATED):
        broker.create_topic(topic, cfg.partitions)
    registry = Registry(run_dir / "hierarchy.json", broker)
    registry.put_hierarchy(sim_hierarchy(cfg.bridges, cfg.sensorsPerBridge))
    broker.close()
    return log_dir, store_dir


@dataclass
class RunResult:
    samples: list[float]
    published: int | None = None
    processed_after_drain: int | None = None


def measure_worker_count(
    cfg: ExperimentConfig,
    run_dir: Path,
    workers: int,
    idle_sleep: float = 0.005,
    drain: bool = False,
    drain_timeout_s: float = 120.0,
) -> RunResult:
    """One continuous run: warmup, then ``repetitions`` measurement windows.

    With ``drain`` the simulator is stopped after the last window and the
    run waits until the group has committed everything, so conservation
    (processed == published, absent crashes) can be asserted.
    """
    log_dir, store_dir = _prepare_run_dir(cfg, run_dir)
    broker = Broker(log_dir)
    procs = WorkerProcs(log_dir, store_dir, workers, idle_sleep)
    sim = None
    result = RunResult(samples=[])
    try:
        procs.wait_ready(broker)
        sim = _start_simulator(cfg, log_dir)
        time.sleep(cfg.warmupSec)
        client = httpx.Client(timeout=2.0)
        try:
            last = procs.processed_total(client)
            last_t = time.monotonic()
            for _ in range(cfg.repetitions):
                time.sleep(cfg.measureWindowSec)
                now = procs.processed_total(client)
                now_t = time.monotonic()
                result.samples.append((now - last) / (now_t - last_t))
                last, last_t = now, now_t
            # conservation while running: never more processed than published
            published_now = sum(broker.end_offsets(TOPIC_RECORDS).values())
            if now > published_now:
                raise ExperimentError(
                    f"processed {now} exceeds published {published_now} without crashes"
                )
            if drain:
                _terminate(sim)
                sim = None
                deadline = time.monotonic() + drain_timeout_s
                while group_lag(broker, GROUP_ID, [TOPIC_RECORDS, TOPIC_GROUPED]) > 0:
                    if time.monotonic() > deadline:
                        raise ExperimentError("backlog did not drain in time")
                    time.sleep(0.2)
                result.published = sum(broker.end_offsets(TOPIC_RECORDS).values())
                result.processed_after_drain = procs.processed_total(client)
        finally:
            client.close()
    finally:
        if sim is not None:
            _terminate(sim)
        procs.stop()
        broker.close()
    return result


def run_experiment(
    cfg: ExperimentConfig, workdir: str | Path, out_csv: str | Path | None = None
) -> ExperimentReport:
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    summary: dict[int, dict] = {}
    for wc in cfg.workerCounts:
        samples = measure_worker_count(cfg, workdir / f"workers-{wc}", wc).samples
        for i, rate in enumerate(samples):
            rows.append({"workers": wc, "repetition": i, "records_per_sec": round(rate, 3)})
        median = statistics.median_low(samples)
        assert median in samples  # self-audit: the median is an order statistic
        q1, _, q3 = statistics.quantiles(samples, n=4, method="inclusive")
        summary[wc] = {
            "median": round(median, 3),
            "q1": round(q1, 3),
            "q3": round(q3, 3),
            "iqr": round(q3 - q1, 3),
            "samples": len(samples),
        }
    report = ExperimentReport(
        offered_per_second=cfg.offered_per_second,
        rows=rows,
        summary=summary,
        environment={
            "cpu_count": os.cpu_count(),
            "python": sys.version.split()[0],
            "config": asdict(cfg),
        },
    )
    if out_csv is not None:
        report.write_csv(out_csv)
    return report


def calibrate_capacity(
    workdir: str | Path,
    partitions: int = 8,
    window_sec: float = 3.0,
    warmup_sec: float = 4.0,
    start_offered: float = 2000.0,
    max_offered: float = 64000.0,
) -> float:
    """Median records/s one worker sustains when offered more than it can take.

    Doubles the offered load until the worker stops keeping up, then returns
    the measured ceiling.
    """
    offered = start_offered
    capacity = 0.0
    while True:
        sensors = max(1, int(offered / 20))
        cfg = ExperimentConfig(
            bridges=2,
            sensorsPerBridge=sensors,
            periodMs=100,
            partitions=partitions,
            workerCounts=[1],
            repetitions=3,
            measureWindowSec=window_sec,
            warmupSec=warmup_sec,
        )
        samples = measure_worker_count(cfg, Path(workdir) / "calibrate", 1).samples
        capacity = statistics.median_low(samples)
        if capacity < cfg.offered_per_second * 0.8 or offered >= max_offered:
            return capacity
        offered *= 2

"""wattflow command line: service launchers and thin HTTP clients."""

from __future__ import annotations

import json
import signal
import threading
from pathlib import Path

import click

from .msglog import (
    TOPIC_AGGREGATED,
    TOPIC_CONFIGURATION,
    TOPIC_GROUPED,
    TOPIC_RECORDS,
    Broker,
)

DATA_TOPICS = (TOPIC_RECORDS, TOPIC_GROUPED, TOPIC_AGGREGATED)

log_dir_option = click.option(
    "--log-dir",
    envvar="WATTFLOW_LOG_DIR",
    type=click.Path(path_type=Path),
    default=Path("./wattflow-data/log"),
    show_default=True,
    help="Message log directory (env WATTFLOW_LOG_DIR).",
)


@click.group()
@click.version_option(package_name="wattflow")
def main():
    """Scalable power-consumption monitoring."""


@main.command("init-topics")
@log_dir_option
@click.option("--partitions", default=8, show_default=True)
def init_topics(log_dir: Path, partitions: int):
    """Create the platform topics (idempotent for matching partition counts)."""
    broker = Broker(log_dir)
    for topic in DATA_TOPICS:
        broker.ensure_topic(topic, partitions)
    broker.ensure_topic(TOPIC_CONFIGURATION, 1)
    click.echo(f"topics ready in {log_dir}: {broker.topics()}")


@main.command()
@log_dir_option
@click.option("--bridges", default=1, show_default=True)
@click.option("--sensors", default=1, show_default=True, help="Sensors per bridge.")
@click.option("--period-ms", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--duration", type=float, default=None, help="Seconds to run (default: forever).")
def simulate(log_dir: Path, bridges: int, sensors: int, period_ms: int, seed: int, duration):
    """Generate sensor load against the records topic."""
    from .bridge.simulator import Simulator

    broker = Broker(log_dir)
    sim = Simulator(
        broker, bridges=bridges, sensors_per_bridge=sensors, period_ms=period_ms, seed=seed
    )
    signal.signal(signal.SIGTERM, lambda *_: sim.stop())
    signal.signal(signal.SIGINT, lambda *_: sim.stop())
    click.echo(
        f"simulating {bridges}x{sensors} sensors, {sim.offered_per_second:.0f} records/s offered"
    )
    sim.run(duration_s=duration)
    click.echo(f"published {sim.published} records ({sim.skipped_ticks} ticks skipped)")


@main.command()
@log_dir_option
@click.option("--store-dir", type=click.Path(path_type=Path),
              default=Path("./wattflow-data/store"), show_default=True)
@click.option("--instance-id", required=True)
@click.option("--metrics-port", default=0, show_default=True, help="0 picks a free port.")
@click.option("--poll-max", default=2048, show_default=True)
@click.option("--idle-sleep", default=0.02, show_default=True)
@click.option("--session-timeout-ms", default=3000, show_default=True)
def aggregator(log_dir, store_dir, instance_id, metrics_port, poll_max, idle_sleep,
               session_timeout_ms):
    """Run one aggregation worker (join the 'aggregator' consumer group)."""
    from .aggregator import AggregatorWorker, create_metrics_app
    from .history.store import SeriesStore
    from .serve import serve_in_thread

    broker = Broker(log_dir)
    store = SeriesStore(store_dir)
    worker = AggregatorWorker(
        broker,
        store,
        instance_id,
        poll_max=poll_max,
        idle_sleep=idle_sleep,
        session_timeout_ms=session_timeout_ms,
    )
    metrics = serve_in_thread(
        create_metrics_app(worker.counters, {"instance": instance_id}), port=metrics_port
    )
    click.echo(f"worker {instance_id}: metrics on {metrics.url}/metrics")
    signal.signal(signal.SIGTERM, lambda *_: worker._stop.set())
    signal.signal(signal.SIGINT, lambda *_: worker._stop.set())
    worker.run()
    metrics.stop()


@main.command()
@log_dir_option
@click.option("--listen", default="127.0.0.1:8010", show_default=True)
@click.option("--store", "store_path", type=click.Path(path_type=Path),
              default=Path("./wattflow-data/hierarchy.json"), show_default=True)
def registry(log_dir, listen, store_path):
    """Serve the configuration service (sensor hierarchy API)."""
    import uvicorn

    from .registry import Registry
    from .registry.api import create_app

    broker = Broker(log_dir)
    host, port = _split_listen(listen)
    uvicorn.run(create_app(Registry(store_path, broker)), host=host, port=port,
                log_level="warning")


@main.command("history-api")
@log_dir_option
@click.option("--listen", default="127.0.0.1:8020", show_default=True)
@click.option("--store-dir", type=click.Path(path_type=Path),
              default=Path("./wattflow-data/store"), show_default=True)
def history_api(log_dir, listen, store_dir):
    """Serve time-series queries over the history store."""
    import uvicorn

    from .history.api import create_app
    from .history.store import SeriesStore
    from .registry.watch import ConfigWatcher

    broker = Broker(log_dir)
    host, port = _split_listen(listen)
    uvicorn.run(
        create_app(SeriesStore(store_dir), ConfigWatcher(broker)),
        host=host, port=port, log_level="warning",
    )


@main.command()
@log_dir_option
@click.option("--listen", default="127.0.0.1:8030", show_default=True)
def bridge(log_dir, listen):
    """Serve the PDU push-ingestion bridge."""
    import uvicorn

    from .bridge.pdu import create_app

    broker = Broker(log_dir)
    host, port = _split_listen(listen)
    uvicorn.run(create_app(broker), host=host, port=port, log_level="warning")


@main.command()
@click.option("--listen", default="127.0.0.1:8000", show_default=True)
@click.option("--static-root", type=click.Path(path_type=Path), default=None)
@click.option("--upstream", "upstreams", multiple=True,
              help="service=addr[,addr...] (repeatable), e.g. history=http://127.0.0.1:8020")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="JSON config with listen/staticRoot/upstreams keys.")
def gateway(listen, static_root, upstreams, config_path):
    """Serve the dashboard bundle and forward API calls to the services."""
    import uvicorn

    from .gateway import create_app, load_config

    table: dict[str, list[str]] = {}
    if config_path:
        cfg = load_config(config_path)
        listen = cfg.get("listen", listen)
        static_root = cfg.get("staticRoot", static_root)
        table.update({k: list(v) for k, v in cfg.get("upstreams", {}).items()})
    for entry in upstreams:
        service, _, addresses = entry.partition("=")
        if not addresses:
            raise click.BadParameter(f"expected service=addr[,addr...], got {entry!r}")
        table[service] = [a for a in addresses.split(",") if a]
    host, port = _split_listen(listen)
    uvicorn.run(create_app(table, static_root=static_root), host=host, port=port,
                log_level="warning")


@main.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
@click.option("--out", "out_csv", type=click.Path(path_type=Path), required=True)
@click.option("--workdir", type=click.Path(path_type=Path),
              default=Path("./wattflow-bench"), show_default=True)
def bench(config_path, out_csv, workdir):
    """Run the scalability experiment and write CSV + summary JSON."""
    from .bench import ExperimentConfig, run_experiment

    cfg = ExperimentConfig.from_json(config_path)
    click.echo(f"offered load: {cfg.offered_per_second:.0f} records/s; workers {cfg.workerCounts}")
    report = run_experiment(cfg, workdir, out_csv)
    for wc, entry in report.summary.items():
        click.echo(
            f"workers={wc}: median {entry['median']:.0f} rec/s, IQR {entry['iqr']:.0f}"
        )
    click.echo(f"report: {out_csv} and {Path(out_csv).with_suffix('.summary.json')}")


@main.group()
def hierarchy():
    """Thin client for the hierarchy API (via gateway or registry)."""


@hierarchy.command("get")
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
def hierarchy_get(url):
    import httpx

    r = httpx.get(url.rstrip("/") + "/api/hierarchy", timeout=10)
    click.echo(json.dumps(r.json(), indent=2))


@hierarchy.command("put")
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.argument("doc_file", type=click.File("rb"))
def hierarchy_put(url, doc_file):
    import httpx

    doc = json.loads(doc_file.read())
    r = httpx.put(url.rstrip("/") + "/api/hierarchy", json=doc, timeout=10)
    click.echo(f"{r.status_code} {r.text}")


@main.command()
@click.option("--workdir", type=click.Path(path_type=Path),
              default=Path("./wattflow-data"), show_default=True)
@click.option("--listen", default="127.0.0.1:8000", show_default=True)
@click.option("--static-root", type=click.Path(path_type=Path), default=None)
@click.option("--partitions", default=8, show_default=True)
@click.option("--workers", default=2, show_default=True)
@click.option("--bridges", default=2, show_default=True)
@click.option("--sensors", default=25, show_default=True)
@click.option("--period-ms", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def up(workdir, listen, static_root, partitions, workers, bridges, sensors, period_ms, seed):
    """Run the whole stack in one process: demo and development mode."""
    import uvicorn

    from .aggregator import AggregatorWorker
    from .bridge.pdu import create_app as bridge_app
    from .bridge.simulator import Simulator, sim_hierarchy
    from .gateway import create_app as gateway_app
    from .history.api import create_app as history_app
    from .history.store import SeriesStore
    from .registry import ConfigWatcher, Registry
    from .registry.api import create_app as registry_app
    from .serve import serve_in_thread

    workdir = Path(workdir)
    broker = Broker(workdir / "log")
    for topic in DATA_TOPICS:
        broker.ensure_topic(topic, partitions)
    broker.ensure_topic(TOPIC_CONFIGURATION, 1)
    store = SeriesStore(workdir / "store")

    registry_svc = Registry(workdir / "hierarchy.json", broker)
    if registry_svc.get_hierarchy().version == 1:
        registry_svc.put_hierarchy(sim_hierarchy(bridges, sensors))

    registry_srv = serve_in_thread(registry_app(registry_svc))
    history_srv = serve_in_thread(history_app(store, ConfigWatcher(broker)))
    bridge_srv = serve_in_thread(bridge_app(broker))

    worker_threads = [
        AggregatorWorker(Broker(workdir / "log"), store, f"up-w{i}") for i in range(workers)
    ]
    for w in worker_threads:
        w.start_thread()

    sim = Simulator(broker, bridges=bridges, sensors_per_bridge=sensors,
                    period_ms=period_ms, seed=seed)
    sim_thread = threading.Thread(target=sim.run, daemon=True)
    sim_thread.start()

    click.echo(f"registry  : {registry_srv.url}/api/hierarchy")
    click.echo(f"history   : {history_srv.url}/api/power/root/latest")
    click.echo(f"pdu bridge: {bridge_srv.url}/ingest/pdu")
    click.echo(f"simulator : {sim.offered_per_second:.0f} records/s offered")

    host, port = _split_listen(listen)
    click.echo(f"gateway   : http://{host}:{port}/ (Ctrl-C to stop)")
    try:
        uvicorn.run(
            gateway_app(
                {"registry": [registry_srv.url], "history": [history_srv.url]},
                static_root=static_root,
            ),
            host=host, port=port, log_level="warning",
        )
    finally:
        sim.stop()
        for w in worker_threads:
            w.stop()
        for srv in (registry_srv, history_srv, bridge_srv):
            srv.stop()


def _split_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    return host or "127.0.0.1", int(port)


if __name__ == "__main__":
    main()

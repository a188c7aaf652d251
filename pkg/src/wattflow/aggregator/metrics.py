"""Worker counters and their plain-text metrics endpoint."""

from __future__ import annotations

from dataclasses import dataclass, fields

from fastapi import FastAPI
from fastapi.responses import PlainTextResponse


@dataclass
class Counters:
    processed_records_total: int = 0
    unknown_sensor_records: int = 0
    late_records: int = 0
    emitted_aggregates_total: int = 0
    grouped_records_processed: int = 0
    stale_grouped_records: int = 0

    def render(self) -> str:
        return "".join(f"{f.name} {getattr(self, f.name)}\n" for f in fields(self))


def parse_metrics(text: str) -> dict[str, int]:
    out: dict[str, int] = {}
    for line in text.splitlines():
        name, _, value = line.partition(" ")
        if name and value:
            out[name] = int(value)
    return out


def create_metrics_app(counters: Counters, info: dict | None = None) -> FastAPI:
    app = FastAPI(title="wattflow worker metrics", docs_url=None, redoc_url=None)

    @app.get("/metrics", response_class=PlainTextResponse)
    def metrics() -> str:
        return counters.render()

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", **(info or {})}

    return app

"""Query endpoints behind every dashboard visualization.

Sensor identifiers may contain slashes (``pdu-1/outlet-3``), so the id path
parameter is greedy and the operation suffix routes are declared first.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..registry.watch import ConfigWatcher
from ..records import record_to_dict
from .store import QueryError, SeriesStore, _power_value


class TrendResult(BaseModel):
    windowMs: int
    ratio: float | None


class DistributionEntry(BaseModel):
    childId: str
    valueInW: float
    share: float


def _now_ms() -> int:
    return time.time_ns() // 1_000_000


def create_app(store: SeriesStore, watcher: ConfigWatcher | None = None) -> FastAPI:
    app = FastAPI(title="wattflow history", docs_url=None, redoc_url=None)

    @app.exception_handler(QueryError)
    def bad_query(_, exc: QueryError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.get("/api/power/{sensor_id:path}/stats")
    def stats(
        sensor_id: str,
        from_ms: int = Query(alias="from"),
        to_ms: int = Query(alias="to"),
    ) -> dict:
        return store.stats(sensor_id, from_ms, to_ms).to_dict()

    @app.get("/api/power/{sensor_id:path}/trend", response_model=TrendResult)
    def trend(
        sensor_id: str,
        window_ms: int = Query(alias="windowMs"),
        now: int | None = Query(default=None),
    ):
        ratio = store.trend(sensor_id, window_ms, now if now is not None else _now_ms())
        return TrendResult(windowMs=window_ms, ratio=ratio)

    @app.get("/api/power/{sensor_id:path}/histogram")
    def histogram(
        sensor_id: str,
        from_ms: int = Query(alias="from"),
        to_ms: int = Query(alias="to"),
        bins: int = Query(default=10),
    ) -> list:
        return [
            {"lower": lo, "upper": hi, "count": c}
            for lo, hi, c in store.histogram(sensor_id, from_ms, to_ms, bins)
        ]

    @app.get("/api/power/{sensor_id:path}/distribution")
    def distribution(sensor_id: str, at: int | None = Query(default=None)):
        if watcher is None:
            return JSONResponse(status_code=503, content={"error": "no hierarchy source"})
        watcher.refresh()
        hierarchy = watcher.current()
        if sensor_id not in hierarchy:
            return JSONResponse(status_code=404, content={"error": f"unknown sensor {sensor_id!r}"})
        if not hierarchy.is_group(sensor_id):
            return JSONResponse(
                status_code=422,
                content={"error": f"{sensor_id!r} is a machine sensor, not a group"},
            )
        at_ms = at if at is not None else _now_ms()
        entries = []
        for child in hierarchy.children(sensor_id):
            rec = store.latest(child, at_ms)
            if rec is not None:
                entries.append((child, _power_value(rec)))
        total = sum(v for _, v in entries)
        return [
            DistributionEntry(
                childId=child, valueInW=v, share=(v / total) if total != 0 else 0.0
            )
            for child, v in entries
        ]

    @app.get("/api/power/{sensor_id:path}/latest")
    def latest(sensor_id: str, at: int | None = Query(default=None)):
        rec = store.latest(sensor_id, at)
        return record_to_dict(rec) if rec is not None else None

    @app.get("/api/power/{sensor_id:path}")
    def power_range(
        sensor_id: str,
        from_ms: int = Query(alias="from"),
        to_ms: int = Query(alias="to"),
    ) -> list:
        return [record_to_dict(r) for r in store.range(sensor_id, from_ms, to_ms)]

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    return app

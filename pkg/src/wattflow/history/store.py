"""Time-series persistence: one append-only series per sensor, upsert by timestamp.

Appends are frames of ``(timestamp key, canonical record bytes)`` reusing the
message-log file primitive, so the store inherits its crash safety and its
multi-process behavior. Re-inserting a (sensor, timestamp) pair overwrites at
read time — the last appended frame wins — which makes at-least-once replay
invisible to every query.
"""

from __future__ import annotations

import hashlib
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

from ..msglog.framelog import FrameLog
from ..records import Record, decode_record, encode_record

_TS = struct.Struct(">q")


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class StatsSummary:
    """Fold over one sensor's records in a time interval.

    With no records, the sum is zero and the remaining statistics are
    undefined (None).
    """

    count: int
    sumInW: float
    averageInW: float | None
    minInW: float | None
    maxInW: float | None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "sumInW": self.sumInW,
            "averageInW": self.averageInW,
            "minInW": self.minInW,
            "maxInW": self.maxInW,
        }


def _series_filename(sensor_id: str) -> str:
    safe = quote(sensor_id, safe="")
    if len(safe) > 180:  # keep under filesystem name limits
        safe = safe[:140] + "-" + hashlib.sha256(sensor_id.encode()).hexdigest()[:32]
    return safe + ".log"


class _Series:
    __slots__ = ("log", "by_ts", "consumed", "pos_hint", "max_ts", "lock")

    def __init__(self, path: Path):
        self.log = FrameLog(path)
        self.by_ts: dict[int, bytes] = {}
        self.consumed = 0
        self.pos_hint: int | None = None
        self.max_ts: int | None = None
        self.lock = threading.Lock()

    def refresh(self):
        while True:
            frames, pos = self.log.read_from(self.consumed, 4096, self.pos_hint)
            if not frames:
                return
            self.pos_hint = pos
            self.consumed = frames[-1][0] + 1
            for _, key, value in frames:
                ts = _TS.unpack(key)[0]
                self.by_ts[ts] = value
                if self.max_ts is None or ts > self.max_ts:
                    self.max_ts = ts


class SeriesStore:
    """Per-sensor record series with range scans and statistics."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._series: dict[str, _Series] = {}
        self._mutex = threading.Lock()

    def close(self):
        with self._mutex:
            for s in self._series.values():
                s.log.close()
            self._series.clear()

    def _series_for(self, sensor_id: str) -> _Series:
        s = self._series.get(sensor_id)
        if s is None:
            with self._mutex:
                s = self._series.get(sensor_id)
                if s is None:
                    s = _Series(self.root / _series_filename(sensor_id))
                    self._series[sensor_id] = s
        return s

    # writes

    def append(self, record: Record):
        """Store one record; idempotent per (identifier, timestamp)."""
        self.append_encoded(record.identifier, record.timestamp, encode_record(record))

    def append_encoded(self, sensor_id: str, timestamp: int, payload: bytes):
        self._series_for(sensor_id).log.append(_TS.pack(timestamp), payload)

    def append_encoded_many(self, items: list[tuple[str, int, bytes]]):
        by_sensor: dict[str, list[tuple[bytes, bytes]]] = {}
        for sensor_id, ts, payload in items:
            by_sensor.setdefault(sensor_id, []).append((_TS.pack(ts), payload))
        for sensor_id, batch in by_sensor.items():
            self._series_for(sensor_id).log.append_batch(batch)

    # reads

    def _snapshot(self, sensor_id: str) -> _Series:
        s = self._series_for(sensor_id)
        with s.lock:
            s.refresh()
        return s

    def timestamps(self, sensor_id: str) -> list[int]:
        return sorted(self._snapshot(sensor_id).by_ts)

    def range(self, sensor_id: str, from_ms: int, to_ms: int) -> list[Record]:
        """All records with from <= timestamp < to, ascending."""
        if from_ms > to_ms:
            raise QueryError(f"range start {from_ms} is after end {to_ms}")
        s = self._snapshot(sensor_id)
        return [
            decode_record(s.by_ts[ts])
            for ts in sorted(t for t in s.by_ts if from_ms <= t < to_ms)
        ]

    def _values_in(self, sensor_id: str, from_ms: int, to_ms: int) -> list[float]:
        if from_ms > to_ms:
            raise QueryError(f"range start {from_ms} is after end {to_ms}")
        s = self._snapshot(sensor_id)
        out = []
        for ts, payload in s.by_ts.items():
            if from_ms <= ts < to_ms:
                out.append(_power_value(decode_record(payload)))
        return out

    def stats(self, sensor_id: str, from_ms: int, to_ms: int) -> StatsSummary:
        values = self._values_in(sensor_id, from_ms, to_ms)
        if not values:
            return StatsSummary(0, 0.0, None, None, None)
        total = sum(values)
        return StatsSummary(len(values), total, total / len(values), min(values), max(values))

    def trend(self, sensor_id: str, window_ms: int, now_ms: int) -> float | None:
        """Recent-window average over previous-window average; None if undefined.

        Ratio > 1 means consumption is rising.
        """
        if window_ms <= 0:
            raise QueryError(f"window must be positive, got {window_ms}")
        recent = self.stats(sensor_id, now_ms - window_ms, now_ms)
        previous = self.stats(sensor_id, now_ms - 2 * window_ms, now_ms - window_ms)
        if recent.count == 0 or previous.count == 0 or previous.averageInW == 0:
            return None
        return recent.averageInW / previous.averageInW

    def histogram(
        self, sensor_id: str, from_ms: int, to_ms: int, bins: int
    ) -> list[tuple[float, float, int]]:
        """Equal-width buckets over [min, max]; the max lands in the last bucket."""
        if bins < 1:
            raise QueryError(f"bins must be >= 1, got {bins}")
        values = self._values_in(sensor_id, from_ms, to_ms)
        if not values:
            return []
        lo, hi = min(values), max(values)
        if lo == hi:
            return [(lo, hi, len(values))]
        width = (hi - lo) / bins
        counts = [0] * bins
        for v in values:
            idx = int((v - lo) / width)
            if idx >= bins:  # v == hi, or float edge spill
                idx = bins - 1
            counts[idx] += 1
        return [(lo + i * width, lo + (i + 1) * width, c) for i, c in enumerate(counts)]

    def latest(self, sensor_id: str, at_ms: int | None = None) -> Record | None:
        """Most recent record, optionally at or before ``at_ms``."""
        s = self._snapshot(sensor_id)
        if not s.by_ts:
            return None
        if at_ms is None:
            return decode_record(s.by_ts[s.max_ts])
        best = None
        for ts in s.by_ts:
            if ts <= at_ms and (best is None or ts > best):
                best = ts
        return decode_record(s.by_ts[best]) if best is not None else None


def _power_value(record: Record) -> float:
    """The Watts a record contributes: raw value, or the group's sum."""
    return record.valueInW if hasattr(record, "valueInW") else record.sumInW

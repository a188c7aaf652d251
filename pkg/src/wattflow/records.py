"""Measurement records and their canonical JSON wire encoding.

Two record kinds flow through the platform: plain active power measurements
from machine sensors and aggregated statistics for sensor groups. Both are
encoded as single JSON objects with a ``type`` discriminator so that every
service (and every test fixture) speaks the same format.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

MAX_SENSOR_ID_LEN = 128

TYPE_ACTIVE_POWER = "active-power"
TYPE_AGGREGATED = "aggregated-active-power"

# relative slack for cross-field float checks (avg vs sum/count etc.)
_REL_EPS = 1e-9


class RecordError(ValueError):
    """A record violates its type invariants."""


class DecodeError(RecordError):
    """A byte sequence cannot be decoded into a record."""


def validate_sensor_id(sensor_id: str) -> str:
    """Check the sensor identifier contract: non-empty, no whitespace, <= 128 chars."""
    if not isinstance(sensor_id, str):
        raise RecordError(f"identifier: expected string, got {type(sensor_id).__name__}")
    if not sensor_id:
        raise RecordError("identifier: must not be empty")
    if len(sensor_id) > MAX_SENSOR_ID_LEN:
        raise RecordError(f"identifier: longer than {MAX_SENSOR_ID_LEN} chars")
    if any(c.isspace() for c in sensor_id):
        raise RecordError("identifier: must not contain whitespace")
    return sensor_id


def _check_timestamp(ts) -> int:
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise RecordError(f"timestamp: expected integer milliseconds, got {ts!r}")
    if ts < 0:
        raise RecordError(f"timestamp: must be >= 0, got {ts}")
    return ts


def _check_finite(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RecordError(f"{name}: expected number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise RecordError(f"{name}: must be finite, got {value!r}")
    return value


@dataclass(frozen=True, slots=True)
class ActivePowerRecord:
    """One measurement: which sensor, when, how many Watts."""

    identifier: str
    timestamp: int
    valueInW: float

    def __post_init__(self):
        validate_sensor_id(self.identifier)
        _check_timestamp(self.timestamp)
        object.__setattr__(self, "valueInW", _check_finite("valueInW", self.valueInW))

    @property
    def is_reverse_flow(self) -> bool:
        """Negative readings are legal (bidirectional meters) but worth flagging."""
        return self.valueInW < 0


@dataclass(frozen=True, slots=True)
class AggregatedActivePowerRecord:
    """Statistics over the latest values of a sensor group's leaves.

    The timestamp is the one of the triggering measurement, reflecting
    latest-value semantics: the group value is defined at the moment of the
    update that produced it.
    """

    identifier: str
    timestamp: int
    count: int
    sumInW: float
    averageInW: float
    minInW: float
    maxInW: float

    def __post_init__(self):
        validate_sensor_id(self.identifier)
        _check_timestamp(self.timestamp)
        if isinstance(self.count, bool) or not isinstance(self.count, int):
            raise RecordError(f"count: expected integer, got {self.count!r}")
        if self.count < 1:
            raise RecordError(f"count: must be >= 1 in an emitted record, got {self.count}")
        for name in ("sumInW", "averageInW", "minInW", "maxInW"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        eps = _REL_EPS * max(1.0, abs(self.sumInW), abs(self.minInW), abs(self.maxInW))
        if not math.isclose(self.averageInW, self.sumInW / self.count,
                            rel_tol=_REL_EPS, abs_tol=eps):
            raise RecordError("averageInW: must equal sumInW / count")
        if self.minInW > self.maxInW + eps:
            raise RecordError("minInW: must be <= maxInW")
        if not (self.minInW - eps <= self.averageInW <= self.maxInW + eps):
            raise RecordError("averageInW: must lie within [minInW, maxInW]")


Record = ActivePowerRecord | AggregatedActivePowerRecord


def record_to_dict(r: Record) -> dict:
    """Canonical JSON object form, ``type`` discriminator first."""
    if isinstance(r, ActivePowerRecord):
        return {
            "type": TYPE_ACTIVE_POWER,
            "identifier": r.identifier,
            "timestamp": r.timestamp,
            "valueInW": r.valueInW,
        }
    if isinstance(r, AggregatedActivePowerRecord):
        return {
            "type": TYPE_AGGREGATED,
            "identifier": r.identifier,
            "timestamp": r.timestamp,
            "count": r.count,
            "sumInW": r.sumInW,
            "averageInW": r.averageInW,
            "minInW": r.minInW,
            "maxInW": r.maxInW,
        }
    raise RecordError(f"not a record: {type(r).__name__}")


def encode_record(r: Record) -> bytes:
    """Encode a record to its canonical byte form.

    Pure and deterministic: the same record always yields identical bytes.
    Floats use Python's shortest round-trip representation, so
    ``decode_record(encode_record(r)) == r`` bit-exactly.
    """
    if isinstance(r, ActivePowerRecord):
        # hot path for publishers; rejects NaN/inf even if the record was
        # built by bypassing __post_init__
        if not math.isfinite(r.valueInW):
            raise RecordError(f"valueInW: must be finite, got {r.valueInW!r}")
    return json.dumps(record_to_dict(r), separators=(",", ":")).encode("utf-8")


def _require(obj: dict, field: str):
    try:
        return obj[field]
    except KeyError:
        raise DecodeError(f"missing field '{field}'") from None


def record_from_dict(obj: dict) -> Record:
    if not isinstance(obj, dict):
        raise DecodeError(f"expected JSON object, got {type(obj).__name__}")
    kind = _require(obj, "type")
    try:
        if kind == TYPE_ACTIVE_POWER:
            return ActivePowerRecord(
                identifier=_require(obj, "identifier"),
                timestamp=_require(obj, "timestamp"),
                valueInW=_require(obj, "valueInW"),
            )
        if kind == TYPE_AGGREGATED:
            return AggregatedActivePowerRecord(
                identifier=_require(obj, "identifier"),
                timestamp=_require(obj, "timestamp"),
                count=_require(obj, "count"),
                sumInW=_require(obj, "sumInW"),
                averageInW=_require(obj, "averageInW"),
                minInW=_require(obj, "minInW"),
                maxInW=_require(obj, "maxInW"),
            )
    except RecordError as e:
        raise DecodeError(str(e)) from None
    raise DecodeError(f"type: unknown record type {kind!r}")


def decode_record(data: bytes) -> Record:
    """Inverse of :func:`encode_record`; names the offending field on failure."""
    if not data:
        raise DecodeError("empty input")
    try:
        obj = json.loads(data)
    except (ValueError, UnicodeDecodeError) as e:
        raise DecodeError(f"malformed JSON: {e}") from None
    return record_from_dict(obj)

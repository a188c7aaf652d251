"""Configuration service: owns the hierarchy, persists it, and emits change events.

Reconfiguration happens at runtime — no consumer restarts. Every accepted
update is written to disk and published as a whole-state event on the
``configuration`` topic before the call returns, so subscribers can replace
their model atomically.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from ..msglog import TOPIC_CONFIGURATION, Broker
from .model import (
    SensorHierarchy,
    default_hierarchy,
    parse_hierarchy,
)

EVENT_KEY = b"hierarchy"


def encode_event(h: SensorHierarchy) -> bytes:
    return json.dumps(
        {"version": h.version, "hierarchy": h.to_doc()}, separators=(",", ":")
    ).encode()


def decode_event(data: bytes) -> SensorHierarchy:
    obj = json.loads(data)
    doc = obj["hierarchy"]
    return parse_hierarchy(doc, version=obj["version"])


class Registry:
    """Single-writer hierarchy owner; reads are lock-free snapshot handoffs."""

    def __init__(self, store_path: str | Path, broker: Broker):
        self.store_path = Path(store_path)
        self.broker = broker
        self._write_lock = threading.Lock()
        broker.ensure_topic(TOPIC_CONFIGURATION, 1)
        self._current = self._load()

    def _load(self) -> SensorHierarchy:
        try:
            with open(self.store_path, "rb") as f:
                doc = json.loads(f.read())
            return parse_hierarchy(doc, version=doc["version"])
        except FileNotFoundError:
            h = default_hierarchy()
            self._persist(h)
            return h

    def _persist(self, h: SensorHierarchy):
        self.store_path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.store_path.with_name(self.store_path.name + ".tmp")
        tmp.write_bytes(json.dumps(h.to_doc(), separators=(",", ":")).encode())
        os.replace(tmp, self.store_path)

    def get_hierarchy(self) -> SensorHierarchy:
        return self._current

    def put_hierarchy(self, doc: dict) -> int:
        """Validate, persist, publish, and only then expose the new version.

        ``doc`` is the hierarchy document without a version (any supplied
        version field is ignored; the registry owns version numbering).
        """
        with self._write_lock:
            version = self._current.version + 1
            root = json.loads(json.dumps(doc.get("root")))  # detach from the caller
            h = parse_hierarchy({"root": root}, version=version)
            self._persist(h)
            self._current = h
            self.broker.publish(TOPIC_CONFIGURATION, EVENT_KEY, encode_event(h))
            return version

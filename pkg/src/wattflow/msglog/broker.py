"""Embedded partitioned message log with keyed routing.

The broker is a library, not a server: every process embeds it and shares
state through the log directory (``--log-dir`` / ``WATTFLOW_LOG_DIR``).
Messages with equal keys always land in the same partition, and offsets
within a partition are gapless and monotonic, so per-key ordering is a
structural guarantee.
"""

from __future__ import annotations

import fcntl
import json
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from .framelog import FrameLog

_TOPIC_RE = re.compile(r"^[A-Za-z0-9._-]{1,100}$")

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


class MsgLogError(RuntimeError):
    pass


class UnknownTopicError(MsgLogError):
    pass


class DuplicateTopicError(MsgLogError):
    pass


def fnv1a_64(data: bytes) -> int:
    h = FNV64_OFFSET
    for b in data:
        h = (h ^ b) * FNV64_PRIME & _MASK64
    return h


def partition_for(key: bytes, partition_count: int) -> int:
    """Deterministic keyed router: FNV-1a 64 of the key, modulo the count."""
    if partition_count < 1:
        raise ValueError("partition_count must be >= 1")
    if partition_count == 1:
        return 0
    return fnv1a_64(key) % partition_count


@dataclass(frozen=True, slots=True)
class LogMessage:
    topic: str
    partition: int
    offset: int
    key: bytes
    value: bytes


@dataclass(frozen=True, slots=True)
class Topic:
    name: str
    partition_count: int


class Broker:
    """Topic registry plus per-partition frame logs under one directory."""

    def __init__(self, log_dir: str | Path, fsync: bool = False):
        self.log_dir = Path(log_dir)
        self.fsync = fsync
        self.log_dir.mkdir(parents=True, exist_ok=True)
        (self.log_dir / "topics").mkdir(exist_ok=True)
        (self.log_dir / "groups").mkdir(exist_ok=True)
        self._topics_file = self.log_dir / "topics.json"
        self._topics_lock_file = self.log_dir / "topics.lock"
        self._topics_cache: dict[str, int] = {}
        self._logs: dict[tuple[str, int], FrameLog] = {}
        self._mutex = threading.Lock()

    def close(self):
        with self._mutex:
            for log in self._logs.values():
                log.close()
            self._logs.clear()

    # topic registry

    def _load_topics(self) -> dict[str, int]:
        try:
            with open(self._topics_file, "rb") as f:
                return json.loads(f.read())
        except FileNotFoundError:
            return {}

    def _with_topics_lock(self, fn):
        fd = os.open(self._topics_lock_file, os.O_RDWR | os.O_CREAT, 0o644)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX)
            return fn()
        finally:
            fcntl.flock(fd, fcntl.LOCK_UN)
            os.close(fd)

    def _save_topics(self, topics: dict[str, int]):
        tmp = self._topics_file.with_suffix(".json.tmp")
        tmp.write_bytes(json.dumps(topics, separators=(",", ":")).encode())
        os.replace(tmp, self._topics_file)

    def create_topic(self, name: str, partitions: int) -> Topic:
        if not _TOPIC_RE.match(name or ""):
            raise MsgLogError(f"invalid topic name: {name!r}")
        if partitions < 1:
            raise MsgLogError(f"partitions must be >= 1, got {partitions}")

        def _create():
            topics = self._load_topics()
            if name in topics:
                raise DuplicateTopicError(f"topic already exists: {name}")
            topics[name] = partitions
            self._save_topics(topics)
            (self.log_dir / "topics" / name).mkdir(parents=True, exist_ok=True)

        self._with_topics_lock(_create)
        self._topics_cache[name] = partitions
        return Topic(name, partitions)

    def ensure_topic(self, name: str, partitions: int) -> Topic:
        """Create the topic, or verify the existing one has the same partition count."""
        try:
            return self.create_topic(name, partitions)
        except DuplicateTopicError:
            existing = self.partition_count(name)
            if existing != partitions:
                raise MsgLogError(
                    f"topic {name} exists with {existing} partitions, wanted {partitions}"
                ) from None
            return Topic(name, existing)

    def topics(self) -> dict[str, int]:
        return dict(self._load_topics())

    def partition_count(self, topic: str) -> int:
        n = self._topics_cache.get(topic)
        if n is None:
            self._topics_cache = self._load_topics()
            n = self._topics_cache.get(topic)
            if n is None:
                raise UnknownTopicError(f"unknown topic: {topic}")
        return n

    def _log(self, topic: str, partition: int) -> FrameLog:
        key = (topic, partition)
        log = self._logs.get(key)
        if log is None:
            with self._mutex:
                log = self._logs.get(key)
                if log is None:
                    path = self.log_dir / "topics" / topic / f"p{partition}.log"
                    log = FrameLog(path, fsync=self.fsync)
                    self._logs[key] = log
        return log

    # producing

    def publish(self, topic: str, key: bytes, value: bytes) -> tuple[int, int]:
        n = self.partition_count(topic)
        p = partition_for(key, n)
        offset = self._log(topic, p).append(key, value)
        return p, offset

    def publish_batch(self, topic: str, entries: list[tuple[bytes, bytes]]) -> list[tuple[int, int]]:
        """Publish many messages; per-key order follows list order."""
        n = self.partition_count(topic)
        by_partition: dict[int, list[int]] = {}
        parts = [0] * len(entries)
        for i, (key, _) in enumerate(entries):
            p = partition_for(key, n)
            parts[i] = p
            by_partition.setdefault(p, []).append(i)
        results: list[tuple[int, int]] = [(0, 0)] * len(entries)
        for p, idxs in by_partition.items():
            first = self._log(topic, p).append_batch([entries[i] for i in idxs])
            for j, i in enumerate(idxs):
                results[i] = (p, first + j)
        return results

    # raw reading (consumer groups build on this; tailers use it directly)

    def end_offsets(self, topic: str) -> dict[int, int]:
        return {p: self._log(topic, p).count() for p in range(self.partition_count(topic))}

    def read(
        self,
        topic: str,
        partition: int,
        offset: int,
        max_messages: int = 500,
        pos_hint: int | None = None,
    ) -> tuple[list[LogMessage], int]:
        if not 0 <= partition < self.partition_count(topic):
            raise MsgLogError(f"no partition {partition} in topic {topic}")
        raw, pos = self._log(topic, partition).read_from(offset, max_messages, pos_hint)
        return [LogMessage(topic, partition, o, k, v) for o, k, v in raw], pos


class TopicTail:
    """Groupless reader that follows every partition of one topic.

    Used where each instance must observe all messages (configuration
    events), unlike consumer groups which split partitions among members.
    """

    def __init__(self, broker: Broker, topic: str, from_start: bool = True):
        self.broker = broker
        self.topic = topic
        n = broker.partition_count(topic)
        start = {p: 0 for p in range(n)} if from_start else broker.end_offsets(topic)
        self._positions = start
        self._hints: dict[int, int | None] = {p: None for p in range(n)}

    def poll(self, max_messages: int = 500) -> list[LogMessage]:
        out: list[LogMessage] = []
        for p, pos in self._positions.items():
            budget = max_messages - len(out)
            if budget <= 0:
                break
            msgs, hint = self.broker.read(self.topic, p, pos, budget, self._hints[p])
            self._hints[p] = hint
            if msgs:
                self._positions[p] = msgs[-1].offset + 1
                out.extend(msgs)
        return out

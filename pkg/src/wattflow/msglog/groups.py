"""Consumer groups: disjoint partition ownership shared through group state files.

There is no coordinator process. Group membership, heartbeats, and committed
offsets live in one JSON file per group, mutated under an ``flock``; the
assignment is a pure function of the member list and the partition list
(sorted, round-robin), so every member derives the same ownership map from
the same state. A member that stops heartbeating is evicted by whichever
peer syncs next, and its partitions resume from their committed offsets —
uncommitted messages are redelivered (at-least-once).
"""

from __future__ import annotations

import fcntl
import json
import os
import threading
import time
import uuid
from pathlib import Path

from .broker import Broker, LogMessage, MsgLogError

DEFAULT_SESSION_TIMEOUT_MS = 3000

TP = tuple[str, int]


class ConsumerRevoked(MsgLogError):
    """The group evicted or closed this consumer; its handle is no longer valid."""


class NotOwnedError(MsgLogError):
    """Attempt to commit a partition this consumer does not own."""


def assign_partitions(partitions: list[TP], members: list[str]) -> dict[str, list[TP]]:
    """Deterministic round-robin over sorted partitions and sorted members.

    Every partition gets exactly one owner; with more members than
    partitions, the surplus members own nothing.
    """
    out: dict[str, list[TP]] = {m: [] for m in members}
    if not members:
        return out
    ms = sorted(members)
    for i, tp in enumerate(sorted(partitions)):
        out[ms[i % len(ms)]].append(tp)
    return out


def _now_ms() -> int:
    return time.time_ns() // 1_000_000


class _GroupFile:
    """Lock-guarded accessor for one group's shared state."""

    def __init__(self, log_dir: Path, group_id: str):
        safe = group_id.replace("/", "_")
        self.state_path = log_dir / "groups" / f"{safe}.json"
        self.lock_path = log_dir / "groups" / f"{safe}.lock"
        self._thread_lock = threading.Lock()

    def mutate(self, fn):
        """Run ``fn(state) -> result`` with the state loaded, then persist it."""
        with self._thread_lock:
            fd = os.open(self.lock_path, os.O_RDWR | os.O_CREAT, 0o644)
            try:
                fcntl.flock(fd, fcntl.LOCK_EX)
                state = self._load()
                result = fn(state)
                tmp = self.state_path.with_suffix(".json.tmp")
                tmp.write_bytes(json.dumps(state, separators=(",", ":")).encode())
                os.replace(tmp, self.state_path)
                return result
            finally:
                fcntl.flock(fd, fcntl.LOCK_UN)
                os.close(fd)

    def _load(self) -> dict:
        try:
            with open(self.state_path, "rb") as f:
                return json.loads(f.read())
        except FileNotFoundError:
            return {"generation": 0, "topics": [], "members": {}, "committed": {}}

    def peek(self) -> dict:
        with self._thread_lock:
            return self._load()


class Consumer:
    """One group member. Not thread-safe; use one handle per logical thread."""

    def __init__(
        self,
        broker: Broker,
        group_id: str,
        topics: list[str],
        member_id: str | None = None,
        session_timeout_ms: int = DEFAULT_SESSION_TIMEOUT_MS,
    ):
        for t in topics:
            broker.partition_count(t)  # raises UnknownTopicError
        self.broker = broker
        self.group_id = group_id
        self.member_id = member_id or f"c-{uuid.uuid4().hex[:12]}"
        self.session_timeout_ms = session_timeout_ms
        self._group = _GroupFile(broker.log_dir, group_id)
        self._positions: dict[TP, int] = {}
        self._hints: dict[TP, int | None] = {}
        self._assignment: list[TP] = []
        self._rr = 0
        self._closed = False
        self._dead = False  # crash simulation: stop participating silently
        self._last_sync = 0.0
        self._sync_interval = min(1.0, session_timeout_ms / 3000.0)

        def join(state):
            self._evict_stale(state)
            state["topics"] = sorted(set(state["topics"]) | set(topics))
            state["members"][self.member_id] = _now_ms()
            state["generation"] += 1
            return dict(state)

        self._apply_assignment(self._group.mutate(join))

    # group state helpers

    def _evict_stale(self, state: dict) -> bool:
        now = _now_ms()
        stale = [m for m, hb in state["members"].items() if now - hb > self.session_timeout_ms]
        for m in stale:
            del state["members"][m]
        if stale:
            state["generation"] += 1
        return bool(stale)

    def _all_partitions(self, state: dict) -> list[TP]:
        return [
            (t, p)
            for t in state["topics"]
            for p in range(self.broker.partition_count(t))
        ]

    def _apply_assignment(self, state: dict):
        # Positions always restart from committed offsets on a rebalance, even
        # for retained partitions: a partition may have moved away and back
        # between two of our syncs, and only the committed offset is a safe
        # resume point. In-flight uncommitted messages get redelivered.
        mine = assign_partitions(self._all_partitions(state), list(state["members"])).get(
            self.member_id, []
        )
        committed = state["committed"]
        self._positions = {tp: committed.get(f"{tp[0]}@{tp[1]}", 0) for tp in mine}
        self._hints = {tp: None for tp in mine}
        self._assignment = sorted(mine)
        self._generation = state["generation"]

    def _sync(self, force: bool = False):
        now = time.monotonic()
        if not force and now - self._last_sync < self._sync_interval:
            return
        self._last_sync = now

        def beat(state):
            if self.member_id not in state["members"]:
                return None
            self._evict_stale(state)
            state["members"][self.member_id] = _now_ms()
            return dict(state)

        state = self._group.mutate(beat)
        if state is None:
            self._closed = True
            raise ConsumerRevoked(
                f"consumer {self.member_id} was evicted from group {self.group_id}"
            )
        if state["generation"] != self._generation:
            self._apply_assignment(state)

    # public surface

    def assignment(self) -> list[TP]:
        return list(self._assignment)

    def position(self, tp: TP) -> int:
        """Next offset this consumer will read from an owned partition."""
        return self._positions.get(tp, 0)

    def resync(self):
        """Heartbeat and re-apply the group assignment immediately."""
        self._sync(force=True)

    @property
    def generation(self) -> int:
        return self._generation

    def poll(self, max_messages: int = 500) -> list[LogMessage]:
        """Fetch up to ``max_messages`` from owned partitions, per-partition FIFO."""
        if self._closed or self._dead:
            raise ConsumerRevoked(f"consumer {self.member_id} is closed")
        self._sync()
        parts = self._assignment
        n = len(parts)
        if n == 0:
            return []
        out: list[LogMessage] = []
        start = self._rr % n
        for i in range(n):
            budget = max_messages - len(out)
            if budget <= 0:
                break
            tp = parts[(start + i) % n]
            msgs, hint = self.broker.read(
                tp[0], tp[1], self._positions[tp], budget, self._hints[tp]
            )
            self._hints[tp] = hint
            if msgs:
                self._positions[tp] = msgs[-1].offset + 1
                out.extend(msgs)
        self._rr = (start + 1) % n
        return out

    def commit(self, offsets: dict[TP, int]):
        """Record, per owned partition, the offset at which delivery resumes.

        The value is the next offset to deliver (last processed + 1). After a
        crash or rebalance the partition's new owner starts there; anything
        past it is redelivered.
        """
        if self._closed or self._dead:
            raise ConsumerRevoked(f"consumer {self.member_id} is closed")

        def write(state):
            if self.member_id not in state["members"]:
                return None
            mine = assign_partitions(self._all_partitions(state), list(state["members"]))[
                self.member_id
            ]
            owned = set(mine)
            for tp in offsets:
                if tp not in owned:
                    raise NotOwnedError(
                        f"{self.member_id} does not own {tp[0]}@{tp[1]}"
                    )
            for tp, off in offsets.items():
                state["committed"][f"{tp[0]}@{tp[1]}"] = off
            state["members"][self.member_id] = _now_ms()
            return dict(state)

        state = self._group.mutate(write)
        if state is None:
            self._closed = True
            raise ConsumerRevoked(
                f"consumer {self.member_id} was evicted from group {self.group_id}"
            )
        if state["generation"] != self._generation:
            self._apply_assignment(state)

    def close(self):
        """Leave the group gracefully, triggering an immediate rebalance."""
        if self._closed or self._dead:
            return

        def leave(state):
            if self.member_id in state["members"]:
                del state["members"][self.member_id]
                state["generation"] += 1

        self._group.mutate(leave)
        self._closed = True

    def kill(self):
        """Crash simulation: vanish without leaving; peers evict us by timeout."""
        self._dead = True

    def committed_offsets(self) -> dict[TP, int]:
        state = self._group.peek()
        out: dict[TP, int] = {}
        for key, off in state["committed"].items():
            topic, _, part = key.rpartition("@")
            out[(topic, int(part))] = off
        return out


def group_members(broker: Broker, group_id: str) -> list[str]:
    return sorted(_GroupFile(broker.log_dir, group_id).peek()["members"])


def group_lag(broker: Broker, group_id: str, topics: list[str]) -> int:
    """Messages published but not yet committed by the group, across ``topics``."""
    committed = _GroupFile(broker.log_dir, group_id).peek()["committed"]
    lag = 0
    for topic in topics:
        for p, end in broker.end_offsets(topic).items():
            lag += end - committed.get(f"{topic}@{p}", 0)
    return lag

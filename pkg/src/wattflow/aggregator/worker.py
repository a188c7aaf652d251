"""The aggregation worker: one member of the "aggregator" consumer group.

Topology per message batch:

    records ──> fan out to ancestor groups ──> grouped-records
    grouped-records ──> history upsert ──> stats ──> aggregated-records

plus store writes for both raw and aggregated records. Offsets are committed
only after publishes and store writes land, so a crash replays uncommitted
work; the history upsert and the store's (sensor, timestamp) upsert make
that replay idempotent.

Losing a partition in a rebalance discards its group histories. Gaining one
rebuilds them by replaying the partition from the start up to its committed
offset (emitting nothing: those aggregates were already published by the
previous owner), so group state survives worker crashes and restarts.
Configuration events are applied between batches, never mid-batch.
"""

from __future__ import annotations

import json
import logging
import threading
import time

from ..history.store import SeriesStore
from ..msglog import (
    TOPIC_AGGREGATED,
    TOPIC_GROUPED,
    TOPIC_RECORDS,
    Broker,
    Consumer,
    ConsumerRevoked,
    NotOwnedError,
    partition_for,
)
from ..registry.model import SensorHierarchy
from ..registry.watch import ConfigWatcher
from .core import AggregationHistory, prune_histories
from .metrics import Counters

log = logging.getLogger(__name__)

GROUP_ID = "aggregator"

_AGG_TEMPLATE = (
    '{"type":"aggregated-active-power","identifier":"%s","timestamp":%d,'
    '"count":%d,"sumInW":%r,"averageInW":%r,"minInW":%r,"maxInW":%r}'
)


class AggregatorWorker:
    """Runs as a thread in-process or as the body of a worker process."""

    def __init__(
        self,
        broker: Broker,
        store: SeriesStore,
        instance_id: str,
        group_id: str = GROUP_ID,
        poll_max: int = 2048,
        idle_sleep: float = 0.02,
        session_timeout_ms: int = 3000,
    ):
        self.broker = broker
        self.store = store
        self.instance_id = instance_id
        self.group_id = group_id
        self.poll_max = poll_max
        self.idle_sleep = idle_sleep
        self.session_timeout_ms = session_timeout_ms
        self.counters = Counters()
        self.histories: dict[str, AggregationHistory] = {}
        self.hierarchy: SensorHierarchy | None = None
        self.consumer: Consumer | None = None
        self._stop = threading.Event()
        self._killed = threading.Event()
        self._thread: threading.Thread | None = None
        self._generation = -1
        self._grouped_partitions = broker.partition_count(TOPIC_GROUPED)

    # lifecycle

    def start_thread(self) -> threading.Thread:
        self._thread = threading.Thread(target=self.run, name=f"worker-{self.instance_id}", daemon=True)
        self._thread.start()
        return self._thread

    def stop(self):
        """Graceful shutdown: leave the group so partitions move immediately."""
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=10)

    def kill(self):
        """Crash simulation: stop abruptly without leaving or committing."""
        self._killed.set()
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=10)

    # main loop

    def _subscribe(self):
        self.consumer = Consumer(
            self.broker,
            self.group_id,
            [TOPIC_RECORDS, TOPIC_GROUPED],
            member_id=self.instance_id,
            session_timeout_ms=self.session_timeout_ms,
        )
        self._generation = self.consumer.generation
        self._owned_grouped: set[int] = set()
        self._sync_history_ownership()

    def run(self):
        watcher = ConfigWatcher(self.broker)
        self.hierarchy = watcher.current()
        self._subscribe()
        try:
            while not self._stop.is_set():
                fresh = watcher.refresh()
                if fresh is not None:
                    self._apply_hierarchy(fresh)
                try:
                    msgs = self.consumer.poll(self.poll_max)
                except ConsumerRevoked:
                    log.warning("%s: revoked from group, rejoining", self.instance_id)
                    self.histories.clear()
                    self._subscribe()
                    continue
                if self.consumer.generation != self._generation:
                    self._generation = self.consumer.generation
                    self._sync_history_ownership()
                if not msgs:
                    self._stop.wait(self.idle_sleep)
                    continue
                self._process(msgs)
        finally:
            if self.consumer and not self._killed.is_set():
                try:
                    self.consumer.close()
                except Exception:
                    log.exception("%s: error leaving group", self.instance_id)

    def _apply_hierarchy(self, hierarchy: SensorHierarchy):
        # stale events (version <= current) never reach here: the watcher
        # only reports advances
        self.hierarchy = hierarchy
        prune_histories(self.histories, hierarchy)

    def _sync_history_ownership(self):
        owned = {p for t, p in self.consumer.assignment() if t == TOPIC_GROUPED}
        n = self._grouped_partitions
        for agg_id in list(self.histories):
            if partition_for(agg_id.encode(), n) not in owned:
                del self.histories[agg_id]
        for p in sorted(owned - self._owned_grouped):
            self._restore_partition_state(p)
        self._owned_grouped = owned

    def _restore_partition_state(self, partition: int):
        """Fold a gained partition's log up to its committed offset into histories.

        Replay emits nothing: everything below the committed offset already
        produced aggregates under the previous owner.
        """
        end = self.consumer.position((TOPIC_GROUPED, partition))
        offset = 0
        pos = None
        loads = json.loads
        while offset < end:
            msgs, pos = self.broker.read(
                TOPIC_GROUPED, partition, offset, min(4096, end - offset), pos
            )
            if not msgs:
                break
            offset = msgs[-1].offset + 1
            for m in msgs:
                if m.offset >= end:
                    break
                agg_id = m.key.decode()
                obj = loads(m.value)
                hist = self.histories.get(agg_id)
                if hist is None:
                    hist = self.histories[agg_id] = AggregationHistory(agg_id)
                hist.update(obj["identifier"], obj["timestamp"], obj["valueInW"])
        prune_histories(self.histories, self.hierarchy)

    def _process(self, msgs):
        hierarchy = self.hierarchy
        counters = self.counters
        grouped_out: list[tuple[bytes, bytes]] = []
        agg_out: list[tuple[bytes, bytes]] = []
        store_out: list[tuple[str, int, bytes]] = []
        offsets: dict[tuple[str, int], int] = {}
        loads = json.loads

        for m in msgs:
            offsets[(m.topic, m.partition)] = m.offset + 1
            if m.topic == TOPIC_RECORDS:
                counters.processed_records_total += 1
                ident = m.key.decode()
                if ident not in hierarchy:
                    counters.unknown_sensor_records += 1
                    continue
                value = m.value
                for anc in hierarchy.ancestors(ident):
                    grouped_out.append((anc.encode(), value))
                store_out.append((ident, loads(value)["timestamp"], value))
            else:
                counters.grouped_records_processed += 1
                agg_id = m.key.decode()
                obj = loads(m.value)
                leaf = obj["identifier"]
                if not hierarchy.is_group(agg_id) or leaf not in hierarchy.leaf_descendants(agg_id):
                    counters.stale_grouped_records += 1
                    continue
                hist = self.histories.get(agg_id)
                if hist is None:
                    hist = self.histories[agg_id] = AggregationHistory(agg_id)
                ts = obj["timestamp"]
                if not hist.update(leaf, ts, obj["valueInW"]):
                    counters.late_records += 1
                count, total, avg, vmin, vmax = hist.stats()
                payload = (_AGG_TEMPLATE % (agg_id, ts, count, total, avg, vmin, vmax)).encode()
                agg_out.append((m.key, payload))
                store_out.append((agg_id, ts, payload))
                counters.emitted_aggregates_total += 1

        # persistence before commit: at-least-once with idempotent replay
        if grouped_out:
            self.broker.publish_batch(TOPIC_GROUPED, grouped_out)
        if agg_out:
            self.broker.publish_batch(TOPIC_AGGREGATED, agg_out)
        if store_out:
            self.store.append_encoded_many(store_out)
        if self._stop.is_set() and self._killed.is_set():
            return  # crashed before committing: the batch must be redelivered
        try:
            self.consumer.commit(offsets)
        except ConsumerRevoked:
            self.histories.clear()
            self._subscribe()
        except NotOwnedError:
            # a partition moved mid-batch; skip the commit, redelivery covers it
            log.warning("%s: lost partition before commit, batch will be redelivered",
                        self.instance_id)
            try:
                self.consumer.resync()
            except ConsumerRevoked:
                self.histories.clear()
                self._subscribe()


def wait_for_group(broker: Broker, group_id: str, expected_members: int, timeout_s: float = 15.0):
    """Block until the group has the expected membership (or raise)."""
    from ..msglog import group_members

    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        if len(group_members(broker, group_id)) == expected_members:
            return
        time.sleep(0.05)
    raise TimeoutError(
        f"group {group_id} did not reach {expected_members} members within {timeout_s}s"
    )

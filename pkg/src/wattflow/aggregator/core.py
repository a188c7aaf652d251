"""Aggregation state and the pure steps of the streaming topology.

Every incoming measurement fans out to all ancestor groups of its sensor.
Per group, an aggregation history keeps the latest value of each leaf
descendant (latest-value semantics: a sensor's value at time t is its most
recent measurement; ties go to the record processed last). Statistics are
maintained incrementally so emitting an aggregate per update is O(1), with
an occasional min/max rescan when the current extremum is replaced.
"""

from __future__ import annotations

from ..records import ActivePowerRecord, AggregatedActivePowerRecord
from ..registry.model import SensorHierarchy


class AggregationHistory:
    """Latest (timestamp, value) per leaf under one aggregated sensor."""

    __slots__ = ("aggregated_sensor", "last_values", "_sum", "_min", "_max", "_dirty")

    def __init__(self, aggregated_sensor: str):
        self.aggregated_sensor = aggregated_sensor
        self.last_values: dict[str, tuple[int, float]] = {}
        self._sum = 0.0
        self._min = 0.0
        self._max = 0.0
        self._dirty = False

    def __len__(self):
        return len(self.last_values)

    def update(self, leaf: str, timestamp: int, value: float) -> bool:
        """Upsert the leaf's latest value; returns False for a late record.

        A record is late when its timestamp is older than the stored one;
        equal timestamps replace (last processed wins).
        """
        stored = self.last_values.get(leaf)
        if stored is None:
            self.last_values[leaf] = (timestamp, value)
            self._sum += value
            if len(self.last_values) == 1:
                self._min = self._max = value
            else:
                if value < self._min:
                    self._min = value
                if value > self._max:
                    self._max = value
            return True
        if timestamp < stored[0]:
            return False
        old = stored[1]
        self.last_values[leaf] = (timestamp, value)
        self._sum += value - old
        if old == self._min or old == self._max:
            self._dirty = True
        if not self._dirty:
            if value < self._min:
                self._min = value
            if value > self._max:
                self._max = value
        return True

    def remove(self, leaf: str):
        stored = self.last_values.pop(leaf, None)
        if stored is not None:
            self._sum -= stored[1]
            if stored[1] == self._min or stored[1] == self._max:
                self._dirty = True

    def _rescan(self):
        values = [v for _, v in self.last_values.values()]
        self._sum = sum(values)
        self._min = min(values)
        self._max = max(values)
        self._dirty = False

    def stats(self) -> tuple[int, float, float, float, float]:
        """(count, sum, average, min, max) over the stored leaf values."""
        if not self.last_values:
            raise ValueError("empty history has no statistics")
        if self._dirty:
            self._rescan()
        n = len(self.last_values)
        return n, self._sum, self._sum / n, self._min, self._max


def fan_out(
    record: ActivePowerRecord, hierarchy: SensorHierarchy
) -> list[tuple[str, ActivePowerRecord]]:
    """One (ancestor, record) pair per ancestor group of the record's sensor.

    Unknown sensors produce no pairs; callers count them.
    """
    if record.identifier not in hierarchy:
        return []
    return [(anc, record) for anc in hierarchy.ancestors(record.identifier)]


def update_history(hist: AggregationHistory, record: ActivePowerRecord) -> bool:
    """Apply one fanned-out record to a group history; False means late."""
    return hist.update(record.identifier, record.timestamp, record.valueInW)


def compute_stats(
    hist: AggregationHistory, trigger: ActivePowerRecord
) -> AggregatedActivePowerRecord | None:
    """Aggregated record over the history; None when there is nothing to aggregate.

    The emitted timestamp is the triggering record's: the group value is
    defined at the moment of the update.
    """
    if len(hist) == 0:
        return None
    count, total, avg, vmin, vmax = hist.stats()
    return AggregatedActivePowerRecord(
        identifier=hist.aggregated_sensor,
        timestamp=trigger.timestamp,
        count=count,
        sumInW=total,
        averageInW=avg,
        minInW=vmin,
        maxInW=vmax,
    )


def prune_histories(
    histories: dict[str, AggregationHistory], hierarchy: SensorHierarchy
) -> None:
    """After a hierarchy change: drop vanished groups and foreign leaf entries."""
    for agg_id in list(histories):
        if not hierarchy.is_group(agg_id):
            del histories[agg_id]
            continue
        keep = hierarchy.leaf_descendants(agg_id)
        hist = histories[agg_id]
        for leaf in list(hist.last_values):
            if leaf not in keep:
                hist.remove(leaf)

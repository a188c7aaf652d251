"""Declarative stream pipeline for turning raw sensor input into records.

A pipeline is a source plus a chain of ``filter``/``map``/``flat_map``
stages ending in a sink. Stages must be pure: bridges stay stateless so any
number of replicas can split an input without changing the result. A stage
that throws on one element drops that element and counts it — a malformed
sensor message must never halt ingestion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from ..msglog import Broker
from ..records import ActivePowerRecord, encode_record

log = logging.getLogger(__name__)

_FILTER, _MAP, _FLAT_MAP = "filter", "map", "flat_map"


@dataclass
class PipelineStats:
    seen: int = 0
    emitted: int = 0
    dropped_errors: int = 0


@dataclass(frozen=True)
class Pipeline:
    """Immutable stage chain; each combinator returns a new pipeline."""

    source: Iterable[Any]
    stages: tuple[tuple[str, Callable], ...] = ()

    def filter(self, predicate: Callable[[Any], bool]) -> "Pipeline":
        return Pipeline(self.source, self.stages + ((_FILTER, predicate),))

    def map(self, fn: Callable[[Any], Any]) -> "Pipeline":
        return Pipeline(self.source, self.stages + ((_MAP, fn),))

    def flat_map(self, fn: Callable[[Any], Iterable[Any]]) -> "Pipeline":
        return Pipeline(self.source, self.stages + ((_FLAT_MAP, fn),))

    def apply(self, element: Any) -> list[Any]:
        """Run one element through every stage; 0..n results."""
        items = [element]
        for kind, fn in self.stages:
            if not items:
                break
            nxt = []
            for item in items:
                if kind == _FILTER:
                    if fn(item):
                        nxt.append(item)
                elif kind == _MAP:
                    nxt.append(fn(item))
                else:
                    nxt.extend(fn(item))
            items = nxt
        return items

    def to(self, broker: Broker, topic: str, batch_size: int = 500) -> "RunnablePipeline":
        return RunnablePipeline(self, broker, topic, batch_size)

    def collect(self, stats: PipelineStats | None = None) -> list[Any]:
        """Drain the source through the stages without a sink (tests, previews)."""
        stats = stats if stats is not None else PipelineStats()
        out: list[Any] = []
        for element in self.source:
            stats.seen += 1
            try:
                results = self.apply(element)
            except Exception:
                stats.dropped_errors += 1
                log.warning("pipeline stage failed; dropping element", exc_info=True)
                continue
            out.extend(results)
            stats.emitted += len(results)
        return out


@dataclass
class RunnablePipeline:
    """A pipeline bound to a topic sink.

    The sink accepts only :class:`ActivePowerRecord` values and publishes
    each one keyed by its identifier, preserving per-sensor ordering.
    """

    pipeline: Pipeline
    broker: Broker
    topic: str
    batch_size: int = 500
    stats: PipelineStats = field(default_factory=PipelineStats)

    def run(self) -> PipelineStats:
        batch: list[tuple[bytes, bytes]] = []
        for element in self.pipeline.source:
            self.stats.seen += 1
            try:
                for result in self.pipeline.apply(element):
                    if not isinstance(result, ActivePowerRecord):
                        raise TypeError(
                            f"sink requires ActivePowerRecord, got {type(result).__name__}"
                        )
                    batch.append((result.identifier.encode(), encode_record(result)))
            except Exception:
                self.stats.dropped_errors += 1
                log.warning("pipeline stage failed; dropping element", exc_info=True)
                continue
            if len(batch) >= self.batch_size:
                self.broker.publish_batch(self.topic, batch)
                self.stats.emitted += len(batch)
                batch = []
        if batch:
            self.broker.publish_batch(self.topic, batch)
            self.stats.emitted += len(batch)
        return self.stats


def pipeline(source: Iterable[Any]) -> Pipeline:
    return Pipeline(source)

"""Follow the configuration topic and expose the newest hierarchy snapshot.

Every instance needs to see every event (broadcast semantics), so this
reads the topic directly rather than through a consumer group.
"""

from __future__ import annotations

import logging

from ..msglog import TOPIC_CONFIGURATION, Broker, TopicTail
from .model import SensorHierarchy, default_hierarchy
from .service import decode_event

log = logging.getLogger(__name__)


class ConfigWatcher:
    def __init__(self, broker: Broker, topic: str = TOPIC_CONFIGURATION):
        broker.ensure_topic(topic, 1)
        self._tail = TopicTail(broker, topic, from_start=True)
        self._current = default_hierarchy()
        self.refresh()

    def refresh(self) -> SensorHierarchy | None:
        """Drain all pending events; return the new snapshot if the version advanced."""
        newest = None
        while True:
            msgs = self._tail.poll(500)
            if not msgs:
                return newest
            for msg in msgs:
                try:
                    h = decode_event(msg.value)
                except Exception:
                    log.exception("dropping undecodable configuration event")
                    continue
                if h.version > self._current.version:
                    newest = h
                    self._current = h

    def current(self) -> SensorHierarchy:
        return self._current

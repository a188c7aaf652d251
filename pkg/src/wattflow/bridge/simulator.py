"""Simulating bridge: generates sensor load instead of integrating hardware.

Each simulated bridge drives a block of sensors that publish one measurement
per period. Values follow a per-sensor sinusoid with seeded noise, so the
same seed always reproduces the same value sequence while still looking
plausible on a dashboard. Bridges are phase-staggered to spread the load
within a period.
"""

from __future__ import annotations

import math
import struct
import threading
import time
import zlib
from dataclasses import dataclass, field

from ..msglog import TOPIC_RECORDS, Broker

_TWO_PI = 2.0 * math.pi
_CYCLE_S = 3600.0  # one sinusoid cycle per hour


def _chaos(seed: int, *parts: int) -> float:
    """Deterministic uniform [0, 1) from the seed and coordinates."""
    h = zlib.crc32(struct.pack("<q%dq" % len(parts), seed, *parts))
    return h / 4294967296.0


@dataclass
class Simulator:
    broker: Broker
    bridges: int = 1
    sensors_per_bridge: int = 1
    period_ms: int = 1000
    seed: int = 0
    topic: str = TOPIC_RECORDS
    published: int = 0
    skipped_ticks: int = 0
    _stop: threading.Event = field(default_factory=threading.Event)

    def __post_init__(self):
        if min(self.bridges, self.sensors_per_bridge, self.period_ms) < 1:
            raise ValueError("bridges, sensors and period must all be >= 1")

    @property
    def offered_per_second(self) -> float:
        return self.bridges * self.sensors_per_bridge * 1000.0 / self.period_ms

    def sensor_id(self, bridge: int, sensor: int) -> str:
        return f"sim-{bridge}-{sensor}"

    def value(self, bridge: int, sensor: int, tick: int) -> float:
        base = 50.0 + 200.0 * _chaos(self.seed, bridge, sensor, -1)
        phase = _chaos(self.seed, bridge, sensor, -2)
        t = tick * self.period_ms / 1000.0
        wave = 0.25 * base * math.sin(_TWO_PI * (t / _CYCLE_S + phase))
        noise = 0.05 * base * (_chaos(self.seed, bridge, sensor, tick) - 0.5)
        return base + wave + noise

    def tick_values(self, bridge: int, tick: int) -> list[float]:
        return [self.value(bridge, s, tick) for s in range(self.sensors_per_bridge)]

    def _tick_batch(self, bridge: int, tick: int, timestamp_ms: int) -> list[tuple[bytes, bytes]]:
        batch = []
        for s in range(self.sensors_per_bridge):
            ident = self.sensor_id(bridge, s)
            value = self.value(bridge, s, tick)
            payload = (
                '{"type":"active-power","identifier":"%s","timestamp":%d,"valueInW":%r}'
                % (ident, timestamp_ms, value)
            ).encode()
            batch.append((ident.encode(), payload))
        return batch

    def stop(self):
        self._stop.set()

    def run(self, duration_s: float | None = None, max_lag_ticks: int = 5):
        """Publish staggered per-bridge ticks until stopped or the duration ends."""
        period = self.period_ms / 1000.0
        start = time.monotonic()
        deadline = start + duration_s if duration_s is not None else None
        offsets = [start + b * period / self.bridges for b in range(self.bridges)]
        next_tick = [0] * self.bridges
        while not self._stop.is_set():
            now = time.monotonic()
            if deadline is not None and now >= deadline:
                break
            soonest = None
            for b in range(self.bridges):
                due = (now - offsets[b]) / period
                if due >= next_tick[b]:
                    behind = int(due) - next_tick[b]
                    if behind > max_lag_ticks:
                        self.skipped_ticks += behind - max_lag_ticks
                        next_tick[b] = int(due) - max_lag_ticks
                    batch = self._tick_batch(b, next_tick[b], time.time_ns() // 1_000_000)
                    self.broker.publish_batch(self.topic, batch)
                    self.published += len(batch)
                    next_tick[b] += 1
                due_at = offsets[b] + next_tick[b] * period
                soonest = due_at if soonest is None else min(soonest, due_at)
            pause = max(0.0, (soonest or now) - time.monotonic())
            if pause > 0:
                self._stop.wait(min(pause, 0.2))

    def start_thread(self, duration_s: float | None = None) -> threading.Thread:
        t = threading.Thread(target=self.run, kwargs={"duration_s": duration_s}, daemon=True)
        t.start()
        return t


def sim_hierarchy(bridges: int, sensors_per_bridge: int) -> dict:
    """Hierarchy doc matching the simulator's identifiers: one group per bridge."""
    groups = []
    for b in range(bridges):
        leaves = [
            {"id": f"sim-{b}-{s}", "name": f"Simulated {b}/{s}"}
            for s in range(sensors_per_bridge)
        ]
        groups.append({"id": f"bridge-{b}", "name": f"Bridge {b}", "children": leaves})
    return {"root": {"id": "root", "name": "Simulation", "children": groups}}

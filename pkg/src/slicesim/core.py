"""Deterministic discrete-event engine, per-stream RNG registry, and metrics bus.

The clock is an integer microsecond counter. A run is a pure function of
(scenario, master seed): event dequeue order is strictly (time, seq)
lexicographic and every random draw comes from a named counter-based stream,
so independent subsystems never perturb each other's sequences.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from hashlib import blake2b
from typing import Any, Callable

import numpy as np

from .errors import SchedulingError, SimulationError

US_PER_MS = 1000
US_PER_S = 1_000_000


@dataclass(frozen=True, slots=True)
class Event:
    """A scheduled occurrence. seq breaks ties between events at the same time."""

    time: int
    seq: int
    target: str
    payload: Any


@dataclass(slots=True)
class MetricRecord:
    time: int
    slice_id: str
    node_id: str
    metric: str
    value: float


def format_value(value) -> str:
    """Canonical CSV rendering; integral values never carry a trailing '.0'."""
    f = float(value)
    if f == int(f) and abs(f) < 2**53:
        return str(int(f))
    return repr(f)


class MetricsBus:
    """Collects MetricRecords in nondecreasing time order and writes them as CSV."""

    HEADER = "time_us,slice_id,node_id,metric,value"

    def __init__(self):
        self.records: list[MetricRecord] = []
        self._last_time = 0

    def emit(self, time: int, slice_id, node_id, metric: str, value) -> None:
        if time < self._last_time:
            raise SimulationError(
                f"metric {metric!r} emitted at {time} after a record at {self._last_time}"
            )
        self._last_time = time
        self.records.append(MetricRecord(time, str(slice_id), str(node_id), metric, float(value)))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.HEADER + "\n")
            for r in self.records:
                fh.write(f"{r.time},{r.slice_id},{r.node_id},{r.metric},{format_value(r.value)}\n")


@dataclass
class RngStream:
    """One named random stream; same (master seed, key) always replays identically."""

    stream_key: tuple
    seed: int
    gen: np.random.Generator = field(repr=False, default=None)


def _derive_seed(master_seed: int, stream_key: tuple) -> int:
    canon = f"{master_seed}|" + "/".join(str(part) for part in stream_key)
    return int.from_bytes(blake2b(canon.encode(), digest_size=8).digest(), "big")


class RngRegistry:
    """Hands out independent counter-based (Philox) streams keyed by (module, id...)."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._streams: dict[tuple, RngStream] = {}

    def stream(self, *stream_key) -> RngStream:
        key = tuple(stream_key)
        st = self._streams.get(key)
        if st is None:
            seed = _derive_seed(self.master_seed, key)
            gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
            st = RngStream(stream_key=key, seed=seed, gen=gen)
            self._streams[key] = st
        return st


# Invariant violations and past-scheduling must abort the run unwrapped.
_FATAL = (SchedulingError, SimulationError)


class Engine:
    """Single-threaded event loop; handlers are registered per target node id."""

    def __init__(self, master_seed: int = 0):
        self.now = 0
        self._seq = 0
        self._heap: list[tuple[int, int, Event]] = []
        self._handlers: dict[str, Callable[["Engine", Event], None]] = {}
        self.metrics = MetricsBus()
        self.rng = RngRegistry(master_seed)

    def register(self, target: str, handler: Callable[["Engine", Event], None]) -> None:
        self._handlers[target] = handler

    def schedule(self, time: int, target: str, payload: Any = None) -> Event:
        time = int(time)
        if time < self.now:
            raise SchedulingError(
                f"event for {target!r} scheduled at {time} but clock is {self.now}"
            )
        ev = Event(time=time, seq=self._seq, target=target, payload=payload)
        self._seq += 1
        heapq.heappush(self._heap, (ev.time, ev.seq, ev))
        return ev

    def rng_for(self, *stream_key) -> RngStream:
        return self.rng.stream(*stream_key)

    def run_until(self, t_end: int) -> list[MetricRecord]:
        """Process every event with time <= t_end; the clock lands exactly on t_end."""
        t_end = int(t_end)
        first_record = len(self.metrics.records)
        while self._heap and self._heap[0][0] <= t_end:
            _, _, ev = heapq.heappop(self._heap)
            self.now = ev.time
            handler = self._handlers.get(ev.target)
            if handler is None:
                raise SimulationError(f"no handler registered for event target {ev.target!r}")
            try:
                handler(self, ev)
            except _FATAL:
                raise
            except Exception as exc:
                raise SimulationError(
                    f"handler for {ev.target!r} failed at t={ev.time} "
                    f"(payload={ev.payload!r}): {exc}"
                ) from exc
        self.now = t_end
        return self.metrics.records[first_record:]

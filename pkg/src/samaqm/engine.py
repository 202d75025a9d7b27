"""Discrete-event core: virtual clock, event queue, random streams and the
AQM-fronted bottleneck link."""

from __future__ import annotations

import enum
import hashlib
import heapq
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Deque, List, Optional


class SchedulingError(RuntimeError):
    pass


class EventKind(enum.Enum):
    PACKET_ARRIVAL = "PacketArrival"
    SERVICE_COMPLETE = "ServiceComplete"
    TIMER_FIRE = "TimerFire"
    SAMPLING_TICK = "SamplingTick"


@dataclass(order=True)
class Event:
    time: float
    seq: int
    kind: EventKind = field(compare=False)
    action: Optional[Callable[..., Any]] = field(default=None, compare=False, repr=False)
    payload: tuple = field(default=(), compare=False, repr=False)


@dataclass
class Packet:
    id: int
    flow: int
    size: int
    send_time: float = 0.0
    enqueue_time: Optional[float] = None

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("packet size must be positive")


@dataclass(frozen=True)
class QueueState:
    occupancy: int
    capacity: int
    in_service: int = 0

    @property
    def utilization(self) -> float:
        return self.occupancy / self.capacity

    @property
    def full(self) -> bool:
        return self.occupancy >= self.capacity


@dataclass(frozen=True)
class RunTotals:
    arrivals: int = 0
    departures: int = 0
    drops: int = 0


def rng_stream(seed: int, stream_id: str) -> random.Random:
    """Independent generator for one named consumer of randomness."""
    digest = hashlib.sha256(f"{int(seed)}/{stream_id}".encode()).digest()
    return random.Random(int.from_bytes(digest[:16], "little"))


class Simulator:
    def __init__(self, seed: int = 0, trace: bool = False):
        self.seed = seed
        self.now = 0.0
        self._heap: List[Event] = []
        self._seq = 0
        self.link: Optional[Bottleneck] = None
        self.trace: Optional[List[tuple]] = [] if trace else None

    def stream(self, stream_id: str) -> random.Random:
        return rng_stream(self.seed, stream_id)

    def schedule(self, time: float, kind: EventKind, action=None, *payload) -> Event:
        if not time >= self.now:  # also rejects NaN
            raise SchedulingError(f"cannot schedule {kind.value} at t={time} before now={self.now}")
        ev = Event(time, self._seq, kind, action, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def after(self, delay: float, kind: EventKind, action=None, *payload) -> Event:
        return self.schedule(self.now + delay, kind, action, *payload)

    def pending(self) -> int:
        return len(self._heap)

    def run_until(self, t_end: float) -> RunTotals:
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before now={self.now}")
        heap = self._heap
        while heap and heap[0].time <= t_end:
            ev = heapq.heappop(heap)
            self.now = ev.time
            if self.trace is not None:
                self.trace.append((ev.time, ev.seq, ev.kind.value))
            if ev.action is not None:
                ev.action(*ev.payload)
        self.now = t_end
        return self.link.totals() if self.link is not None else RunTotals()


class Bottleneck:
    """FIFO buffer in front of a serializing link.

    The AQM controller sees every arrival and decides admit/drop; accepted
    packets are transmitted at ``size * 8 / bandwidth_bps`` seconds each.
    Propagation delay belongs to the transport, not to the queue.
    """

    def __init__(self, sim: Simulator, bandwidth_bps: float, capacity: int, aqm,
                 metrics=None, on_departure=None, on_drop=None):
        if bandwidth_bps <= 0 or capacity <= 0:
            raise ValueError("bandwidth and capacity must be positive")
        self.sim = sim
        self.bandwidth_bps = float(bandwidth_bps)
        self.capacity = int(capacity)
        self.aqm = aqm
        self.metrics = metrics
        self.on_departure = on_departure
        self.on_drop = on_drop
        self.buffer: Deque[Packet] = deque()
        self.in_service: Optional[Packet] = None
        self.arrivals = self.departures = self.drops = 0
        sim.link = self
        aqm.bind(sim, self)

    @property
    def busy(self) -> bool:
        return self.in_service is not None

    def state(self) -> QueueState:
        return QueueState(len(self.buffer), self.capacity, 1 if self.in_service is not None else 0)

    def totals(self) -> RunTotals:
        return RunTotals(self.arrivals, self.departures, self.drops)

    def service_time(self, pkt: Packet) -> float:
        return pkt.size * 8.0 / self.bandwidth_bps

    def send(self, pkt: Packet, delay: float = 0.0) -> None:
        self.sim.after(delay, EventKind.PACKET_ARRIVAL, self.arrive, pkt)

    def arrive(self, pkt: Packet) -> None:
        now = self.sim.now
        self.arrivals += 1
        if self.metrics is not None:
            self.metrics.on_event("arrival", now)
        if self.aqm.admit(self.state(), now):
            self.drops += 1
            if self.metrics is not None:
                self.metrics.on_event("drop", now)
            if self.on_drop is not None:
                self.on_drop(pkt)
            return
        pkt.enqueue_time = now
        self.buffer.append(pkt)
        self._queue_changed()
        if self.in_service is None:
            self.transmit_next()

    def transmit_next(self) -> Optional[Packet]:
        if self.in_service is not None:
            raise SchedulingError("transmit_next called while the link is busy")
        if not self.buffer:
            self.aqm.on_idle(self.sim.now)
            return None
        pkt = self.buffer.popleft()
        self.in_service = pkt
        self._queue_changed()
        self.sim.after(self.service_time(pkt), EventKind.SERVICE_COMPLETE, self._complete, pkt)
        return pkt

    def _complete(self, pkt: Packet) -> None:
        self.in_service = None
        self.departures += 1
        if self.metrics is not None:
            self.metrics.on_event("departure", self.sim.now)
        if self.on_departure is not None:
            self.on_departure(pkt)
        self.transmit_next()

    def _queue_changed(self) -> None:
        if self.metrics is not None:
            self.metrics.sample_queue(len(self.buffer), self.sim.now)


def check_conservation(link: Bottleneck) -> bool:
    s = link.state()
    return link.arrivals == link.departures + link.drops + s.occupancy + s.in_service


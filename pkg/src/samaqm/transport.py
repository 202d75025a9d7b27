"""Window-based traffic sources that close the loop around the bottleneck.

Flows keep a congestion window with slow start and additive increase, and
collapse it to one packet when they learn of a drop.  There is no sequence
number accounting: a drop is noticed one RTT estimate after it happened
(a timeout abstraction) and the ACK path is lossless.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import List, Optional

from .engine import Bottleneck, EventKind, Packet, Simulator


class FlowKind(enum.Enum):
    FTP = "ftp"
    HTTP = "http"


class Phase(enum.Enum):
    SLOW_START = "SlowStart"
    CONGESTION_AVOIDANCE = "CongestionAvoidance"


@dataclass
class FlowState:
    id: int
    kind: FlowKind = FlowKind.FTP
    cwnd: float = 1.0
    ssthresh: float = 64.0
    in_flight: int = 0
    rtt_estimate: float = 0.02
    remaining: int = 0

    @property
    def phase(self) -> Phase:
        return Phase.SLOW_START if self.cwnd < self.ssthresh else Phase.CONGESTION_AVOIDANCE

    @property
    def window_space(self) -> int:
        """Packets that may be injected now."""
        return max(0, int(self.cwnd) - self.in_flight)


@dataclass(frozen=True)
class TrafficMix:
    n_http: int = 200
    n_ftp: int = 100
    http_size_mean: float = 10.0
    http_idle_mean: float = 1.0

    def __post_init__(self):
        if self.n_http < 0 or self.n_ftp < 0:
            raise ValueError("flow counts must be non-negative")
        if self.http_size_mean < 1 or self.http_idle_mean <= 0:
            raise ValueError("http_size_mean must be >= 1 and http_idle_mean > 0")


def on_ack(flow: FlowState) -> FlowState:
    if flow.in_flight < 1:
        raise ValueError(f"flow {flow.id}: ACK with nothing in flight")
    flow.in_flight -= 1
    if flow.cwnd < flow.ssthresh:
        flow.cwnd += 1.0
    else:
        flow.cwnd += 1.0 / flow.cwnd
    return flow


def on_loss(flow: FlowState) -> FlowState:
    flow.ssthresh = max(flow.cwnd / 2.0, 2.0)
    flow.cwnd = 1.0
    return flow


def geometric(rng: random.Random, mean: float) -> int:
    """Geometric on {1, 2, ...} with the given mean."""
    if mean <= 1.0:
        return 1
    p = 1.0 / mean
    u = 1.0 - rng.random()  # (0, 1]
    return 1 + int(math.log(u) / math.log1p(-p))


class TcpSource:
    """Bulk (FTP-like) sender with an infinite backlog."""

    def __init__(self, flow: FlowState, sim: Simulator, link: Bottleneck, rng: random.Random,
                 packet_bytes: int = 500, link_delay: float = 0.010, rtt_gain: float = 0.125):
        self.flow = flow
        self.sim = sim
        self.link = link
        self.rng = rng
        self.packet_bytes = packet_bytes
        self.link_delay = link_delay
        self.rtt_gain = rtt_gain
        self.flow.rtt_estimate = 2.0 * link_delay
        self.recover_time = -math.inf
        self.next_id = 0
        self.losses = 0
        self.max_in_flight_excess = 0  # worst in_flight - ceil(cwnd) right after a send

    def start(self, at: float) -> None:
        self.sim.schedule(at, EventKind.TIMER_FIRE, self._begin)

    def _begin(self) -> None:
        self.pump()

    def has_data(self) -> bool:
        return True

    def _take(self) -> None:
        pass

    def pump(self) -> None:
        f = self.flow
        while f.in_flight < int(f.cwnd) and self.has_data():
            self._take()
            pkt = Packet((f.id << 32) | self.next_id, f.id, self.packet_bytes, send_time=self.sim.now)
            self.next_id += 1
            f.in_flight += 1
            self.max_in_flight_excess = max(self.max_in_flight_excess, f.in_flight - math.ceil(f.cwnd))
            self.link.send(pkt)

    # ACK arrives after delivery to the sink plus the return path.
    def delivered(self, pkt: Packet) -> None:
        self.sim.after(2.0 * self.link_delay, EventKind.TIMER_FIRE, self._ack, pkt)

    def _ack(self, pkt: Packet) -> None:
        sample = self.sim.now - pkt.send_time
        f = self.flow
        f.rtt_estimate += self.rtt_gain * (sample - f.rtt_estimate)
        on_ack(f)
        self.after_ack()
        self.pump()

    def after_ack(self) -> None:
        pass

    def dropped(self, pkt: Packet) -> None:
        self.sim.after(self.flow.rtt_estimate, EventKind.TIMER_FIRE, self._loss_detected, pkt)

    def _loss_detected(self, pkt: Packet) -> None:
        f = self.flow
        f.in_flight -= 1
        self.lost(pkt)
        # one window reduction per window of data
        if pkt.send_time >= self.recover_time:
            on_loss(f)
            self.losses += 1
            self.recover_time = self.sim.now
        self.after_ack()
        self.pump()

    def lost(self, pkt: Packet) -> None:
        pass


class HttpSource(TcpSource):
    """On-off flow: geometric bursts separated by exponential think times."""

    def __init__(self, flow, sim, link, rng, mix: TrafficMix = TrafficMix(), **kw):
        super().__init__(flow, sim, link, rng, **kw)
        self.mix = mix
        self.active = False
        self.bursts = 0

    def _begin(self) -> None:
        self.idle()

    def has_data(self) -> bool:
        return self.active and self.flow.remaining > 0

    def _take(self) -> None:
        self.flow.remaining -= 1

    def lost(self, pkt: Packet) -> None:
        # the lost packet goes back into the burst
        self.flow.remaining += 1

    def after_ack(self) -> None:
        f = self.flow
        if self.active and f.remaining == 0 and f.in_flight == 0:
            self.idle()

    def idle(self) -> None:
        """Burst finished (or flow just started): think, then start the next burst."""
        self.active = False
        self.flow.cwnd = 1.0
        think = self.rng.expovariate(1.0 / self.mix.http_idle_mean)
        self.sim.after(think, EventKind.TIMER_FIRE, self.burst)

    def burst(self) -> None:
        self.active = True
        self.bursts += 1
        self.flow.remaining = geometric(self.rng, self.mix.http_size_mean)
        self.pump()


def build_sources(sim: Simulator, link: Bottleneck, mix: TrafficMix, *, packet_bytes: int,
                  link_delay: float, start_jitter: float, initial_ssthresh: float) -> List[TcpSource]:
    sources: List[TcpSource] = []
    kinds = [FlowKind.FTP] * mix.n_ftp + [FlowKind.HTTP] * mix.n_http
    for fid, kind in enumerate(kinds):
        rng = sim.stream(f"flow-{fid}")
        flow = FlowState(fid, kind, ssthresh=initial_ssthresh)
        cls = TcpSource if kind is FlowKind.FTP else HttpSource
        extra = {} if kind is FlowKind.FTP else {"mix": mix}
        src = cls(flow, sim, link, rng, packet_bytes=packet_bytes, link_delay=link_delay, **extra)
        src.start(rng.uniform(0.0, start_jitter))
        sources.append(src)
    return sources


class Demux:
    """Routes link departures and drops back to the owning source."""

    def __init__(self, sources: Optional[List[TcpSource]] = None):
        self.sources = sources or []

    def departure(self, pkt: Packet) -> None:
        self.sources[pkt.flow].delivered(pkt)

    def drop(self, pkt: Packet) -> None:
        self.sources[pkt.flow].dropped(pkt)

"""Drop-only AQM controllers: DropTail, RED, Blue and PI.

Every controller is driven through :meth:`Aqm.admit`, called once per
arrival with the pre-admission queue state.  ``admit`` returns
``AqmDecision.DROP`` or ``AqmDecision.ENQUEUE``; a full buffer is always a
drop and is reported to the controller as an overflow.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import Optional

from .engine import EventKind, QueueState


class AqmDecision(enum.Enum):
    ENQUEUE = 0
    DROP = 1

    def __bool__(self) -> bool:
        return self is AqmDecision.DROP


ENQUEUE = AqmDecision.ENQUEUE
DROP = AqmDecision.DROP


class Aqm:
    name = "aqm"

    def __init__(self, rng: Optional[random.Random] = None):
        self.rng = rng if rng is not None else random.Random(0)

    def bind(self, sim, link) -> None:
        """Hook for controllers that need timers or link access."""

    def observe(self, q: QueueState, now: float) -> None:
        """Per-arrival bookkeeping that happens whatever the outcome."""

    def decide(self, q: QueueState, now: float) -> AqmDecision:
        raise NotImplementedError

    def on_overflow(self, now: float) -> None:
        pass

    def on_idle(self, now: float) -> None:
        pass

    def admit(self, q: QueueState, now: float) -> AqmDecision:
        self.observe(q, now)
        if q.occupancy >= q.capacity:
            self.on_overflow(now)
            return DROP
        return self.decide(q, now)

    def _bernoulli(self, p: float) -> AqmDecision:
        return DROP if self.rng.random() < p else ENQUEUE


class DropTail(Aqm):
    name = "droptail"

    def decide(self, q, now):
        return ENQUEUE


# -- RED ---------------------------------------------------------------------

@dataclass(frozen=True)
class RedParams:
    min_th: float = 100.0
    max_th: float = 300.0
    max_p: float = 0.1
    w_q: float = 0.002
    count_correction: bool = True
    # seconds per packet transmission, used to age avg across idle periods
    idle_slot: float = 0.004

    def __post_init__(self):
        if not 0 <= self.min_th < self.max_th:
            raise ValueError("RED needs 0 <= min_th < max_th")
        if not 0 < self.max_p <= 1 or not 0 < self.w_q <= 1:
            raise ValueError("RED needs max_p and w_q in (0, 1]")


class Red(Aqm):
    name = "red"

    def __init__(self, params: RedParams = RedParams(), rng=None):
        super().__init__(rng)
        self.params = params
        self.avg = 0.0
        self.count = 0
        self.idle_since: Optional[float] = 0.0

    def bind(self, sim, link):
        if self.params.max_th > link.capacity:
            raise ValueError(f"RED max_th={self.params.max_th} exceeds buffer capacity {link.capacity}")

    def update_avg(self, q: float, now: Optional[float] = None) -> float:
        p = self.params
        if q == 0 and self.idle_since is not None and now is not None:
            # the queue sat empty: age avg as if m empty-queue samples had arrived
            m = (now - self.idle_since) / p.idle_slot
            self.avg *= (1.0 - p.w_q) ** m
        self.avg = (1.0 - p.w_q) * self.avg + p.w_q * q
        self.idle_since = None
        return self.avg

    def base_probability(self) -> float:
        p = self.params
        if self.avg < p.min_th:
            return 0.0
        if self.avg >= p.max_th:
            return 1.0
        return p.max_p * (self.avg - p.min_th) / (p.max_th - p.min_th)

    def drop_probability(self) -> float:
        pb = self.base_probability()
        if pb in (0.0, 1.0) or not self.params.count_correction:
            return pb
        denom = 1.0 - self.count * pb
        if denom <= 0.0:
            return 1.0
        return min(1.0, pb / denom)

    def observe(self, q, now):
        self.update_avg(q.occupancy, now)

    def decide(self, q, now):
        p = self.drop_probability()
        if self.avg < self.params.min_th:
            self.count = 0
        if self.rng.random() < p:
            self.count = 0
            return DROP
        if self.params.min_th <= self.avg < self.params.max_th:
            self.count += 1
        return ENQUEUE

    def on_idle(self, now):
        self.idle_since = now


# -- Blue --------------------------------------------------------------------

@dataclass(frozen=True)
class BlueParams:
    d1: float = 0.02
    d2: float = 0.002
    freeze_time: float = 0.1

    def __post_init__(self):
        if not (0 < self.d1 <= 1 and 0 < self.d2 <= 1 and self.freeze_time >= 0):
            raise ValueError("Blue needs d1, d2 in (0, 1] and freeze_time >= 0")


class Blue(Aqm):
    """Marking probability driven by overflow and idle events only."""

    name = "blue"

    def __init__(self, params: BlueParams = BlueParams(), rng=None, p_m: float = 0.0):
        super().__init__(rng)
        self.params = params
        self.p_m = p_m
        self.last_update = -math.inf

    def on_overflow(self, now):
        if now - self.last_update >= self.params.freeze_time:
            self.p_m = min(1.0, self.p_m + self.params.d1)
            self.last_update = now

    def on_idle(self, now):
        if now - self.last_update >= self.params.freeze_time:
            self.p_m = max(0.0, self.p_m - self.params.d2)
            self.last_update = now

    def decide(self, q, now):
        return self._bernoulli(self.p_m)


# -- PI ----------------------------------------------------------------------

@dataclass(frozen=True)
class PiParams:
    a: float = 1.82e-5
    b: float = 1.81e-5
    q_ref: float = 200.0
    sample_interval: float = 0.00625

    def __post_init__(self):
        if not (self.a > self.b > 0):
            raise ValueError("PI needs a > b > 0")
        if self.sample_interval <= 0 or self.q_ref < 0:
            raise ValueError("PI needs sample_interval > 0 and q_ref >= 0")

    def scaled(self, factor: float) -> "PiParams":
        return PiParams(self.a * factor, self.b * factor, self.q_ref, self.sample_interval)


class Pi(Aqm):
    name = "pi"

    def __init__(self, params: PiParams = PiParams(), rng=None, p: float = 0.0):
        super().__init__(rng)
        self.params = params
        self.p = p
        self.q_old = params.q_ref
        self._sim = self._link = None

    def update(self, q: float) -> float:
        """One tick of p += a (q - q_ref) - b (q_old - q_ref)."""
        a, b, ref = self.params.a, self.params.b, self.params.q_ref
        self.p = min(1.0, max(0.0, self.p + a * (q - ref) - b * (self.q_old - ref)))
        self.q_old = q
        return self.p

    def bind(self, sim, link):
        self._sim, self._link = sim, link
        self._t0, self._ticks = sim.now, 0
        sim.schedule(sim.now, EventKind.SAMPLING_TICK, self._tick)

    def _tick(self):
        self.update(len(self._link.buffer))
        self._ticks += 1
        # multiply rather than accumulate so tick times do not drift
        self._sim.schedule(self._t0 + self._ticks * self.params.sample_interval,
                           EventKind.SAMPLING_TICK, self._tick)

    def decide(self, q, now):
        return self._bernoulli(self.p)

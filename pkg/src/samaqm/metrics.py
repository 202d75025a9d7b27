"""Per-second traffic series and per-controller run summaries."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable, List, Sequence

CSV_HEADER = ("t", "arrivals", "departures", "drops", "queue")
SUMMARY_HEADER = ("controller", "arrivals", "departures", "drops", "avg_queue")


@dataclass(frozen=True)
class SecondRecord:
    t: int
    arrivals: int
    departures: int
    drops: int
    queue: float  # mean of the queue samples taken in [t, t+1)


class MetricsLog:
    """Counters bucketed into seconds ``[k, k+1)``.

    Events at exactly the run horizon land in the last bucket so a run of
    ``duration`` seconds always has ``ceil(duration)`` rows.
    """

    def __init__(self, duration: float, tick: float = 0.1):
        if duration < 0 or tick <= 0:
            raise ValueError("duration must be >= 0 and tick > 0")
        self.duration = float(duration)
        self.tick_interval = tick
        n = max(1, math.ceil(duration))
        self.arrivals = [0] * n
        self.departures = [0] * n
        self.drops = [0] * n
        self._tick_sum = [0.0] * n
        self._tick_n = [0] * n
        self.tick_times: List[float] = []
        self.tick_values: List[int] = []
        # time-weighted occupancy integral
        self._area = 0.0
        self._last_t = 0.0
        self._last_q = 0
        self._end = None

    def _bucket(self, t: float) -> int:
        return min(int(t), len(self.arrivals) - 1) if t >= 0 else 0

    def on_event(self, kind: str, t: float) -> None:
        k = self._bucket(t)
        if kind == "arrival":
            self.arrivals[k] += 1
        elif kind == "departure":
            self.departures[k] += 1
        elif kind == "drop":
            self.drops[k] += 1
        else:
            raise ValueError(f"unknown event kind {kind!r}")

    def sample_queue(self, occupancy: int, t: float) -> None:
        """Record an occupancy change at time t (for the time-weighted mean)."""
        self._area += self._last_q * (t - self._last_t)
        self._last_t = t
        self._last_q = occupancy

    def tick(self, occupancy: int, t: float) -> None:
        """Periodic sample for the plotted queue series."""
        k = self._bucket(t)
        self._tick_sum[k] += occupancy
        self._tick_n[k] += 1
        self.tick_times.append(t)
        self.tick_values.append(occupancy)

    def finish(self, t_end: float) -> None:
        self.sample_queue(self._last_q, t_end)
        self._end = t_end

    @property
    def totals(self) -> tuple:
        return sum(self.arrivals), sum(self.departures), sum(self.drops)

    @property
    def avg_queue(self) -> float:
        end = self._end if self._end is not None else self._last_t
        return self._area / end if end > 0 else 0.0

    @property
    def tick_mean_queue(self) -> float:
        return sum(self.tick_values) / len(self.tick_values) if self.tick_values else 0.0

    def queue_cv(self, warmup: float = 10.0) -> float:
        """Coefficient of variation of the sampled queue after ``warmup`` seconds."""
        xs = [q for t, q in zip(self.tick_times, self.tick_values) if t >= warmup]
        if not xs:
            return 0.0
        mean = sum(xs) / len(xs)
        if mean == 0:
            return 0.0
        var = sum((x - mean) ** 2 for x in xs) / len(xs)
        return math.sqrt(var) / mean

    @property
    def series(self) -> List[SecondRecord]:
        return [
            SecondRecord(k, self.arrivals[k], self.departures[k], self.drops[k],
                         self._tick_sum[k] / self._tick_n[k] if self._tick_n[k] else 0.0)
            for k in range(len(self.arrivals))
        ]


@dataclass(frozen=True)
class RunSummary:
    controller: str
    total_arrivals: int
    total_departures: int
    total_drops: int
    avg_queue: float
    final_occupancy: int = 0
    in_service: int = 0
    tick_mean_queue: float = 0.0
    queue_cv: float = 0.0

    @property
    def conserved(self) -> bool:
        return self.total_arrivals == (self.total_departures + self.total_drops
                                       + self.final_occupancy + self.in_service)

    def row(self) -> str:
        return (f"{self.controller},{self.total_arrivals},{self.total_departures},"
                f"{self.total_drops},{self.avg_queue:.3f}")


class ConservationError(AssertionError):
    pass


def summary(log: MetricsLog, controller: str, final_occupancy: int = 0, in_service: int = 0,
            warmup: float = 10.0) -> RunSummary:
    a, d, dr = log.totals
    s = RunSummary(controller, a, d, dr, log.avg_queue, final_occupancy, in_service,
                   log.tick_mean_queue, log.queue_cv(warmup))
    if not s.conserved:
        raise ConservationError(
            f"{controller}: arrivals {a} != departures {d} + drops {dr} "
            f"+ queued {final_occupancy} + in service {in_service}")
    return s


def format_csv(log: MetricsLog) -> str:
    out = [",".join(CSV_HEADER)]
    for r in log.series:
        out.append(f"{r.t},{r.arrivals},{r.departures},{r.drops},{r.queue:.3f}")
    return "\n".join(out) + "\n"


def read_csv(path) -> List[SecondRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
    return [SecondRecord(int(t), int(a), int(d), int(dr), float(q)) for t, a, d, dr, q in rows[1:]]


def atomic_write(path, text: str) -> None:
    """Write via a temporary file and rename so failures leave no partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export_csv(log: MetricsLog, path) -> None:
    atomic_write(path, format_csv(log))


def format_table(rows: Sequence[RunSummary]) -> str:
    """Aligned text table of run totals plus the tick-mean queue."""
    head = ("Controller", "Total Arrivals", "Total Departures", "Total Drops",
            "Average Queue Size", "Tick-mean Queue")
    body = [(s.controller, f"{s.total_arrivals:,}", f"{s.total_departures:,}", f"{s.total_drops:,}",
             f"{s.avg_queue:.1f}", f"{s.tick_mean_queue:.1f}") for s in rows]
    widths = [max(len(r[i]) for r in [head, *body]) for i in range(len(head))]
    buf = io.StringIO()
    for r in [head, *body]:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        buf.write("  ".join(cells).rstrip() + "\n")
    return buf.getvalue()


def format_summary_csv(rows: Iterable[RunSummary]) -> str:
    return "\n".join([",".join(SUMMARY_HEADER), *(s.row() for s in rows)]) + "\n"

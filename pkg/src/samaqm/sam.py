"""SVM-based AQM: queue-pattern features, training data and the controller.

Each arrival pushes the pre-admission buffer utilization into a five-slot
window.  The window (oldest first, zero-padded at cold start) is the
feature vector handed to the classifier; +1 means drop.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .aqm import DROP, ENQUEUE, Aqm, AqmDecision
from .engine import QueueState, rng_stream
from .svm import Sample, SvmModel, TrainConfig, TrainingError, classify, save_model, smo_train

WINDOW = 5
DEFAULT_WEIGHTS = tuple(w / 15.0 for w in (1, 2, 3, 4, 5))


class PatternWindow:
    def __init__(self, size: int = WINDOW):
        self.ring: deque = deque(maxlen=size)
        self.size = size

    @property
    def filled(self) -> int:
        return len(self.ring)

    def record_arrival(self, q: QueueState) -> "PatternWindow":
        self.ring.append(q.occupancy / q.capacity)
        return self

    def push(self, utilization: float) -> "PatternWindow":
        self.ring.append(utilization)
        return self

    def features(self) -> Tuple[float, ...]:
        pad = self.size - len(self.ring)
        return (0.0,) * pad + tuple(self.ring)


@dataclass(frozen=True)
class LabelPolicy:
    """Teacher for training data: recency-weighted level plus trend."""

    theta: float = 0.5
    g: float = 2.0
    weights: Tuple[float, ...] = DEFAULT_WEIGHTS

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) != WINDOW or any(v < 0 for v in w) or sum(w) <= 0:
            raise ValueError(f"weights must be {WINDOW} non-negative values")
        total = sum(w)
        object.__setattr__(self, "weights", tuple(v / total for v in w))
        if self.g < 0:
            raise ValueError("trend gain g must be >= 0")
        if not 0 < self.theta <= 1:
            # theta == 1 is accepted so the degenerate all-enqueue policy can be exercised
            raise ValueError("theta must lie in (0, 1]")

    def score(self, x: Sequence[float]) -> float:
        """Weighted level plus trend, clipped to the utilization range [0, 1]."""
        level = sum(w * u for w, u in zip(self.weights, x))
        return min(1.0, max(0.0, level + self.g * (x[-1] - x[0]) / (WINDOW - 1)))


def label(x: Sequence[float], policy: LabelPolicy = LabelPolicy()) -> int:
    return 1 if policy.score(x) > policy.theta else -1


def _pattern(rng: random.Random, walk_sigma: float) -> Tuple[float, ...]:
    if rng.random() < 0.5:
        return tuple(rng.random() for _ in range(WINDOW))
    u = rng.random()
    out = [u]
    for _ in range(WINDOW - 1):
        u = min(1.0, max(0.0, u + rng.gauss(0.0, walk_sigma)))
        out.append(u)
    return tuple(out)


def gen_dataset(n: int, policy: LabelPolicy = LabelPolicy(), rng: Optional[random.Random] = None,
                walk_sigma: float = 0.05, max_attempts: int = 100) -> List[Sample]:
    """Labeled utilization patterns: half i.i.d. uniform, half bounded random walks."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = rng or random.Random(0)
    for _ in range(max_attempts):
        data = [Sample(x, label(x, policy)) for x in (_pattern(rng, walk_sigma) for _ in range(n))]
        if len({s.y for s in data}) == 2:
            return data
    raise TrainingError(f"policy produced a single class in {max_attempts} draws of {n} patterns")


class Sam(Aqm):
    """Drops an arrival when the classifier labels the recent pattern +1."""

    name = "sam"

    def __init__(self, model: SvmModel, rng=None, cache: bool = True):
        if model is None:
            raise ValueError("SAM needs a trained model")
        super().__init__(rng)
        self.model = model
        self.window = PatternWindow()
        self._sv = np.ascontiguousarray(model.support_vectors)
        self._coeffs = model.coeffs
        self._cache: Optional[Dict[tuple, AqmDecision]] = {} if cache else None

    def observe(self, q, now):
        self.window.record_arrival(q)

    def decide(self, q, now):
        x = self.window.features()
        if self._cache is not None:
            hit = self._cache.get(x)
            if hit is not None:
                return hit
        d = self._sv - x
        f = float(np.exp(-self.model.gamma * np.einsum("ij,ij->i", d, d)) @ self._coeffs + self.model.bias)
        decision = DROP if f > 0.0 else ENQUEUE
        if self._cache is not None:
            self._cache[x] = decision
        return decision


def sam_decide(m: SvmModel, w: PatternWindow, q: QueueState) -> AqmDecision:
    if q.occupancy >= q.capacity:
        return DROP
    return DROP if classify(m, w.features()) == 1 else ENQUEUE


@dataclass
class TrainReport:
    n: int
    positives: int
    accuracy: float
    n_support: int
    model: SvmModel = field(repr=False)

    @property
    def balance(self) -> float:
        return self.positives / self.n


def training_accuracy(m: SvmModel, data: Sequence[Sample]) -> float:
    X = np.array([s.x for s in data])
    y = np.array([s.y for s in data])
    pred = np.where(m.decision_values(X) > 0.0, 1, -1)
    return float((pred == y).mean())


def train_sam(cfg: TrainConfig = TrainConfig(), policy: LabelPolicy = LabelPolicy(), n: int = 2000,
              seed: int = 0, path=None) -> TrainReport:
    """Generate patterns, fit the SVM, optionally write the model file."""
    data = gen_dataset(n, policy, rng_stream(seed, "dataset"))
    model = smo_train(data, cfg, rng_stream(seed, "smo"))
    if path is not None:
        save_model(model, path)
    return TrainReport(len(data), sum(s.y > 0 for s in data), training_accuracy(model, data),
                       model.n_support, model)

"""Binary support vector classifier with an RBF kernel.

Training uses sequential minimal optimization over a dense Gram matrix,
which is fine for the few thousand queue patterns SAM is trained on.
Models are stored in a small line-oriented text format::

    svm-rbf v1
    gamma <g>
    bias <b>
    nsv <n>
    <coeff> <f1> <f2> <f3> <f4> <f5>
    ...
"""

from __future__ import annotations

import os
import random
import tempfile
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

N_FEATURES = 5
MAGIC = "svm-rbf v1"


class TrainingError(ValueError):
    """Training data cannot produce a classifier (e.g. only one label)."""


class ConvergenceError(RuntimeError):
    def __init__(self, worst_violation: float, passes: int):
        super().__init__(
            f"SMO did not converge after {passes} passes "
            f"(worst KKT violation {worst_violation:.3g})"
        )
        self.worst_violation = worst_violation
        self.passes = passes


class ModelFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class Sample:
    x: tuple
    y: int


@dataclass(frozen=True)
class TrainConfig:
    C: float = 10.0
    gamma: float = 2.0
    tol: float = 1e-3
    max_passes: int = 200

    def __post_init__(self):
        for name in ("C", "gamma", "tol", "max_passes"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def rbf_kernel(x, z, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    d = x - z
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_gram(X, Z, gamma: float) -> np.ndarray:
    """Kernel matrix K[i, j] = exp(-gamma * |X_i - Z_j|^2)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    sq = (X * X).sum(1)[:, None] + (Z * Z).sum(1)[None, :] - 2.0 * X @ Z.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray
    coeffs: np.ndarray
    bias: float
    gamma: float
    kernel: str = "rbf"

    def __post_init__(self):
        sv = np.atleast_2d(np.asarray(self.support_vectors, dtype=float))
        co = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if len(sv) == 0 or len(sv) != len(co):
            raise ValueError("support vectors and coeffs must be non-empty and equally long")
        if self.kernel != "rbf":
            raise ValueError(f"unsupported kernel {self.kernel!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        sv.setflags(write=False)
        co.setflags(write=False)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "coeffs", co)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_support(self) -> int:
        return len(self.coeffs)

    def decision_values(self, X) -> np.ndarray:
        return rbf_gram(X, self.support_vectors, self.gamma) @ self.coeffs + self.bias


def decision_value(m: SvmModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (m.support_vectors.shape[1],):
        raise ValueError(f"expected {m.support_vectors.shape[1]} features, got shape {x.shape}")
    d = m.support_vectors - x
    return float(np.exp(-m.gamma * np.einsum("ij,ij->i", d, d)) @ m.coeffs + m.bias)


def classify(m: SvmModel, x) -> int:
    # exact zero goes to -1 (enqueue)
    return 1 if decision_value(m, x) > 0.0 else -1


@dataclass
class DualSolution:
    """Raw SMO output over the full training set."""

    alpha: np.ndarray
    bias: float
    passes: int
    X: np.ndarray
    y: np.ndarray
    gamma: float

    def to_model(self) -> SvmModel:
        sv = self.alpha > 0
        if not sv.any():
            # degenerate but legal: constant classifier
            sv = np.zeros_like(sv)
            sv[0] = True
        return SvmModel(self.X[sv], (self.alpha * self.y)[sv], self.bias, self.gamma)


def dual_objective(alpha, y, K) -> float:
    """W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij (maximized)."""
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ K @ ay)


def kkt_violations(alpha, y, f, C: float) -> np.ndarray:
    """Per-sample KKT violation of a soft-margin solution, 0 where satisfied."""
    alpha = np.asarray(alpha, dtype=float)
    r = np.asarray(y) * np.asarray(f) - 1.0
    v = np.zeros_like(r)
    lower = alpha <= 0.0
    upper = alpha >= C
    free = ~(lower | upper)
    v[lower] = np.maximum(0.0, -r[lower])
    v[upper] = np.maximum(0.0, r[upper])
    v[free] = np.abs(r[free])
    return v


def _canonical_bias(alpha, y, g, C):
    """Bias from the KKT conditions given f = g + b."""
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(np.mean(y[free] - g[free]))
    # every point at a bound: b lies in an interval, take its midpoint
    lo, hi = -np.inf, np.inf
    pos, neg = y > 0, y < 0
    at0, atC = alpha <= 0, alpha >= C
    # alpha=0 requires y f >= 1, alpha=C requires y f <= 1
    for mask, is_lower in (
        (at0 & pos, True), (atC & neg, True), (at0 & neg, False), (atC & pos, False),
    ):
        if mask.any():
            bound = y[mask] - g[mask]
            if is_lower:
                lo = max(lo, bound.max())
            else:
                hi = min(hi, bound.min())
    if np.isfinite(lo) and np.isfinite(hi):
        return 0.5 * (lo + hi)
    return float(lo if np.isfinite(lo) else hi if np.isfinite(hi) else 0.0)


class _Smo:
    def __init__(self, X, y, cfg: TrainConfig, rng: random.Random):
        self.X, self.y, self.cfg, self.rng = X, y, cfg, rng
        self.C = cfg.C
        self.K = rbf_gram(X, X, cfg.gamma)
        self.n = len(y)
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.E = -y.astype(float)  # f(x_i) - y_i with alpha = 0, b = 0
        self.eps = 1e-12

    def take_step(self, i: int, j: int) -> bool:
        if i == j:
            return False
        C, K, y, a = self.C, self.K, self.y, self.alpha
        ai, aj, yi, yj = a[i], a[j], y[i], y[j]
        Ei, Ej = self.E[i], self.E[j]
        s = yi * yj
        if yi != yj:
            L, H = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            L, H = max(0.0, ai + aj - C), min(C, ai + aj)
        if H - L <= self.eps * C:
            return False
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta > 1e-15:
            aj_new = min(H, max(L, aj + yj * (Ei - Ej) / eta))
        else:
            # objective is linear along the constraint line; move to the better end
            slope = yj * (Ei - Ej)
            if abs(slope) <= self.eps:
                return False
            aj_new = H if slope > 0 else L
        if abs(aj_new - aj) < self.eps * (aj_new + aj + self.eps):
            return False
        ai_new = ai + s * (aj - aj_new)
        # snap numerical dust onto the box
        ai_new = 0.0 if ai_new < self.eps * C else (C if ai_new > C * (1 - self.eps) else ai_new)
        aj_new = 0.0 if aj_new < self.eps * C else (C if aj_new > C * (1 - self.eps) else aj_new)

        dai, daj = ai_new - ai, aj_new - aj
        b1 = self.b - Ei - yi * dai * K[i, i] - yj * daj * K[i, j]
        b2 = self.b - Ej - yi * dai * K[i, j] - yj * daj * K[j, j]
        if 0.0 < ai_new < C:
            b_new = b1
        elif 0.0 < aj_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.E += yi * dai * K[i] + yj * daj * K[j] + (b_new - self.b)
        a[i], a[j] = ai_new, aj_new
        self.b = b_new
        return True

    def examine(self, i: int) -> int:
        tol, C = self.cfg.tol, self.C
        r = self.y[i] * self.E[i]
        ai = self.alpha[i]
        if not ((r < -tol and ai < C) or (r > tol and ai > 0)):
            return 0
        free = np.flatnonzero((self.alpha > 0) & (self.alpha < C))
        if len(free) > 1:
            j = int(free[np.argmax(np.abs(self.E[i] - self.E[free]))])
            if self.take_step(i, j):
                return 1
        start = self.rng.randrange(self.n)
        for k in range(self.n):
            j = (start + k) % self.n
            if self.take_step(i, j):
                return 1
        return 0

    def run(self) -> int:
        """Alternate full KKT sweeps with sweeps over the free multipliers.

        Only full sweeps count against max_passes; each free-set phase runs
        until it stops making progress.
        """
        passes = 0
        while passes < self.cfg.max_passes:
            changed = sum(self.examine(i) for i in range(self.n))
            passes += 1
            if changed == 0:
                break
            while True:
                free = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C)).tolist()
                if sum(self.examine(i) for i in free) == 0:
                    break
        return passes


def smo_solve(X, y, cfg: TrainConfig = TrainConfig(), rng: Optional[random.Random] = None) -> DualSolution:
    """Solve the soft-margin dual; raise if the KKT conditions are not met within cfg.tol."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(X) == 0 or len(X) != len(y):
        raise TrainingError("need a non-empty dataset with one label per sample")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise TrainingError("labels must be +1 or -1")
    if not ((y > 0).any() and (y < 0).any()):
        raise TrainingError("training data contains a single class")
    smo = _Smo(X, y, cfg, rng or random.Random(0))
    passes = smo.run()

    alpha = smo.alpha
    g = smo.K @ (alpha * y)
    bias = smo.b
    canonical = _canonical_bias(alpha, y, g, cfg.C)
    if kkt_violations(alpha, y, g + canonical, cfg.C).max() <= cfg.tol:
        bias = canonical
    worst = float(kkt_violations(alpha, y, g + bias, cfg.C).max())
    if worst > cfg.tol:
        raise ConvergenceError(worst, passes)
    return DualSolution(alpha.copy(), float(bias), passes, X, y, cfg.gamma)


def smo_train(data: Sequence[Sample], cfg: TrainConfig = TrainConfig(),
              rng: Optional[random.Random] = None) -> SvmModel:
    X = np.array([s.x for s in data], dtype=float)
    y = np.array([s.y for s in data], dtype=float)
    return smo_solve(X, y, cfg, rng).to_model()


# -- model files -----------------------------------------------------------

def format_model(m: SvmModel) -> str:
    if m.support_vectors.shape[1] != N_FEATURES:
        raise ModelFormatError(f"model has {m.support_vectors.shape[1]} features, file format needs {N_FEATURES}")
    lines = [MAGIC, f"gamma {m.gamma!r}", f"bias {m.bias!r}", f"nsv {m.n_support}"]
    for c, sv in zip(m.coeffs.tolist(), m.support_vectors.tolist()):
        lines.append(" ".join(repr(float(v)) for v in (c, *sv)))
    return "\n".join(lines) + "\n"


def _header_value(lines, idx: int, key: str, conv):
    lineno = idx + 1
    if idx >= len(lines):
        raise ModelFormatError(f"missing '{key}' line", lineno)
    parts = lines[idx].split()
    if len(parts) != 2 or parts[0] != key:
        raise ModelFormatError(f"expected '{key} <value>', got {lines[idx]!r}", lineno)
    try:
        return conv(parts[1])
    except ValueError:
        raise ModelFormatError(f"bad {key} value {parts[1]!r}", lineno) from None


def parse_model(text: str) -> SvmModel:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ModelFormatError(f"expected header {MAGIC!r}", 1)
    gamma = _header_value(lines, 1, "gamma", float)
    bias = _header_value(lines, 2, "bias", float)
    nsv = _header_value(lines, 3, "nsv", int)
    if nsv <= 0:
        raise ModelFormatError("empty support-vector section", 4)
    if not gamma > 0:
        raise ModelFormatError("gamma must be positive", 2)
    body = lines[4:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != nsv:
        # point at the first missing or surplus line
        raise ModelFormatError(f"nsv says {nsv} support vectors, found {len(body)}",
                               5 + min(len(body), nsv))
    rows = []
    for k, line in enumerate(body):
        lineno = 5 + k
        parts = line.split()
        if len(parts) != N_FEATURES + 1:
            raise ModelFormatError(
                f"expected coeff and {N_FEATURES} features, got {len(parts) - 1} features", lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ModelFormatError(f"non-numeric value in {line!r}", lineno) from None
    arr = np.array(rows)
    return SvmModel(arr[:, 1:], arr[:, 0], bias, gamma)


def save_model(m: SvmModel, path) -> None:
    text = format_model(m)
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), prefix=".svm-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path) -> SvmModel:
    with open(path) as fh:
        return parse_model(fh.read())

"""Reference computations that share no code with the package under test."""

import math

import numpy as np


def gram(X, gamma):
    X = np.asarray(X, dtype=float)
    n = len(X)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = math.exp(-gamma * sum((a - b) ** 2 for a, b in zip(X[i], X[j])))
    return K


def dual_value(alpha, y, K):
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def project(v, y, C):
    """Euclidean projection onto {a : 0 <= a <= C, y.a = 0}.

    a(lam) = clip(v - lam*y, 0, C) and h(lam) = y.a(lam) is piecewise
    linear and non-increasing, so the root is found between breakpoints.
    """
    bps = np.unique(np.concatenate([v * y, (v - C) * y]))

    hs = np.clip(v[None, :] - bps[:, None] * y[None, :], 0.0, C) @ y
    if hs[0] < 0 or hs[-1] > 0:
        raise ValueError("infeasible projection")
    k = int(np.searchsorted(-hs, 0.0))
    if hs[k] == 0:
        lam = bps[k]
    else:
        l0, l1, h0, h1 = bps[k - 1], bps[k], hs[k - 1], hs[k]
        lam = l0 + (l1 - l0) * h0 / (h0 - h1)
    return np.clip(v - lam * y, 0.0, C)


def qp_dual(X, y, C, gamma, iters=50000, ftol=1e-13, window=200):
    """Maximize the soft-margin dual by accelerated projected gradient (with restarts).

    Stops once the objective gains less than ftol over ``window`` iterations.
    """
    y = np.asarray(y, dtype=float)
    K = gram(X, gamma)
    Q = (y[:, None] * y[None, :]) * K
    L = np.linalg.eigvalsh(Q).max()
    step = 1.0 / L
    a = project(np.full(len(y), C / 2), y, C)
    z, t = a.copy(), 1.0
    best = dual_value(a, y, K)
    mark = best
    for k in range(iters):
        a_new = project(z + step * (1.0 - Q @ z), y, C)
        t_new = (1 + math.sqrt(1 + 4 * t * t)) / 2
        val = dual_value(a_new, y, K)
        if val < best:  # restart momentum
            z, t = a.copy(), 1.0
        else:
            z = a_new + ((t - 1) / t_new) * (a_new - a)
            a, t, best = a_new, t_new, val
        if k % window == window - 1:
            if best - mark < ftol:
                break
            mark = best
    return a, K


def bias_from(alpha, y, K, C, eps=1e-7):
    """Bias from free multipliers, or the midpoint of the feasible interval."""
    y = np.asarray(y, dtype=float)
    g = K @ (alpha * y)
    free = (alpha > eps) & (alpha < C - eps)
    if free.any():
        return float(np.mean(y[free] - g[free]))
    lo, hi = -np.inf, np.inf
    for i in range(len(y)):
        at_zero = alpha[i] <= eps
        # y f >= 1 at zero, y f <= 1 at C
        if (y[i] > 0) == at_zero:
            lo = max(lo, y[i] - g[i])
        else:
            hi = min(hi, y[i] - g[i])
    return 0.5 * (lo + hi)


def decision(alpha, y, X, bias, gamma, Z):
    X = np.asarray(X, dtype=float)
    out = []
    for z in np.atleast_2d(Z):
        k = np.exp(-gamma * ((X - z) ** 2).sum(1))
        out.append(float((alpha * y) @ k + bias))
    return np.array(out)


def two_point_alpha(gamma, d2):
    """Closed form for one point per class at squared distance d2 (when below C)."""
    return 1.0 / (1.0 - math.exp(-gamma * d2))

"""One-sample Kolmogorov-Smirnov check against the uniform law on [0, 1]."""

import math

import numpy as np

# asymptotic critical value of sqrt(N) * D at significance 0.01
KS_CRITICAL_001 = 1.63


def ks_statistic_uniform(samples) -> float:
    """``sup |F_N - F|`` for the empirical CDF of ``samples`` vs ``U[0, 1]``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise ValueError("need at least one sample")
    cdf = np.clip(x, 0.0, 1.0)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def ks_critical(n: int, coefficient: float = KS_CRITICAL_001) -> float:
    return coefficient / math.sqrt(n)


def ks_uniform_test(samples, coefficient: float = KS_CRITICAL_001):
    """Return ``(statistic, critical_value, passed)``."""
    d = ks_statistic_uniform(samples)
    crit = ks_critical(np.size(samples), coefficient)
    return d, crit, d < crit

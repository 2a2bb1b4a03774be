"""Estimators and hypothesis tests behind the statistical checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special
from scipy import stats as sps

DEFAULT_LEVEL = 0.01


class TooFewSamples(ValueError):
    pass


class TooFewBatches(ValueError):
    pass


class DegenerateFit(ValueError):
    pass


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    p_value: float
    n: int
    level: float = DEFAULT_LEVEL

    __test__ = False  # not a pytest class

    @property
    def passed(self) -> bool:
        return self.p_value >= self.level

    def row(self) -> list:
        return [self.name, self.statistic, self.p_value, self.n, self.level, self.passed]

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (f"{self.name}: stat={self.statistic:.6g} p={self.p_value:.4g} "
                f"n={self.n} level={self.level} -> {verdict}")


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """P[K > lam] for the Kolmogorov limit distribution (alternating series)."""
    if lam <= 0.0:
        return 1.0
    j = np.arange(1, terms + 1)
    val = 2.0 * np.sum((-1.0) ** (j - 1) * np.exp(-2.0 * j * j * lam * lam))
    return float(min(1.0, max(0.0, val)))


def _named_cdf(dist: str, params: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    if dist in ("exponential", "expon"):
        (rate,) = params
        return lambda x: -np.expm1(-rate * np.maximum(x, 0.0))
    if dist in ("normal", "norm"):
        mean, var = params
        sd = math.sqrt(var)
        return lambda x: 0.5 * special.erfc(-(x - mean) / (sd * math.sqrt(2.0)))
    if dist == "uniform":
        lo, hi = params
        return lambda x: np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    raise ValueError(f"unknown distribution {dist!r}")


def ks_statistic(sample: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    f = cdf(x)
    up = np.max(np.arange(1, n + 1) / n - f)
    down = np.max(f - np.arange(n) / n)
    return float(max(up, down))


def ks_test(sample, dist: str | Callable, *params: float,
            level: float = DEFAULT_LEVEL, name: str | None = None) -> TestReport:
    """One-sample KS test with the asymptotic Kolmogorov p-value.

    ``dist`` is ``"exponential"`` (rate), ``"normal"`` (mean, variance),
    ``"uniform"`` (lo, hi) or a vectorized cdf.
    """
    sample = np.asarray(sample, dtype=float)
    n = len(sample)
    if n < 20:
        raise TooFewSamples(f"KS test needs n >= 20, got {n}")
    cdf = dist if callable(dist) else _named_cdf(dist, params)
    d = ks_statistic(sample, cdf)
    label = name or f"ks[{dist if isinstance(dist, str) else 'cdf'}{tuple(params)}]"
    return TestReport(label, d, kolmogorov_sf(math.sqrt(n) * d), n, level)


def binomial_test(successes: int, n: int, p0: float,
                  level: float = DEFAULT_LEVEL, name: str = "binomial") -> TestReport:
    """Exact two-sided binomial test."""
    if n < 1:
        raise ValueError("n must be >= 1")
    res = sps.binomtest(int(successes), int(n), p0)
    return TestReport(name, successes / n, float(res.pvalue), int(n), level)


@dataclass(frozen=True)
class BatchMeansCI:
    mean: float
    halfwidth: float
    stderr: float
    batch_means: np.ndarray

    def covers(self, value: float) -> bool:
        return abs(self.mean - value) <= self.halfwidth


def batch_means_ci(values, batches: int = 32, durations=None,
                   confidence: float = 0.95) -> BatchMeansCI:
    """Batch-means confidence interval for the mean of a (possibly time-weighted) series.

    With ``durations`` the series is piecewise constant in time, ``values[i]``
    holding for ``durations[i]``; batches then split the total time evenly.
    """
    if batches < 8:
        raise TooFewBatches(f"need >= 8 batches, got {batches}")
    v = np.asarray(values, dtype=float)
    if durations is None:
        if len(v) < batches:
            raise TooFewSamples("fewer observations than batches")
        bm = np.array([b.mean() for b in np.array_split(v, batches)])
    else:
        d = np.asarray(durations, dtype=float)
        edges = np.concatenate(([0.0], np.cumsum(d)))
        area = np.concatenate(([0.0], np.cumsum(v * d)))
        cuts = np.linspace(0.0, edges[-1], batches + 1)
        bm = np.diff(np.interp(cuts, edges, area)) / np.diff(cuts)
    mean = float(bm.mean())
    se = float(bm.std(ddof=1) / math.sqrt(batches))
    q = float(sps.t.ppf(0.5 + confidence / 2.0, batches - 1))
    return BatchMeansCI(mean, q * se, se, bm)


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float


def slope_fit(points, model: str = "linear") -> Fit:
    """Least-squares line; ``model="power"`` fits log y against log x (slope = exponent)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise DegenerateFit("need at least 3 points")
    x, y = pts[:, 0], pts[:, 1]
    if model == "power":
        if np.any(x <= 0) or np.any(y <= 0):
            raise DegenerateFit("power-law fit needs positive data")
        x, y = np.log(x), np.log(y)
    elif model != "linear":
        raise ValueError(f"unknown model {model!r}")
    if np.ptp(x) == 0:
        raise DegenerateFit("all x equal")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - intercept - slope * x) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return Fit(slope, intercept, r2)


def ratio_estimate(num, den) -> tuple[float, float]:
    """Ratio of sums with a delta-method standard error from i.i.d. pairs."""
    a = np.asarray(num, dtype=float)
    b = np.asarray(den, dtype=float)
    n = len(a)
    r = float(a.sum() / b.sum())
    if n < 2:
        return r, float("nan")
    d = a - r * b
    se = math.sqrt(float(np.sum(d * d)) / (n * (n - 1))) / float(b.mean())
    return r, se

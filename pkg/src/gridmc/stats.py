"""Blackout statistics: EENS, cause histograms, complementary cumulative
frequencies and their Poisson confidence intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .components import CAUSES, OutageCause

ENERGY = "energy"
MAX_DEMAND = "max-demand"


@dataclass
class BlackoutRecord:
    start: float  # hours
    end: float
    energy_by_cause: np.ndarray  # MWh, indexed by OutageCause.value
    max_unserved: float  # MW
    year: int = 0
    truncated: bool = False

    @property
    def energy(self) -> float:
        return float(np.sum(self.energy_by_cause))

    def size(self, metric: str = ENERGY) -> float:
        if metric == ENERGY:
            return self.energy
        if metric == MAX_DEMAND:
            return self.max_unserved
        raise ValueError(f"unknown size metric {metric!r}")


# Chi-square quantiles -----------------------------------------------------

def _gamma_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(100_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction for Q(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 100_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma function P(a, x)."""
    if a <= 0:
        raise ValueError("a must be > 0")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def gamma_q(a: float, x: float) -> float:
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def chi2_cdf(x: float, df: float) -> float:
    return gamma_p(df / 2.0, x / 2.0)


def chi2_ppf(p: float, df: float) -> float:
    """Quantile of the chi-square distribution by bracketed bisection."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if df <= 0:
        raise ValueError("degrees of freedom must be > 0")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return math.inf
    # Work on the smaller tail for accuracy.
    upper_tail = p > 0.5
    target = 1.0 - p if upper_tail else p

    def tail(x):
        return gamma_q(df / 2.0, x / 2.0) if upper_tail else gamma_p(df / 2.0, x / 2.0)

    lo, hi = 0.0, max(df, 1.0)
    if upper_tail:
        while tail(hi) > target:
            lo, hi = hi, hi * 2.0
    else:
        while tail(hi) < target:
            lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = tail(mid)
        if (val > target) == upper_tail:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def poisson_confidence_interval(total: int, n_years: int, confidence: float = 0.90) -> tuple[float, float]:
    """Two-sided interval for a yearly Poisson rate from `total` events in `n_years`."""
    if n_years < 1:
        raise ValueError("need at least one simulated year")
    if total < 0:
        raise ValueError("event count must be >= 0")
    alpha = 1.0 - confidence
    lower = 0.0 if total == 0 else chi2_ppf(alpha / 2.0, 2.0 * total) / (2.0 * n_years)
    upper = chi2_ppf(1.0 - alpha / 2.0, 2.0 * (total + 1)) / (2.0 * n_years)
    return lower, upper


# Frequency curves ---------------------------------------------------------

@dataclass
class FrequencyCurve:
    thresholds: np.ndarray
    frequency: np.ndarray  # events per year with size > threshold
    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray  # total events above threshold over all years
    metric: str = ENERGY
    confidence: float = 0.90


def frequency_curve(
    records: Iterable[BlackoutRecord],
    n_years: int,
    thresholds: Sequence[float] | None = None,
    metric: str = ENERGY,
    confidence: float = 0.90,
) -> FrequencyCurve:
    """Mean yearly number of events strictly larger than each threshold."""
    if n_years < 1:
        raise ValueError("need at least one simulated year")
    sizes = np.sort(np.array([r.size(metric) for r in records], dtype=float))
    th = default_thresholds(sizes) if thresholds is None else np.asarray(thresholds, dtype=float)
    counts = len(sizes) - np.searchsorted(sizes, th, side="right")
    uniq = {int(c): poisson_confidence_interval(int(c), n_years, confidence) for c in np.unique(counts)}
    ci = [uniq[int(c)] for c in counts]
    return FrequencyCurve(
        th,
        counts / n_years,
        np.array([c[0] for c in ci]),
        np.array([c[1] for c in ci]),
        counts,
        metric,
        confidence,
    )


def default_thresholds(sizes, per_decade: int = 20, floor: float = 1e-3) -> np.ndarray:
    """Log-spaced thresholds covering the observed sizes above `floor`."""
    sizes = np.asarray(sizes, dtype=float)
    pos = sizes[sizes > floor]
    if len(pos) == 0:
        return np.array([1.0])
    lo = math.floor(math.log10(pos.min()))
    hi = math.ceil(math.log10(pos.max()))
    hi = max(hi, lo + 1)
    return np.logspace(lo, hi, (hi - lo) * per_decade + 1)


def eens_by_cause(records: Iterable[BlackoutRecord], n_years: int) -> dict[OutageCause, float]:
    """Expected energy not supplied per year, split by cause (MWh/year)."""
    if n_years < 1:
        raise ValueError("need at least one simulated year")
    total = np.zeros(len(CAUSES))
    for r in records:
        total += r.energy_by_cause
    return {c: float(total[c.value]) / n_years for c in CAUSES}


def cause_histogram(records: Iterable[BlackoutRecord], edges: Sequence[float]) -> np.ndarray:
    """Counts per cause (rows) and size bin (columns).

    Each cause component of a record is binned by the energy that cause
    contributed; bins are half-open [edge_k, edge_k+1).
    """
    edges = np.asarray(edges, dtype=float)
    hist = np.zeros((len(CAUSES), len(edges) - 1), dtype=np.int64)
    for r in records:
        for c in CAUSES:
            e = r.energy_by_cause[c.value]
            if e <= 0:
                continue
            k = int(np.searchsorted(edges, e, side="right")) - 1
            if 0 <= k < len(edges) - 1:
                hist[c.value, k] += 1
    return hist


@dataclass
class StatsAccumulator:
    n_years: int = 0
    records: list[BlackoutRecord] = field(default_factory=list)
    energy_by_cause: np.ndarray = field(default_factory=lambda: np.zeros(len(CAUSES)))
    aborted: int = 0

    def add_year(self, records: Sequence[BlackoutRecord]) -> None:
        self.n_years += 1
        self.records.extend(records)
        for r in records:
            self.energy_by_cause = self.energy_by_cause + r.energy_by_cause

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        return StatsAccumulator(
            self.n_years + other.n_years,
            self.records + other.records,
            self.energy_by_cause + other.energy_by_cause,
            self.aborted + other.aborted,
        )

    def eens(self) -> dict[OutageCause, float]:
        return eens_by_cause(self.records, self.n_years)

    def curve(self, thresholds=None, metric: str = ENERGY, confidence: float = 0.90) -> FrequencyCurve:
        return frequency_curve(self.records, self.n_years, thresholds, metric, confidence)

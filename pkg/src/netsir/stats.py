"""Ensemble summary statistics and normal-approximation comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

__all__ = ["SummaryStats", "summarize", "kolmogorov_distance"]


@dataclass(frozen=True)
class SummaryStats:
    """Sample mean/sd with 95% intervals.

    The sd interval takes the square roots of the endpoints of the symmetric
    chi-square interval for the variance.
    """

    mean: float
    sd: float
    ci_low: float
    ci_high: float
    sd_ci_low: float
    sd_ci_high: float
    count: int


def summarize(samples) -> SummaryStats:
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    tq = sps.t.ppf(0.975, n - 1)
    half = tq * sd / np.sqrt(n)
    chi_lo = sps.chi2.ppf(0.975, n - 1)
    chi_hi = sps.chi2.ppf(0.025, n - 1)
    var = sd * sd
    return SummaryStats(
        mean=mean,
        sd=sd,
        ci_low=mean - half,
        ci_high=mean + half,
        sd_ci_low=float(np.sqrt((n - 1) * var / chi_lo)),
        sd_ci_high=float(np.sqrt((n - 1) * var / chi_hi)),
        count=n,
    )


def kolmogorov_distance(samples, mu: float, sigma: float) -> float:
    """sup_x |empirical CDF - Normal(mu, sigma) CDF|, evaluated exactly."""
    if not sigma > 0.0:
        raise ValueError("sigma must be positive (point-mass reference disallowed)")
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 1:
        raise ValueError("need at least 1 sample")
    cdf = sps.norm.cdf(x, loc=mu, scale=sigma)
    upper = np.abs(np.arange(1, n + 1) / n - cdf)
    lower = np.abs(np.arange(0, n) / n - cdf)
    return float(np.maximum(upper, lower).max())

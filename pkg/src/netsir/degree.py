"""Degree distributions with finite support.

A degree distribution is a pmf p_0..p_M on {0,..,M}.  Everything downstream
(graph builders, ODE systems, variance formulas, branching approximations)
consumes the same renormalized truncated pmf, so all layers of the package
agree on one distribution.  PGF evaluations are exact finite sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "DegreeDistribution",
    "InitialInfection",
    "pgf",
    "pgf_eps",
    "moments",
    "size_biased",
    "make_poisson",
    "make_geometric",
    "make_empirical",
]

_PMF_TOL = 1e-12


@dataclass(frozen=True)
class DegreeDistribution:
    """Truncated degree pmf p_0..p_M.  Immutable after construction."""

    pmf: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pmf, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("pmf must be a non-empty 1-d vector")
        if np.any(p < 0):
            raise ValueError("pmf entries must be nonnegative")
        if abs(p.sum() - 1.0) > _PMF_TOL:
            raise ValueError(f"pmf must sum to 1 within {_PMF_TOL}, got {p.sum()!r}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "pmf", p)

    @property
    def max_degree(self) -> int:
        return self.pmf.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.pmf.size)

    @property
    def mean(self) -> float:
        return moments(self)[0]

    @property
    def variance(self) -> float:
        return moments(self)[1]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n iid degrees by inverse-cdf lookup."""
        cdf = np.cumsum(self.pmf)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(n), side="right").astype(np.int64)


@dataclass(frozen=True)
class InitialInfection:
    """Per-degree initially-infective fractions eps_0..eps_M.

    Must satisfy 0 <= eps_k <= p_k against the distribution it is used with;
    combined operations check this.
    """

    eps: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.eps, dtype=float)
        if e.ndim != 1 or e.size == 0:
            raise ValueError("eps must be a non-empty 1-d vector")
        if np.any(e < -_PMF_TOL):
            raise ValueError("eps entries must be nonnegative")
        e = np.maximum(e, 0.0)
        e.setflags(write=False)
        object.__setattr__(self, "eps", e)

    @property
    def total(self) -> float:
        """Initially-infective fraction eps = sum_k eps_k."""
        return float(self.eps.sum())

    @property
    def eps_e(self) -> float:
        """Initially-infective stub density sum_k k*eps_k."""
        k = np.arange(self.eps.size)
        return float(k @ self.eps)

    @classmethod
    def proportional(cls, dist: DegreeDistribution, fraction: float) -> "InitialInfection":
        """eps_k = fraction * p_k: infectives spread over degrees like the population."""
        if not 0.0 <= fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")
        return cls(fraction * dist.pmf)

    @classmethod
    def zero(cls, max_degree: int) -> "InitialInfection":
        return cls(np.zeros(max_degree + 1))


def check_initial(dist: DegreeDistribution, init: InitialInfection) -> None:
    """Validate eps_k <= p_k and matching support."""
    if init.eps.size != dist.pmf.size:
        raise ValueError("initial-infection vector length must match pmf length")
    if np.any(init.eps > dist.pmf + 1e-10):
        raise ValueError("eps_k must not exceed p_k")


def poly_deriv(coeffs: np.ndarray, s: float, order: int) -> float:
    """order-th derivative of sum_k c_k s^k, exact for the finite support.

    Internal: no cap on order (the closed-form solutions need arbitrary
    orders); the public pgf/pgf_eps enforce order <= 3.
    """
    c = np.asarray(coeffs, dtype=float)
    m = c.size - 1
    if order > m:
        return 0.0
    k = np.arange(order, m + 1)
    # falling factorial k_(order) via gammaln keeps k up to 50+ overflow-safe
    if order == 0:
        fall = np.ones_like(k, dtype=float)
    else:
        fall = np.exp(gammaln(k + 1) - gammaln(k - order + 1))
    d = fall * c[order:]
    return float(np.polynomial.polynomial.polyval(s, d))


def _check_pgf_args(s: float, order: int) -> None:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if order not in (0, 1, 2, 3):
        raise ValueError(f"derivative order must be in 0..3, got {order}")


def pgf(dist: DegreeDistribution, s: float, order: int = 0) -> float:
    """f_D^(order)(s) = sum_k k_(order) p_k s^(k-order)."""
    _check_pgf_args(s, order)
    return poly_deriv(dist.pmf, s, order)


def pgf_eps(dist: DegreeDistribution, init: InitialInfection, s: float, order: int = 0) -> float:
    """Deflated generating function derivative with coefficients p_k - eps_k."""
    _check_pgf_args(s, order)
    check_initial(dist, init)
    return poly_deriv(dist.pmf - init.eps, s, order)


def moments(dist: DegreeDistribution) -> tuple[float, float]:
    """(mean, variance) via mu = f'(1), sigma2 = f''(1) + mu - mu^2."""
    mu = poly_deriv(dist.pmf, 1.0, 1)
    sigma2 = poly_deriv(dist.pmf, 1.0, 2) + mu - mu * mu
    return mu, sigma2


def size_biased(dist: DegreeDistribution) -> DegreeDistribution:
    """Distribution of (neighbour degree - 1): q_k = (k+1) p_{k+1} / mu."""
    mu = moments(dist)[0]
    if mu <= 0.0:
        raise ValueError("size-biased distribution undefined for zero-mean degree")
    if dist.max_degree == 0:
        raise ValueError("size-biased distribution undefined for point mass at 0")
    k1 = np.arange(1, dist.pmf.size)
    q = k1 * dist.pmf[1:] / mu
    return DegreeDistribution(q / q.sum())


def make_poisson(lam: float, max_degree: int) -> DegreeDistribution:
    """Poisson(lam) truncated at max_degree and renormalized."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    k = np.arange(max_degree + 1)
    logp = -lam + k * np.log(lam) - gammaln(k + 1)
    p = np.exp(logp)
    return DegreeDistribution(p / p.sum())


def make_geometric(p: float, max_degree: int) -> DegreeDistribution:
    """Geometric on {0,1,...}: p_k = p(1-p)^k, truncated and renormalized."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    k = np.arange(max_degree + 1)
    pmf = p * (1.0 - p) ** k
    return DegreeDistribution(pmf / pmf.sum())


def make_empirical(degree_sequence) -> DegreeDistribution:
    """Empirical pmf of an observed degree sequence."""
    seq = np.asarray(degree_sequence, dtype=np.int64)
    if seq.size == 0:
        raise ValueError("degree sequence must be non-empty")
    if np.any(seq < 0):
        raise ValueError("degrees must be nonnegative")
    counts = np.bincount(seq)
    return DegreeDistribution(counts / seq.size)

"""Early-phase branching approximation and major-outbreak probabilities.

An infective with k susceptible neighbours infects a mixed-binomial number
of them: success probability beta/(beta+omega) (1 - e^{-(beta+omega) I})
given the infectious period I ~ Exp(gamma).  The "modified" variant trades
dropping for a faster recovery, (gamma+omega, 0), which leaves the offspring
mean unchanged but increases its spread; the dropping model therefore has
the larger major-outbreak probability.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .degree import DegreeDistribution, size_biased
from .deterministic import r0
from .model import ModelParams

__all__ = [
    "OffspringModel",
    "escape_probabilities",
    "offspring_pgf_k",
    "offspring_pgf_k_direct",
    "generation_pgf",
    "extinction_prob",
    "pmaj",
    "ordering_check",
    "OrderingReport",
]


@dataclass(frozen=True)
class OffspringModel:
    """Offspring law of the early epidemic: dropping or increased-recovery."""

    dist: DegreeDistribution
    params: ModelParams
    variant: str = "dropping"

    def __post_init__(self):
        if self.variant not in ("dropping", "modified"):
            raise ValueError("variant must be 'dropping' or 'modified'")

    def effective_params(self) -> ModelParams:
        return self.params if self.variant == "dropping" else self.params.modified()


def escape_probabilities(model: OffspringModel, r_max: int) -> np.ndarray:
    """P_r = P(no one in a fixed set of r neighbours is infected), r = 0..r_max.

    Dropping: binomial expansion of (p_w + (1-p_w) e^{-(beta+omega) I})^r
    into exponential moments E[e^{-i(beta+omega) I}] = gamma/(gamma +
    i(beta+omega)).  Modified: (gamma+omega)/((gamma+omega) + r beta).
    """
    eff = model.effective_params()
    b, g, o = eff.beta, eff.gamma, eff.omega
    a = b + o
    r = np.arange(r_max + 1)
    if b == 0.0 or a == 0.0:
        return np.ones(r_max + 1)
    if model.variant == "modified" or o == 0.0:
        denom = g + r * b
        out = np.where(denom > 0, g / np.where(denom > 0, denom, 1.0), 1.0)
        out[0] = 1.0
        return out
    pw = eff.p_omega
    emom = g / (g + r * a) if g > 0 else (r == 0).astype(float)
    pr = np.empty(r_max + 1)
    for rr in range(r_max + 1):
        j = np.arange(rr + 1)
        pr[rr] = float(binom.pmf(j, rr, 1.0 - pw) @ emom[: rr + 1])
    return pr


def _binom_weights(kmax: int, s: float) -> np.ndarray:
    """W[k, r] = C(k, r) (1-s)^r s^(k-r), zero above the diagonal."""
    w = np.zeros((kmax + 1, kmax + 1))
    k = np.arange(kmax + 1)
    if s <= 0.0:
        w[k, k] = 1.0
        return w
    if s >= 1.0:
        w[:, 0] = 1.0
        return w
    kk, rr = np.meshgrid(k, k, indexing="ij")
    mask = rr <= kk
    logw = np.where(
        mask,
        gammaln(kk + 1) - gammaln(rr + 1) - gammaln(kk - rr + 1)
        + rr * np.log1p(-s) + (kk - rr) * np.log(s),
        -np.inf,
    )
    return np.exp(logw)


def _mixed_pgf(mix: np.ndarray, pr: np.ndarray, s: float) -> float:
    """sum_k mix_k f_k(s) with f_k(s) = sum_r C(k,r) P_r (1-s)^r s^(k-r)."""
    kmax = mix.size - 1
    w = _binom_weights(kmax, s)
    return float(mix @ (w @ pr[: kmax + 1]))


def offspring_pgf_k(model: OffspringModel, k: int, s: float) -> float:
    """PGF of the offspring count of an infective with k susceptible
    neighbours, via the factorial-moment expansion; every term is a
    binomial pmf value times an escape probability, stable for k up to 50+."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if k == 0:
        return 1.0
    pr = escape_probabilities(model, k)
    mix = np.zeros(k + 1)
    mix[k] = 1.0
    return _mixed_pgf(mix, pr, s)


def offspring_pgf_k_direct(model: OffspringModel, k: int, s: float) -> float:
    """Direct expansion f_k(s) = sum_j C(k,j) E[(1-q)^(k-j) q^j] s^j.

    Alternating signs make this route ill-conditioned for large k; it is the
    independent cross-check for moderate k, not the production path.
    """
    eff = model.effective_params()
    b, g, o = eff.beta, eff.gamma, eff.omega
    a = b + o
    if k == 0 or b == 0.0:
        return 1.0  # no neighbours, or no transmission at all
    pw = eff.p_omega

    def emom(m):
        return g / (g + m * a) if g > 0 else (1.0 if m == 0 else 0.0)

    total = 0.0
    for j in range(k + 1):
        # E[(p_w + (1-p_w)u)^(k-j) ((1-p_w)(1-u))^j], u = e^{-aI}
        moment = 0.0
        for aa in range(k - j + 1):
            for bb in range(j + 1):
                moment += (
                    comb(k - j, aa)
                    * comb(j, bb)
                    * pw ** (k - j - aa)
                    * (1.0 - pw) ** (aa + j)
                    * (-1.0) ** bb
                    * emom(aa + bb)
                )
        total += comb(k, j) * moment * s**j
    return total


def _generation_mixes(model: OffspringModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    initial = model.dist.pmf
    later_raw = size_biased(model.dist).pmf
    later = np.zeros(initial.size)
    later[: later_raw.size] = later_raw
    pr = escape_probabilities(model, initial.size - 1)
    return initial, later, pr


def generation_pgf(model: OffspringModel, s: float, generation: str = "later") -> float:
    """Offspring PGF mixed over the degree law: the initial generation mixes
    over p_k, later generations over the forward-degree law (k+1)p_{k+1}/mu."""
    initial, later, pr = _generation_mixes(model)
    if generation == "initial":
        return _mixed_pgf(initial, pr, s)
    if generation == "later":
        return _mixed_pgf(later, pr, s)
    raise ValueError("generation must be 'initial' or 'later'")


def extinction_prob(model: OffspringModel) -> float:
    """Smallest fixed point of the later-generation PGF on [0, 1]."""
    if r0(model.dist, model.params) <= 1.0:
        return 1.0
    _, later, pr = _generation_mixes(model)
    lo, hi = 0.0, 1.0 - 1e-9
    if _mixed_pgf(later, pr, hi) - hi >= 0.0:
        return 1.0
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if _mixed_pgf(later, pr, mid) - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pmaj(model: OffspringModel, n_initial: int = 1) -> float:
    """Major-outbreak probability with n_initial independent initial lineages."""
    if n_initial < 1:
        raise ValueError("n_initial must be >= 1")
    if r0(model.dist, model.params) <= 1.0:
        return 0.0
    initial, later, pr = _generation_mixes(model)
    sigma = extinction_prob(model)
    return 1.0 - _mixed_pgf(initial, pr, sigma) ** n_initial


@dataclass(frozen=True)
class OrderingReport:
    r0: float
    sigma_dropping: float
    sigma_modified: float
    pmaj_dropping: float
    pmaj_modified: float
    n_initial: int

    @property
    def ordering_holds(self) -> bool:
        return self.pmaj_dropping >= self.pmaj_modified


def ordering_check(
    dist: DegreeDistribution, beta: float, gamma: float, omega: float, n_initial: int = 1
) -> OrderingReport:
    """Major-outbreak probabilities of the dropping model vs the
    increased-recovery model; dropping is never smaller."""
    params = ModelParams(beta=beta, gamma=gamma, omega=omega)
    basic = r0(dist, params)
    drop = OffspringModel(dist, params, "dropping")
    mod = OffspringModel(dist, params, "modified")
    sd = extinction_prob(drop)
    sm = extinction_prob(mod)
    return OrderingReport(
        r0=basic,
        sigma_dropping=sd,
        sigma_modified=sm,
        pmaj_dropping=pmaj(drop, n_initial),
        pmaj_modified=pmaj(mod, n_initial),
        n_initial=n_initial,
    )

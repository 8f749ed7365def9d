"""Gaussian fluctuations around the deterministic limit.

Temporal side: the covariance matrix Sigma(t) of the sqrt(N)-scaled
deviations solves dSigma/dt = G(w) + J(w) Sigma + Sigma J(w)^T along the
deterministic trajectory, where J is the drift Jacobian and G sums the
outer products of the jump vectors weighted by their intensities.  Molloy-
Reed networks start from Sigma(0) = 0, iid-degree (NSW) networks from the
multinomial initial covariance.

Final-size side: explicit asymptotic variances, with four quadratures over
the transformed-time variable for the dropping model, fully closed forms
without dropping, and the giant-component specialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad, solve_ivp

from .degree import DegreeDistribution, InitialInfection, check_initial, moments, poly_deriv
from .deterministic import DEFAULT_ATOL, DeterministicState, final_size, r0, realtime_rhs
from .errors import NumericsError
from .model import ModelParams

__all__ = [
    "JumpSet",
    "jump_set",
    "drift",
    "drift_enumerated",
    "jacobian",
    "g_matrix",
    "solve_sigma",
    "SigmaSolution",
    "nsw_sigma0",
    "VarianceResult",
    "sigma2_mr_final",
    "sigma2_nsw_final",
    "sigma2_mr_nodrop",
    "sigma2_nsw_nodrop",
    "giant_component_stats",
    "GiantComponentStats",
]


@dataclass(frozen=True)
class JumpSet:
    """All jump vectors of the effective-degree chain for max degree M.

    Row r of `vectors` is the state change of jump r (dimension 2(M+1)+1,
    ordered x_0..x_M, y_0..y_M, z_E); kinds/is_/js identify the transition
    family and its type indices.
    """

    max_degree: int
    vectors: np.ndarray = field(repr=False)
    kinds: np.ndarray = field(repr=False)
    is_: np.ndarray = field(repr=False)
    js: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 2 * (self.max_degree + 1) + 1

    def intensities(self, w: np.ndarray, params: ModelParams) -> np.ndarray:
        """beta_l(w) for every jump, in row order."""
        m1 = self.max_degree + 1
        k = np.arange(m1, dtype=float)
        x = w[:m1]
        y = w[m1 : 2 * m1]
        z = w[-1]
        eta = k @ x + k @ y + z
        if eta <= 0:
            raise NumericsError("eta_E <= 0: intensities undefined")
        u = (k * y)[1:]  # i y_i, i = 1..M
        v = (k * x)[1:]  # j x_j, j = 1..M
        b, g, o = params.beta, params.gamma, params.omega
        out = [
            (b * np.outer(u, v) / eta).ravel(),
            ((b + o) * np.outer(u, u) / eta).ravel(),
            (o * np.outer(u, v) / eta).ravel(),
            (b + o) * u * z / eta,
            g * y,
        ]
        return np.concatenate(out)


@lru_cache(maxsize=8)
def jump_set(max_degree: int) -> JumpSet:
    m = max_degree
    m1 = m + 1
    d = 2 * m1 + 1
    ix = lambda i: i
    iy = lambda i: m1 + i
    iz = 2 * m1
    rows = []
    kinds = []
    is_ = []
    js = []

    def add(kind, i, j, entries):
        vec = np.zeros(d)
        for pos, val in entries:
            vec[pos] += val
        rows.append(vec)
        kinds.append(kind)
        is_.append(i)
        js.append(j)

    for i in range(1, m1):  # infective infects a susceptible
        for j in range(1, m1):
            add(1, i, j, [(iy(i), -1), (iy(i - 1), 1), (ix(j), -1), (iy(j - 1), 1)])
    for i in range(1, m1):  # edge formed between two infectives
        for j in range(1, m1):
            add(2, i, j, [(iy(i), -1), (iy(i - 1), 1), (iy(j), -1), (iy(j - 1), 1)])
    for i in range(1, m1):  # infective warns a susceptible: edge dropped
        for j in range(1, m1):
            add(3, i, j, [(iy(i), -1), (iy(i - 1), 1), (ix(j), -1), (ix(j - 1), 1)])
    for i in range(1, m1):  # edge formed to a recovered individual
        add(4, i, -1, [(iy(i), -1), (iy(i - 1), 1), (iz, -1)])
    for i in range(m1):  # recovery releases i stubs
        add(5, i, -1, [(iy(i), -1), (iz, i)])

    return JumpSet(
        max_degree=m,
        vectors=np.array(rows),
        kinds=np.array(kinds),
        is_=np.array(is_),
        js=np.array(js),
    )


def _state_vector(state) -> np.ndarray:
    if isinstance(state, DeterministicState):
        return state.as_vector()
    return np.asarray(state, dtype=float)


def drift(state, params: ModelParams) -> np.ndarray:
    """Closed-form drift of the effective-degree chain."""
    w = _state_vector(state)
    m1 = (w.size - 1) // 2
    k = np.arange(m1, dtype=float)
    eta = k @ w[:m1] + k @ w[m1 : 2 * m1] + w[-1]
    if eta <= 0:
        raise NumericsError("eta_E <= 0: drift undefined")
    return realtime_rhs(w, params.beta, params.gamma, params.omega)


def drift_enumerated(state, params: ModelParams) -> np.ndarray:
    """sum_l l beta_l(w) by direct enumeration over the jump set."""
    w = _state_vector(state)
    m = (w.size - 1) // 2 - 1
    jumps = jump_set(m)
    return jumps.vectors.T @ jumps.intensities(w, params)


def jacobian(state, params: ModelParams) -> np.ndarray:
    """Analytic partial derivatives of the drift."""
    w = _state_vector(state)
    m1 = (w.size - 1) // 2
    d = w.size
    k = np.arange(m1, dtype=float)
    x = w[:m1]
    y = w[m1 : 2 * m1]
    z = w[-1]
    x_e = k @ x
    y_e = k @ y
    eta = x_e + y_e + z
    if eta <= 0:
        raise NumericsError("eta_E <= 0: jacobian undefined")
    rho = y_e / eta
    b, g, o = params.beta, params.gamma, params.omega
    bo = b + o

    # drift pieces: F_x = a*rho, F_y = b_ + rho*c - g*y, F_z = g*y_e - bo*rho*z
    def up(vv):
        out = np.zeros_like(vv)
        out[:-1] = k[1:] * vv[1:]
        return out

    a_vec = -bo * k * x + o * up(x)
    b_vec = bo * (up(y) - k * y)
    c_vec = b_vec + b * up(x)

    drho_x = -rho * k / eta
    drho_y = k * (1.0 - rho) / eta
    drho_z = -rho / eta

    J = np.zeros((d, d))
    sl_x = slice(0, m1)
    sl_y = slice(m1, 2 * m1)

    # d a_i / d x_j and the analogous bidiagonal stencils
    diag_i = np.arange(m1)
    J[sl_x, sl_x] += rho * np.diag(-bo * k)
    J[diag_i[:-1], diag_i[1:] + 0] += rho * o * k[1:]
    J[sl_x, sl_x] += np.outer(a_vec, drho_x)
    J[sl_x, sl_y] += np.outer(a_vec, drho_y)
    J[sl_x, d - 1 : d] += a_vec[:, None] * drho_z

    J[sl_y, sl_x] += np.outer(c_vec, drho_x)
    J[diag_i[:-1] + m1, diag_i[1:]] += rho * b * k[1:]
    J[sl_y, sl_y] += (1.0 + rho) * np.diag(-bo * k)
    J[diag_i[:-1] + m1, diag_i[1:] + m1] += (1.0 + rho) * bo * k[1:]
    J[sl_y, sl_y] += np.outer(c_vec, drho_y) - g * np.eye(m1)
    J[sl_y, d - 1 : d] += c_vec[:, None] * drho_z

    J[d - 1, sl_x] = bo * z * rho * k / eta
    J[d - 1, sl_y] = g * k - bo * z * k * (1.0 - rho) / eta
    J[d - 1, d - 1] = -bo * rho * (1.0 - z / eta)
    return J


def g_matrix(state, params: ModelParams) -> np.ndarray:
    """G(w) = sum_l l l^T beta_l(w), assembled over the jump set."""
    w = _state_vector(state)
    m = (w.size - 1) // 2 - 1
    jumps = jump_set(m)
    bl = jumps.intensities(w, params)
    L = jumps.vectors
    return (L * bl[:, None]).T @ L


def nsw_sigma0(dist: DegreeDistribution, eps: float) -> np.ndarray:
    """Initial covariance for iid degrees with an eps fraction initially
    infective (chosen uniformly): multinomial blocks for x and y, zero x-y
    cross terms and zero z_E row/column."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    p = dist.pmf
    m1 = p.size
    d = 2 * m1 + 1
    block = np.diag(p) - np.outer(p, p)
    out = np.zeros((d, d))
    out[:m1, :m1] = (1.0 - eps) * block
    out[m1 : 2 * m1, m1 : 2 * m1] = eps * block
    return out


class SigmaSolution:
    """Co-integrated deterministic trajectory and covariance matrix."""

    def __init__(self, t: np.ndarray, states: np.ndarray, sigmas: np.ndarray, max_degree: int):
        self.t = t
        self.states = states
        self.sigmas = sigmas
        self.max_degree = max_degree

    @property
    def m1(self) -> int:
        return self.max_degree + 1

    def state(self, idx: int) -> DeterministicState:
        w = self.states[idx]
        return DeterministicState(t=float(self.t[idx]), x=w[: self.m1], y=w[self.m1 : 2 * self.m1], z_e=float(w[-1]))

    def var_s(self) -> np.ndarray:
        return self.sigmas[:, : self.m1, : self.m1].sum(axis=(1, 2))

    def var_i(self) -> np.ndarray:
        return self.sigmas[:, self.m1 : 2 * self.m1, self.m1 : 2 * self.m1].sum(axis=(1, 2))

    def sd_i(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.var_i(), 0.0))

    def sd_s(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.var_s(), 0.0))

    def y_total(self) -> np.ndarray:
        return self.states[:, self.m1 : 2 * self.m1].sum(axis=1)


def solve_sigma(
    dist: DegreeDistribution,
    init: InitialInfection,
    params: ModelParams,
    t_end: float,
    tol: float = 1e-7,
    sigma0: Optional[np.ndarray] = None,
    t_eval=None,
) -> SigmaSolution:
    """Integrate the deterministic system together with the covariance ODE.

    sigma0 = None means the prescribed-degree case Sigma(0) = 0; pass
    nsw_sigma0(...) for iid degrees.
    """
    check_initial(dist, init)
    m1 = dist.max_degree + 1
    d = 2 * m1 + 1
    if sigma0 is None:
        sigma0 = np.zeros((d, d))
    if sigma0.shape != (d, d):
        raise ValueError("sigma0 dimension mismatch")
    b, g, o = params.beta, params.gamma, params.omega
    w0 = np.concatenate([dist.pmf - init.eps, init.eps, [0.0], sigma0.ravel()])

    def rhs(t, v):
        w = v[:d]
        sig = v[d:].reshape(d, d)
        dw = realtime_rhs(w, b, g, o)
        J = jacobian(w, params)
        G = g_matrix(w, params)
        dsig = G + J @ sig + sig @ J.T
        return np.concatenate([dw, dsig.ravel()])

    sol = solve_ivp(rhs, (0.0, t_end), w0, method="RK45", rtol=tol, atol=DEFAULT_ATOL, t_eval=t_eval)
    if not sol.success:
        raise NumericsError(f"covariance ODE integration failed: {sol.message}")
    states = sol.y[:d].T
    sigmas = sol.y[d:].T.reshape(-1, d, d)
    return SigmaSolution(sol.t, states, sigmas, dist.max_degree)


@dataclass(frozen=True)
class VarianceResult:
    """Asymptotic variance of N^{-1/2} * final size, with its pieces."""

    sigma2: float
    sigma2_mr: float
    sigma2_0: Optional[float]
    b_tilde: Optional[float]
    z: float
    rho: float
    components: dict


def _require_supercritical(dist, init_or_trace, params):
    fs = final_size(dist, init_or_trace, params)
    if fs.below_threshold:
        raise NumericsError("below threshold: R0 <= 1, no major outbreak to scale")
    if fs.z <= 0.0:
        raise NumericsError("z = 0: transformed duration infinite, variance formula invalid")
    return fs


def sigma2_mr_final(
    dist: DegreeDistribution, init_or_trace: Optional[InitialInfection], params: ModelParams
) -> VarianceResult:
    """Explicit final-size variance on a prescribed-degree network.

    Four closed-form terms plus adaptive quadratures I_A..I_D over
    v in [z, 1].  With init_or_trace=None the epidemic starts from a trace
    of infection and the plain generating function is used throughout.
    """
    if params.beta <= 0:
        raise ValueError("beta must be positive")
    fs = _require_supercritical(dist, init_or_trace, params)
    coeffs = dist.pmf if init_or_trace is None else dist.pmf - init_or_trace.eps
    mu, sig2 = moments(dist)
    b, g, o = params.beta, params.gamma, params.omega
    a = b + o
    z = fs.z
    pw = params.p_omega
    s = fs.s_star  # = psi~(z)

    bt = (b * ((a + g) * z - g) / a * mu) / (z * (b * poly_deriv(coeffs, s, 2) - (a + g) * mu))

    t1 = 2.0 * (a + g) * (g - a - (a + g) * z) / a**2 * mu * bt**2 * z**2 * (1.0 - z)
    t2 = g / (b * a) * mu * bt**2 * z * (b - (2.0 * b + o) * z)
    t3 = g / (b * (2.0 * a + g)) * bt**2 * z**2 * (b * (sig2 + mu**2) + o * mu)
    t4 = -g * ((a + g) * z - g) * z / ((2.0 * a + g) * a) * mu * bt

    def psi1(v):
        return pw + (1.0 - pw) * z / v

    def psi2(v):
        return v * psi1(v) ** 2 + pw * (1.0 - v)

    def psi3(v):
        return psi1(v) - bt * z / v

    def fA(v):
        return (o * (psi3(v) - 1.0) ** 2 + b * psi3(v) ** 2) * poly_deriv(coeffs, psi2(v), 1)

    def fB(v):
        return psi1(v) * (psi1(v) - 1.0) * (1.0 - psi3(v)) * poly_deriv(coeffs, psi2(v), 2)

    def fC(v):
        return psi1(v) ** 2 * (bt * z / v - 2.0 * psi3(v)) * poly_deriv(coeffs, psi2(v), 2)

    def fD(v):
        return (o * (psi1(v) - 1.0) ** 2 + b * psi1(v) ** 2) * psi1(v) ** 2 * poly_deriv(coeffs, psi2(v), 3)

    opts = dict(epsabs=1e-10, epsrel=1e-10, limit=200)
    i_a = quad(fA, z, 1.0, **opts)[0] / a
    i_b = 2.0 * o * z * bt / a * quad(fB, z, 1.0, **opts)[0]
    i_c = b * z * bt / a * quad(fC, z, 1.0, **opts)[0]
    i_d = z**2 * bt**2 / a * quad(fD, z, 1.0, **opts)[0]

    sigma2 = t1 + t2 + t3 + t4 + i_a + i_b + i_c + i_d
    comps = {"T1": t1, "T2": t2, "T3": t3, "T4": t4, "I_A": i_a, "I_B": i_b, "I_C": i_c, "I_D": i_d}
    return VarianceResult(
        sigma2=float(sigma2), sigma2_mr=float(sigma2), sigma2_0=None,
        b_tilde=float(bt), z=z, rho=fs.rho, components=comps,
    )


def sigma2_nsw_final(dist: DegreeDistribution, params: ModelParams) -> VarianceResult:
    """Final-size variance on an iid-degree network (trace of infection):
    the prescribed-degree variance plus the degree-randomness contribution."""
    mr = sigma2_mr_final(dist, None, params)
    mu, sig2 = moments(dist)
    b, g, o = params.beta, params.gamma, params.omega
    a = b + o
    z, bt, rho = mr.z, mr.b_tilde, mr.rho
    s = params.p_omega + (1.0 - params.p_omega) * z
    p = dist.pmf
    c_coef = ((a + g) * z - g) / a
    s0 = (
        poly_deriv(p, s * s, 0)
        - (1.0 - rho) ** 2
        + bt**2 * s**2 * z**2 * poly_deriv(p, s * s, 2)
        + bt * poly_deriv(p, s * s, 1) * z * (z * bt - 2.0 * s)
        + bt**2 * z**2 * c_coef**2 * (sig2 + mu**2)
        - 2.0 * bt**2 * z**2 * mu * c_coef * (c_coef + (a + g) / b * s)
    )
    comps = dict(mr.components)
    comps["sigma2_0"] = float(s0)
    return VarianceResult(
        sigma2=float(mr.sigma2 + s0), sigma2_mr=mr.sigma2, sigma2_0=float(s0),
        b_tilde=bt, z=z, rho=rho, components=comps,
    )


def _nodrop_core(dist, init_or_trace, beta, gamma):
    params = ModelParams(beta=beta, gamma=gamma, omega=0.0)
    fs = _require_supercritical(dist, init_or_trace, params)
    coeffs = dist.pmf if init_or_trace is None else dist.pmf - init_or_trace.eps
    mu, sig2 = moments(dist)
    z = fs.z  # = s_star since p_omega = 0
    h = (gamma - (beta + gamma) * z) / (beta + gamma - beta * poly_deriv(coeffs, z, 2) / mu)
    return fs, coeffs, mu, sig2, z, h


def sigma2_mr_nodrop(
    dist: DegreeDistribution, init_or_trace: Optional[InitialInfection], beta: float, gamma: float
) -> VarianceResult:
    """Fully explicit final-size variance for the plain SIR epidemic
    (omega = 0) on a prescribed-degree network."""
    fs, coeffs, mu, sig2, z, h = _nodrop_core(dist, init_or_trace, beta, gamma)
    rho = fs.rho
    cg = (gamma - (beta + gamma) * z) / beta
    sigma2 = (
        1.0
        - rho
        - poly_deriv(coeffs, z * z, 0)
        - h**2 * (poly_deriv(coeffs, z * z, 1) + z * z * poly_deriv(coeffs, z * z, 2))
        + h**2 * (gamma / (2.0 * beta + gamma) * (sig2 + mu**2) + 2.0 * cg**2 * mu)
        + 2.0 * h * (z * poly_deriv(coeffs, z * z, 1) + cg * (beta + gamma) / (2.0 * beta + gamma) * mu)
    )
    return VarianceResult(
        sigma2=float(sigma2), sigma2_mr=float(sigma2), sigma2_0=None,
        b_tilde=float(h / z) if z > 0 else None, z=z, rho=rho, components={"h": float(h)},
    )


def sigma2_nsw_nodrop(dist: DegreeDistribution, beta: float, gamma: float) -> VarianceResult:
    """Fully explicit final-size variance for the plain SIR epidemic on an
    iid-degree network, trace of infection."""
    fs, coeffs, mu, sig2, z, h = _nodrop_core(dist, None, beta, gamma)
    rho = fs.rho
    cg = (gamma - (beta + gamma) * z) / beta
    sigma2 = (
        rho * (1.0 - rho)
        + 2.0 * h * cg * (beta + gamma) / (2.0 * beta + gamma) * mu
        + h**2 * (gamma / (2.0 * beta + gamma) + cg**2) * (sig2 + mu**2)
        + 2.0 * h**2 * (beta + gamma) * (gamma - (beta + gamma) * z) / beta**2 * z * mu
    )
    mr = sigma2_mr_nodrop(dist, None, beta, gamma)
    return VarianceResult(
        sigma2=float(sigma2), sigma2_mr=mr.sigma2, sigma2_0=float(sigma2 - mr.sigma2),
        b_tilde=float(h / z) if z > 0 else None, z=z, rho=rho, components={"h": float(h)},
    )


@dataclass(frozen=True)
class GiantComponentStats:
    z: float
    rho: float
    sigma2_mr_gc: float
    sigma2_nsw_gc: float
    kappa: float
    below_threshold: bool = False


def giant_component_stats(dist: DegreeDistribution) -> GiantComponentStats:
    """Giant-component fraction and its asymptotic N-scaled variances.

    A giant component exists iff kappa = E[D(D-2)] > 0; z is the unique
    root in [0,1) of mu*z = f'(z) and rho = 1 - f(z).
    """
    mu, sig2 = moments(dist)
    kappa = sig2 + mu**2 - 2.0 * mu
    if kappa <= 0:
        return GiantComponentStats(z=1.0, rho=0.0, sigma2_mr_gc=0.0, sigma2_nsw_gc=0.0,
                                   kappa=float(kappa), below_threshold=True)
    # mu*z = f'(z) is the trace final-size equation at beta=1, gamma=omega=0
    fs = final_size(dist, None, ModelParams(beta=1.0, gamma=0.0, omega=0.0))
    z = fs.z
    p = dist.pmf
    rho = 1.0 - poly_deriv(p, z, 0)
    q = 1.0 - poly_deriv(p, z, 2) / mu
    f1_z2 = poly_deriv(p, z * z, 1)
    f2_z2 = poly_deriv(p, z * z, 2)
    mr = (
        1.0
        - rho
        - poly_deriv(p, z * z, 0)
        - z * z / q * (2.0 * f1_z2 - mu)
        - z * z / q**2 * (f1_z2 + z * z * f2_z2 - 2.0 * mu * z * z)
    )
    nsw = rho * (1.0 - rho) + z * z / q * mu + z**4 / q**2 * (sig2 + mu**2 - 2.0 * mu)
    return GiantComponentStats(z=float(z), rho=float(rho), sigma2_mr_gc=float(mr),
                               sigma2_nsw_gc=float(nsw), kappa=float(kappa))

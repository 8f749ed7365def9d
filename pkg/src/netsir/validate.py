"""Cross-layer invariant suite behind the `validate` subcommand.

Quick numeric self-checks (seconds, no Monte Carlo): closed forms against
integration, clock-change compositions, drift/Jacobian consistency, PSD
structure, variance continuity, and the offspring-PGF ordering.
"""

from __future__ import annotations

import numpy as np

from . import branching, fluctuations
from .degree import InitialInfection, make_poisson
from .deterministic import (
    final_size,
    final_size_residual,
    psi,
    r0,
    solve_realtime,
    solve_theta,
    solve_transformed,
    solve_xi,
    transformed_y_e,
)
from .model import ModelParams

__all__ = ["run_validation"]


def _numeric_jacobian(w, params, h=1e-7):
    base = fluctuations.drift(w, params)
    out = np.empty((base.size, base.size))
    for j in range(w.size):
        wp = w.copy()
        wm = w.copy()
        wp[j] += h
        wm[j] -= h
        out[:, j] = (fluctuations.drift(wp, params) - fluctuations.drift(wm, params)) / (2 * h)
    return out


def run_validation(verbose: bool = False) -> bool:
    dist = make_poisson(5.0, 15)
    init = InitialInfection.proportional(dist, 0.05)
    params = ModelParams(beta=1.5, gamma=1.0, omega=1.0)
    checks: list[tuple[str, float, float]] = []  # (name, value, bound)

    # transformed closed forms vs integration
    tr = solve_transformed(dist, init, params, 2.0, t_eval=np.linspace(0, 1.2, 25))
    mu = dist.mean
    a = params.beta + params.omega
    eta_err = np.abs(tr.x_e() + tr.y_e() + tr.z_e() - mu * np.exp(-2 * a * tr.t)).max()
    checks.append(("eta_E closed form", eta_err, 1e-8))

    # composition w(t) = w~(xi(t))
    t_pts = np.linspace(0.05, 1.5, 20)
    rt = solve_realtime(dist, init, params, 2.0)
    xi = solve_xi(dist, init, params, 2.0)
    comp_err = 0.0
    for t in t_pts:
        w_rt = rt.eval(t)
        w_tr = tr.eval(min(xi.eval(t), tr.t_final))
        comp_err = max(comp_err, float(np.abs(w_rt - w_tr).max()))
    checks.append(("w(t) = w~(xi(t))", comp_err, 1e-6))

    # theta = psi o xi
    th = solve_theta(dist, params, 2.0, init=init)
    theta_err = max(
        abs(float(th.eval(t)) - float(psi(params, xi.eval(t)))) for t in t_pts
    )
    checks.append(("theta = psi(xi)", theta_err, 1e-6))

    # susceptible-trajectory invariance under (gamma, omega) <-> (gamma+omega, 0)
    grid = np.linspace(0, 2.0, 41)
    sol_d = solve_realtime(dist, init, params, 2.0, t_eval=grid)
    sol_m = solve_realtime(dist, init, params.modified(), 2.0, t_eval=grid)
    checks.append(("x(t) invariance", float(np.abs(sol_d.x_total() - sol_m.x_total()).max()), 1e-6))

    # drift closed form vs jump enumeration, Jacobian vs finite differences
    w_mid = rt.eval(0.4)
    drift_err = float(np.abs(fluctuations.drift(w_mid, params) - fluctuations.drift_enumerated(w_mid, params)).max())
    checks.append(("drift enumeration", drift_err, 1e-12))
    J = fluctuations.jacobian(w_mid, params)
    J_fd = _numeric_jacobian(w_mid, params)
    scale = max(1.0, float(np.abs(J).max()))
    checks.append(("jacobian vs finite diff", float(np.abs(J - J_fd).max()) / scale, 1e-5))

    # G PSD at a trajectory point
    G = fluctuations.g_matrix(w_mid, params)
    checks.append(("G PSD", max(0.0, -float(np.linalg.eigvalsh(G).min())), 1e-10))

    # variance continuity omega -> 0
    pois = make_poisson(5.0, 15)
    near = fluctuations.sigma2_mr_final(pois, None, ModelParams(1.5, 1.0, 1e-8)).sigma2
    nodrop = fluctuations.sigma2_mr_nodrop(pois, None, 1.5, 1.0).sigma2
    checks.append(("sigma2 continuity omega->0", abs(near - nodrop) / abs(nodrop), 1e-5))

    # offspring ordering and mean
    model_d = branching.OffspringModel(pois, ModelParams(1.5, 1.0, 2.0), "dropping")
    model_m = branching.OffspringModel(pois, ModelParams(1.5, 1.0, 2.0), "modified")
    worst = 0.0
    for k in (2, 5, 9):
        for s in np.linspace(0.0, 0.95, 12):
            worst = min(worst, branching.offspring_pgf_k(model_m, k, s) - branching.offspring_pgf_k(model_d, k, s))
    checks.append(("f_k ordering", max(0.0, -worst), 0.0 + 1e-12))
    pp = ModelParams(1.5, 1.0, 2.0)
    from .degree import size_biased

    pr = branching.escape_probabilities(model_d, pois.max_degree)
    sb = size_biased(pois)
    ftilde_slope = sum(sb.pmf[k] * k * (1.0 - pr[1]) for k in range(sb.pmf.size))
    checks.append(("f~'(1) = R0", abs(ftilde_slope - r0(pois, pp)), 1e-8))

    # final-size residual A(z) = 0
    fs = final_size(pois, None, pp)
    checks.append(("A(z) residual", abs(final_size_residual(pois, None, pp, fs.z)), 1e-10))

    # transformed y_E closed form at sampled times
    ye_err = float(np.abs(np.asarray(transformed_y_e(dist, init, params, tr.t)) - tr.y_e()).max())
    checks.append(("y~_E closed form", ye_err, 1e-8))

    ok = True
    for name, value, bound in checks:
        passed = value <= bound
        ok = ok and passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.3e} (bound {bound:.0e})")
    return ok

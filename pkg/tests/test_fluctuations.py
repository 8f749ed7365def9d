import numpy as np
import pytest

from netsir.degree import DegreeDistribution, InitialInfection, make_poisson
from netsir.errors import NumericsError
from netsir.fluctuations import (
    drift,
    drift_enumerated,
    g_matrix,
    giant_component_stats,
    jacobian,
    jump_set,
    nsw_sigma0,
    sigma2_mr_final,
    sigma2_mr_nodrop,
    sigma2_nsw_final,
    sigma2_nsw_nodrop,
    solve_sigma,
)
from netsir.model import ModelParams

from conftest import interior_state


def _random_state(m, rng):
    x = rng.random(m + 1) * 0.5
    y = rng.random(m + 1) * 0.3
    z = rng.random() * 0.2
    total = x.sum() + y.sum() + z
    return np.concatenate([x, y, [z]]) / total


def test_jump_set_shapes(poisson5):
    js = jump_set(poisson5.max_degree)
    m = poisson5.max_degree
    assert js.vectors.shape == (3 * m * m + m + (m + 1), js.dim)
    # each jump changes stub counts consistently: every pairing consumes 2 stubs
    k = np.arange(m + 1, dtype=float)
    stub_weight = np.concatenate([k, k, [1.0]])
    consumed = js.vectors @ stub_weight
    for kind, change in zip(js.kinds, consumed):
        if kind in (1, 2, 3, 4):
            assert change == pytest.approx(-2.0)
        else:
            assert change == pytest.approx(0.0)


def test_drift_zero_infection_pressure(poisson5, temporal_params):
    m1 = poisson5.max_degree + 1
    w = np.concatenate([poisson5.pmf, np.zeros(m1), [0.1]])
    f = drift(w, temporal_params)
    assert np.allclose(f[:m1], 0.0)


def test_drift_z_component(poisson5, temporal_params, eps05):
    w = np.concatenate([poisson5.pmf - eps05.eps, eps05.eps, [0.0]])
    k = np.arange(poisson5.max_degree + 1)
    y_e = float(k @ eps05.eps)
    assert drift(w, temporal_params)[-1] == pytest.approx(temporal_params.gamma * y_e, abs=1e-14)


def test_drift_matches_enumeration(poisson5, temporal_params, eps05):
    rng = np.random.default_rng(7)
    states = [_random_state(poisson5.max_degree, rng) for _ in range(5)]
    states.append(interior_state(poisson5, eps05, temporal_params))
    for w in states:
        assert np.abs(drift(w, temporal_params) - drift_enumerated(w, temporal_params)).max() < 1e-12


def test_jacobian_matches_finite_differences(poisson5, eps05, temporal_params):
    w = interior_state(poisson5, eps05, temporal_params)
    J = jacobian(w, temporal_params)
    h = 1e-7
    fd = np.empty_like(J)
    for j in range(w.size):
        wp, wm = w.copy(), w.copy()
        wp[j] += h
        wm[j] -= h
        fd[:, j] = (drift(wp, temporal_params) - drift(wm, temporal_params)) / (2 * h)
    scale = max(1.0, np.abs(J).max())
    assert np.abs(J - fd).max() / scale < 1e-5


def test_g_symmetric_psd(poisson5, eps05, temporal_params):
    w = interior_state(poisson5, eps05, temporal_params)
    G = g_matrix(w, temporal_params)
    assert np.abs(G - G.T).max() < 1e-14
    assert np.linalg.eigvalsh(G).min() > -1e-10


def test_g_recovery_only(poisson5, eps05):
    pp = ModelParams(0.0, 1.3, 0.0)
    w = np.concatenate([poisson5.pmf - eps05.eps, eps05.eps, [0.05]])
    G = g_matrix(w, pp)
    js = jump_set(poisson5.max_degree)
    expected = np.zeros_like(G)
    for row, kind, i in zip(js.vectors, js.kinds, js.is_):
        if kind == 5:
            expected += 1.3 * eps05.eps[i] * np.outer(row, row)
    assert np.abs(G - expected).max() < 1e-14
    m1 = poisson5.max_degree + 1
    assert np.abs(G[:m1, :]).max() == 0.0  # susceptible block untouched by recoveries


def test_drift_guard(poisson5, temporal_params):
    w = np.zeros(2 * (poisson5.max_degree + 1) + 1)
    with pytest.raises(NumericsError):
        drift(w, temporal_params)


def test_nsw_sigma0_structure(poisson5):
    s0 = nsw_sigma0(poisson5, 0.0)
    m1 = poisson5.max_degree + 1
    assert np.abs(s0[m1 : 2 * m1, m1 : 2 * m1]).max() == 0.0
    s0 = nsw_sigma0(poisson5, 0.05)
    # multinomial row sums vanish over the full support
    assert np.abs(s0[:m1, :m1].sum(axis=1)).max() < 1e-12
    assert np.abs(s0[m1 : 2 * m1, m1 : 2 * m1].sum(axis=1)).max() < 1e-12
    assert np.abs(s0[:m1, m1 : 2 * m1]).max() == 0.0
    assert np.abs(s0[-1, :]).max() == 0.0 and np.abs(s0[:, -1]).max() == 0.0
    point = DegreeDistribution(np.array([0.0, 0.0, 1.0]))
    assert np.abs(nsw_sigma0(point, 0.3)).max() == 0.0
    with pytest.raises(ValueError):
        nsw_sigma0(poisson5, 1.0)


def test_solve_sigma_zero_initial(poisson5, eps05, temporal_params):
    sol = solve_sigma(poisson5, eps05, temporal_params, 1.0, t_eval=np.linspace(0, 1, 5))
    assert np.abs(sol.sigmas[0]).max() == 0.0
    for sig in sol.sigmas:
        assert np.abs(sig - sig.T).max() < 1e-10
        assert np.linalg.eigvalsh(sig).min() > -1e-8


def test_solve_sigma_nsw_psd(poisson5, eps05, temporal_params):
    s0 = nsw_sigma0(poisson5, 0.05)
    sol = solve_sigma(poisson5, eps05, temporal_params, 2.0, sigma0=s0, t_eval=np.linspace(0, 2, 9))
    for sig in sol.sigmas:
        assert np.linalg.eigvalsh(sig).min() > -1e-8
    assert sol.var_i()[0] == pytest.approx(
        s0[16:32, 16:32].sum(), abs=1e-12
    )


def test_table1_nsw_sds(poisson5, geometric6, table1_params):
    v = sigma2_nsw_final(poisson5, table1_params)
    assert np.sqrt(1000 * v.sigma2) == pytest.approx(32.0, abs=0.2)
    v = sigma2_nsw_final(geometric6, table1_params)
    assert np.sqrt(1000 * v.sigma2) == pytest.approx(20.0, abs=0.2)
    v = sigma2_nsw_final(poisson5, ModelParams(1.5, 3.0, 0.0))
    assert np.sqrt(1000 * v.sigma2) == pytest.approx(37.1, abs=0.2)
    v = sigma2_nsw_final(geometric6, ModelParams(1.5, 3.0, 0.0))
    assert np.sqrt(1000 * v.sigma2) == pytest.approx(22.6, abs=0.2)


def test_sigma2_mr_omega_limit(poisson5):
    tiny = sigma2_mr_final(poisson5, None, ModelParams(1.5, 1.0, 1e-10)).sigma2
    closed = sigma2_mr_nodrop(poisson5, None, 1.5, 1.0).sigma2
    assert abs(tiny - closed) / closed < 1e-9
    near = sigma2_mr_final(poisson5, None, ModelParams(1.5, 1.0, 1e-8)).sigma2
    assert abs(near - closed) / closed < 1e-5


def test_sigma2_mr_eps_case(poisson5, eps05, table1_params):
    v = sigma2_mr_final(poisson5, eps05, table1_params)
    assert v.sigma2 > 0
    nodrop = sigma2_mr_nodrop(poisson5, eps05, 1.5, 1.0)
    assert nodrop.sigma2 > 0


def test_sigma2_below_threshold_raises(poisson5):
    with pytest.raises(NumericsError):
        sigma2_mr_nodrop(poisson5, None, 0.05, 1.0)
    with pytest.raises(NumericsError):
        sigma2_mr_final(poisson5, None, ModelParams(0.05, 1.0, 1.0))


def test_nsw_minus_mr_nonnegative(poisson5, geometric6):
    for dist in (poisson5, geometric6):
        for beta, gamma in ((1.5, 1.0), (1.0, 0.5), (2.0, 1.5)):
            nsw = sigma2_nsw_nodrop(dist, beta, gamma).sigma2
            mr = sigma2_mr_nodrop(dist, None, beta, gamma).sigma2
            assert nsw >= mr - 1e-12


def test_sigma2_0_nonnegative(poisson5, geometric6, table1_params):
    for dist in (poisson5, geometric6):
        v = sigma2_nsw_final(dist, table1_params)
        assert v.sigma2_0 >= 0.0
        assert v.sigma2 >= v.sigma2_mr


def test_giant_component_values(poisson5_wide):
    gc = giant_component_stats(poisson5_wide)
    # fixed-point oracle: z = e^{-5(1-z)}
    z = 0.0
    for _ in range(200):
        z = np.exp(-5.0 * (1.0 - z))
    assert gc.z == pytest.approx(z, abs=1e-5)
    assert gc.rho == pytest.approx(1.0 - z, abs=1e-4)


def test_giant_below_threshold():
    all_deg1 = DegreeDistribution(np.array([0.0, 1.0]))
    gc = giant_component_stats(all_deg1)
    assert gc.below_threshold and gc.rho == 0.0


def test_giant_matches_nodrop_gamma_zero(poisson5_wide, geometric6):
    for dist in (poisson5_wide, geometric6):
        gc = giant_component_stats(dist)
        mr = sigma2_mr_nodrop(dist, None, 1.0, 0.0)
        nsw = sigma2_nsw_nodrop(dist, 1.0, 0.0)
        assert mr.sigma2 == pytest.approx(gc.sigma2_mr_gc, abs=1e-10)
        assert nsw.sigma2 == pytest.approx(gc.sigma2_nsw_gc, abs=1e-10)
        assert mr.z == pytest.approx(gc.z, abs=1e-12)


def test_variance_components_reported(poisson5, table1_params):
    v = sigma2_mr_final(poisson5, None, table1_params)
    total = sum(v.components[k] for k in ("T1", "T2", "T3", "T4", "I_A", "I_B", "I_C", "I_D"))
    assert total == pytest.approx(v.sigma2, abs=1e-12)


def test_sigma2_mr_monte_carlo(poisson5, table1_params):
    # prescribed-degree network at N = 1e4, 1e4 runs, major outbreaks only
    from netsir.config import ExperimentConfig
    from netsir.sim import classify_major, run_ensemble

    theory = sigma2_mr_final(poisson5, None, table1_params).sigma2
    cfg = ExperimentConfig(
        degree_kind="poisson", degree_lambda=5.0, max_degree=15,
        beta=1.5, gamma=1.0, omega=2.0, network="mr", n=10_000,
        n_runs=10_000, i0=1, master_seed=31337,
    )
    ens = run_ensemble(cfg)
    _, major, _ = classify_major(ens, 0.15)
    emp = major.var(ddof=1) / cfg.n
    assert emp == pytest.approx(theory, rel=0.10)

import numpy as np
import pytest
from scipy.stats import ks_2samp

from netsir.config import ExperimentConfig
from netsir.degree import make_poisson
from netsir.graphs import build_mr, build_nsw, giant_component_size
from netsir.model import ModelParams
from netsir.sim import (
    classify_major,
    effective_degree_run,
    gillespie_run,
    run_ensemble,
    select_initial_mr,
)


def test_gillespie_no_transmission(poisson5):
    g = build_nsw(poisson5, 200, rng_seed=0)
    pp = ModelParams(0.0, 1.0, 0.5)
    for seed in range(5):
        tr = gillespie_run(g, pp, [3, 77, 150], seed)
        assert tr.final_size == 3


def test_gillespie_percolation_component(poisson5):
    # gamma = omega = 0: absorption only by exhausting the seed's component
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    g = build_nsw(poisson5, 2000, rng_seed=4)
    adj = coo_matrix((np.ones(g.n_edges), (g.edge_u, g.edge_v)), shape=(g.n, g.n))
    _, labels = connected_components(adj, directed=False)
    comp_sizes = np.bincount(labels)
    for seed_node in (0, 11, 500):
        tr = gillespie_run(g, ModelParams(1.0, 0.0, 0.0), [seed_node], 9)
        assert tr.final_size == comp_sizes[labels[seed_node]]


def test_gillespie_conservation_and_monotonicity(poisson5, table1_params):
    g = build_nsw(poisson5, 500, rng_seed=2)
    grid = np.linspace(0, 6, 40)
    tr = gillespie_run(g, table1_params, [0, 1, 2, 3, 4], 13, sample_grid=grid)
    assert np.all(tr.s + tr.i + tr.r == 500)
    assert np.all(np.diff(tr.s) <= 0)
    assert np.all(np.diff(tr.r) >= 0)
    assert tr.final_size == 500 - tr.s[-1]


def test_gillespie_bookkeeping_audit(poisson5, table1_params):
    g = build_nsw(poisson5, 300, rng_seed=6)
    tr = gillespie_run(g, table1_params, [0, 1, 2], 21, paranoid=True)
    assert tr.final_size >= 3


def test_gillespie_determinism(poisson5, table1_params):
    g = build_nsw(poisson5, 400, rng_seed=1)
    grid = np.linspace(0, 5, 11)
    a = gillespie_run(g, table1_params, [5, 6], 777, sample_grid=grid)
    b = gillespie_run(g, table1_params, [5, 6], 777, sample_grid=grid)
    assert a.final_size == b.final_size
    assert a.extinction_time == b.extinction_time
    assert np.array_equal(a.i, b.i)


def test_effective_degree_trivial_cases(poisson5):
    tr = effective_degree_run(poisson5, ModelParams(0.0, 1.0, 0.0), 4, 3, n=100)
    assert tr.final_size == 4
    tr = effective_degree_run(np.zeros(5, dtype=np.int64), ModelParams(1.5, 1.0, 1.0), 1, 8)
    assert tr.final_size == 1
    assert tr.extinction_time > 0.0


def test_effective_degree_per_degree_initial(poisson5):
    spec = np.zeros(16, dtype=np.int64)
    spec[5] = 2
    tr = effective_degree_run(poisson5, ModelParams(0.0, 1.0, 0.0), spec, 5, n=200)
    assert tr.final_size == 2


def test_engines_distributionally_equivalent(poisson5, temporal_params):
    n, runs, i0 = 500, 5000, 25
    fs_g = np.empty(runs)
    fs_e = np.empty(runs)
    ss = np.random.SeedSequence(314159)
    children = ss.spawn(2 * runs)
    for r in range(runs):
        g_ss, i_ss, s_ss = children[r].spawn(3)
        graph = build_nsw(poisson5, n, g_ss)
        init = np.sort(np.random.default_rng(i_ss).choice(n, size=i0, replace=False))
        fs_g[r] = gillespie_run(graph, temporal_params, init, s_ss).final_size
        fs_e[r] = effective_degree_run(poisson5, temporal_params, i0, children[runs + r], n=n).final_size
    _, pval = ks_2samp(fs_g, fs_e)
    assert pval > 0.01


def test_run_ensemble_reproduces_single_run(poisson5):
    cfg = ExperimentConfig(
        degree_kind="poisson", degree_lambda=5.0, max_degree=15,
        beta=1.5, gamma=1.0, omega=2.0, network="nsw", n=300, n_runs=1, i0=5,
        master_seed=123, t_end=3.0, grid_points=7,
    )
    ens = run_ensemble(cfg, collect_trajectories=True)
    child = np.random.SeedSequence(123).spawn(1)[0]
    g_ss, i_ss, s_ss = child.spawn(3)
    graph = build_nsw(poisson5, 300, g_ss)
    init = np.sort(np.random.default_rng(i_ss).choice(300, size=5, replace=False))
    tr = gillespie_run(graph, cfg.model_params(), init, s_ss, sample_grid=cfg.grid())
    assert ens.final_sizes[0] == tr.final_size
    assert ens.extinction_times[0] == tr.extinction_time
    assert np.array_equal(ens.trajectories[0, :, 1], tr.i)


def test_run_ensemble_deterministic(poisson5):
    cfg = ExperimentConfig(
        degree_kind="poisson", degree_lambda=5.0, max_degree=15,
        beta=1.5, gamma=1.0, omega=2.0, network="nsw", n=200, n_runs=20, i0=3, master_seed=9,
    )
    a = run_ensemble(cfg)
    b = run_ensemble(cfg)
    assert np.array_equal(a.final_sizes, b.final_sizes)
    assert np.array_equal(a.seeds, b.seeds)


def test_threads_env_var(poisson5, monkeypatch):
    cfg = ExperimentConfig(
        degree_kind="poisson", degree_lambda=5.0, max_degree=15,
        beta=1.5, gamma=1.0, omega=1.0, network="nsw", n=150, n_runs=8, i0=2, master_seed=12,
    )
    serial = run_ensemble(cfg)
    monkeypatch.setenv("NETSIR_THREADS", "3")
    threaded = run_ensemble(cfg)
    assert np.array_equal(serial.final_sizes, threaded.final_sizes)


def test_run_ensemble_thread_invariance(poisson5):
    cfg = ExperimentConfig(
        degree_kind="poisson", degree_lambda=5.0, max_degree=15,
        beta=1.5, gamma=1.0, omega=1.0, network="mr", n=200, n_runs=16, i0=3, master_seed=77,
    )
    serial = run_ensemble(cfg, n_jobs=1)
    threaded = run_ensemble(cfg, n_jobs=4)
    assert np.array_equal(serial.final_sizes, threaded.final_sizes)
    assert np.array_equal(serial.extinction_times, threaded.extinction_times)


def test_classify_major(poisson5):
    cfg = ExperimentConfig(
        degree_kind="poisson", degree_lambda=5.0, max_degree=15,
        beta=0.0, gamma=1.0, omega=0.0, network="nsw", n=100, n_runs=10, i0=1, master_seed=3,
    )
    ens = run_ensemble(cfg)
    p_hat, major, minor = classify_major(ens, 0.15)
    assert p_hat == 0.0 and major.size == 0 and minor.size == 10
    with pytest.raises(ValueError):
        classify_major(ens, 0.0)
    with pytest.raises(ValueError):
        classify_major(ens, 1.0)


def test_select_initial_mr_proportions(poisson5):
    from netsir.graphs import mr_degree_sequence

    seq = mr_degree_sequence(poisson5, 1000)
    rng = np.random.default_rng(0)
    chosen = select_initial_mr(seq, 50, rng)
    assert chosen.size == 50
    assert np.unique(chosen).size == 50
    counts = np.bincount(seq[chosen], minlength=16)
    target = 50 * np.bincount(seq, minlength=16) / 1000
    assert np.all(np.abs(counts - target) <= 1.0)


def test_increased_recovery_sd_ratio_bootstrap(poisson5):
    # dropping vs modified at the Table-1 rates: same mean level, smaller
    # major-outbreak spread for the dropping model
    n_runs = 4000
    base = dict(degree_kind="poisson", degree_lambda=5.0, max_degree=15,
                network="nsw", n=1000, n_runs=n_runs, i0=1, master_seed=60)
    drop_cfg = ExperimentConfig(**base, beta=1.5, gamma=1.0, omega=2.0)
    mod_cfg = ExperimentConfig(**base, beta=1.5, gamma=3.0, omega=0.0)
    _, major_d, _ = classify_major(run_ensemble(drop_cfg), 0.15)
    _, major_m, _ = classify_major(run_ensemble(mod_cfg), 0.15)
    rng = np.random.default_rng(17)
    boots = 2000
    ratios = np.empty(boots)
    for b in range(boots):
        sd_d = rng.choice(major_d, size=major_d.size).std(ddof=1)
        sd_m = rng.choice(major_m, size=major_m.size).std(ddof=1)
        ratios[b] = sd_d / sd_m
    assert np.quantile(ratios, 0.99) < 1.0


def test_mean_susceptible_curves_indistinguishable(poisson5):
    # with a macroscopic initial fraction the two models share the LLN limit
    n, runs = 1000, 400
    base = dict(degree_kind="poisson", degree_lambda=5.0, max_degree=15,
                network="nsw", n=n, n_runs=runs, i0=50, master_seed=31,
                t_end=3.0, grid_points=31)
    drop = run_ensemble(ExperimentConfig(**base, beta=1.5, gamma=1.0, omega=2.0), collect_trajectories=True)
    mod = run_ensemble(ExperimentConfig(**base, beta=1.5, gamma=3.0, omega=0.0), collect_trajectories=True)
    s_d = drop.trajectories[:, :, 0].astype(float)
    s_m = mod.trajectories[:, :, 0].astype(float)
    diff = np.abs(s_d.mean(axis=0) - s_m.mean(axis=0))
    se = np.sqrt(s_d.var(axis=0, ddof=1) / runs + s_m.var(axis=0, ddof=1) / runs)
    assert np.all(diff <= 4.0 * se + 1.5)


def test_initial_infective_validation(poisson5, table1_params):
    g = build_nsw(poisson5, 50, rng_seed=0)
    with pytest.raises(ValueError):
        gillespie_run(g, table1_params, [], 1)
    with pytest.raises(ValueError):
        gillespie_run(g, table1_params, [99], 1)

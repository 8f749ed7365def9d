"""Stochastic simulation of the SIR-with-dropping dynamics.

Two exact engines:

* `gillespie_run` works on a fully built configuration-model graph and keeps
  the live S-I edge multiset incrementally (event cost O(degree) amortized).
* `effective_degree_run` builds the network on the fly, pairing stubs the
  moment they transmit or warn; it is distributionally equivalent for the
  final size and never materializes the graph.

Ensembles derive one child seed per run from the master seed, so aggregates
are reproducible and independent of execution order or thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .degree import DegreeDistribution
from .errors import ConfigError
from .graphs import Graph, build_mr, build_nsw, mr_degree_sequence
from .model import ModelParams

__all__ = [
    "Trajectory",
    "RunEnsemble",
    "gillespie_run",
    "effective_degree_run",
    "run_ensemble",
    "classify_major",
    "select_initial_mr",
]


@dataclass(frozen=True)
class Trajectory:
    """One stochastic run sampled on a fixed time grid."""

    times: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    final_size: int
    extinction_time: float
    seed: int

    @property
    def n(self) -> int:
        return int(self.s[0] + self.i[0] + self.r[0]) if self.s.size else 0


@dataclass(frozen=True)
class RunEnsemble:
    """Fixed-slot aggregate of independent runs."""

    final_sizes: np.ndarray
    extinction_times: np.ndarray
    seeds: np.ndarray
    sample_grid: np.ndarray
    trajectories: Optional[np.ndarray]  # (n_runs, grid, 3) S/I/R counts
    n: int

    @property
    def n_runs(self) -> int:
        return self.final_sizes.size

    def trajectory_summary(self) -> dict[str, np.ndarray]:
        """Per-grid-point mean and sd of S, I, R across runs."""
        if self.trajectories is None:
            raise ValueError("ensemble was run without trajectory collection")
        out = {"time": self.sample_grid}
        for j, name in enumerate("sir"):
            block = self.trajectories[:, :, j]
            out[f"{name}_mean"] = block.mean(axis=0)
            out[f"{name}_sd"] = block.std(axis=0, ddof=1)
        return out


def _kernel_seed(rng_seed) -> np.uint64:
    if isinstance(rng_seed, np.random.SeedSequence):
        ss = rng_seed
    else:
        ss = np.random.SeedSequence(rng_seed)
    return ss.generate_state(1, np.uint64)[0]


def _as_grid(sample_grid) -> np.ndarray:
    if sample_grid is None:
        return np.empty(0, dtype=np.float64)
    return np.ascontiguousarray(sample_grid, dtype=np.float64)


def gillespie_run(
    graph: Graph,
    params: ModelParams,
    initial_infectives,
    rng_seed,
    sample_grid=None,
    paranoid: bool = False,
) -> Trajectory:
    """Exact event-driven run on a built graph.

    Rates: beta per live S-I edge (with multiplicity), omega per live S-I
    edge, gamma per infective.  Dropped edges are removed permanently.
    The run ends when no infectives remain; final_size counts everyone ever
    infected, initial infectives included.
    """
    initial = np.unique(np.asarray(initial_infectives, dtype=np.int64))
    if initial.size == 0:
        raise ValueError("need at least one initial infective")
    if initial.min() < 0 or initial.max() >= graph.n:
        raise ValueError("initial infectives must be node indices")
    grid = _as_grid(sample_grid)
    seed = _kernel_seed(rng_seed)
    s, i, r, final, t_end = _kernels.gillespie_kernel(
        graph.n,
        graph.inc_ptr,
        graph.inc_eid,
        graph.inc_other,
        graph.edge_u,
        graph.edge_v,
        initial,
        params.beta,
        params.gamma,
        params.omega,
        grid,
        seed,
        paranoid,
    )
    return Trajectory(grid, s, i, r, int(final), float(t_end), int(seed))


def select_initial_mr(degree_sequence: np.ndarray, i0: int, rng: np.random.Generator) -> np.ndarray:
    """Initial infectives for a prescribed-degree network: per-degree counts
    proportional to the degree frequencies (largest-remainder rounding),
    individuals chosen uniformly within each degree class."""
    degrees = np.asarray(degree_sequence, dtype=np.int64)
    n = degrees.size
    if not 1 <= i0 <= n:
        raise ValueError("i0 must be in 1..n")
    counts = np.bincount(degrees)
    target = i0 * counts / n
    take = np.floor(target).astype(np.int64)
    short = i0 - take.sum()
    if short > 0:
        frac = target - take
        order = np.argsort(-frac)
        for k in order:
            if short == 0:
                break
            if take[k] < counts[k]:
                take[k] += 1
                short -= 1
    chosen = []
    for k, cnt in enumerate(take):
        if cnt == 0:
            continue
        pool = np.flatnonzero(degrees == k)
        chosen.append(rng.choice(pool, size=cnt, replace=False))
    return np.sort(np.concatenate(chosen))


def effective_degree_run(
    dist_or_sequence,
    params: ModelParams,
    initial_spec,
    rng_seed,
    n: Optional[int] = None,
    sample_grid=None,
) -> Trajectory:
    """Pairing-on-demand run; the network is implicit.

    `dist_or_sequence` is a DegreeDistribution (requires n, degrees sampled
    iid) or an explicit degree sequence.  `initial_spec` is either a count
    of initial infectives chosen uniformly, or a per-degree count vector.
    """
    ss = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    deg_ss, init_ss, sim_ss = ss.spawn(3)
    if isinstance(dist_or_sequence, DegreeDistribution):
        if n is None:
            raise ValueError("n is required when sampling degrees from a distribution")
        degrees = dist_or_sequence.sample(n, np.random.default_rng(deg_ss))
    else:
        degrees = np.asarray(dist_or_sequence, dtype=np.int64)
    init_rng = np.random.default_rng(init_ss)
    if np.isscalar(initial_spec):
        i0 = int(initial_spec)
        if not 1 <= i0 <= degrees.size:
            raise ValueError("initial infective count out of range")
        initial = np.sort(init_rng.choice(degrees.size, size=i0, replace=False))
    else:
        per_degree = np.asarray(initial_spec, dtype=np.int64)
        chosen = []
        for k, cnt in enumerate(per_degree):
            if cnt == 0:
                continue
            pool = np.flatnonzero(degrees == k)
            if pool.size < cnt:
                raise ValueError(f"not enough degree-{k} individuals for the initial spec")
            chosen.append(init_rng.choice(pool, size=cnt, replace=False))
        if not chosen:
            raise ValueError("need at least one initial infective")
        initial = np.sort(np.concatenate(chosen))
    grid = _as_grid(sample_grid)
    seed = _kernel_seed(sim_ss)
    s, i, r, final, t_end = _kernels.effective_degree_kernel(
        degrees, initial, params.beta, params.gamma, params.omega, grid, seed
    )
    return Trajectory(grid, s, i, r, int(final), float(t_end), int(seed))


def _one_run(args):
    (
        idx,
        child,
        kind,
        dist,
        mr_degrees,
        n,
        i0,
        params,
        grid,
        collect,
    ) = args
    graph_ss, init_ss, sim_ss = child.spawn(3)
    if kind == "nsw":
        graph = build_nsw(dist, n, graph_ss)
        init_rng = np.random.default_rng(init_ss)
        initial = np.sort(init_rng.choice(n, size=i0, replace=False))
    else:
        graph = build_mr(mr_degrees, np.random.default_rng(graph_ss))
        initial = select_initial_mr(mr_degrees, i0, np.random.default_rng(init_ss))
    traj = gillespie_run(graph, params, initial, sim_ss, sample_grid=grid)
    block = np.stack([traj.s, traj.i, traj.r], axis=1) if collect else None
    return idx, traj.final_size, traj.extinction_time, traj.seed, block


def run_ensemble(
    config,
    n_runs: Optional[int] = None,
    master_seed: Optional[int] = None,
    collect_trajectories: bool = False,
    n_jobs: Optional[int] = None,
) -> RunEnsemble:
    """Independent runs with per-run seeds spawned from the master seed.

    `config` is an ExperimentConfig (see netsir.config).  Per-run seeds are
    SeedSequence children of the master seed, i.e. a hash of (master seed,
    run index); results land in fixed slots so the aggregate does not depend
    on execution order.  NETSIR_THREADS (or n_jobs) caps worker threads.
    """
    n_runs = config.n_runs if n_runs is None else n_runs
    master_seed = config.master_seed if master_seed is None else master_seed
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    dist = config.degree_distribution()
    params = config.model_params()
    n = config.n
    i0 = config.i0
    if not 1 <= i0 <= n:
        raise ConfigError("i0 must be in 1..n")
    grid = _as_grid(config.grid()) if collect_trajectories else np.empty(0)
    kind = config.network
    mr_degrees = mr_degree_sequence(dist, n) if kind == "mr" else None

    children = np.random.SeedSequence(master_seed).spawn(n_runs)
    tasks = [
        (idx, children[idx], kind, dist, mr_degrees, n, i0, params, grid, collect_trajectories)
        for idx in range(n_runs)
    ]

    final_sizes = np.zeros(n_runs, dtype=np.int64)
    ext_times = np.zeros(n_runs, dtype=np.float64)
    seeds = np.zeros(n_runs, dtype=np.uint64)
    trajs = np.zeros((n_runs, grid.size, 3), dtype=np.int64) if collect_trajectories else None

    if n_jobs is None:
        n_jobs = int(os.environ.get("NETSIR_THREADS", "1"))
    n_jobs = max(1, n_jobs)

    def _store(result):
        idx, final, ext, seed, block = result
        final_sizes[idx] = final
        ext_times[idx] = ext
        seeds[idx] = seed
        if trajs is not None:
            trajs[idx] = block

    if n_jobs == 1:
        for task in tasks:
            _store(_one_run(task))
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for result in pool.map(_one_run, tasks):
                _store(result)

    return RunEnsemble(final_sizes, ext_times, seeds, grid, trajs, n)


def classify_major(ensemble: RunEnsemble, threshold_fraction: float):
    """Split runs at threshold*N; returns (major frequency, major, minor)."""
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must lie strictly between 0 and 1")
    cut = threshold_fraction * ensemble.n
    mask = ensemble.final_sizes > cut
    p_hat = float(mask.mean())
    return p_hat, ensemble.final_sizes[mask], ensemble.final_sizes[~mask]

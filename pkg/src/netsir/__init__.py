"""Stochastic SIR network epidemics with preventive edge-dropping.

Layers: exact stochastic simulation on configuration-model networks
(`sim`, `graphs`), deterministic effective-degree limits (`deterministic`),
Gaussian fluctuation theory and final-size variances (`fluctuations`),
branching-process outbreak probabilities (`branching`), and an experiment
CLI (`cli`).
"""

from .branching import OffspringModel, ordering_check, pmaj
from .config import ExperimentConfig
from .degree import (
    DegreeDistribution,
    InitialInfection,
    make_empirical,
    make_geometric,
    make_poisson,
    moments,
    pgf,
    pgf_eps,
    size_biased,
)
from .deterministic import (
    FinalSizeResult,
    closed_forms,
    final_size,
    invariance_check,
    malthusian,
    r0,
    solve_realtime,
    solve_theta,
    solve_transformed,
    solve_xi,
)
from .fluctuations import (
    giant_component_stats,
    nsw_sigma0,
    sigma2_mr_final,
    sigma2_mr_nodrop,
    sigma2_nsw_final,
    sigma2_nsw_nodrop,
    solve_sigma,
)
from .graphs import Graph, build_mr, build_nsw, giant_component_size
from .model import ModelParams
from .sim import RunEnsemble, Trajectory, classify_major, effective_degree_run, gillespie_run, run_ensemble
from .stats import kolmogorov_distance, summarize

__version__ = "0.1.0"

__all__ = [
    "DegreeDistribution",
    "InitialInfection",
    "ExperimentConfig",
    "FinalSizeResult",
    "Graph",
    "ModelParams",
    "OffspringModel",
    "RunEnsemble",
    "Trajectory",
    "build_mr",
    "build_nsw",
    "classify_major",
    "closed_forms",
    "effective_degree_run",
    "final_size",
    "giant_component_size",
    "giant_component_stats",
    "gillespie_run",
    "invariance_check",
    "kolmogorov_distance",
    "make_empirical",
    "make_geometric",
    "make_poisson",
    "malthusian",
    "moments",
    "nsw_sigma0",
    "ordering_check",
    "pgf",
    "pgf_eps",
    "pmaj",
    "r0",
    "run_ensemble",
    "sigma2_mr_final",
    "sigma2_mr_nodrop",
    "sigma2_nsw_final",
    "sigma2_nsw_nodrop",
    "size_biased",
    "solve_realtime",
    "solve_sigma",
    "solve_theta",
    "solve_transformed",
    "solve_xi",
    "summarize",
]

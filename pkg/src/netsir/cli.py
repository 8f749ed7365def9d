"""Experiment runner: subcommand dispatch, CSV emission, one-line summaries.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
from scipy import stats as sps

from . import branching, fluctuations
from .config import ExperimentConfig, parse_degree_flag
from .degree import InitialInfection
from .deterministic import final_size, r0, solve_realtime
from .errors import ConfigError, NetsirError, NumericsError
from .model import ModelParams
from .sim import classify_major, run_ensemble
from .stats import summarize

__all__ = ["run_cli", "main"]


def _add_degree_args(p: argparse.ArgumentParser):
    p.add_argument("--degree", required=True, help="poisson:LAMBDA | geometric:P | empirical:FILE")
    p.add_argument("--max-degree", type=int, default=15, help="truncation degree M (default 15)")


def _add_rate_args(p: argparse.ArgumentParser):
    p.add_argument("--beta", type=float, required=True, help="infection rate per S-I edge")
    p.add_argument("--gamma", type=float, required=True, help="recovery rate per infective")
    p.add_argument("--omega", type=float, default=0.0, help="edge-dropping rate per S-I edge")


def _dist_params(args):
    _, dist = parse_degree_flag(args.degree, args.max_degree)
    return dist, ModelParams(beta=args.beta, gamma=args.gamma, omega=args.omega)


def _cmd_final_size(args) -> int:
    dist, params = _dist_params(args)
    init = InitialInfection.proportional(dist, args.eps) if args.eps > 0 else None
    fs = final_size(dist, init, params)
    flag = " (below threshold)" if fs.below_threshold else ""
    print(f"rho = {fs.rho:.6f}  s = {fs.s_star:.6f}  z = {fs.z:.6f}  tau_tilde = {fs.tau_tilde:.6f}{flag}")
    return 0


def _cmd_variance(args) -> int:
    dist, params = _dist_params(args)
    nsw = fluctuations.sigma2_nsw_final(dist, params)
    model = "dropping" if params.omega > 0 else "no-drop"
    print("model,dist,beta,gamma,omega,z,rho,sigma2_mr,sigma2_0,sigma2_nsw")
    print(
        f"{model},{args.degree},{params.beta},{params.gamma},{params.omega},"
        f"{nsw.z:.10g},{nsw.rho:.10g},{nsw.sigma2_mr:.10g},{nsw.sigma2_0:.10g},{nsw.sigma2:.10g}"
    )
    return 0


def _cmd_pmajor(args) -> int:
    dist, params = _dist_params(args)
    report = branching.ordering_check(dist, params.beta, params.gamma, params.omega, args.n_initial)
    print("variant,R0,sigma,p_maj")
    print(f"dropping,{report.r0:.10g},{report.sigma_dropping:.10g},{report.pmaj_dropping:.10g}")
    print(f"modified,{report.r0:.10g},{report.sigma_modified:.10g},{report.pmaj_modified:.10g}")
    return 0


def _cmd_giant(args) -> int:
    _, dist = parse_degree_flag(args.degree, args.max_degree)
    gc = fluctuations.giant_component_stats(dist)
    flag = " (below threshold)" if gc.below_threshold else ""
    print(
        f"z = {gc.z:.6f}  rho = {gc.rho:.6f}  sigma2_mr_gc = {gc.sigma2_mr_gc:.6g}  "
        f"sigma2_nsw_gc = {gc.sigma2_nsw_gc:.6g}{flag}"
    )
    return 0


def _cmd_ode(args) -> int:
    dist, params = _dist_params(args)
    init = InitialInfection.proportional(dist, args.eps)
    grid = np.linspace(0.0, args.t_end, args.points)
    sol = solve_realtime(dist, init, params, args.t_end, t_eval=grid)
    header = "t,x_total,y_total,z_total,x_E,y_E,z_E"
    m1 = dist.max_degree + 1
    if args.per_degree:
        header += "," + ",".join(f"x_{i}" for i in range(m1)) + "," + ",".join(f"y_{i}" for i in range(m1))
    lines = [header]
    xt, yt = sol.x_total(), sol.y_total()
    xe, ye, ze = sol.x_e(), sol.y_e(), sol.z_e()
    for idx, t in enumerate(sol.t):
        row = f"{t:.10g},{xt[idx]:.10g},{yt[idx]:.10g},{1.0 - xt[idx] - yt[idx]:.10g},{xe[idx]:.10g},{ye[idx]:.10g},{ze[idx]:.10g}"
        if args.per_degree:
            row += "," + ",".join(f"{v:.10g}" for v in sol.x()[idx]) + "," + ",".join(f"{v:.10g}" for v in sol.y()[idx])
        lines.append(row)
    _emit(args.out, lines)
    print(f"ode: {len(sol.t)} samples to t={sol.t_final:.4g}; final susceptible fraction {xt[-1]:.6f}")
    return 0


def _build_sim_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.degree:
        deg_fields, _ = parse_degree_flag(args.degree, args.max_degree)
        overrides.update(deg_fields)
    for name in ("beta", "gamma", "omega", "n", "n_runs", "i0", "t_end"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    if args.network:
        overrides["network"] = args.network
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.threshold is not None:
        overrides["major_threshold"] = args.threshold
    return cfg.with_overrides(**overrides)


def _cmd_simulate(args) -> int:
    cfg = _build_sim_config(args)
    collect = args.trajectory_out is not None
    ens = run_ensemble(cfg, collect_trajectories=collect)
    p_hat, major, minor = classify_major(ens, cfg.major_threshold)
    out = args.ensemble_out or cfg.out_ensemble
    if out:
        lines = ["run,seed,final_size,extinction_time"]
        for idx in range(ens.n_runs):
            lines.append(f"{idx},{ens.seeds[idx]},{ens.final_sizes[idx]},{ens.extinction_times[idx]:.10g}")
        _emit(out, lines)
    traj_out = args.trajectory_out or cfg.out_trajectory
    if collect and traj_out:
        summ = ens.trajectory_summary()
        lines = ["time,S_mean,S_sd,I_mean,I_sd,R_mean,R_sd"]
        for idx, t in enumerate(summ["time"]):
            lines.append(
                f"{t:.10g},{summ['s_mean'][idx]:.10g},{summ['s_sd'][idx]:.10g},"
                f"{summ['i_mean'][idx]:.10g},{summ['i_sd'][idx]:.10g},"
                f"{summ['r_mean'][idx]:.10g},{summ['r_sd'][idx]:.10g}"
            )
        _emit(traj_out, lines)
    print(f"runs = {ens.n_runs}  N = {ens.n}  p_major = {p_hat:.4f} (threshold {cfg.major_threshold})")
    if major.size >= 2:
        s = summarize(major)
        print(f"major final size: mean = {s.mean:.2f} ({s.ci_low:.2f},{s.ci_high:.2f})  "
              f"sd = {s.sd:.2f} ({s.sd_ci_low:.2f},{s.sd_ci_high:.2f})")
    return 0


def _cmd_compare_models(args) -> int:
    cfg = _build_sim_config(args)
    dist = cfg.degree_distribution()
    params = cfg.model_params()
    rows = {}
    for label, pp in (("dropping", params), ("modified", params.modified())):
        fs = final_size(dist, None, pp)
        var = fluctuations.sigma2_nsw_final(dist, pp)
        pm = branching.pmaj(branching.OffspringModel(dist, pp, "dropping"), cfg.i0)
        rows[label] = {
            "p_maj": pm,
            "mean": fs.rho * cfg.n,
            "sd": float(np.sqrt(var.sigma2 * cfg.n)),
        }
        if args.density_out:
            grid = np.linspace(fs.rho * cfg.n - 5 * rows[label]["sd"], fs.rho * cfg.n + 5 * rows[label]["sd"], 201)
            dens = sps.norm.pdf(grid, loc=rows[label]["mean"], scale=rows[label]["sd"])
            lines = ["x,density"] + [f"{g:.10g},{d:.10g}" for g, d in zip(grid, dens)]
            _emit(f"{args.density_out}.{label}.csv", lines)
    sim_rows = {}
    if args.simulate:
        for label, pp in (("dropping", params), ("modified", params.modified())):
            sub = cfg.with_overrides(beta=pp.beta, gamma=pp.gamma, omega=pp.omega)
            ens = run_ensemble(sub)
            p_hat, major, _ = classify_major(ens, cfg.major_threshold)
            s = summarize(major) if major.size >= 2 else None
            sim_rows[label] = (p_hat, s)
    print("quantity,dropping,modified")
    print(f"p_maj_branching,{rows['dropping']['p_maj']:.4f},{rows['modified']['p_maj']:.4f}")
    print(f"major_mean_asymptotic,{rows['dropping']['mean']:.1f},{rows['modified']['mean']:.1f}")
    print(f"major_sd_asymptotic,{rows['dropping']['sd']:.2f},{rows['modified']['sd']:.2f}")
    if sim_rows:
        dd, md = sim_rows["dropping"], sim_rows["modified"]
        print(f"p_maj_simulated,{dd[0]:.4f},{md[0]:.4f}")
        if dd[1] and md[1]:
            print(f"major_mean_simulated,{dd[1].mean:.1f} ({dd[1].ci_low:.1f},{dd[1].ci_high:.1f}),"
                  f"{md[1].mean:.1f} ({md[1].ci_low:.1f},{md[1].ci_high:.1f})")
            print(f"major_sd_simulated,{dd[1].sd:.2f} ({dd[1].sd_ci_low:.2f},{dd[1].sd_ci_high:.2f}),"
                  f"{md[1].sd:.2f} ({md[1].sd_ci_low:.2f},{md[1].sd_ci_high:.2f})")
    return 0


def _cmd_validate(args) -> int:
    from .validate import run_validation

    ok = run_validation(verbose=True)
    return 0 if ok else 3


def _emit(path, lines) -> None:
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netsir", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("final-size", help="deterministic final infected fraction")
    _add_degree_args(p)
    _add_rate_args(p)
    p.add_argument("--eps", type=float, default=0.0, help="initially infective fraction (0 = trace of infection)")
    p.set_defaults(func=_cmd_final_size)

    p = sub.add_parser("variance", help="asymptotic final-size variances")
    _add_degree_args(p)
    _add_rate_args(p)
    p.set_defaults(func=_cmd_variance)

    p = sub.add_parser("pmajor", help="branching major-outbreak probabilities")
    _add_degree_args(p)
    _add_rate_args(p)
    p.add_argument("--n-initial", type=int, default=1)
    p.set_defaults(func=_cmd_pmajor)

    p = sub.add_parser("giant", help="giant-component statistics")
    _add_degree_args(p)
    p.set_defaults(func=_cmd_giant)

    p = sub.add_parser("ode", help="solve the deterministic system, emit CSV")
    _add_degree_args(p)
    _add_rate_args(p)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--t-end", type=float, default=4.0)
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--per-degree", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ode)

    for name, helptext in (("simulate", "run a stochastic ensemble"), ("compare-models", "dropping vs increased recovery")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None, help="experiment config file")
        p.add_argument("--degree", default=None)
        p.add_argument("--max-degree", type=int, default=15)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--omega", type=float, default=None)
        p.add_argument("--network", choices=("mr", "nsw"), default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--n-runs", type=int, default=None, dest="n_runs")
        p.add_argument("--i0", type=int, default=None)
        p.add_argument("--t-end", type=float, default=None, dest="t_end")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threshold", type=float, default=None)
        if name == "simulate":
            p.add_argument("--ensemble-out", default=None)
            p.add_argument("--trajectory-out", default=None)
            p.set_defaults(func=_cmd_simulate)
        else:
            p.add_argument("--simulate", action="store_true")
            p.add_argument("--density-out", default=None)
            p.set_defaults(func=_cmd_compare_models)

    p = sub.add_parser("validate", help="run the cross-layer invariant suite")
    p.set_defaults(func=_cmd_validate)
    return parser


def run_cli(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericsError,) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except NetsirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))

"""Experiment configuration: flat `key = value` lines with dotted sections.

The format needs no parser beyond line splitting, round-trips exactly, and
covers the degree spec, model rates, network kind/size, run controls, the
sampling grid, and output paths.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .degree import DegreeDistribution, make_empirical, make_geometric, make_poisson
from .errors import ConfigError
from .model import ModelParams

__all__ = ["ExperimentConfig", "parse_degree_flag"]

_KEYMAP = {
    "degree.kind": "degree_kind",
    "degree.lambda": "degree_lambda",
    "degree.p": "degree_p",
    "degree.file": "degree_file",
    "degree.max_degree": "max_degree",
    "model.beta": "beta",
    "model.gamma": "gamma",
    "model.omega": "omega",
    "network.kind": "network",
    "network.n": "n",
    "run.n_runs": "n_runs",
    "run.i0": "i0",
    "run.seed": "master_seed",
    "run.major_threshold": "major_threshold",
    "grid.t_end": "t_end",
    "grid.points": "grid_points",
    "output.ensemble": "out_ensemble",
    "output.trajectory": "out_trajectory",
}
_REVMAP = {v: k for k, v in _KEYMAP.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    degree_kind: str = "poisson"
    degree_lambda: Optional[float] = 5.0
    degree_p: Optional[float] = None
    degree_file: Optional[str] = None
    max_degree: int = 15
    beta: float = 1.5
    gamma: float = 1.0
    omega: float = 0.0
    network: str = "nsw"
    n: int = 1000
    n_runs: int = 100
    i0: int = 5
    master_seed: int = 0
    major_threshold: float = 0.15
    t_end: float = 4.0
    grid_points: int = 81
    out_ensemble: Optional[str] = None
    out_trajectory: Optional[str] = None

    def __post_init__(self):
        if self.degree_kind not in ("poisson", "geometric", "empirical"):
            raise ConfigError(f"unknown degree kind {self.degree_kind!r}")
        if self.network not in ("mr", "nsw"):
            raise ConfigError(f"network kind must be 'mr' or 'nsw', got {self.network!r}")
        if not 0.0 < self.major_threshold < 1.0:
            raise ConfigError("major_threshold must lie strictly between 0 and 1")
        for name in ("n", "n_runs", "i0", "grid_points"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")

    def degree_distribution(self) -> DegreeDistribution:
        if self.degree_kind == "poisson":
            if self.degree_lambda is None:
                raise ConfigError("degree.lambda required for poisson")
            return make_poisson(self.degree_lambda, self.max_degree)
        if self.degree_kind == "geometric":
            if self.degree_p is None:
                raise ConfigError("degree.p required for geometric")
            return make_geometric(self.degree_p, self.max_degree)
        if self.degree_file is None:
            raise ConfigError("degree.file required for empirical")
        seq = np.loadtxt(self.degree_file, dtype=np.int64, ndmin=1)
        return make_empirical(seq)

    def model_params(self) -> ModelParams:
        return ModelParams(beta=self.beta, gamma=self.gamma, omega=self.omega)

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.grid_points)

    def degree_label(self) -> str:
        if self.degree_kind == "poisson":
            return f"poisson({self.degree_lambda})"
        if self.degree_kind == "geometric":
            return f"geometric({self.degree_p})"
        return f"empirical({self.degree_file})"

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                lines.append(f"{_REVMAP[f.name]} = none")
            else:
                lines.append(f"{_REVMAP[f.name]} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _KEYMAP:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[_KEYMAP[key]] = _coerce(_KEYMAP[key], val)
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


_INT_FIELDS = {"max_degree", "n", "n_runs", "i0", "master_seed", "grid_points"}
_FLOAT_FIELDS = {"degree_lambda", "degree_p", "beta", "gamma", "omega", "major_threshold", "t_end"}


def _coerce(field_name: str, val: str):
    if val.startswith(("'", '"')) and val.endswith(("'", '"')) and len(val) >= 2:
        val = val[1:-1]
    if val == "none":
        return None
    try:
        if field_name in _INT_FIELDS:
            return int(val)
        if field_name in _FLOAT_FIELDS:
            return float(val)
    except ValueError as exc:
        raise ConfigError(f"bad value for {field_name}: {val!r}") from exc
    return val


def parse_degree_flag(spec: str, max_degree: int) -> tuple[dict, DegreeDistribution]:
    """Parse `poisson:5`, `geometric:0.1667`, or `empirical:path` CLI specs;
    returns config field overrides and the built distribution."""
    kind, _, arg = spec.partition(":")
    if kind == "poisson":
        if not arg:
            raise ConfigError("poisson spec needs a rate, e.g. poisson:5")
        lam = float(arg)
        return (
            {"degree_kind": "poisson", "degree_lambda": lam, "degree_p": None, "max_degree": max_degree},
            make_poisson(lam, max_degree),
        )
    if kind == "geometric":
        if not arg:
            raise ConfigError("geometric spec needs a success probability, e.g. geometric:0.1667")
        p = float(arg)
        return (
            {"degree_kind": "geometric", "degree_p": p, "degree_lambda": None, "max_degree": max_degree},
            make_geometric(p, max_degree),
        )
    if kind == "empirical":
        if not arg:
            raise ConfigError("empirical spec needs a file path")
        seq = np.loadtxt(arg, dtype=np.int64, ndmin=1)
        dist = make_empirical(seq)
        return (
            {"degree_kind": "empirical", "degree_file": arg, "degree_lambda": None, "degree_p": None,
             "max_degree": dist.max_degree},
            dist,
        )
    raise ConfigError(f"unknown degree spec {spec!r}; use poisson:/geometric:/empirical:")

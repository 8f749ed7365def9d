import numpy as np
import pytest
from scipy import stats as sps

from netsir.config import ExperimentConfig, parse_degree_flag
from netsir.errors import ConfigError
from netsir.stats import kolmogorov_distance, summarize


def test_summarize_textbook():
    s = summarize([1.0, 2.0, 3.0])
    assert s.mean == pytest.approx(2.0)
    assert s.sd == pytest.approx(1.0)
    tq = sps.t.ppf(0.975, 2)
    assert s.ci_low == pytest.approx(2.0 - tq / np.sqrt(3))
    assert s.ci_high == pytest.approx(2.0 + tq / np.sqrt(3))
    assert s.ci_low <= s.mean <= s.ci_high
    assert s.count == 3


def test_summarize_sd_interval_chi2():
    x = np.arange(10.0)
    s = summarize(x)
    var = x.var(ddof=1)
    lo = np.sqrt(9 * var / sps.chi2.ppf(0.975, 9))
    hi = np.sqrt(9 * var / sps.chi2.ppf(0.025, 9))
    assert s.sd_ci_low == pytest.approx(lo)
    assert s.sd_ci_high == pytest.approx(hi)


def test_summarize_degenerate():
    s = summarize([4.0, 4.0, 4.0])
    assert s.sd == 0.0
    with pytest.raises(ValueError):
        summarize([1.0])


def test_kolmogorov_rejects_point_mass():
    with pytest.raises(ValueError):
        kolmogorov_distance([1.0, 1.0], 1.0, 0.0)


def test_kolmogorov_dkw_bound():
    rng = np.random.default_rng(0)
    x = rng.normal(3.0, 2.0, size=5000)
    assert kolmogorov_distance(x, 3.0, 2.0) < 0.03


def test_kolmogorov_exact_small_case():
    # two points at the reference median: sup gap is 0.5 at the atom
    d = kolmogorov_distance([0.0, 0.0], 0.0, 1.0)
    assert d == pytest.approx(0.5)


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig(
        degree_kind="geometric", degree_p=1 / 6, degree_lambda=None, max_degree=50,
        beta=1.5, gamma=1.0, omega=2.0, network="mr", n=2000, n_runs=55, i0=7,
        master_seed=99, major_threshold=0.15, t_end=3.5, grid_points=41,
        out_ensemble="ens.csv",
    )
    text = cfg.to_text()
    again = ExperimentConfig.from_text(text)
    assert again == cfg
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    assert ExperimentConfig.load(path) == cfg


def test_config_comments_and_blanks():
    cfg = ExperimentConfig.from_text(
        """
        # an experiment
        degree.kind = poisson
        degree.lambda = 5.0   # mean degree
        model.beta = 1.5
        model.gamma = 1.0
        model.omega = 2.0
        """
    )
    assert cfg.degree_lambda == 5.0
    assert cfg.omega == 2.0


def test_config_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("bogus.key = 1")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("model.beta == 1")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("network.n = -5")
    with pytest.raises(ConfigError):
        ExperimentConfig(major_threshold=1.5)
    with pytest.raises(ConfigError):
        ExperimentConfig(network="ba")


def test_degree_flag_parsing(tmp_path):
    _, d = parse_degree_flag("poisson:5", 15)
    assert d.max_degree == 15
    _, d = parse_degree_flag("geometric:0.2", 30)
    assert d.pmf[0] == pytest.approx(0.2, abs=1e-3)
    seq = tmp_path / "degs.txt"
    seq.write_text("2\n3\n2\n")
    fields, d = parse_degree_flag(f"empirical:{seq}", 15)
    assert d.max_degree == 3
    with pytest.raises(ConfigError):
        parse_degree_flag("weird:1", 15)
    with pytest.raises(ConfigError):
        parse_degree_flag("poisson:", 15)


def test_config_distribution_construction():
    cfg = ExperimentConfig(degree_kind="poisson", degree_lambda=5.0, max_degree=15)
    assert cfg.degree_distribution().max_degree == 15
    cfg = ExperimentConfig(degree_kind="geometric", degree_p=0.25, max_degree=20)
    assert cfg.degree_distribution().pmf[0] == pytest.approx(0.25 / (1 - 0.75**21), abs=1e-12)
    with pytest.raises(ConfigError):
        ExperimentConfig(degree_kind="geometric", degree_p=None).degree_distribution()

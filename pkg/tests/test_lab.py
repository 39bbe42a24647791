import numpy as np
import pytest
from scipy import stats

from conftest import tail_matrix
from concentration_lab.lab import (
    CSV_VERSION, ConfigError, ExperimentConfig, load_function, monte_carlo_tail,
    parse_t_grid, reindex_experiment, rn_experiment, rows_to_csv, sample, sample_sequence,
    sample_values, save_function)
from concentration_lab.measure import (DiscreteMeasure, make_forbidden, make_markov,
                                       make_product)
from concentration_lab.metrics import FunctionTable

MEAN = lambda n: FunctionTable.from_callable(lambda x: float(np.mean(x)), n, 2)


def test_point_mass_sampler():
    p = np.zeros(27)
    p[13] = 1.0
    P = DiscreteMeasure(3, 3, p)
    for seed in range(5):
        assert sample_sequence(P, seed) == (1, 1, 1)


def test_uniform_coordinate_frequencies():
    P = make_product([[0.5, 0.5]] * 3)
    idx = sample(P, 100_000, np.random.default_rng(3))
    bits = np.stack(np.unravel_index(idx, (2, 2, 2)), axis=1)
    freq = bits.mean(axis=0)
    sigma = np.sqrt(0.25 / 100_000)
    assert np.all(np.abs(freq - 0.5) < 3 * sigma + 1e-3)


def test_forbidden_sampler_support():
    idx = sample(make_forbidden(6), 20_000, np.random.default_rng(0))
    seqs = np.stack(np.unravel_index(idx, (2,) * 6), axis=1)
    assert np.all(seqs[:, 0] == seqs[:, -1])


@pytest.mark.parametrize("P", [
    make_markov([0.3, 0.7], [[0.9, 0.1], [0.2, 0.8]], 6),
    DiscreteMeasure(3, 4, np.random.default_rng(1).dirichlet(np.ones(64))),
    make_forbidden(5),
])
def test_sampler_chi_square(P):
    idx = sample(P, 100_000, np.random.default_rng(11))
    counts = np.bincount(idx, minlength=P.size)
    assert np.all(counts[P.p == 0] == 0)
    keep = P.p > 0
    _, pval = stats.chisquare(counts[keep], 100_000 * P.p[keep] / P.p[keep].sum())
    assert pval > 1e-6


def test_worker_count_does_not_matter():
    P = make_markov([0.5, 0.5], [[0.8, 0.2], [0.3, 0.7]], 5)
    f = MEAN(5)
    a = sample_values(P, f, 50_000, seed=9, workers=1)
    b = sample_values(P, f, 50_000, seed=9, workers=3)
    assert np.array_equal(a, b)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(measure=None, metric="hamming", t_grid=[0.1, 0.1], function_seed=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(measure=None, metric="hamming", t_grid=[0.1], samples=0,
                         function_seed=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(measure=None, metric="hamming", t_grid=[0.1])
    with pytest.raises(ConfigError):
        parse_t_grid("0:1")
    np.testing.assert_allclose(parse_t_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1])


def test_product_mean_never_violated():
    n = 6
    cfg = ExperimentConfig(measure=make_product([[0.5, 0.5]] * n), metric="nhamming",
                           t_grid=np.linspace(0.02, 0.6, 15), function=MEAN(n),
                           samples=100_000, seed=1, convex=True)
    rep = monte_carlo_tail(cfg)
    assert rep.applicable["mcdiarmid"] and rep.applicable["samson"]
    assert not rep.any_violation
    assert np.all((rep.ci_low <= rep.tail) & (rep.tail <= rep.ci_high))
    assert np.all((rep.tail >= 0) & (rep.tail <= 1))


def test_copy_chain_tail_is_one():
    n = 6
    cfg = ExperimentConfig(measure=make_markov([0.5, 0.5], np.eye(2), n), metric="hamming",
                           t_grid=[0.4], function=MEAN(n), samples=20_000, seed=2)
    rep = monte_carlo_tail(cfg)
    assert rep.tail[0] == 1.0
    assert rep.meta["mean"] == 0.5
    assert "marton" not in rep.bounds          # theta = 1, no Doeblin contraction


def test_tail_beyond_diameter_is_zero():
    cfg = ExperimentConfig(measure=make_markov([0.5, 0.5], [[0.7, 0.3], [0.3, 0.7]], 4),
                           metric="hamming", t_grid=[4.5, 10.0], function_seed=0,
                           samples=5_000, seed=0)
    rep = monte_carlo_tail(cfg)
    np.testing.assert_array_equal(rep.tail, 0.0)


def test_sample_mean_when_forced():
    cfg = ExperimentConfig(measure=make_product([[0.5, 0.5]] * 4), metric="hamming",
                           t_grid=[0.5], function=MEAN(4), samples=10_000, seed=0,
                           force_sampling=True)
    rep = monte_carlo_tail(cfg)
    assert not rep.meta["mean_exact"]
    assert abs(rep.meta["mean"] - 0.5) < 5 * rep.meta["mean_stderr"]


@pytest.mark.slow
@pytest.mark.parametrize("name", ["product", "markov_0.0", "markov_0.5", "markov_0.8",
                                  "row_homogeneous", "forbidden"])
def test_standard_matrix_one_seed(name, tmp_path):
    P = tail_matrix(6)[name]
    for metric in ("hamming", "nhamming"):
        cfg = ExperimentConfig(measure=P, metric=metric, t_grid=np.linspace(0.05, 3, 12),
                               function_seed=4, samples=20_000, seed=5)
        rep = monte_carlo_tail(cfg)
        assert not rep.any_violation, rep.to_csv()


def test_csv_deterministic(tmp_path):
    args = dict(measure=make_markov([0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]], 5), metric="hamming",
                t_grid=[0.1, 0.5, 1.0], function_seed=3, samples=30_000, seed=8)
    a = monte_carlo_tail(ExperimentConfig(**args, output=tmp_path / "a.csv"))
    b = monte_carlo_tail(ExperimentConfig(**args, output=tmp_path / "b.csv", workers=2))
    ta, tb = (tmp_path / "a.csv").read_text(), (tmp_path / "b.csv").read_text()
    assert ta == tb == a.to_csv() == b.to_csv()
    assert ta.startswith(CSV_VERSION + "\n# rng: ")
    assert "marton" in a.bounds and a.meta["theta"] == pytest.approx(0.8)


def test_function_file_roundtrip(tmp_path):
    f = FunctionTable(2, 3, np.arange(9.0) / 7)
    save_function(f, tmp_path / "f.json")
    assert np.array_equal(load_function(tmp_path / "f.json").values, f.values)


def test_rn_experiment(tmp_path):
    rows = rn_experiment(4, 8, output=tmp_path / "rn.csv")
    forb = [r for r in rows if r["family"] == "forbidden"]
    rh = [r for r in rows if r["family"] == "row_homogeneous"]
    assert [r["delta_inf_norm"] for r in forb] == [4.0, 5.0, 6.0, 7.0, 8.0]
    assert all(b["R_n"] < a["R_n"] for a, b in zip(forb, forb[1:]))
    assert all(b["R_n"] > a["R_n"] for a, b in zip(rh, rh[1:]))
    text = (tmp_path / "rn.csv").read_text()
    assert text == rows_to_csv(rows) and text.startswith(CSV_VERSION)
    with pytest.raises(ConfigError):
        rn_experiment(4, 17)


def test_reindex_experiment():
    rep = reindex_experiment(6)
    assert (rep["delta_inf_norm_before"], rep["delta_inf_norm_after"]) == (6.0, 2.0)
    assert rep["exact_tail_before"] == rep["exact_tail_after"]
    assert all(a >= b for a, b in zip(rep["main_bound_before"], rep["main_bound_after"]))
    same = reindex_experiment(5, perm=[1, 2, 3, 4, 5])
    assert same["delta_inf_norm_before"] == same["delta_inf_norm_after"] == 5.0
    with pytest.raises(ConfigError):
        reindex_experiment(2)

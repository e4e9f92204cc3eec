import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gkmm import (AllZeroWeights, ConfigError, DegenerateDesign, ExperimentConfig, RngStream,
                  default_config, run_scenario)
from gkmm.synthlab import (SCENARIOS, gen_clusters, gen_gaussian_block, sinc_target, train_side,
                           weighted_regression_mae)


def test_block_mean_within_clt_bound():
    X = gen_gaussian_block([-0.5], 0.1, 200, RngStream(1))
    assert abs(X.mean() + 0.5) <= 4 * 0.1 / np.sqrt(200)
    assert abs(X.mean() + 0.5) <= 0.03


def test_single_row_block():
    assert gen_gaussian_block([1.0, 2.0], 7.5, 1, RngStream(0)).shape == (1, 2)


def test_same_seed_same_block():
    a = gen_gaussian_block([0.0, 1.0], 0.3, 50, RngStream(42))
    b = gen_gaussian_block([0.0, 1.0], 0.3, 50, RngStream(42))
    np.testing.assert_array_equal(a, b)
    c = gen_gaussian_block([0.0, 1.0], 0.3, 50, RngStream(43))
    assert c.shape == a.shape and not np.array_equal(a, c)


def test_stream_moments():
    rng = RngStream(5)
    u = rng.uniform(200_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)
    z = rng.normal(200_001)
    assert z.shape == (200_001,)
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert abs(z.std() - 1) < 0.01


def test_cluster_defaults():
    cfg = default_config("clusters")
    train, test = gen_clusters(cfg, RngStream(0))
    assert train.sizes == [200, 1000] and test.sizes == [1000, 300]
    for data, means, sds in ((train, cfg.train_means, cfg.train_stdevs),
                             (test, cfg.test_means, cfg.test_stdevs)):
        for X, m, s in zip(data.blocks, means, sds):
            n = X.shape[0]
            assert np.all(np.abs(X.mean(axis=0) - m) <= 4 * s / np.sqrt(n))
            assert np.all(np.abs(X.std(axis=0, ddof=1) / s - 1) <= 0.15)


@pytest.mark.parametrize("x, expected", [(0.0, 1.0), (1.0, 0.0), (0.5, 2 / np.pi)])
def test_sinc_values(x, expected):
    assert sinc_target(np.array([[x]]), 0.0)[0] == pytest.approx(expected, abs=1e-15)


@given(st.floats(-50, 50))
def test_sinc_even(x):
    assert sinc_target(np.array([x]), 0.0)[0] == sinc_target(np.array([-x]), 0.0)[0]


def test_sinc_noise_draws(rng):
    X = np.linspace(-1, 1, 11).reshape(-1, 1)
    a = sinc_target(X, 0.1, RngStream(3))
    b = sinc_target(X, 0.1, RngStream(3))
    np.testing.assert_array_equal(a, b)
    assert np.abs(a - np.sinc(X[:, 0])).max() > 0


def test_equal_weights_match_unweighted(rng):
    X, y = rng.normal(size=30), rng.normal(size=30)
    Xt, yt = rng.normal(size=10), rng.normal(size=10)
    assert weighted_regression_mae(X, y, Xt, yt, np.full(30, 0.37)) == weighted_regression_mae(X, y, Xt, yt)


def test_linear_data_fitted_exactly(rng):
    X = rng.normal(size=25)
    y = 2.5 * X - 1.0
    Xt = rng.normal(size=8)
    w = rng.uniform(0.1, 3.0, 25)
    assert weighted_regression_mae(X, y, Xt, 2.5 * Xt - 1.0, w) <= 1e-10


def test_weights_on_matching_regime_help():
    # two linear regimes; the test set lives in the second one
    X = np.concatenate([np.linspace(-2, 0, 40), np.linspace(0, 2, 40)])
    y = np.where(X < 0, -X, 3 * X)
    Xt = np.linspace(0.2, 1.8, 20)
    yt = 3 * Xt
    w = np.where(X < 0, 0.01, 1.0)
    # oracle: the closed-form WLS line on the matching regime alone fits it exactly
    right = X >= 0
    coef = np.polyfit(X[right], y[right], 1)
    assert np.abs(np.polyval(coef, Xt) - yt).max() < 1e-12
    assert weighted_regression_mae(X, y, Xt, yt, w) < weighted_regression_mae(X, y, Xt, yt)


@given(st.floats(1e-3, 1e3))
def test_weight_rescaling_invariance(c):
    rng = np.random.default_rng(8)
    X, y, Xt, yt = rng.normal(size=20), rng.normal(size=20), rng.normal(size=6), rng.normal(size=6)
    w = rng.uniform(0.1, 2, 20)
    a = weighted_regression_mae(X, y, Xt, yt, w)
    b = weighted_regression_mae(X, y, Xt, yt, c * w)
    assert a == pytest.approx(b, rel=1e-12)


def test_regression_errors():
    X = np.ones(5)
    with pytest.raises(DegenerateDesign):
        weighted_regression_mae(X, X, X, X)
    with pytest.raises(AllZeroWeights):
        weighted_regression_mae(np.arange(5.0), X, X, X, np.zeros(5))


def test_config_round_trip_and_unknown_keys():
    cfg = default_config("multi-both", seed=3)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**cfg.to_dict(), "colour": "red"})
    with pytest.raises(ConfigError):
        default_config("nope")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**cfg.to_dict(), "alpha": "sometimes"})


@pytest.mark.parametrize("scenario, sigma", [("multi-train", 0.1), ("multi-test", 100.0),
                                             ("multi-both", 10.0), ("clusters", 1.0)])
def test_default_configs(scenario, sigma):
    cfg = default_config(scenario)
    assert cfg.sigma == sigma and cfg.B == 1000.0


def test_multi_train_defaults():
    cfg = default_config("multi-train")
    assert cfg.train_sizes == [200, 150, 100]
    assert cfg.train_means == [-0.5, 0.5, 1.5]
    assert cfg.test_sizes == [30] and cfg.test_means == [1.0] and cfg.test_stdevs == [0.4]


@pytest.mark.parametrize("alpha, expected", [(None, 3), (0.5, 4), ("auto", 4)])
def test_train_side_variants(alpha, expected):
    cfg = ExperimentConfig.from_dict({**default_config("multi-both").to_dict(), "alpha": alpha})
    rng = RngStream(0)
    blocks = [gen_gaussian_block([m], 0.1, n, rng) for m, n in zip([0, 1, 2], [4, 3, 2])]
    from gkmm import PartitionedData
    test = PartitionedData.from_blocks([np.zeros((5, 1))])
    data = train_side(cfg, blocks, test)
    assert data.n_blocks == expected
    assert abs(data.weights.sum() - 1) <= 1e-12
    if alpha == "auto":
        np.testing.assert_allclose(data.weights, np.array([4, 3, 2, 5]) / 14, rtol=1e-15)


def test_seed_changes_samples_not_shapes():
    a = run_scenario(default_config("multi-test", seed=1))
    b = run_scenario(default_config("multi-test", seed=2))
    assert [w.shape for w in a.weights] == [w.shape for w in b.weights]
    np.testing.assert_array_equal(a.test.weights, b.test.weights)
    assert not np.array_equal(a.train_blocks[0], b.train_blocks[0])


def test_scenario_outputs(tmp_path):
    result = run_scenario(default_config("multi-train", seed=7))
    assert result.mae_weighted is not None and result.mae_unweighted is not None
    paths = result.write(tmp_path)
    rows = list(csv.reader(open(paths[0])))
    assert rows[0] == ["partition", "index", "x0", "weight"]
    assert len(rows) == 1 + 450
    summary = json.load(open(paths[1]))
    assert summary["scenario"] == "multi-train"
    assert len(summary["partitions"]) == 3


def test_scenario_rerun_is_identical(tmp_path):
    for k in range(2):
        run_scenario(default_config("multi-both", seed=4)).write(tmp_path / str(k))
    for name in ("weights.csv", "summary.json"):
        assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()


def test_all_scenarios_listed():
    assert SCENARIOS == ("clusters", "multi-train", "multi-test", "multi-both")

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gkmm import (DimensionMismatch, EmptyBlock, KernelConfig, KernelFamily, PartitionedData,
                  WeightSumError, alpha_relative_config, size_proportional_weights,
                  validate_partitions)


def blocks_of(*shapes):
    return [np.zeros(s) for s in shapes]


def test_validate_accepts_symmetric_case():
    validate_partitions(PartitionedData.from_blocks(blocks_of((2, 1), (3, 1)), [0.5, 0.5]))


def test_weights_summing_to_1_1_rejected():
    with pytest.raises(WeightSumError):
        PartitionedData.from_blocks(blocks_of((2, 1), (3, 1)), [0.6, 0.5])


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        PartitionedData.from_blocks(blocks_of((2, 1), (3, 2)), [0.5, 0.5])


def test_empty_block_rejected():
    with pytest.raises(EmptyBlock):
        PartitionedData.from_blocks(blocks_of((0, 1), (3, 1)), [0.5, 0.5])
    with pytest.raises(EmptyBlock):
        PartitionedData.from_blocks([], [])


def test_weight_outside_unit_interval():
    with pytest.raises(WeightSumError):
        PartitionedData.from_blocks(blocks_of((1, 1), (1, 1)), [1.5, -0.5])


def test_no_renormalisation():
    with pytest.raises(WeightSumError):
        PartitionedData.from_blocks(blocks_of((1, 1), (1, 1)), [0.2, 0.2])


def test_one_dimensional_block_becomes_column():
    data = PartitionedData.from_blocks([np.arange(4.0)])
    assert data.blocks[0].shape == (4, 1)
    assert data.dim == 1 and data.total == 4


def test_blocks_are_read_only():
    data = PartitionedData.from_blocks([np.ones((3, 2))])
    with pytest.raises(ValueError):
        data.blocks[0][0, 0] = 5.0


@pytest.mark.parametrize("sizes, expected", [
    ([200, 150, 100], [4 / 9, 3 / 9, 2 / 9]),
    ([5], [1.0]),
    ([1, 1, 1, 1], [0.25] * 4),
])
def test_size_proportional(sizes, expected):
    w = size_proportional_weights([np.zeros((n, 1)) for n in sizes])
    np.testing.assert_allclose(w, expected, rtol=0, atol=1e-15)


@given(st.lists(st.integers(1, 500), min_size=1, max_size=8), st.randoms())
def test_size_proportional_sum_and_permutation(sizes, rnd):
    blocks = [np.zeros((n, 1)) for n in sizes]
    w = size_proportional_weights(blocks)
    assert abs(w.sum() - 1.0) <= 8 * np.finfo(float).eps
    perm = list(range(len(sizes)))
    rnd.shuffle(perm)
    wp = size_proportional_weights([blocks[i] for i in perm])
    np.testing.assert_array_equal(wp, w[perm])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6), st.integers(1, 3))
def test_validation_matches_invariants(weights, d):
    # accepted exactly when every weight is in [0, 1] and the sum is 1 within 1e-9
    blocks = [np.zeros((2, d)) for _ in weights]
    ok = abs(sum(weights) - 1.0) <= 1e-9
    if ok:
        PartitionedData.from_blocks(blocks, weights)
    else:
        with pytest.raises(WeightSumError):
            PartitionedData.from_blocks(blocks, weights)


@pytest.mark.parametrize("gamma, alpha", [([0.25, 0.2, 0.05], 0.5), ([0.5, 0.2, 0.05], 0.25)])
def test_alpha_relative_appends_pool(gamma, alpha):
    train = [np.full((3, 1), k) for k in range(3)]
    pool = np.full((4, 1), 9.0)
    data = alpha_relative_config(train, gamma, pool, alpha)
    assert data.n_blocks == 4
    np.testing.assert_allclose(data.weights, gamma + [alpha], rtol=0, atol=0)
    np.testing.assert_array_equal(data.blocks[3], pool)
    assert abs(data.weights.sum() - 1.0) <= 1e-12


def test_alpha_zero_is_unchanged():
    X = np.arange(5.0).reshape(-1, 1)
    data = alpha_relative_config([X], [1.0], np.zeros((2, 1)), 0.0)
    assert data.n_blocks == 1
    np.testing.assert_array_equal(data.blocks[0], X)
    np.testing.assert_array_equal(data.weights, [1.0])


def test_alpha_relative_rejects_bad_gamma():
    with pytest.raises(WeightSumError):
        alpha_relative_config([np.zeros((2, 1))], [1.0], np.zeros((2, 1)), 0.5)
    with pytest.raises(ValueError):
        alpha_relative_config([np.zeros((2, 1))], [0.0], np.zeros((2, 1)), 1.0)


@settings(max_examples=50)
@given(st.lists(st.integers(1, 20), min_size=1, max_size=4), st.floats(0, 0.95))
def test_alpha_relative_total_weight(sizes, alpha):
    blocks = [np.zeros((n, 2)) for n in sizes]
    gamma = (1 - alpha) * size_proportional_weights(blocks)
    data = alpha_relative_config(blocks, gamma, np.ones((3, 2)), alpha)
    assert abs(data.weights.sum() - 1.0) <= 1e-9


def test_kernel_config_defaults():
    cfg = KernelConfig()
    assert cfg.family is KernelFamily.RBF and cfg.sigma is None
    assert KernelConfig("laplacian").family is KernelFamily.LAPLACIAN

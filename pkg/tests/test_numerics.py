import math

import numpy as np
import pytest

from models.networks import MultiHeadAttention, init_weights
from numerics import Adam, OptimizerConfig, Rng, Tensor, backward, concatenate, no_grad
from numerics import functional as F


####################################################################
# tensor and tape
####################################################################

def test_zero_sized_tensor_is_rejected():
    with pytest.raises(ValueError):
        Tensor(np.zeros((2, 0)))


def test_backward_of_sum_is_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    backward(x.sum())
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_backward_of_square_is_twice_input():
    x = Tensor(np.array([1.0, -2.0, 3.5]), requires_grad=True)
    backward((x * x).sum())
    np.testing.assert_allclose(x.grad, 2 * x.data)


def test_backward_needs_scalar_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError):
        backward(x * 2.0)


def test_backward_drops_the_tape():
    x = Tensor(np.ones(3), requires_grad=True)
    loss = (x * 3.0).sum()
    backward(loss)
    assert loss.is_leaf
    np.testing.assert_array_equal(x.grad, np.full(3, 3.0))


def test_gradients_accumulate_over_shared_inputs():
    x = Tensor(np.array([2.0]), requires_grad=True)
    backward((x * x + x).sum())
    np.testing.assert_allclose(x.grad, [5.0])


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = (x * 2.0).sum()
    assert not y.requires_grad
    assert y.is_leaf


def test_elementwise_gradcheck(gradcheck, leaf):
    x = leaf((3, 4), seed=1)
    y = Tensor(np.random.default_rng(2).uniform(1.0, 2.0, (3, 4)), requires_grad=True)

    def loss():
        return ((x * y - x / y + (x * 0.5).exp()).relu() + (y.log() * x)).mean()
    assert gradcheck(loss, [x, y]) < 1e-4


def test_matmul_gradcheck(gradcheck, leaf):
    a, b = leaf((2, 3, 4), seed=3), leaf((4, 5), seed=4)
    assert gradcheck(lambda: (a @ b).sum() * 0.3 + ((a @ b) * (a @ b)).mean(), [a, b]) < 1e-4


def test_movement_gradcheck(gradcheck, leaf):
    x = leaf((2, 3, 4), seed=5)
    w = Tensor(np.random.default_rng(6).normal(size=(2, 4, 3)))

    def loss():
        moved = x.rearrange('b t (h d) -> b h t d', h=2).swapaxes(-1, -2).reshape(2, 2, 6)
        joined = concatenate([moved, x[:, :1, :].reshape(2, 2, 2)], axis=-1)
        return (joined * joined).sum() + (x.swapaxes(1, 2) * w).sum()
    assert gradcheck(loss, [x]) < 1e-4


def test_head_merge_backward_needs_no_axis_lengths(gradcheck, leaf):
    x = leaf((2, 2, 3, 4), seed=7)
    w = Tensor(np.random.default_rng(8).normal(size=(2, 3, 8)))
    merged = x.rearrange('... h l d -> ... l (h d)')
    backward((merged * w).sum())
    np.testing.assert_array_equal(x.grad, w.data.reshape(2, 3, 2, 4).swapaxes(1, 2))
    assert gradcheck(lambda: (x.rearrange('b h l d -> b l (h d)') * w).sum(), [x]) < 1e-4


def test_embedding_gradient_scatters_into_rows():
    table = Tensor(np.random.default_rng(0).normal(size=(5, 3)), requires_grad=True)
    rows = F.embedding(table, [[1, 3, 1]])
    backward(rows.sum())
    np.testing.assert_array_equal(table.grad[:, 0], [0.0, 2.0, 0.0, 1.0, 0.0])


def test_embedding_rejects_out_of_range_index():
    table = Tensor(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        F.embedding(table, [4])


####################################################################
# softmax
####################################################################

def test_softmax_of_zeros_is_uniform():
    np.testing.assert_allclose(F.softmax(Tensor(np.zeros(4))).data, np.full(4, 0.25))


def test_softmax_of_log_weights():
    np.testing.assert_allclose(F.softmax(Tensor([math.log(1.0), math.log(3.0)])).data, [0.25, 0.75], atol=1e-12)


def test_softmax_is_stable_for_large_logits():
    out = F.softmax(Tensor([1000.0, 0.0])).data
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(1.0, abs=1e-12)


def test_softmax_rows_sum_to_one():
    x = Tensor(np.random.default_rng(7).normal(0.0, 50.0, (20, 9)))
    out = F.softmax(x, axis=-1).data
    assert np.all(out >= 0)
    np.testing.assert_allclose(out.sum(axis=-1), np.ones(20), atol=1e-12)


def test_masked_softmax_zeroes_masked_positions():
    mask = np.array([[True, False, True], [False, True, False]])
    out = F.softmax(Tensor(np.ones((2, 3))), mask=mask).data
    assert np.all(out[~mask] == 0.0)
    np.testing.assert_allclose(out.sum(axis=-1), [1.0, 1.0])


def test_softmax_mask_without_admissible_position_fails():
    with pytest.raises(ValueError):
        F.softmax(Tensor(np.ones((2, 2))), mask=np.array([[True, True], [False, False]]))


def test_softmax_gradcheck(gradcheck, leaf):
    x = leaf((3, 5), seed=8)
    w = Tensor(np.random.default_rng(9).normal(size=(3, 5)))
    mask = np.array([True, True, False, True, False])
    assert gradcheck(lambda: (F.softmax(x, mask=mask) * w).sum(), [x]) < 1e-4


####################################################################
# layer normalization
####################################################################

def test_layer_norm_of_constant_row_is_zero():
    out = F.layer_norm(Tensor(np.full((1, 4), 3.0)), np.ones(4), np.zeros(4)).data
    np.testing.assert_array_equal(out, np.zeros((1, 4)))


def test_layer_norm_of_two_values():
    out = F.layer_norm(Tensor([1.0, 3.0]), np.ones(2), np.zeros(2), eps=0).data
    np.testing.assert_allclose(out, [-1.0, 1.0])


def test_layer_norm_with_zero_gain_returns_bias():
    bias = np.array([0.5, -1.0, 2.0])
    out = F.layer_norm(Tensor(np.random.default_rng(0).normal(size=(4, 3))), np.zeros(3), bias).data
    np.testing.assert_array_equal(out, np.tile(bias, (4, 1)))


def test_layer_norm_without_eps_rejects_constant_row():
    with pytest.raises(ValueError):
        F.layer_norm(Tensor(np.ones((2, 3))), np.ones(3), np.zeros(3), eps=0)


def test_layer_norm_output_is_standardized():
    x = Tensor(np.random.default_rng(10).normal(3.0, 7.0, (50, 16)))
    out = F.layer_norm(x, np.ones(16), np.zeros(16), eps=0).data
    assert np.abs(out.mean(axis=-1)).max() <= 1e-9
    np.testing.assert_allclose(out.var(axis=-1), np.ones(50), atol=1e-9)


def test_layer_norm_gradcheck(gradcheck, leaf):
    x, gain, bias = leaf((2, 3, 6), seed=11), leaf((6,), seed=12), leaf((6,), seed=13)
    w = Tensor(np.random.default_rng(14).normal(size=(2, 3, 6)))
    assert gradcheck(lambda: (F.layer_norm(x, gain, bias) * w).sum(), [x, gain, bias]) < 1e-4


####################################################################
# cross-entropy
####################################################################

def test_cross_entropy_of_uniform_logits():
    loss = F.cross_entropy_masked(Tensor(np.zeros((1, 10))), [3], [True])
    assert loss.item() == pytest.approx(math.log(10.0), abs=1e-12)


def test_cross_entropy_of_confident_logits():
    logits = np.zeros((1, 10))
    logits[0, 3] = 100.0
    assert F.cross_entropy_masked(Tensor(logits), [3], [True]).item() < 1e-4


def test_masked_positions_do_not_contribute():
    rng = np.random.default_rng(15)
    logits = rng.normal(size=(2, 4, 7))
    targets = rng.integers(0, 7, (2, 4))
    mask = np.zeros((2, 4), dtype=bool)
    mask[1, 2] = True
    full = F.cross_entropy_masked(Tensor(logits), targets, mask).item()
    single = F.cross_entropy_masked(Tensor(logits[1:2, 2:3]), targets[1:2, 2:3], [[True]]).item()
    assert full == pytest.approx(single, abs=1e-12)


def test_cross_entropy_sum_counts_every_position():
    rng = np.random.default_rng(16)
    logits, targets = rng.normal(size=(3, 5)), rng.integers(0, 5, 3)
    mean = F.cross_entropy_masked(Tensor(logits), targets, np.ones(3, dtype=bool)).item()
    total = F.cross_entropy_masked(Tensor(logits), targets, np.ones(3, dtype=bool), reduction='sum').item()
    assert total == pytest.approx(3 * mean)


def test_cross_entropy_needs_an_unmasked_position():
    with pytest.raises(ValueError):
        F.cross_entropy_masked(Tensor(np.zeros((2, 4))), [0, 1], [False, False])


def test_cross_entropy_rejects_out_of_range_target():
    with pytest.raises(ValueError):
        F.cross_entropy_masked(Tensor(np.zeros((1, 4))), [4], [True])


def test_cross_entropy_gradcheck(gradcheck, leaf):
    logits = leaf((2, 3, 6), seed=17)
    targets = np.array([[1, 5, 0], [2, 2, 4]])
    mask = np.array([[True, True, False], [True, False, True]])
    assert gradcheck(lambda: F.cross_entropy_masked(logits, targets, mask), [logits]) < 1e-4


####################################################################
# attention
####################################################################

def test_attention_gradcheck(gradcheck, leaf):
    attention = init_weights(MultiHeadAttention(4, 2, kv_dim=3), Rng(0))
    queries, memory = leaf((1, 3, 4), seed=18), leaf((1, 2, 3), seed=19)
    mask = np.array([[[True, False], [True, True], [True, True]]])
    params = [queries, memory] + attention.parameters()
    assert gradcheck(lambda: attention(queries, memory, mask).sum()
                     + (attention(queries, memory) * attention(queries, memory)).mean(), params) < 1e-4


####################################################################
# Adam
####################################################################

def _parameter(value, grad):
    p = Tensor(np.array([value]), requires_grad=True)
    p.grad = np.array([grad])
    return p


def test_first_adam_step_moves_by_alpha():
    p = _parameter(1.0, 0.5)
    Adam([p], OptimizerConfig()).step()
    assert p.data[0] == pytest.approx(1.0 - 0.001, abs=1e-6)


def test_zero_gradient_leaves_parameter_unchanged():
    p = _parameter(2.5, 0.0)
    Adam([p], OptimizerConfig()).step()
    assert p.data[0] == 2.5


def test_adam_step_direction_follows_gradient_sign():
    for grad in (-3.0, -1e-3, 1e-3, 7.0):
        p = _parameter(0.0, grad)
        Adam([p], OptimizerConfig()).step()
        assert np.sign(p.data[0]) == -np.sign(grad)


def test_adam_with_zero_alpha_is_a_no_op():
    p = _parameter(4.0, 1.5)
    optimizer = Adam([p], OptimizerConfig(alpha=0.0))
    for _ in range(3):
        optimizer.step()
    assert p.data[0] == 4.0


def test_adam_moments_persist_between_steps():
    p = _parameter(0.0, 1.0)
    optimizer = Adam([p], OptimizerConfig())
    optimizer.step()
    p.grad = np.array([-1.0])
    optimizer.step()
    # m = 0.9 * 0.1 + 0.1 * -1
    assert optimizer.m[0][0] == pytest.approx(-0.01)
    assert optimizer.t == 2


def test_adam_rejects_missing_gradient():
    p = Tensor(np.zeros(2), requires_grad=True)
    p.grad = None
    with pytest.raises(ValueError):
        Adam([p], OptimizerConfig()).step()


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(alpha=-1.0)
    with pytest.raises(ValueError):
        OptimizerConfig(beta1=1.0)
    with pytest.raises(ValueError):
        OptimizerConfig(epsilon=0.0)


####################################################################
# random streams
####################################################################

def test_rng_is_reproducible():
    a, b = Rng(42), Rng(42)
    np.testing.assert_array_equal(a.normal(size=10), b.normal(size=10))
    np.testing.assert_array_equal(a.permutation(20), b.permutation(20))


def test_spawned_streams_differ_from_parent():
    parent = Rng(5)
    child = parent.spawn(1000)
    assert (child.seed, child.path) == (5, (1000,))
    assert not np.array_equal(Rng(5).uniform(size=8), child.uniform(size=8))
    np.testing.assert_array_equal(Rng(5).spawn(1000).uniform(size=8), Rng(5).spawn(1000).uniform(size=8))


def test_spawned_streams_do_not_reuse_other_seeds():
    for seed in range(5):
        for offset in (1, 2, 1000, 3000):
            child = Rng(seed).spawn(offset).uniform(size=8)
            assert not np.array_equal(child, Rng(seed + offset).uniform(size=8))
            assert not np.array_equal(child, Rng(seed + 1).spawn(offset).uniform(size=8))
    assert not np.array_equal(Rng(0).spawn(1).spawn(2).uniform(size=8), Rng(0).spawn(2).spawn(1).uniform(size=8))
    with pytest.raises(ValueError):
        Rng(0).spawn(-1)

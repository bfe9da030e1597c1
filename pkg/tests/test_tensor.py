"""
Tensor operations, their gradients and the optimizers.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hiegnn.core.exceptions import DimensionError, InvalidInputError
from hiegnn.nn import tensor as T
from hiegnn.nn.gradcheck import gradient_check, numeric_gradient, relative_error
from hiegnn.nn.optim import SGD, Adam, clip_grad_norm
from hiegnn.nn.parameters import ParameterRegistry
from hiegnn.nn.tensor import Tensor, backward


class TestMatmul:
    def test_identity(self):
        a = T.tensor(np.eye(2))
        b = T.tensor([[1.0, 2.0], [3.0, 4.0]])
        assert_allclose(T.matmul(a, b).data, [[1, 2], [3, 4]])

    def test_projector_selects_row(self):
        a = T.tensor([[1.0, 0.0], [0.0, 0.0]])
        b = T.tensor([[5.0, 6.0], [7.0, 8.0]])
        assert_allclose((a @ b).data, [[5, 6], [0, 0]])

    def test_gradient_matches_finite_differences(self, rng):
        a = T.tensor(rng.normal(size=(3, 4)), requires_grad=True)
        b = T.tensor(rng.normal(size=(4, 2)))
        result = gradient_check(lambda: T.sum(T.matmul(a, b)), [a], tolerance=1e-5, names=["a"])
        assert result.passed

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError, match="matmul shape mismatch"):
            T.matmul(T.tensor(np.ones((2, 3))), T.tensor(np.ones((2, 3))))


class TestSegmentSoftmax:
    def test_symmetric_scores(self):
        out = T.softmax_over_segments(T.tensor([0.0, 0.0]), [0, 0])
        assert_allclose(out.data, [0.5, 0.5])

    @pytest.mark.parametrize("x", [-40.0, 0.0, 3.5, 700.0])
    def test_singleton_segment(self, x):
        assert_allclose(T.softmax_over_segments(T.tensor([x]), [0]).data, [1.0])

    def test_known_values(self):
        out = T.softmax_over_segments(T.tensor([1.0, 2.0, 3.0]), [0, 0, 0])
        assert_allclose(out.data, [0.09003, 0.24473, 0.66524], atol=1e-5)

    def test_segments_are_independent(self):
        out = T.softmax_over_segments(T.tensor([1.0, 2.0, 3.0, 5.0]), [0, 0, 0, 1])
        assert_allclose(out.data[:3], [0.09003, 0.24473, 0.66524], atol=1e-5)
        assert out.data[3] == 1.0

    def test_large_scores_do_not_overflow(self):
        out = T.softmax_over_segments(T.tensor([1000.0, 1000.0]), [0, 0])
        assert np.all(np.isfinite(out.data))
        assert_allclose(out.data, [0.5, 0.5])

    def test_empty_scores(self):
        with pytest.raises(InvalidInputError):
            T.softmax_over_segments(T.tensor(np.zeros(0)), np.zeros(0, dtype=np.int64), 1)

    def test_empty_segment(self):
        with pytest.raises(InvalidInputError):
            T.softmax_over_segments(T.tensor([1.0, 2.0]), [0, 2], 3)

    def test_gradient(self, rng):
        scores = T.tensor(rng.normal(size=6), requires_grad=True)
        weights = rng.normal(size=6)
        segments = [0, 0, 1, 1, 1, 2]
        result = gradient_check(
            lambda: T.sum(T.mul(T.softmax_over_segments(scores, segments, 3), weights)), [scores])
        assert result.passed


class TestActivations:
    def test_leaky_relu(self):
        assert_allclose(T.leaky_relu(T.tensor([1.0, -1.0]), 0.2).data, [1.0, -0.2])
        assert_allclose(T.leaky_relu(T.tensor([0.0])).data, [0.0])

    def test_leaky_relu_gradient(self):
        x = T.tensor([-3.0], requires_grad=True)
        backward(T.sum(T.leaky_relu(x, 0.2)))
        assert_allclose(x.grad, [0.2])
        numeric = numeric_gradient(lambda: T.sum(T.leaky_relu(x, 0.2)), x)
        assert_allclose(numeric, [0.2], rtol=1e-6)

    def test_elu(self):
        assert_allclose(T.elu(T.tensor([2.0, 0.0, -1.0])).data, [2.0, 0.0, -0.63212], atol=1e-5)

    def test_log_softmax(self):
        assert_allclose(T.log_softmax(T.tensor([0.0, 0.0])).data, [-0.69315, -0.69315], atol=1e-5)
        assert_allclose(T.log_softmax(T.tensor([1.0, 2.0])).data, [-1.31326, -0.31326], atol=1e-5)

    @pytest.mark.parametrize("t", [-5.0, 0.0, 12.0])
    def test_log_softmax_shift_invariance(self, t):
        assert_allclose(T.log_softmax(T.tensor([t, t, t])).data, [-np.log(3)] * 3)

    def test_log_softmax_gradient(self, rng):
        x = T.tensor(rng.normal(size=(3, 4)), requires_grad=True)
        weights = rng.normal(size=(3, 4))
        assert gradient_check(lambda: T.sum(T.mul(T.log_softmax(x), weights)), [x]).passed


class TestSegmentReductions:
    def test_segment_sum(self):
        out = T.segment_sum(T.tensor([[1.0], [2.0], [4.0]]), [0, 1, 0], 2)
        assert_allclose(out.data, [[5.0], [2.0]])

    def test_segment_mean_of_identical_rows_is_exact(self, rng):
        row = rng.normal(size=5)
        out = T.segment_mean(T.tensor(np.tile(row, (7, 1))), np.zeros(7, dtype=np.int64), 1)
        assert np.array_equal(out.data[0], row)

    def test_segment_max_ties_share_gradient(self):
        x = T.tensor([[1.0], [1.0], [0.0]], requires_grad=True)
        backward(T.sum(T.segment_max(x, [0, 0, 0], 1)))
        assert_allclose(x.grad, [[0.5], [0.5], [0.0]])

    def test_segment_mean_gradient(self, rng):
        x = T.tensor(rng.normal(size=(5, 2)), requires_grad=True)
        weights = rng.normal(size=(2, 2))
        assert gradient_check(
            lambda: T.sum(T.mul(T.segment_mean(x, [0, 1, 0, 1, 1], 2), weights)), [x]).passed

    def test_bad_segment_ids(self):
        with pytest.raises(InvalidInputError):
            T.segment_sum(T.tensor([[1.0]]), [3], 2)


class TestBackward:
    def test_linear_loss(self, rng):
        W = T.tensor(rng.normal(size=(2, 3)), requires_grad=True)
        x = rng.normal(size=(3, 1))
        backward(T.sum(T.matmul(W, x)))
        assert_allclose(W.grad, np.tile(x.T, (2, 1)))
        numeric = numeric_gradient(lambda: T.sum(T.matmul(W, x)), W)
        assert np.max(relative_error(W.grad, numeric)) < 1e-6

    def test_zero_loss_gives_zero_grads(self, rng):
        W = T.tensor(rng.normal(size=(2, 2)), requires_grad=True)
        backward(T.mul(T.sum(T.elu(W)), 0.0))
        assert_allclose(W.grad, np.zeros((2, 2)))

    def test_reused_tensor_accumulates(self):
        x = T.tensor([3.0], requires_grad=True)
        backward(T.sum(T.mul(x, x)))
        assert_allclose(x.grad, [6.0])

    def test_repeated_gather_accumulates(self):
        table = T.tensor(np.ones((3, 2)), requires_grad=True)
        backward(T.sum(T.gather_rows(table, [0, 0, 2])))
        assert_allclose(table.grad, [[2, 2], [0, 0], [1, 1]])

    @pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.3, -2.5), (4.0, 0.0)])
    def test_gradient_is_linear_in_the_loss(self, rng, a, b):
        W0 = rng.normal(size=(3, 4))
        x = rng.normal(size=(5, 3))
        c = rng.normal(size=(5, 4))

        def losses(W):
            h = T.matmul(T.tensor(x), W)
            first = T.sum(T.mul(T.elu(h), c))
            second = T.sum(T.log_softmax(T.leaky_relu(h, 0.2)))
            return first, second

        W = T.tensor(W0, requires_grad=True)
        first, second = losses(W)
        backward(T.add(T.mul(first, a), T.mul(second, b)))
        combined = W.grad.copy()

        separate = []
        for weight, pick in ((a, 0), (b, 1)):
            W = T.tensor(W0, requires_grad=True)
            backward(T.mul(losses(W)[pick], weight))
            separate.append(W.grad if W.grad is not None else np.zeros_like(W0))
        assert_allclose(combined, separate[0] + separate[1], rtol=0, atol=1e-10)

    def test_separate_backward_calls_add_up(self, rng):
        W = T.tensor(rng.normal(size=(2, 3)), requires_grad=True)
        x = T.tensor(rng.normal(size=(3, 2)))
        backward(T.sum(T.elu(T.matmul(W, x))))
        backward(T.sum(T.mul(W, W)))
        reference = T.tensor(W.data, requires_grad=True)
        backward(T.add(T.sum(T.elu(T.matmul(reference, x))), T.sum(T.mul(reference, reference))))
        assert_allclose(W.grad, reference.grad, rtol=0, atol=1e-10)

    def test_non_scalar_loss(self):
        with pytest.raises(InvalidInputError):
            backward(T.tensor([1.0, 2.0], requires_grad=True))

    def test_constants_get_no_gradient(self):
        c = T.tensor([1.0, 2.0])
        x = T.tensor([1.0, 1.0], requires_grad=True)
        backward(T.sum(T.mul(c, x)))
        assert c.grad is None
        assert_allclose(x.grad, [1.0, 2.0])


class TestDropout:
    def test_rate_zero_is_identity(self, rng):
        x = T.tensor(rng.normal(size=(4, 4)))
        assert T.dropout(x, 0.0, training=True, rng=rng) is x

    def test_eval_mode_is_identity(self, rng):
        x = T.tensor(rng.normal(size=(4, 4)))
        assert T.dropout(x, 0.9, training=False) is x

    def test_expectation_preserved(self):
        x = T.tensor(np.ones(100_000))
        out = T.dropout(x, 0.5, training=True, rng=np.random.default_rng(7))
        assert 0.98 <= out.data.mean() <= 1.02

    def test_rate_one_rejected(self):
        with pytest.raises(InvalidInputError):
            T.dropout(T.tensor([1.0]), 1.0, training=True, rng=np.random.default_rng(0))


class TestOptimizers:
    def _registry(self):
        registry = ParameterRegistry()
        registry.create("w", np.array([1.0, -2.0]))
        return registry

    def test_sgd_step(self):
        registry = self._registry()
        SGD(registry, lr=0.1).step({"w": np.array([1.0, 1.0])})
        assert_allclose(registry["w"].data, [0.9, -2.1])

    def test_adam_first_step_moves_by_lr(self):
        registry = self._registry()
        Adam(registry, lr=0.01).step({"w": np.array([3.0, -0.5])})
        assert_allclose(registry["w"].data, [0.99, -1.99], atol=1e-6)

    def test_zero_learning_rate_is_a_no_op(self):
        registry = self._registry()
        Adam(registry, lr=0.0).step({"w": np.array([3.0, -0.5])})
        assert_allclose(registry["w"].data, [1.0, -2.0])

    def test_clip_grad_norm(self):
        grads = {"a": np.array([3.0]), "b": np.array([4.0])}
        norm = clip_grad_norm(grads, 1.0)
        assert norm == pytest.approx(5.0)
        assert_allclose(np.hypot(grads["a"], grads["b"]), [1.0], rtol=1e-9)


def test_tensor_item_requires_single_element():
    assert Tensor([2.5]).item() == 2.5
    with pytest.raises(InvalidInputError):
        Tensor([1.0, 2.0]).item()

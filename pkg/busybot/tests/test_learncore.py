import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from busybot.exceptions import ConfigurationError, ContractError, NumericError, StateError
from busybot.learncore import tensor as T
from busybot.learncore.checkpoint import load_checkpoint, save_checkpoint
from busybot.learncore.gradcheck import grad_check
from busybot.learncore.layers import MLP, Conv1d, Conv2d, Dense
from busybot.learncore.losses import loss_bce, loss_mse
from busybot.learncore.optim import Adam, AdamState, adam_step
from busybot.learncore.params import ParamSet


def _target(rng, shape):
    return rng.normal(size=shape)


class GradientTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(3)

    def assertGradientsMatch(self, params, loss_fn):
        self.assertLess(grad_check(params, loss_fn, 48, self.rng), 1e-4)

    def test_dense_and_sigmoid(self):
        params = ParamSet(self.rng)
        layer = Dense(params, "fc", 5, 3)
        x, target = self.rng.normal(size=(4, 5)), _target(self.rng, (4, 3))
        self.assertGradientsMatch(params, lambda: T.mse(T.sigmoid(layer(x)), target))

    def test_conv2d_stride_two(self):
        params = ParamSet(self.rng)
        layer = Conv2d(params, "conv", 2, 3, stride=2)
        x = self.rng.normal(size=(1, 2, 6, 6))
        target = _target(self.rng, layer(x).shape)
        self.assertGradientsMatch(params, lambda: T.mse(layer(x), target))

    def test_conv1d(self):
        params = ParamSet(self.rng)
        layer = Conv1d(params, "temporal", 3, 4)
        x = self.rng.normal(size=(2, 5, 3))
        target = _target(self.rng, layer(x).shape)
        self.assertGradientsMatch(params, lambda: T.mse(layer(x), target))

    def test_pool_and_bilinear_upsample(self):
        params = ParamSet(self.rng)
        layer = Conv2d(params, "conv", 1, 2)
        x = self.rng.normal(size=(1, 1, 4, 6))
        target = _target(self.rng, (1, 2, 4, 6))
        self.assertGradientsMatch(
            params, lambda: T.mse(T.upsample2d(T.max_pool2d(layer(x)), "bilinear"), target)
        )

    def test_softmax_and_pairwise_mlp(self):
        params = ParamSet(self.rng)
        mlp = MLP(params, "edge", [6, 4, 2])
        nodes = self.rng.normal(size=(4, 3))
        target = _target(self.rng, (4, 4, 2))
        self.assertGradientsMatch(params, lambda: T.mse(T.softmax(mlp(T.pairwise_concat(nodes))), target))

    def test_bce_gradient(self):
        params = ParamSet(self.rng)
        layer = Dense(params, "fc", 3, 1)
        x = self.rng.normal(size=(6, 3))
        target = (self.rng.random((6, 1)) > 0.5).astype(float)
        self.assertGradientsMatch(params, lambda: T.bce(T.sigmoid(layer(x)), target))

    def test_masked_mse_ignores_masked_entries(self):
        params = ParamSet(self.rng)
        weight = params.create("w", (3,))
        mask = np.array([1.0, 0.0, 1.0])
        T.backward(T.mse(weight * 2.0, np.zeros(3), mask), params)
        self.assertEqual(weight.grad[1], 0.0)
        self.assertNotEqual(weight.grad[0], 0.0)

    def test_unused_parameters_get_zero_gradients(self):
        params = ParamSet(self.rng)
        used = Dense(params, "used", 2, 1)
        params.create("idle", (3,))
        T.backward(T.mse(used(np.ones((1, 2))), np.zeros((1, 1))), params)
        np.testing.assert_array_equal(params["idle"].grad, np.zeros(3))


class ContractTests(SimpleTestCase):
    def test_backward_requires_scalar(self):
        params = ParamSet()
        w = params.create("w", (3,))
        with self.assertRaises(ContractError):
            T.backward(w * 2.0, params)

    def test_backward_without_forward_pass(self):
        with self.assertRaises(StateError):
            T.backward(T.as_tensor(1.0))

    def test_softmax_rejects_non_finite_logits(self):
        with self.assertRaises(NumericError):
            T.softmax(np.array([0.0, np.inf]))

    def test_softmax_rejects_empty_input(self):
        with self.assertRaises(ContractError):
            T.softmax(np.zeros((0,)))

    def test_bce_targets_must_be_binary(self):
        with self.assertRaises(ContractError):
            T.bce(np.array([0.5]), np.array([0.3]))
        with self.assertRaises(ContractError):
            loss_bce(0.5, 2)

    def test_mse_shape_mismatch(self):
        with self.assertRaises(ContractError):
            loss_mse(np.zeros(3), np.zeros(4))

    def test_bce_is_clipped(self):
        self.assertTrue(np.isfinite(loss_bce(0.0, 1)))
        self.assertAlmostEqual(loss_mse([1.0, 3.0], [1.0, 1.0]), 2.0)

    def test_dense_shape_mismatch(self):
        params = ParamSet()
        layer = Dense(params, "fc", 4, 2)
        with self.assertRaises(ConfigurationError):
            layer(np.zeros((1, 3)))

    def test_pooling_too_small(self):
        with self.assertRaises(ConfigurationError):
            T.max_pool2d(np.zeros((1, 1, 1, 4)))

    def test_unknown_upsample_mode(self):
        with self.assertRaises(ConfigurationError):
            T.upsample2d(np.zeros((1, 2, 2)), "cubic")

    def test_param_names_are_unique(self):
        params = ParamSet()
        params.create("w", (2,))
        with self.assertRaises(ConfigurationError):
            params.create("w", (2,))
        with self.assertRaises(ConfigurationError):
            params.create("v", (2,), init="orthogonal")


class ClosedFormTests(SimpleTestCase):
    def test_conv2d_ones_kernel_sums_windows(self):
        out = T.conv2d(np.ones((1, 4, 4)), np.ones((1, 1, 3, 3)), pad=0).data
        np.testing.assert_array_equal(out, np.full((1, 2, 2), 9.0))

    def test_conv2d_identity_kernel(self):
        kernel = np.zeros((1, 1, 3, 3))
        kernel[0, 0, 1, 1] = 1.0
        x = np.arange(9.0).reshape(1, 3, 3)
        np.testing.assert_array_equal(T.conv2d(x, kernel).data, x)
        np.testing.assert_array_equal(T.conv2d(np.zeros((1, 3, 3)), np.ones((1, 1, 3, 3))).data,
                                      np.zeros((1, 3, 3)))

    def test_dense(self):
        out = T.dense(np.array([1.0, 2.0]), np.array([[1.0, 1.0], [0.0, 3.0]]), np.array([0.0, -1.0]))
        np.testing.assert_array_equal(out.data, [3.0, 5.0])

    def test_softmax(self):
        np.testing.assert_allclose(T.softmax(np.array([0.0, np.log(3.0)])).data, [0.25, 0.75],
                                   rtol=0, atol=1e-12)
        np.testing.assert_allclose(T.softmax(np.zeros(4)).data, np.full(4, 0.25), rtol=0, atol=1e-12)

    def test_bce(self):
        self.assertAlmostEqual(loss_bce(0.5, 1), np.log(2.0), places=12)
        self.assertAlmostEqual(loss_bce(0.9, 0), 2.302585, places=6)
        self.assertAlmostEqual(loss_bce(1.0, 1), 0.0, places=6)
        self.assertAlmostEqual(T.bce(np.array([0.5]), np.array([1.0])).item(), np.log(2.0), places=12)

    def test_mse(self):
        self.assertEqual(loss_mse([0.0, 0.0], [3.0, 4.0]), 12.5)
        self.assertEqual(loss_mse(1.0, 4.0), 9.0)
        masked = T.mse(np.zeros(3), np.array([3.0, 4.0, 9.0]), mask=np.array([1.0, 1.0, 0.0]))
        self.assertEqual(masked.item(), 12.5)

    def test_adam_first_step_moves_by_lr(self):
        params = ParamSet()
        w = params.create("w", (2,), init="zeros")
        w.data = np.array([1.0, 1.0])
        w.grad = np.array([0.5, -3.0])
        adam_step(params, AdamState(), 0.01)
        np.testing.assert_allclose(w.data, [0.99, 1.01], rtol=0, atol=1e-8)

    def test_adam_zero_gradients_leave_parameters(self):
        params = ParamSet()
        w = params.create("w", (3,), init="zeros")
        w.data = np.array([1.0, -2.0, 0.5])
        params.zero_grad()
        _, state = adam_step(params, AdamState(), 0.1)
        np.testing.assert_array_equal(w.data, [1.0, -2.0, 0.5])
        self.assertEqual(state.step, 1)


class OptimizerTests(SimpleTestCase):
    def test_adam_betas_validated(self):
        with self.assertRaises(ContractError):
            AdamState(beta1=1.0)

    def test_adam_requires_gradients(self):
        params = ParamSet()
        params.create("w", (2,))
        with self.assertRaises(ContractError):
            adam_step(params, AdamState(), 0.1)

    def test_adam_minimizes_quadratic(self):
        params = ParamSet(np.random.default_rng(1))
        w = params.create("w", (2, 3))
        optimizer = Adam(params, 0.05)
        start = float(np.sum(w.data**2))
        for _ in range(200):
            loss = T.mse(w, np.zeros((2, 3)))
            T.backward(loss, params)
            optimizer.step()
        self.assertLess(float(np.sum(w.data**2)), 0.1 * start)


class CheckpointTests(SimpleTestCase):
    def test_save_and_load(self):
        source = ParamSet(np.random.default_rng(5))
        MLP(source, "net", [3, 4, 2])
        target = ParamSet(np.random.default_rng(6))
        MLP(target, "net", [3, 4, 2])
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "net.npz"
            save_checkpoint(path, source)
            load_checkpoint(path, target)
        for name in source:
            np.testing.assert_array_equal(source[name].data, target[name].data)

    def test_missing_parameter_rejected(self):
        small = ParamSet()
        small.create("a", (2,))
        with self.assertRaises(ConfigurationError):
            small.load_state_dict({})
        with self.assertRaises(ConfigurationError):
            small.load_state_dict({"a": np.zeros(3)})


@tag("property")
class SoftmaxPropertyTests(SimpleTestCase):
    @given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
                  elements=st.floats(-50, 50)))
    def test_rows_are_distributions(self, logits):
        probs = T.softmax(logits, axis=-1).data
        self.assertTrue(np.all(probs >= 0.0))
        np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-12)

    @given(arrays(np.float64, st.integers(1, 6), elements=st.floats(-50, 50)), st.floats(-100, 100))
    def test_shift_invariance(self, logits, shift):
        np.testing.assert_allclose(T.softmax(logits + shift).data, T.softmax(logits).data, rtol=0,
                                   atol=1e-12)

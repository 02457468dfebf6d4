"""Adam update semantics and He initialization statistics."""

import numpy as np
import pytest

from dipcontrol import AdamState, adam_step, he_init, make_rng

from oracles import adam_scalar_reference


class TestAdamStep:
    def test_zero_gradient_leaves_params(self):
        p = np.array([1.0, -2.0, 3.0])
        state = AdamState.for_params([p])
        adam_step([p], [np.zeros(3)], state)
        np.testing.assert_array_equal(p, [1.0, -2.0, 3.0])
        assert state.step_count == 1

    def test_first_step_value(self):
        # Bias correction makes m_hat = g and v_hat = g*g on step one, so
        # the update is -lr * g / (|g| + eps).
        p = np.array([0.0])
        state = AdamState.for_params([p], lr=0.001, epsilon=1e-8)
        adam_step([p], [np.array([1.0])], state)
        expected = -0.001 * (1.0 / (1.0 + 1e-8))
        assert p[0] == pytest.approx(expected, rel=1e-12)

    def test_matches_scalar_recurrence(self):
        grads = [0.7, 0.7, 0.7, -0.2, 1.3]
        p = np.array([0.25])
        state = AdamState.for_params([p], lr=0.01)
        for g in grads:
            adam_step([p], [np.array([g])], state)
        want = adam_scalar_reference(0.25, grads, lr=0.01)
        assert p[0] == pytest.approx(want, abs=1e-12)

    def test_two_steps_constant_gradient(self):
        p = np.array([1.0])
        state = AdamState.for_params([p])
        adam_step([p], [np.array([0.5])], state)
        adam_step([p], [np.array([0.5])], state)
        want = adam_scalar_reference(1.0, [0.5, 0.5])
        assert p[0] == pytest.approx(want, abs=1e-12)
        assert state.step_count == 2

    def test_nan_gradient_rejected(self):
        p = np.array([1.0])
        state = AdamState.for_params([p])
        with pytest.raises(FloatingPointError, match="NaN"):
            adam_step([p], [np.array([np.nan])], state)
        assert state.step_count == 0

    def test_moment_shapes_follow_params(self):
        p = np.zeros((4, 3, 3, 3))
        state = AdamState.for_params([p])
        assert state.first_moment[0].shape == p.shape
        assert state.second_moment[0].shape == p.shape


class TestHeInit:
    def test_deterministic_per_seed(self):
        a = he_init((8, 4, 3, 3), make_rng(123))
        b = he_init((8, 4, 3, 3), make_rng(123))
        np.testing.assert_array_equal(a.data, b.data)

    def test_sample_std(self):
        w = he_init((1200, 1, 3, 3), make_rng(7), dtype=np.float64)
        std = w.data.std()
        assert abs(std - np.sqrt(2.0 / 9.0)) / np.sqrt(2.0 / 9.0) < 0.05

    def test_fan_in_scaling(self):
        narrow = he_init((600, 1, 3, 3), make_rng(11), dtype=np.float64)
        wide = he_init((600, 2, 3, 3), make_rng(11), dtype=np.float64)
        ratio = wide.data.var() / narrow.data.var()
        assert abs(ratio - 0.5) < 0.10 * 0.5

    def test_requires_grad_and_dtype(self):
        w = he_init((2, 2, 3, 3), make_rng(1))
        assert w.requires_grad
        assert w.data.dtype == np.float32

    def test_non_conv_shape_rejected(self):
        with pytest.raises(ValueError):
            he_init((10, 10), make_rng(0))

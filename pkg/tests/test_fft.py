"""Magnitude-spectrum contract: convention, oracle match, Parseval."""

import numpy as np
import pytest

from dipcontrol import Tensor, fft2_magnitude

from oracles import naive_dft2_magnitude


class TestFft2Magnitude:
    def test_constant_image_dc_bin(self):
        c = 0.73
        mag = fft2_magnitude(np.full((1, 1, 8, 8), c))
        assert mag.shape == (1, 8, 8)
        assert mag[0, 4, 4] == pytest.approx(64.0 * c, abs=1e-9)
        rest = mag.copy()
        rest[0, 4, 4] = 0.0
        assert np.max(np.abs(rest)) < 1e-9

    def test_unit_impulse_is_flat(self):
        img = np.zeros((1, 1, 8, 8))
        img[0, 0, 0, 0] = 1.0
        mag = fft2_magnitude(img)
        np.testing.assert_allclose(mag, 1.0, atol=1e-12)

    def test_matches_naive_dft_oracle(self):
        rng = np.random.default_rng(42)
        img = rng.random((8, 8))
        got = fft2_magnitude(img)[0]
        want = naive_dft2_magnitude(img)
        err = np.max(np.abs(got - want)) / np.max(np.abs(want))
        assert err < 1e-9

    def test_odd_sizes_supported(self):
        rng = np.random.default_rng(43)
        img = rng.random((7, 5))
        got = fft2_magnitude(img)[0]
        want = naive_dft2_magnitude(img)
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9)

    def test_parseval(self):
        rng = np.random.default_rng(44)
        img = rng.random((1, 3, 12, 10))
        mag = fft2_magnitude(img)
        h, w = 12, 10
        lhs = np.sum(mag**2)
        rhs = h * w * np.sum(img.astype(np.float64) ** 2)
        assert abs(lhs - rhs) / rhs < 1e-9

    def test_accepts_tensor_and_batch(self):
        x = Tensor(np.random.default_rng(45).random((1, 3, 6, 6)))
        assert fft2_magnitude(x).shape == (3, 6, 6)
        with pytest.raises(ValueError, match="batch"):
            fft2_magnitude(np.zeros((2, 3, 6, 6)))

"""Blur/sharpness metrics, PSNR, and the stopping monitor."""

import numpy as np
import pytest
from scipy import ndimage

from dipcontrol import (
    StoppingMonitor,
    blurriness,
    checkerboard,
    gaussian_blur,
    monitor_update,
    psnr,
    sharpness,
    synthetic_photo,
)

BLUR_SWEEP = (0.5, 1.0, 2.0, 4.0, 8.0)


def boxblur9(image):
    taps = np.full(9, 1.0 / 9.0)
    arr = np.asarray(image, dtype=np.float64)
    out = ndimage.correlate1d(arr, taps, axis=2, mode="mirror")
    return ndimage.correlate1d(out, taps, axis=3, mode="mirror")


class TestBlurriness:
    def test_constant_image_convention(self):
        assert blurriness(np.full((1, 1, 32, 32), 0.3)) == 1.0

    def test_blurring_increases_score(self):
        for seed in range(3):
            img = synthetic_photo(96, 96, seed=seed)
            assert blurriness(boxblur9(img)) > blurriness(img)

    def test_checkerboard_regression_anchor(self):
        # Sharp extreme; value frozen from this implementation's first run.
        score = blurriness(checkerboard(64, 64))
        assert score <= 0.2
        assert score == pytest.approx(0.111111, abs=1e-4)

    def test_range(self):
        for seed in range(3):
            img = synthetic_photo(64, 64, seed=seed)
            assert 0.0 <= blurriness(img) <= 1.0

    def test_monotone_under_blur_sweep(self):
        for seed in range(3):
            img = synthetic_photo(96, 96, seed=seed)
            scores = [blurriness(gaussian_blur(img, s)) for s in BLUR_SWEEP]
            assert all(b > a for a, b in zip(scores, scores[1:]))


class TestSharpness:
    def test_constant_image_is_zero(self):
        assert sharpness(np.full((1, 3, 32, 32), 0.7)) == 0.0

    def test_edge_sharper_than_blurred_edge(self):
        edge = np.zeros((1, 1, 64, 64))
        edge[..., :, 32:] = 1.0
        assert sharpness(edge) > sharpness(gaussian_blur(edge, 3.0))

    def test_monotone_under_blur_sweep(self):
        for seed in range(3):
            img = synthetic_photo(96, 96, seed=seed)
            scores = [sharpness(gaussian_blur(img, s)) for s in BLUR_SWEEP]
            assert all(b < a for a, b in zip(scores, scores[1:]))


class TestPsnr:
    def test_identical_images_capped(self):
        img = synthetic_photo(16, 16, seed=0)
        assert psnr(img, img) == 100.0

    def test_uniform_difference_point_one(self):
        a = np.full((1, 1, 10, 10), 0.5)
        assert psnr(a, a + 0.1) == pytest.approx(20.0, abs=1e-9)

    def test_uniform_difference_half(self):
        a = np.full((1, 3, 4, 4), 0.25)
        assert psnr(a, a + 0.5) == pytest.approx(6.0206, abs=1e-3)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((1, 1, 4, 4)), np.zeros((1, 1, 4, 5)))


class TestStoppingMonitor:
    def test_constant_stream_stops_at_exactly_2n(self):
        m = StoppingMonitor(n=10, eps=0.01)
        decisions = [m.update(3.7) for _ in range(25)]
        assert decisions.index(True) == 19  # sample number 2n

    def test_no_decision_before_2n(self):
        m = StoppingMonitor(n=100, eps=1e9)
        for _ in range(199):
            assert not m.update(0.0)

    def test_linear_ramp_delta(self):
        # r_t = c*t: the two window means differ by exactly c*n.
        c, n = 0.001, 100
        m = StoppingMonitor(n=n, eps=0.01)
        stopped = False
        for t in range(1, 2 * n + 1):
            stopped = m.update(c * t)
        assert m.delta() == pytest.approx(c * n, rel=1e-9)
        assert not stopped  # 0.1 > eps

    def test_ramp_deltas_match_direct_summation(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            c = float(rng.uniform(1e-5, 0.05))
            n = int(rng.integers(3, 60))
            m = StoppingMonitor(n=n, eps=0.0)
            values = [c * t for t in range(1, 2 * n + 1)]
            for v in values:
                m.update(v)
            direct = abs(sum(values[n:]) / n - sum(values[:n]) / n)
            assert m.delta() == pytest.approx(direct, rel=1e-12)
            assert m.delta() == pytest.approx(c * n, rel=1e-9)

    def test_translation_invariance(self):
        rng = np.random.default_rng(1)
        stream = rng.random(60)
        m1 = StoppingMonitor(n=15, eps=0.0)
        m2 = StoppingMonitor(n=15, eps=0.0)
        for v in stream:
            m1.update(float(v))
            m2.update(float(v) + 123.456)
        assert m1.delta() == pytest.approx(m2.delta(), abs=1e-9)

    def test_larger_eps_never_stops_later(self):
        rng = np.random.default_rng(2)
        stream = np.cumsum(rng.uniform(-0.01, 0.02, size=400))

        def stop_iter(eps):
            m = StoppingMonitor(n=20, eps=eps)
            for i, v in enumerate(stream, start=1):
                if m.update(float(v)):
                    return i
            return len(stream) + 1

        assert stop_iter(0.1) <= stop_iter(0.01) <= stop_iter(0.001)

    def test_decision_uses_only_last_2n(self):
        # A wild prefix must not influence the decision once 2n fresh
        # samples have arrived.
        m1 = StoppingMonitor(n=5, eps=0.01)
        for v in [1000.0, -500.0, 3.0]:
            m1.update(v)
        m2 = StoppingMonitor(n=5, eps=0.01)
        result1 = result2 = False
        for _ in range(10):
            result1 = m1.update(1.0)
            result2 = m2.update(1.0)
        assert result1 == result2 is True

    def test_nonfinite_ratio_rejected(self):
        m = StoppingMonitor(n=5, eps=0.01)
        with pytest.raises(ValueError):
            m.update(float("nan"))

    def test_functional_form(self):
        m = StoppingMonitor(n=1, eps=0.5)
        assert not monitor_update(m, 1.0)
        assert monitor_update(m, 1.0)

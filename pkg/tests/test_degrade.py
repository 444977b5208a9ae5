import numpy as np
import pytest

from restudio.degrade import (
    DegradationKind,
    DegradationSpec,
    apply_awgn,
    apply_blur,
    apply_degradation,
)
from restudio.errors import InvalidArgumentError
from restudio.fixtures import constant_image, step_edge
from restudio.imagecore import gaussian_kernel

from .conftest import random_image
from .test_imagecore import direct_convolve


class TestSpecValidation:
    def test_exactly_one_payload(self):
        with pytest.raises(InvalidArgumentError):
            DegradationSpec(kind=DegradationKind.BLUR, sigma_blur=1.0, sigma_noise=5.0)
        with pytest.raises(InvalidArgumentError):
            DegradationSpec(kind=DegradationKind.NOISE)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": DegradationKind.BLUR, "sigma_blur": 0.05},
            {"kind": DegradationKind.BLUR, "sigma_blur": 3.5},
            {"kind": DegradationKind.NOISE, "sigma_noise": 51.0},
            {"kind": DegradationKind.JPEG, "quality": 5},
            {"kind": DegradationKind.JPEG, "quality": 95},
        ],
    )
    def test_range_enforcement(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            DegradationSpec(**kwargs)

    def test_dispatch(self):
        img = random_image(0, size=64)
        spec = DegradationSpec(kind=DegradationKind.NOISE, sigma_noise=10.0, rng_seed=1)
        out = apply_degradation(img, spec)
        assert out.data.shape == img.data.shape


class TestBlur:
    def test_near_delta_sigma(self):
        img = random_image(1, size=64)
        out = apply_blur(img, 0.1)
        assert np.abs(out.data - img.data).max() < 1e-4

    def test_smoothing_reduces_max_gradient(self):
        img = step_edge()
        out = apply_blur(img, 3.0)
        grad_in = np.abs(np.diff(img.data[:, :, 0], axis=1)).max()
        grad_out = np.abs(np.diff(out.data[:, :, 0], axis=1)).max()
        assert grad_out < grad_in

    def test_matches_direct_loop_oracle(self):
        img = random_image(2, size=32)
        out = apply_blur(img, 1.5)
        oracle = direct_convolve(img.data[:, :, 0], gaussian_kernel(1.5, 15).weights)
        assert np.abs(out.data[:, :, 0] - oracle).max() < 1e-6

    def test_out_of_range_sigma(self):
        img = random_image(3, size=32)
        for sigma in (0.05, 3.01):
            with pytest.raises(InvalidArgumentError):
                apply_blur(img, sigma)


class TestAwgn:
    def test_sigma_zero_is_identity(self):
        img = random_image(4, size=64)
        assert apply_awgn(img, 0.0, 7) is img

    def test_monte_carlo_sigma(self):
        base = constant_image(0.5, 256)
        for seed in range(10):
            noisy = apply_awgn(base, 25.0, seed)
            measured = (noisy.data - base.data).std() * 255.0
            assert 24.5 <= measured <= 25.5

    def test_deterministic_given_seed(self):
        img = random_image(5, size=64)
        a = apply_awgn(img, 15.0, 1234)
        b = apply_awgn(img, 15.0, 1234)
        assert np.array_equal(a.data, b.data)
        c = apply_awgn(img, 15.0, 1235)
        assert not np.array_equal(a.data, c.data)

    def test_noise_is_white(self):
        base = constant_image(0.5, 256)
        noise = apply_awgn(base, 25.0, 11).data[:, :, 0] - 0.5
        noise -= noise.mean()
        var = (noise * noise).mean()
        lag_h = (noise[:, 1:] * noise[:, :-1]).mean() / var
        lag_v = (noise[1:, :] * noise[:-1, :]).mean() / var
        assert abs(lag_h) < 0.02
        assert abs(lag_v) < 0.02

    def test_out_of_range_sigma(self):
        with pytest.raises(InvalidArgumentError):
            apply_awgn(random_image(6), -1.0, 0)
        with pytest.raises(InvalidArgumentError):
            apply_awgn(random_image(6), 50.5, 0)

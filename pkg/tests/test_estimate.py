import numpy as np
import pytest

from restudio.degrade import DegradationKind, apply_awgn, apply_blur, jpeg_decode, jpeg_encode
from restudio.errors import (
    InsufficientDataError,
    InvalidArgumentError,
    UnobservableBlurError,
)
from restudio.estimate import (
    DegradationParam,
    blockiness,
    estimate_blur_sigma,
    estimate_jpeg_quality,
    estimate_noise_sigma,
    make_blur_param,
    quality_from_tables,
)
from restudio.fixtures import checkerboard, constant_image
from restudio.imagecore import Mask, gaussian_kernel
from restudio.jpegcodec import quant_tables_for_quality

from .conftest import random_image


class TestParamInvariants:
    def test_exactly_one_payload(self):
        with pytest.raises(InvalidArgumentError):
            DegradationParam(kind=DegradationKind.NOISE, sigma_noise=5.0, quality=50)
        with pytest.raises(InvalidArgumentError):
            DegradationParam(kind=DegradationKind.JPEG)

    def test_blur_param_kernel_vec(self):
        p = make_blur_param(1.5)
        assert p.kernel_vec.shape == (225,)
        assert abs(p.kernel_vec.sum() - 1.0) <= 1e-6
        expected = gaussian_kernel(1.5, 15).weights.reshape(-1)
        assert np.array_equal(p.kernel_vec, expected)

    def test_kernel_vec_only_for_blur(self):
        with pytest.raises(InvalidArgumentError):
            DegradationParam(
                kind=DegradationKind.NOISE, sigma_noise=5.0,
                kernel_vec=np.full(225, 1 / 225),
            )

    def test_range_checks(self):
        with pytest.raises(InvalidArgumentError):
            DegradationParam(kind=DegradationKind.NOISE, sigma_noise=60.0)
        with pytest.raises(InvalidArgumentError):
            DegradationParam(kind=DegradationKind.JPEG, quality=101)


class TestNoiseEstimator:
    def test_monte_carlo_constant_fixture(self):
        base = constant_image(0.5, 128)
        for seed in range(10):
            est = estimate_noise_sigma(apply_awgn(base, 25.0, seed)).sigma_noise
            assert 22.5 <= est <= 27.5

    def test_noiseless_constant_is_near_zero(self):
        assert estimate_noise_sigma(constant_image(0.5, 64)).sigma_noise < 1.0

    def test_natural_image_band(self, camera):
        est = estimate_noise_sigma(apply_awgn(camera, 15.0, 3)).sigma_noise
        assert 12.0 <= est <= 19.0

    def test_rgb_compensation(self):
        base = constant_image(0.5, 128, channels=3)
        est = estimate_noise_sigma(apply_awgn(base, 25.0, 5)).sigma_noise
        assert 22.5 <= est <= 27.5

    def test_scale_covariance_at_doubling(self):
        base = constant_image(0.5, 128)
        for lo in (5.0, 10.0, 12.5):
            a = estimate_noise_sigma(apply_awgn(base, lo, 21)).sigma_noise
            b = estimate_noise_sigma(apply_awgn(base, 2 * lo, 22)).sigma_noise
            assert abs(b / a - 2.0) <= 0.3  # within +/-15%

    def test_masked_region(self):
        base = constant_image(0.5, 128)
        noisy_half = apply_awgn(base, 25.0, 9).data.copy()
        noisy_half[:, :64] = 0.5  # left half stays clean
        from restudio.imagecore import Colorspace, ImageBuffer

        img = ImageBuffer(noisy_half, Colorspace.LINEAR_GRAY)
        alpha = np.zeros((128, 128))
        alpha[:, 64:] = 1.0
        est = estimate_noise_sigma(img, Mask(alpha)).sigma_noise
        assert 22.0 <= est <= 28.0
        alpha_clean = np.zeros((128, 128))
        alpha_clean[:, :64] = 1.0
        est_clean = estimate_noise_sigma(img, Mask(alpha_clean)).sigma_noise
        assert est_clean < 1.0

    def test_region_too_small(self):
        with pytest.raises(InsufficientDataError):
            estimate_noise_sigma(constant_image(0.5, 16))

    def test_returns_valid_param(self):
        p = estimate_noise_sigma(apply_awgn(constant_image(0.5, 64), 50.0, 2))
        assert p.kind == DegradationKind.NOISE
        assert 0.0 <= p.sigma_noise <= 50.0
        assert 0.0 <= p.confidence <= 1.0


class TestBlurEstimator:
    @pytest.mark.parametrize("sigma", [0.5, 1.5, 2.5])
    def test_checkerboard_closed_loop(self, sigma):
        blurred = apply_blur(checkerboard(cell=8, size=128), sigma)
        est = estimate_blur_sigma(blurred)
        assert abs(est.sigma_blur - sigma) <= 0.3

    def test_effectively_sharp_input(self):
        blurred = apply_blur(checkerboard(cell=8, size=128), 0.1)
        assert estimate_blur_sigma(blurred).sigma_blur <= 0.3

    def test_constant_image_unobservable(self):
        with pytest.raises(UnobservableBlurError):
            estimate_blur_sigma(constant_image(0.5, 128))

    def test_region_too_small(self):
        with pytest.raises(InsufficientDataError):
            estimate_blur_sigma(random_image(1, size=32))

    def test_deterministic(self):
        blurred = apply_blur(checkerboard(cell=8, size=128), 1.5)
        a = estimate_blur_sigma(blurred).sigma_blur
        b = estimate_blur_sigma(blurred).sigma_blur
        assert a == b

    def test_kernel_vec_invariant(self):
        blurred = apply_blur(checkerboard(cell=8, size=128), 2.0)
        p = estimate_blur_sigma(blurred)
        expected = gaussian_kernel(p.sigma_blur, 15).weights.reshape(-1)
        assert np.array_equal(p.kernel_vec, expected)


class TestJpegEstimator:
    def test_bitstream_exact_for_all_encode_qualities(self, camera):
        for q in range(10, 91, 10):
            blob = jpeg_encode(camera, q)
            assert estimate_jpeg_quality(blob).quality == q

    def test_dqt_inversion_is_left_inverse(self):
        for q in range(10, 91):
            assert quality_from_tables(quant_tables_for_quality(q)) == q

    def test_pixel_path_closed_loop(self, camera):
        for q in (10, 30, 50, 70):
            decoded, _ = jpeg_decode(jpeg_encode(camera, q))
            est = estimate_jpeg_quality(decoded)
            assert abs(est.quality - q) <= 10

    def test_q30_band(self, camera):
        decoded, _ = jpeg_decode(jpeg_encode(camera, 30))
        assert 20 <= estimate_jpeg_quality(decoded).quality <= 40

    def test_never_compressed_image_reports_q100(self):
        noise = apply_awgn(constant_image(0.5, 128), 25.0, 4)
        est = estimate_jpeg_quality(noise)
        assert est.quality == 100
        assert est.confidence < 0.3

    def test_malformed_bitstream(self):
        from restudio.errors import ParseError

        with pytest.raises(ParseError):
            estimate_jpeg_quality(b"\xff\xd8\xff")

    def test_blockiness_statistic_positive_on_compressed(self, camera):
        decoded, _ = jpeg_decode(jpeg_encode(camera, 20))
        assert blockiness(decoded) > blockiness(camera)

import numpy as np
import pytest

from restudio.compose import (
    EnhanceSettings,
    ObjectLayer,
    apply_enhance,
    composite,
    export,
)
from restudio.degrade import DegradationKind, apply_awgn, jpeg_decode
from restudio.errors import ExportPolicyError, InvalidArgumentError
from restudio.estimate import DegradationParam
from restudio.fileio import decode_png
from restudio.imagecore import Colorspace, ImageBuffer, Mask, psnr, to_uint8
from restudio.restore import RestoreTask, deblock_dct, denoise_tv

from .conftest import random_image

NOISE25 = DegradationParam(kind=DegradationKind.NOISE, sigma_noise=25.0)


def half_mask(size, left=True):
    alpha = np.zeros((size, size))
    if left:
        alpha[:, : size // 2] = 1.0
    else:
        alpha[:, size // 2:] = 1.0
    return Mask(alpha)


class TestEnhance:
    def test_defaults_are_exact_noop(self):
        img = random_image(0, channels=3)
        assert apply_enhance(img, EnhanceSettings()) is img

    def test_brightness_analytic(self):
        img = ImageBuffer(np.full((8, 8, 1), 0.5), Colorspace.LINEAR_GRAY)
        out = apply_enhance(img, EnhanceSettings(brightness=0.2))
        assert np.abs(out.data - 0.7).max() < 1e-6

    def test_contrast_with_clamp(self):
        img = ImageBuffer(np.full((8, 8, 1), 0.75), Colorspace.LINEAR_GRAY)
        out = apply_enhance(img, EnhanceSettings(contrast=2.0))
        assert np.abs(out.data - 1.0).max() < 1e-9

    def test_order_contrast_then_brightness(self):
        img = ImageBuffer(np.full((8, 8, 1), 0.6), Colorspace.LINEAR_GRAY)
        out = apply_enhance(img, EnhanceSettings(brightness=0.1, contrast=2.0))
        # (0.6 - 0.5) * 2 + 0.5 = 0.7, then + 0.1 = 0.8
        assert np.abs(out.data - 0.8).max() < 1e-9

    def test_smoothness_blurs(self):
        img = random_image(1, size=32)
        out = apply_enhance(img, EnhanceSettings(smoothness=2.0))
        assert np.var(out.data) < np.var(img.data)

    def test_background_bokeh_leaves_subject_sharp(self, camera):
        # defocus the background layer only; the subject mask keeps its detail
        size = camera.height
        subject = np.zeros((size, size), dtype=bool)
        subject[64:192, 64:192] = True
        bg_layer = ObjectLayer(
            id="bg",
            mask=Mask((~subject).astype(float)),
            enhance=EnhanceSettings(bokeh_sigma=6.0),
        )
        out = composite(camera, [bg_layer])
        assert np.array_equal(out.data[subject], camera.data[subject])
        bg_grad_in = np.abs(np.diff(camera.data[:, :, 0], axis=1))[~subject[:, 1:]].mean()
        bg_grad_out = np.abs(np.diff(out.data[:, :, 0], axis=1))[~subject[:, 1:]].mean()
        assert bg_grad_out < 0.5 * bg_grad_in

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"brightness": 0.6},
            {"contrast": 0.1},
            {"contrast": 5.0},
            {"smoothness": 6.0},
            {"bokeh_sigma": 9.0},
        ],
    )
    def test_out_of_range(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            EnhanceSettings(**kwargs)


class TestComposite:
    def test_zero_layers_is_source(self, camera):
        assert composite(camera, []) is camera

    def test_identity_chain(self, camera):
        layer = ObjectLayer(
            id="a", mask=Mask(np.ones((camera.height, camera.width))), task=None
        )
        out = composite(camera, [layer])
        assert np.array_equal(out.data, camera.data)

    def test_all_zero_mask_is_source(self, camera):
        layer = ObjectLayer(
            id="a",
            mask=Mask(np.zeros((camera.height, camera.width))),
            task=RestoreTask.DENOISE,
            predicted=NOISE25,
        )
        out = composite(camera, [layer])
        assert np.array_equal(out.data, camera.data)

    def test_two_disjoint_layers_assembly_oracle(self, camera):
        noisy = apply_awgn(camera, 25.0, 1)
        size = camera.height
        jpeg_param = DegradationParam(kind=DegradationKind.JPEG, quality=30)
        left = ObjectLayer(id="l", mask=half_mask(size, True),
                           task=RestoreTask.DENOISE, predicted=NOISE25)
        right = ObjectLayer(id="r", mask=half_mask(size, False),
                            task=RestoreTask.DEBLOCK, predicted=jpeg_param)
        out = composite(noisy, [left, right])

        denoised = denoise_tv(noisy, NOISE25, 1.0)
        deblocked = deblock_dct(noisy, jpeg_param, 1.0)
        la = left.mask.alpha[:, :, None]
        ra = right.mask.alpha[:, :, None]
        expected = noisy.data.copy()
        expected = la * denoised.data + (1 - la) * expected
        expected = ra * deblocked.data + (1 - ra) * expected
        assert np.abs(out.data - expected).max() < 1e-12

        single_left = composite(noisy, [left])
        half = size // 2
        assert np.abs(out.data[:, :half] - single_left.data[:, :half]).max() < 1e-12

    def test_disjoint_layers_commute(self, camera):
        noisy = apply_awgn(camera, 25.0, 2)
        size = camera.height
        jpeg_param = DegradationParam(kind=DegradationKind.JPEG, quality=40)
        a = ObjectLayer(id="a", mask=half_mask(size, True),
                        task=RestoreTask.DENOISE, predicted=NOISE25)
        b = ObjectLayer(id="b", mask=half_mask(size, False),
                        task=RestoreTask.DEBLOCK, predicted=jpeg_param)
        ab = composite(noisy, [a, b])
        ba = composite(noisy, [b, a])
        assert np.abs(ab.data - ba.data).max() < 1e-6

    def test_later_layer_wins_on_overlap(self, camera):
        size = camera.height
        full = Mask(np.ones((size, size)))
        bright = ObjectLayer(id="a", mask=full, enhance=EnhanceSettings(brightness=0.2))
        dark = ObjectLayer(id="b", mask=full, enhance=EnhanceSettings(brightness=-0.2))
        out = composite(camera, [bright, dark])
        expected = apply_enhance(camera, EnhanceSettings(brightness=-0.2))
        assert np.abs(out.data - expected.data).max() < 1e-12

    def test_cached_and_uncached_bit_identical(self, camera):
        noisy = apply_awgn(camera, 25.0, 3)
        layer = ObjectLayer(id="a", mask=half_mask(camera.height),
                            task=RestoreTask.DENOISE, predicted=NOISE25)
        uncached = composite(noisy, [layer], use_cache=False)
        assert layer.cached_patch is None
        cached_first = composite(noisy, [layer])  # populates the cache
        assert layer.cached_patch is not None
        cached_second = composite(noisy, [layer])  # reuses it
        assert np.array_equal(uncached.data, cached_first.data)
        assert np.array_equal(cached_first.data, cached_second.data)

    def test_cache_invalidated_by_strength_change(self, camera):
        noisy = apply_awgn(camera, 25.0, 3)
        layer = ObjectLayer(id="a", mask=half_mask(camera.height),
                            task=RestoreTask.DENOISE, predicted=NOISE25)
        first = composite(noisy, [layer])
        layer.strength_scale = 0.5
        second = composite(noisy, [layer])
        assert not np.array_equal(first.data, second.data)

    def test_dimension_mismatch_rejected(self, camera):
        layer = ObjectLayer(id="a", mask=Mask(np.ones((10, 10))))
        with pytest.raises(InvalidArgumentError):
            composite(camera, [layer])

    def test_override_kind_must_match(self):
        with pytest.raises(InvalidArgumentError):
            ObjectLayer(
                id="a",
                mask=Mask(np.ones((8, 8))),
                predicted=NOISE25,
                override=DegradationParam(kind=DegradationKind.JPEG, quality=50),
            )


class TestExport:
    def test_png_round_trip_is_lossless(self, camera):
        layer = ObjectLayer(id="a", mask=half_mask(camera.height),
                            task=RestoreTask.DENOISE, predicted=NOISE25)
        noisy = apply_awgn(camera, 25.0, 5)
        blob = export(noisy, [layer], "png")
        rendered = composite(noisy, [layer])
        decoded = decode_png(blob)
        assert np.array_equal(to_uint8(decoded), to_uint8(rendered))

    def test_jpeg95_round_trip_psnr(self, camera):
        blob = export(camera, [], "jpeg", quality=95)
        decoded, _ = jpeg_decode(blob)
        assert psnr(camera, decoded) >= 40.0

    def test_low_quality_jpeg_refused(self, camera):
        with pytest.raises(ExportPolicyError):
            export(camera, [], "jpeg", quality=30)

    def test_low_quality_jpeg_forced(self, camera):
        blob = export(camera, [], "jpeg", quality=30, force=True)
        decoded, _ = jpeg_decode(blob)
        assert decoded.data.shape == camera.data.shape

    def test_unknown_format(self, camera):
        with pytest.raises(InvalidArgumentError):
            export(camera, [], "webp")

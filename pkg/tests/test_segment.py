import numpy as np
import pytest
from scipy import ndimage
from scipy.stats import norm

from restudio.degrade import apply_awgn
from restudio.errors import (
    EmptySelectionError,
    ExternalProtocolError,
    ExternalUnavailableError,
    InvalidArgumentError,
)
from restudio.fixtures import disk_fixture
from restudio.imagecore import Colorspace, ImageBuffer
from restudio.segment import (
    ClickPoint,
    ClickPrompt,
    PointLabel,
    check_click_consistency,
    feather,
    segment_builtin,
    segment_external,
)


def two_tone():
    data = np.zeros((64, 64, 1))
    data[:, 32:] = 1.0
    return ImageBuffer(data, Colorspace.LINEAR_GRAY)


def iou(a, b):
    return (a & b).sum() / (a | b).sum()


class TestBuiltin:
    def test_two_tone_exact_half(self):
        res = segment_builtin(two_tone(), ClickPrompt(points=[ClickPoint(5, 5)]))
        expected = np.zeros((64, 64), dtype=bool)
        expected[:, :32] = True
        assert np.array_equal(res.hard_mask, expected)
        assert res.source == "builtin"

    def test_disk_iou_clean(self):
        img, truth = disk_fixture()
        res = segment_builtin(img, ClickPrompt(points=[ClickPoint(64, 64)]))
        assert iou(res.hard_mask, truth) >= 0.95

    def test_disk_iou_under_noise(self):
        img, truth = disk_fixture()
        noisy = apply_awgn(img, 25.0, 5)
        prompt = ClickPrompt(points=[ClickPoint(64, 64)], tolerance=20.0)
        res = segment_builtin(noisy, prompt)
        assert iou(res.hard_mask, truth) >= 0.80

    def test_click_consistency_on_every_result(self):
        img, _ = disk_fixture()
        prompt = ClickPrompt(
            points=[ClickPoint(64, 64), ClickPoint(5, 5, PointLabel.BACKGROUND)]
        )
        res = segment_builtin(img, prompt)
        assert check_click_consistency(res.hard_mask, prompt) == []

    def test_fg_and_bg_in_same_flat_region(self):
        prompt = ClickPrompt(
            points=[ClickPoint(5, 5), ClickPoint(10, 10, PointLabel.BACKGROUND)]
        )
        with pytest.raises(EmptySelectionError):
            segment_builtin(two_tone(), prompt)

    def test_out_of_bounds_click(self):
        with pytest.raises(InvalidArgumentError):
            segment_builtin(two_tone(), ClickPrompt(points=[ClickPoint(200, 5)]))

    def test_requires_foreground_point(self):
        with pytest.raises(InvalidArgumentError):
            ClickPrompt(points=[ClickPoint(5, 5, PointLabel.BACKGROUND)])

    def test_deterministic(self):
        img, _ = disk_fixture()
        noisy = apply_awgn(img, 25.0, 1)
        prompt = ClickPrompt(points=[ClickPoint(64, 64)], tolerance=20.0)
        a = segment_builtin(noisy, prompt)
        b = segment_builtin(noisy, prompt)
        assert np.array_equal(a.hard_mask, b.hard_mask)
        assert np.array_equal(a.mask.alpha, b.mask.alpha)

    def test_mask_is_feathered_hard_mask(self):
        img, _ = disk_fixture()
        res = segment_builtin(img, ClickPrompt(points=[ClickPoint(64, 64)]), feather_radius=3.0)
        expected = feather(res.hard_mask, 3.0)
        assert np.array_equal(res.mask.alpha, expected.alpha)


class TestFeather:
    def test_radius_zero_is_hard(self):
        hard = np.zeros((16, 16), dtype=bool)
        hard[4:12, 4:12] = True
        m = feather(hard, 0.0)
        assert set(np.unique(m.alpha)) <= {0.0, 1.0}
        assert np.array_equal(m.alpha > 0.5, hard)

    def test_all_ones_stays_all_ones(self):
        m = feather(np.ones((16, 16), dtype=bool), 5.0)
        assert np.all(m.alpha == 1.0)

    def test_half_plane_profile_matches_gaussian_cdf(self):
        hard = np.zeros((64, 64), dtype=bool)
        hard[:, 32:] = True
        radius = 4.0
        m = feather(hard, radius)
        row = m.alpha[32]
        # oracle: blurred step = Gaussian CDF at pixel-center offsets
        sigma = radius / 2.0
        for x in range(24, 40):
            expected = norm.cdf((x - 31.5) / sigma)
            assert abs(row[x] - expected) < 0.02
        boundary = 0.5 * (row[31] + row[32])
        assert abs(boundary - 0.5) <= 0.1
        assert np.all(np.diff(row) >= -1e-12)

    def test_support_bounded_by_dilation(self):
        hard = np.zeros((64, 64), dtype=bool)
        hard[30:34, 30:34] = True
        radius = 4
        m = feather(hard, radius)
        allowed = ndimage.binary_dilation(
            hard, np.ones((3, 3), dtype=bool), iterations=3 * radius
        )
        assert not np.any((m.alpha > 0) & ~allowed)

    def test_alpha_on_8bit_grid(self):
        hard = np.zeros((32, 32), dtype=bool)
        hard[8:24, 8:24] = True
        m = feather(hard, 3.0)
        scaled = m.alpha * 255.0
        assert np.abs(scaled - np.round(scaled)).max() < 1e-9

    def test_negative_radius_rejected(self):
        with pytest.raises(InvalidArgumentError):
            feather(np.ones((8, 8), dtype=bool), -1.0)


from .mockseg import MockSegmenterHandler as _MockHandler
from .mockseg import mock_segmenter


@pytest.fixture
def mock_server():
    with mock_segmenter() as url:
        yield url


class TestExternal:
    def test_pass_through_all_ones(self, mock_server):
        img, _ = disk_fixture(size=32, radius=10)
        res = segment_external(img, ClickPrompt(points=[ClickPoint(16, 16)]), mock_server)
        assert res.hard_mask.all()
        assert res.source == "external"
        assert res.score == pytest.approx(0.9)

    def test_rle_mask_decoding(self, mock_server):
        _MockHandler.behavior = "rle"
        img, _ = disk_fixture(size=32, radius=10)
        res = segment_external(img, ClickPrompt(points=[ClickPoint(16, 16)]), mock_server)
        assert res.hard_mask.all()

    def test_background_click_violation(self, mock_server):
        img, _ = disk_fixture(size=32, radius=10)
        prompt = ClickPrompt(
            points=[ClickPoint(16, 16), ClickPoint(2, 2, PointLabel.BACKGROUND)]
        )
        with pytest.raises(ExternalProtocolError):
            segment_external(img, prompt, mock_server)

    def test_wrong_mask_size(self, mock_server):
        _MockHandler.behavior = "wrong_size"
        img, _ = disk_fixture(size=32, radius=10)
        with pytest.raises(ExternalProtocolError):
            segment_external(img, ClickPrompt(points=[ClickPoint(16, 16)]), mock_server)

    def test_non_json_response(self, mock_server):
        _MockHandler.behavior = "garbage"
        img, _ = disk_fixture(size=32, radius=10)
        with pytest.raises(ExternalProtocolError):
            segment_external(img, ClickPrompt(points=[ClickPoint(16, 16)]), mock_server)

    def test_timeout_maps_to_unavailable(self, mock_server):
        _MockHandler.delay = 2.0
        img, _ = disk_fixture(size=32, radius=10)
        with pytest.raises(ExternalUnavailableError):
            segment_external(
                img, ClickPrompt(points=[ClickPoint(16, 16)]), mock_server, deadline=0.5
            )

    def test_http_500_maps_to_unavailable(self, mock_server):
        _MockHandler.behavior = "http500"
        img, _ = disk_fixture(size=32, radius=10)
        with pytest.raises(ExternalUnavailableError):
            segment_external(img, ClickPrompt(points=[ClickPoint(16, 16)]), mock_server)

    def test_unreachable_endpoint(self):
        img, _ = disk_fixture(size=32, radius=10)
        with pytest.raises(ExternalUnavailableError):
            segment_external(
                img,
                ClickPrompt(points=[ClickPoint(16, 16)]),
                "http://127.0.0.1:1/segment",
                deadline=0.5,
            )

    def test_rle_overrun_rejected(self):
        from restudio.segment import _decode_rle

        with pytest.raises(ExternalProtocolError):
            _decode_rle([0, 999], (4, 4))
        with pytest.raises(ExternalProtocolError):
            _decode_rle([0, 3], (4, 4))

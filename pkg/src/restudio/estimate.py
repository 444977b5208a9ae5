"""Blind degradation-parameter prediction: noise sigma, blur width, JPEG quality.

Each estimator is classical and deterministic. Noise uses the
median-absolute-deviation of finest-level diagonal Haar wavelet
coefficients; blur runs a grid search against a precomputed re-blur
energy-ratio table; JPEG quality comes from exact DQT inversion when a
bitstream is available, otherwise from a blockiness statistic mapped
through a calibration table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from . import calibration
from .degrade import DegradationKind
from .errors import (
    InsufficientDataError,
    InvalidArgumentError,
    UnobservableBlurError,
)
from .imagecore import ImageBuffer, Mask, gaussian_kernel, luminance
from .jpegcodec import parse_quant_tables, quant_tables_for_quality, QuantTables

MAD_TO_SIGMA = 1.0 / 0.6745
# Rec. 601 luma of i.i.d. per-channel noise has its std shrunk by |w|_2.
_LUMA_NOISE_SHRINK = float(np.linalg.norm([0.299, 0.587, 0.114]))
MIN_NOISE_PIXELS = 32 * 32
MIN_BLUR_PIXELS = 64 * 64
BLUR_GRID = [round(0.1 * i, 1) for i in range(1, 31)]


@dataclass
class DegradationParam:
    """Tagged union over the three tasks; the controllable restoration knob."""

    kind: DegradationKind
    sigma_blur: float | None = None
    kernel_vec: np.ndarray | None = None
    sigma_noise: float | None = None
    quality: int | None = None
    confidence: float = 1.0

    def __post_init__(self):
        populated = {
            DegradationKind.BLUR: self.sigma_blur is not None,
            DegradationKind.NOISE: self.sigma_noise is not None,
            DegradationKind.JPEG: self.quality is not None,
        }
        if not populated[self.kind] or sum(populated.values()) != 1:
            raise InvalidArgumentError(
                f"exactly the {self.kind.value} payload must be populated"
            )
        if self.kind == DegradationKind.BLUR:
            if self.kernel_vec is None:
                raise InvalidArgumentError("blur parameter requires kernel_vec")
            vec = np.asarray(self.kernel_vec, dtype=np.float64).reshape(-1)
            if vec.shape != (225,):
                raise InvalidArgumentError(f"kernel_vec must have 225 taps, got {vec.shape}")
            if abs(vec.sum() - 1.0) > 1e-6 or vec.min() < 0:
                raise InvalidArgumentError("kernel_vec must be non-negative and sum to 1")
            vec.flags.writeable = False
            object.__setattr__(self, "kernel_vec", vec)
        elif self.kernel_vec is not None:
            raise InvalidArgumentError("kernel_vec is only valid for blur parameters")
        if self.kind == DegradationKind.NOISE and not (0.0 <= self.sigma_noise <= 50.0):
            raise InvalidArgumentError(f"sigma_noise out of range: {self.sigma_noise}")
        if self.kind == DegradationKind.JPEG and not (0 <= self.quality <= 100):
            raise InvalidArgumentError(f"quality out of range: {self.quality}")
        if not (0.0 <= self.confidence <= 1.0):
            raise InvalidArgumentError(f"confidence out of range: {self.confidence}")


def make_blur_param(sigma_blur: float, confidence: float = 1.0) -> DegradationParam:
    """Blur parameter with kernel_vec as the flattened 15x15 Gaussian."""
    kernel = gaussian_kernel(sigma_blur, 15)
    return DegradationParam(
        kind=DegradationKind.BLUR,
        sigma_blur=sigma_blur,
        kernel_vec=kernel.weights.reshape(-1),
        confidence=confidence,
    )


def _region_selector(img: ImageBuffer, mask: Mask | None) -> np.ndarray:
    if mask is None:
        return np.ones((img.height, img.width), dtype=bool)
    if not mask.matches(img):
        raise InvalidArgumentError("mask dimensions do not match image")
    return mask.alpha > 0.5


def estimate_noise_sigma(img: ImageBuffer, mask: Mask | None = None) -> DegradationParam:
    """MAD of diagonal Haar coefficients on the luminance, 8-bit scale.

    For 3-channel input the luma combination shrinks i.i.d. channel noise
    by the weight norm, so the raw estimate is compensated by that factor.
    """
    region = _region_selector(img, mask)
    n_eff = int(region.sum())
    if n_eff < MIN_NOISE_PIXELS:
        raise InsufficientDataError(
            f"need at least {MIN_NOISE_PIXELS} effective pixels, got {n_eff}"
        )
    luma = luminance(img)
    h2, w2 = (luma.shape[0] // 2) * 2, (luma.shape[1] // 2) * 2
    quad = luma[:h2, :w2].reshape(h2 // 2, 2, w2 // 2, 2)
    hh = 0.5 * (quad[:, 0, :, 0] - quad[:, 0, :, 1] - quad[:, 1, :, 0] + quad[:, 1, :, 1])
    covered = region[:h2, :w2].reshape(h2 // 2, 2, w2 // 2, 2).all(axis=(1, 3))
    coeffs = hh[covered]
    if coeffs.size < MIN_NOISE_PIXELS // 4:
        raise InsufficientDataError(
            f"masked region yields only {coeffs.size} wavelet coefficients"
        )
    sigma = float(np.median(np.abs(coeffs))) * MAD_TO_SIGMA * 255.0
    if img.channels == 3:
        sigma /= _LUMA_NOISE_SHRINK
    sigma = min(max(sigma, 0.0), 50.0)
    confidence = min(1.0, coeffs.size / 4096.0)
    return DegradationParam(
        kind=DegradationKind.NOISE, sigma_noise=sigma, confidence=confidence
    )


def _conv_plane(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    half = kernel.shape[0] // 2
    padded = np.pad(plane, half, mode="reflect")
    return signal.fftconvolve(padded, kernel, mode="valid")


def _gradient_energy(plane: np.ndarray, region: np.ndarray) -> float:
    dx = plane[:, 1:] - plane[:, :-1]
    dy = plane[1:, :] - plane[:-1, :]
    rx = region[:, 1:] & region[:, :-1]
    ry = region[1:, :] & region[:-1, :]
    n = rx.sum() + ry.sum()
    if n == 0:
        return 0.0
    return float((np.sum(dx[rx] ** 2) + np.sum(dy[ry] ** 2)) / n)


def estimate_blur_sigma(img: ImageBuffer, mask: Mask | None = None) -> DegradationParam:
    """Grid search over sigma: re-blur the region with a fixed probe kernel
    and invert the observed gradient-energy decay through the calibrated
    ratio table (which is monotone in sigma)."""
    region = _region_selector(img, mask)
    n_eff = int(region.sum())
    if n_eff < MIN_BLUR_PIXELS:
        raise InsufficientDataError(
            f"need at least {MIN_BLUR_PIXELS} effective pixels, got {n_eff}"
        )
    if mask is not None:
        # Keep the energy statistics clear of mask-boundary contamination.
        eroded = ndimage.binary_erosion(region, np.ones((15, 15), dtype=bool))
        if eroded.sum() >= MIN_NOISE_PIXELS:
            region = eroded
    luma = luminance(img)
    e_obs = _gradient_energy(luma, region)
    if e_obs < calibration.constant("blur.gradient_floor"):
        raise UnobservableBlurError(
            f"gradient energy {e_obs:.3g} below observability floor"
        )
    probe = gaussian_kernel(calibration.blur_probe_sigma(), 15).weights
    r_observed = _gradient_energy(_conv_plane(luma, probe), region) / e_obs
    best_sigma, best_residual = None, None
    for sigma, expected_ratio in calibration.blur_ratio_table():
        residual = abs(r_observed - expected_ratio)
        if best_residual is None or residual < best_residual:
            best_sigma, best_residual = sigma, residual
    confidence = max(0.05, 1.0 - 10.0 * best_residual)
    return make_blur_param(best_sigma, confidence=min(confidence, 1.0))


def quality_from_tables(tables: QuantTables) -> int:
    """Least-squares inversion of the IJG scaling over the 64 luma entries."""
    observed = tables.luma.astype(np.int64)
    best_q, best_err = 1, None
    for q in range(1, 101):
        cand = quant_tables_for_quality(q).luma
        err = int(np.sum((cand - observed) ** 2))
        if best_err is None or err < best_err:
            best_q, best_err = q, err
    return best_q


def blockiness(img: ImageBuffer) -> float:
    """Mean 8-aligned boundary discontinuity minus the off-boundary baseline."""
    luma = luminance(img)
    h, w = luma.shape
    if h < 17 or w < 17:
        raise InvalidArgumentError("image too small for a blockiness statistic")
    col_diff = np.abs(luma[:, 1:] - luma[:, :-1])
    row_diff = np.abs(luma[1:, :] - luma[:-1, :])
    col_idx = np.arange(w - 1)
    row_idx = np.arange(h - 1)
    col_b = col_idx % 8 == 7
    row_b = row_idx % 8 == 7
    col_score = col_diff[:, col_b].mean() - col_diff[:, ~col_b].mean()
    row_score = row_diff[row_b, :].mean() - row_diff[~row_b, :].mean()
    return float((col_score + row_score) / 2.0)


def _quality_from_blockiness(b: float) -> tuple[int, float]:
    knots = calibration.jpeg_blockiness_table()  # ascending q, descending B
    floor = calibration.jpeg_signature_floor()
    if b <= floor:
        return 100, 0.2
    q_hi, b_hi = knots[-1]
    if b <= b_hi:
        # Between the highest-quality knot and the signature floor.
        frac = (b - floor) / max(b_hi - floor, 1e-12)
        q = 100 - (100 - q_hi) * frac
    else:
        q_lo, b_lo = knots[0]
        if b >= b_lo:
            q = float(q_lo)
        else:
            q = float(q_lo)
            for (q0, b0), (q1, b1) in zip(knots[:-1], knots[1:]):
                if b1 <= b <= b0:
                    frac = (b - b0) / (b1 - b0)
                    q = q0 + (q1 - q0) * frac
                    break
    mid_b = dict(knots).get(50, b_hi)
    confidence = float(np.clip(0.3 + 0.6 * (b - floor) / max(mid_b - floor, 1e-12), 0.3, 0.9))
    return int(round(q)), confidence


def estimate_jpeg_quality(source: bytes | ImageBuffer | QuantTables) -> DegradationParam:
    """Quality factor from a bitstream (exact) or from decoded pixels.

    The pixel path maps the blockiness statistic through a calibration
    table; when no 8x8 block signature is present it reports q=100 with
    confidence below 0.3.
    """
    if isinstance(source, QuantTables):
        return DegradationParam(
            kind=DegradationKind.JPEG, quality=quality_from_tables(source), confidence=1.0
        )
    if isinstance(source, (bytes, bytearray)):
        tables = parse_quant_tables(bytes(source))
        return DegradationParam(
            kind=DegradationKind.JPEG, quality=quality_from_tables(tables), confidence=1.0
        )
    if isinstance(source, ImageBuffer):
        q, confidence = _quality_from_blockiness(blockiness(source))
        return DegradationParam(kind=DegradationKind.JPEG, quality=q, confidence=confidence)
    raise InvalidArgumentError(f"cannot estimate JPEG quality from {type(source).__name__}")

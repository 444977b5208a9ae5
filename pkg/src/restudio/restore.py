"""Controllable restoration: Wiener deblur, TV denoise, DCT deblock.

Every operator consumes a DegradationParam (predicted or user-overridden)
plus a strength multiplier in [0, 2]. Strength 0 is a defined no-op that
returns the input bit-identically; otherwise outputs are clamped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import fft as sfft

from . import calibration
from .degrade import DegradationKind
from .errors import InsufficientDataError, InvalidArgumentError
from .estimate import DegradationParam, estimate_noise_sigma
from .imagecore import (
    Colorspace,
    ImageBuffer,
    Mask,
    convert_colorspace,
    gaussian_kernel,
)
from .jpegcodec import quant_tables_for_quality


class RestoreTask(Enum):
    DEBLUR = "deblur"
    DENOISE = "denoise"
    DEBLOCK = "deblock"


TASK_KIND = {
    RestoreTask.DEBLUR: DegradationKind.BLUR,
    RestoreTask.DENOISE: DegradationKind.NOISE,
    RestoreTask.DEBLOCK: DegradationKind.JPEG,
}


@dataclass
class RestoreRequest:
    image: ImageBuffer
    task: RestoreTask
    param: DegradationParam
    mask: Mask | None = None
    strength_scale: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.strength_scale <= 2.0):
            raise InvalidArgumentError(
                f"strength_scale must lie in [0, 2], got {self.strength_scale}"
            )
        if self.param.kind != TASK_KIND[self.task]:
            raise InvalidArgumentError(
                f"parameter kind {self.param.kind.value} does not match task {self.task.value}"
            )
        if self.mask is not None and not self.mask.matches(self.image):
            raise InvalidArgumentError("mask dimensions do not match image")


def _check_strength(strength_scale):
    if not (0.0 <= strength_scale <= 2.0):
        raise InvalidArgumentError(
            f"strength_scale must lie in [0, 2], got {strength_scale}"
        )


def deblur_wiener(
    img: ImageBuffer, param: DegradationParam, strength_scale: float = 1.0
) -> ImageBuffer:
    """Frequency-domain Wiener filter guided by the 15x15 kernel.

    conj(K) * Y / (|K|^2 + eps) with eps = eps0 / strength_scale, scaled to
    unit DC gain so brightness is preserved; eps0 comes from the image's
    own noise estimate, floored by the constants file. The image is
    reflect-padded before the FFT so the periodic boundary assumption does
    not ring into the frame.
    """
    _check_strength(strength_scale)
    if strength_scale == 0.0:
        return img
    if param.kind != DegradationKind.BLUR or param.kernel_vec is None:
        raise InvalidArgumentError("deblur requires a blur parameter with kernel_vec")
    if img.height < 15 or img.width < 15:
        raise InvalidArgumentError("image must be at least 15x15 for deblurring")
    kernel = np.asarray(param.kernel_vec, dtype=np.float64).reshape(15, 15)
    if not np.all(np.isfinite(kernel)) or kernel.sum() < 1e-6:
        raise InvalidArgumentError("degenerate blur kernel")

    try:
        sigma_hat = estimate_noise_sigma(img).sigma_noise
    except InsufficientDataError:
        sigma_hat = 0.0
    floor = calibration.constant("wiener.epsilon_floor")
    # Below sigma 1 the wavelet estimate is signal leakage, not noise;
    # treat the input as clean so the round trip stays sharp.
    eps0 = max((sigma_hat / 255.0) ** 2, floor) if sigma_hat >= 1.0 else floor
    eps = eps0 / strength_scale

    pad = int(min(64, img.height - 1, img.width - 1))
    ph, pw = img.height + 2 * pad, img.width + 2 * pad
    kernel_full = np.zeros((ph, pw))
    kernel_full[:15, :15] = kernel
    kernel_full = np.roll(kernel_full, (-7, -7), axis=(0, 1))
    k_f = sfft.fft2(kernel_full)
    h_f = np.conj(k_f) * (1.0 + eps) / (np.abs(k_f) ** 2 + eps)

    out = np.empty_like(img.data)
    for c in range(img.channels):
        padded = np.pad(img.data[:, :, c], pad, mode="reflect")
        restored = np.real(sfft.ifft2(sfft.fft2(padded) * h_f))
        out[:, :, c] = restored[pad:pad + img.height, pad:pad + img.width]
    return ImageBuffer(np.clip(out, 0.0, 1.0), img.colorspace)


def _gradient(u):
    g = np.zeros((2,) + u.shape)
    g[0, :-1, :] = u[1:, :] - u[:-1, :]
    g[1, :, :-1] = u[:, 1:] - u[:, :-1]
    return g


def _divergence(p):
    d = np.zeros(p.shape[1:])
    d[:-1, :] += p[0, :-1, :]
    d[1:, :] -= p[0, :-1, :]
    d[:, :-1] += p[1, :, :-1]
    d[:, 1:] -= p[1, :, :-1]
    return d


def chambolle_tv(y: np.ndarray, lam: float, iterations: int | None = None,
                 step: float | None = None) -> np.ndarray:
    """Dual projection for min_u 0.5*||u - y||^2 + lam * TV(u)."""
    if lam <= 0:
        return y.copy()
    if iterations is None:
        iterations = int(calibration.constant("tv.iterations"))
    if step is None:
        step = calibration.constant("tv.step")
    p = np.zeros((2,) + y.shape)
    scaled = y / lam
    for _ in range(iterations):
        g = _gradient(_divergence(p) - scaled)
        mag = np.sqrt(g[0] ** 2 + g[1] ** 2)
        p = (p + step * g) / (1.0 + step * mag)
    return y - lam * _divergence(p)


def _tv_lambda(sigma_noise: float, strength_scale: float) -> float:
    return calibration.constant("tv.weight") * (sigma_noise / 255.0) * strength_scale


_CHROMA_KERNEL = None


def _chroma_smooth(plane: np.ndarray) -> np.ndarray:
    """3x3 Gaussian used on Lab a/b channels instead of TV."""
    global _CHROMA_KERNEL
    if _CHROMA_KERNEL is None:
        _CHROMA_KERNEL = gaussian_kernel(0.8, 3).weights
    padded = np.pad(plane, 1, mode="reflect")
    k = _CHROMA_KERNEL
    out = np.zeros_like(plane)
    for dy in range(3):
        for dx in range(3):
            out += k[dy, dx] * padded[dy:dy + plane.shape[0], dx:dx + plane.shape[1]]
    return out


def denoise_tv(
    img: ImageBuffer, param: DegradationParam, strength_scale: float = 1.0
) -> ImageBuffer:
    """Chambolle TV on the luminance, light Gaussian smoothing on chroma.

    lam = tv.weight * (sigma/255) * strength_scale; lam of zero returns
    the input unchanged.
    """
    _check_strength(strength_scale)
    if param.kind != DegradationKind.NOISE:
        raise InvalidArgumentError("denoise requires a noise parameter")
    lam = _tv_lambda(param.sigma_noise, strength_scale)
    if lam == 0.0:
        return img
    if img.channels == 1:
        u = chambolle_tv(img.data[:, :, 0], lam)
        return ImageBuffer(np.clip(u, 0.0, 1.0)[:, :, None], img.colorspace)
    lab = convert_colorspace(img, Colorspace.CIELAB).data
    out = np.empty_like(lab)
    out[:, :, 0] = chambolle_tv(lab[:, :, 0] / 100.0, lam) * 100.0
    out[:, :, 1] = _chroma_smooth(lab[:, :, 1])
    out[:, :, 2] = _chroma_smooth(lab[:, :, 2])
    return convert_colorspace(ImageBuffer(out, Colorspace.CIELAB), Colorspace.SRGB)


@dataclass
class DeblockStats:
    zeroed_coeffs: int
    total_coeffs: int


def _rgb_ycc(data):
    m = np.array([
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ])
    return data @ m.T


def _ycc_rgb(ycc):
    m = np.array([
        [1.0, 0.0, 1.402],
        [1.0, -0.344136, -0.714136],
        [1.0, 1.772, 0.0],
    ])
    return ycc @ m.T


def _deblock_plane(plane: np.ndarray, threshold: float) -> tuple[np.ndarray, int, int]:
    h, w = plane.shape
    acc = np.zeros_like(plane)
    zeroed = 0
    total = 0
    for dy in (0, 4):
        for dx in (0, 4):
            eb = (-(h + dy)) % 8
            er = (-(w + dx)) % 8
            padded = np.pad(plane, ((dy, eb), (dx, er)), mode="reflect")
            ph, pw = padded.shape
            blocks = (
                padded.reshape(ph // 8, 8, pw // 8, 8)
                .transpose(0, 2, 1, 3)
                .reshape(-1, 8, 8)
            )
            coeffs = sfft.dctn(blocks, axes=(1, 2), norm="ortho")
            small = np.abs(coeffs) < threshold
            small[:, 0, 0] = False  # never drop the block mean
            zeroed += int(small.sum())
            total += small.size
            coeffs[small] = 0.0
            recon = sfft.idctn(coeffs, axes=(1, 2), norm="ortho")
            tiled = (
                recon.reshape(ph // 8, pw // 8, 8, 8)
                .transpose(0, 2, 1, 3)
                .reshape(ph, pw)
            )
            acc += tiled[dy:dy + h, dx:dx + w]
    return acc / 4.0, zeroed, total


def deblock_dct(
    img: ImageBuffer,
    param: DegradationParam,
    strength_scale: float = 1.0,
    with_stats: bool = False,
):
    """Shifted-window 8x8 DCT hard thresholding of the luminance.

    Threshold scales with the mean luma quantization step for the
    parameter's quality factor; shifts {0,4}^2 are averaged. The block
    DC is exempt from thresholding.
    """
    _check_strength(strength_scale)
    if param.kind != DegradationKind.JPEG:
        raise InvalidArgumentError("deblock requires a JPEG parameter")
    if strength_scale == 0.0:
        return (img, DeblockStats(0, 0)) if with_stats else img
    q = max(1, int(param.quality))
    mean_step = float(quant_tables_for_quality(q).luma.mean())
    threshold = (
        calibration.constant("deblock.threshold_scale") * mean_step / 255.0 * strength_scale
    )
    if img.channels == 1:
        plane, zeroed, total = _deblock_plane(img.data[:, :, 0], threshold)
        out = ImageBuffer(np.clip(plane, 0.0, 1.0)[:, :, None], img.colorspace)
    else:
        ycc = _rgb_ycc(img.data)
        y, zeroed, total = _deblock_plane(ycc[:, :, 0], threshold)
        ycc = np.concatenate([y[:, :, None], ycc[:, :, 1:]], axis=2)
        out = ImageBuffer(np.clip(_ycc_rgb(ycc), 0.0, 1.0), img.colorspace)
    if with_stats:
        return out, DeblockStats(zeroed, total)
    return out


_TASK_OPS = {
    RestoreTask.DEBLUR: deblur_wiener,
    RestoreTask.DENOISE: denoise_tv,
    RestoreTask.DEBLOCK: deblock_dct,
}


def restore(req: RestoreRequest) -> ImageBuffer:
    """Run the task operator on the full frame, then blend through the mask."""
    restored = _TASK_OPS[req.task](req.image, req.param, req.strength_scale)
    if req.mask is None:
        return restored
    alpha = req.mask.alpha[:, :, None]
    blended = alpha * restored.data + (1.0 - alpha) * req.image.data
    return ImageBuffer(blended, req.image.colorspace)


def tv_statistic(img: ImageBuffer) -> float:
    """Sum of gradient magnitudes over all channels; the smoothing monotone."""
    total = 0.0
    for c in range(img.channels):
        g = _gradient(img.data[:, :, c])
        total += float(np.sqrt(g[0] ** 2 + g[1] ** 2).sum())
    return total

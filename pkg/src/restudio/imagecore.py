"""Pixel containers, Gaussian kernels, convolution, PSNR, and color conversion.

All pixel math runs in float64 on the [0, 1] sample scale; quantization to
8 bits happens only at the PNG/JPEG boundary. Spatial filtering uses
reflect-101 padding throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import ndimage, signal

from .errors import InvalidArgumentError


class Colorspace(Enum):
    SRGB = "sRGB"
    LINEAR_GRAY = "LinearGray"
    CIELAB = "CIELAB"


@dataclass
class ImageBuffer:
    """Floating-point raster, shape (H, W, C) with C in {1, 3}.

    sRGB and LinearGray samples live in [0, 1]; CIELAB uses its native
    ranges. The backing array is marked read-only: operations return new
    buffers instead of mutating.
    """

    data: np.ndarray
    colorspace: Colorspace = Colorspace.SRGB

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise InvalidArgumentError(f"expected (H, W, 1|3) data, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("image samples must be finite")
        if self.colorspace in (Colorspace.SRGB, Colorspace.LINEAR_GRAY):
            if arr.min() < -1e-9 or arr.max() > 1 + 1e-9:
                raise InvalidArgumentError(
                    f"{self.colorspace.value} samples must lie in [0, 1], "
                    f"got [{arr.min():.6g}, {arr.max():.6g}]"
                )
            arr = np.clip(arr, 0.0, 1.0)
        if self.colorspace == Colorspace.LINEAR_GRAY and arr.shape[2] != 1:
            raise InvalidArgumentError("LinearGray images have exactly one channel")
        if self.colorspace != Colorspace.LINEAR_GRAY and arr.shape[2] != 3:
            raise InvalidArgumentError(f"{self.colorspace.value} images have three channels")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass
class Mask:
    """Single-channel soft alpha raster in [0, 1], shape (H, W)."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.alpha, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"mask alpha must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < -1e-9 or arr.max() > 1 + 1e-9:
            raise InvalidArgumentError("mask alpha must be finite and in [0, 1]")
        arr = np.clip(arr, 0.0, 1.0)
        arr.flags.writeable = False
        object.__setattr__(self, "alpha", arr)

    @property
    def height(self) -> int:
        return self.alpha.shape[0]

    @property
    def width(self) -> int:
        return self.alpha.shape[1]

    def matches(self, img: ImageBuffer) -> bool:
        return self.alpha.shape == (img.height, img.width)


@dataclass
class Kernel2D:
    """Normalized non-negative blur kernel with odd side length."""

    weights: np.ndarray
    size: int = field(init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
            raise InvalidArgumentError(f"kernel must be square with odd size, got {w.shape}")
        if w.min() < 0:
            raise InvalidArgumentError("blur kernel weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-6:
            raise InvalidArgumentError(f"kernel weights must sum to 1, got {w.sum():.8f}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "size", w.shape[0])


def gaussian_kernel(sigma: float, size: int) -> Kernel2D:
    """Isotropic Gaussian taps at integer offsets, normalized to sum 1."""
    if not (sigma > 0) or not math.isfinite(sigma):
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    if size < 3 or size % 2 == 0:
        raise InvalidArgumentError(f"size must be odd and >= 3, got {size}")
    half = size // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    xx, yy = np.meshgrid(coords, coords)
    taps = np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2))
    return Kernel2D(taps / taps.sum())


def convolve(img: ImageBuffer, k: Kernel2D) -> ImageBuffer:
    """Spatial convolution with reflect-101 padding, same output size.

    Uses an FFT path internally; agrees with direct convolution to better
    than 1e-6 per sample.
    """
    half = k.size // 2
    if img.height <= half or img.width <= half:
        raise InvalidArgumentError(
            f"image {img.height}x{img.width} too small for kernel size {k.size}"
        )
    out = np.empty_like(img.data)
    for c in range(img.channels):
        padded = np.pad(img.data[:, :, c], half, mode="reflect")
        out[:, :, c] = signal.fftconvolve(padded, k.weights, mode="valid")
    if img.colorspace in (Colorspace.SRGB, Colorspace.LINEAR_GRAY):
        out = np.clip(out, 0.0, 1.0)
    return ImageBuffer(out, img.colorspace)


def mse(a: ImageBuffer, b: ImageBuffer) -> float:
    if a.data.shape != b.data.shape:
        raise InvalidArgumentError(
            f"dimension mismatch: {a.data.shape} vs {b.data.shape}"
        )
    return float(np.mean((a.data - b.data) ** 2))


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB with peak 1.0; +inf when identical."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


# sRGB <-> XYZ (D65) matrices, IEC 61966-2-1.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])
_LAB_DELTA = 6.0 / 29.0


def _srgb_decode(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _srgb_encode(c):
    c = np.clip(c, 0.0, None)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1.0 / 2.4) - 0.055)


def _lab_f(t):
    return np.where(t > _LAB_DELTA**3, np.cbrt(t), t / (3 * _LAB_DELTA**2) + 4.0 / 29.0)


def _lab_f_inv(ft):
    return np.where(ft > _LAB_DELTA, ft**3, 3 * _LAB_DELTA**2 * (ft - 4.0 / 29.0))


def _srgb_to_lab(rgb):
    xyz = _srgb_decode(rgb) @ _RGB_TO_XYZ.T
    f = _lab_f(xyz / _D65_WHITE)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def _lab_to_srgb(lab):
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1) * _D65_WHITE
    return np.clip(_srgb_encode(xyz @ _XYZ_TO_RGB.T), 0.0, 1.0)


def convert_colorspace(img: ImageBuffer, target: Colorspace) -> ImageBuffer:
    """Standard D65 transforms between sRGB, LinearGray, and CIELAB."""
    src = img.colorspace
    if src == target:
        return img
    data = img.data
    if src == Colorspace.SRGB and target == Colorspace.CIELAB:
        return ImageBuffer(_srgb_to_lab(data), Colorspace.CIELAB)
    if src == Colorspace.CIELAB and target == Colorspace.SRGB:
        return ImageBuffer(_lab_to_srgb(data), Colorspace.SRGB)
    if src == Colorspace.SRGB and target == Colorspace.LINEAR_GRAY:
        y = _srgb_decode(data) @ _RGB_TO_XYZ[1]
        return ImageBuffer(np.clip(y, 0.0, 1.0)[:, :, None], Colorspace.LINEAR_GRAY)
    if src == Colorspace.LINEAR_GRAY and target == Colorspace.SRGB:
        encoded = np.clip(_srgb_encode(data[:, :, 0]), 0.0, 1.0)
        return ImageBuffer(np.repeat(encoded[:, :, None], 3, axis=2), Colorspace.SRGB)
    if src == Colorspace.LINEAR_GRAY and target == Colorspace.CIELAB:
        fy = _lab_f(data[:, :, 0])
        lab = np.zeros(data.shape[:2] + (3,))
        lab[:, :, 0] = 116.0 * fy - 16.0
        return ImageBuffer(lab, Colorspace.CIELAB)
    raise InvalidArgumentError(f"unsupported conversion {src.value} -> {target.value}")


def luminance(img: ImageBuffer) -> np.ndarray:
    """Rec. 601 luma of the stored samples as (H, W); identity for 1-channel."""
    if img.channels == 1:
        return img.data[:, :, 0].copy()
    return img.data @ np.array([0.299, 0.587, 0.114])


def gaussian_blur(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Channel-wise Gaussian filter with reflect-101 boundary; sigma 0 is identity."""
    if sigma <= 0:
        return arr.copy()
    if arr.ndim == 2:
        return ndimage.gaussian_filter(arr, sigma, mode="mirror")
    out = np.empty_like(arr)
    for c in range(arr.shape[2]):
        out[:, :, c] = ndimage.gaussian_filter(arr[:, :, c], sigma, mode="mirror")
    return out


def resize_max_dim(img: ImageBuffer, max_dim: int) -> ImageBuffer:
    """Bilinear downscale so that max(H, W) <= max_dim; never upscales."""
    scale = max_dim / max(img.height, img.width)
    if scale >= 1.0:
        return img
    out = ndimage.zoom(img.data, (scale, scale, 1.0), order=1, mode="nearest")
    if img.colorspace in (Colorspace.SRGB, Colorspace.LINEAR_GRAY):
        out = np.clip(out, 0.0, 1.0)
    return ImageBuffer(out, img.colorspace)


def to_uint8(img: ImageBuffer) -> np.ndarray:
    """Quantize [0, 1] samples to uint8; only valid for sRGB/LinearGray."""
    if img.colorspace == Colorspace.CIELAB:
        raise InvalidArgumentError("CIELAB buffers cannot be quantized directly")
    return np.round(img.data * 255.0).astype(np.uint8)


def from_uint8(arr: np.ndarray, colorspace: Colorspace | None = None) -> ImageBuffer:
    arr = np.asarray(arr)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if colorspace is None:
        colorspace = Colorspace.LINEAR_GRAY if arr.shape[2] == 1 else Colorspace.SRGB
    return ImageBuffer(arr.astype(np.float64) / 255.0, colorspace)

"""Synthetic degradations for testing: Gaussian blur, AWGN, and JPEG.

Noise sigma is expressed on the 8-bit scale (sigma/255 on the float
domain) and is drawn from numpy's PCG64 generator so that a given seed
reproduces the same field on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidArgumentError
from .imagecore import Colorspace, ImageBuffer, convolve, gaussian_kernel
from .jpegcodec import QuantTables, jpeg_decode, jpeg_encode, quant_tables_for_quality

__all__ = [
    "DegradationKind",
    "DegradationSpec",
    "QuantTables",
    "apply_blur",
    "apply_awgn",
    "apply_degradation",
    "quant_tables_for_quality",
    "jpeg_encode",
    "jpeg_decode",
]

BLUR_KERNEL_SIZE = 15
BLUR_SIGMA_RANGE = (0.1, 3.0)
NOISE_SIGMA_RANGE = (0.0, 50.0)
JPEG_QUALITY_RANGE = (10, 90)


class DegradationKind(Enum):
    BLUR = "blur"
    NOISE = "noise"
    JPEG = "jpeg"


@dataclass
class DegradationSpec:
    """One synthesis recipe; exactly the payload for its kind is set."""

    kind: DegradationKind
    sigma_blur: float | None = None
    sigma_noise: float | None = None
    quality: int | None = None
    rng_seed: int = 0

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
            lo, hi = BLUR_SIGMA_RANGE
            if not (lo <= self.sigma_blur <= hi):
                raise InvalidArgumentError(f"sigma_blur must lie in [{lo}, {hi}]")
        elif self.kind == DegradationKind.NOISE:
            lo, hi = NOISE_SIGMA_RANGE
            if not (lo <= self.sigma_noise <= hi):
                raise InvalidArgumentError(f"sigma_noise must lie in [{lo}, {hi}]")
        else:
            lo, hi = JPEG_QUALITY_RANGE
            if not (lo <= self.quality <= hi):
                raise InvalidArgumentError(f"quality must lie in [{lo}, {hi}]")


def apply_blur(img: ImageBuffer, sigma_blur: float) -> ImageBuffer:
    """Isotropic Gaussian blur with a 15x15 kernel, reflect boundary."""
    lo, hi = BLUR_SIGMA_RANGE
    if not (lo <= sigma_blur <= hi):
        raise InvalidArgumentError(f"sigma_blur must lie in [{lo}, {hi}], got {sigma_blur}")
    return convolve(img, gaussian_kernel(sigma_blur, BLUR_KERNEL_SIZE))


def apply_awgn(img: ImageBuffer, sigma_noise: float, rng_seed: int = 0) -> ImageBuffer:
    """Add clamped i.i.d. Gaussian noise with std sigma_noise/255."""
    lo, hi = NOISE_SIGMA_RANGE
    if not (lo <= sigma_noise <= hi):
        raise InvalidArgumentError(f"sigma_noise must lie in [{lo}, {hi}], got {sigma_noise}")
    if img.colorspace == Colorspace.CIELAB:
        raise InvalidArgumentError("AWGN is defined on [0, 1] sample buffers")
    if sigma_noise == 0:
        return img
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    noise = rng.standard_normal(img.data.shape) * (sigma_noise / 255.0)
    return ImageBuffer(np.clip(img.data + noise, 0.0, 1.0), img.colorspace)


def apply_degradation(img: ImageBuffer, spec: DegradationSpec) -> ImageBuffer:
    if spec.kind == DegradationKind.BLUR:
        return apply_blur(img, spec.sigma_blur)
    if spec.kind == DegradationKind.NOISE:
        return apply_awgn(img, spec.sigma_noise, spec.rng_seed)
    decoded, _ = jpeg_decode(jpeg_encode(img, spec.quality))
    return decoded

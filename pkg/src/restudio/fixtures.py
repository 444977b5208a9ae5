"""Deterministic test and benchmark imagery.

Natural photographs come from scikit-image's bundled data files (a test
and benchmarking dependency); everything else is synthesized with fixed
seeds so fixtures are identical across runs and platforms.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .imagecore import (
    Colorspace,
    ImageBuffer,
    convert_colorspace,
    from_uint8,
    gaussian_blur,
)


@lru_cache(maxsize=None)
def natural_image(name: str) -> ImageBuffer:
    """A 256x256 crop of a bundled photograph: camera, astronaut, or coffee."""
    import skimage.data as skdata

    if name == "camera":
        return from_uint8(skdata.camera()[128:384, 128:384])
    if name == "astronaut":
        return from_uint8(skdata.astronaut()[40:296, 120:376])
    if name == "coffee":
        return from_uint8(skdata.coffee()[80:336, 200:456])
    if name == "moon":
        return from_uint8(skdata.moon()[128:384, 128:384])
    raise KeyError(f"unknown natural image {name!r}")


NATURAL_NAMES = ("camera", "astronaut", "coffee")


def constant_image(value: float = 0.5, size: int = 128, channels: int = 1) -> ImageBuffer:
    data = np.full((size, size, channels), value, dtype=np.float64)
    space = Colorspace.LINEAR_GRAY if channels == 1 else Colorspace.SRGB
    return ImageBuffer(data, space)


def checkerboard(cell: int = 8, size: int = 128, lo: float = 0.15, hi: float = 0.85) -> ImageBuffer:
    idx = np.arange(size) // cell
    board = (idx[:, None] + idx[None, :]) % 2
    data = np.where(board == 0, lo, hi).astype(np.float64)
    return ImageBuffer(data[:, :, None], Colorspace.LINEAR_GRAY)


def blob_pattern(size: int = 128, seed: int = 7, lo: float = 0.2, hi: float = 0.8) -> ImageBuffer:
    rng = np.random.Generator(np.random.PCG64(seed))
    field = gaussian_blur(rng.standard_normal((size, size)), 4.0)
    data = np.where(field > np.median(field), hi, lo)
    return ImageBuffer(data[:, :, None], Colorspace.LINEAR_GRAY)


def pink_texture(size: int = 128, seed: int = 11) -> ImageBuffer:
    """1/f-weighted noise texture scaled to [0.1, 0.9]."""
    rng = np.random.Generator(np.random.PCG64(seed))
    spectrum = np.fft.fft2(rng.standard_normal((size, size)))
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    radius = np.sqrt(fy**2 + fx**2)
    radius[0, 0] = 1.0
    shaped = np.real(np.fft.ifft2(spectrum / radius))
    lo, hi = shaped.min(), shaped.max()
    data = 0.1 + 0.8 * (shaped - lo) / (hi - lo)
    return ImageBuffer(data[:, :, None], Colorspace.LINEAR_GRAY)


def disk_fixture(size: int = 128, radius: int = 36) -> tuple[ImageBuffer, np.ndarray]:
    """Flat disk on a flat background, roughly 30 CIE76 units apart.

    Returns the image and the ground-truth boolean disk mask.
    """
    bg_lab = np.array([55.0, 0.0, 0.0])
    fg_lab = np.array([55.0, 0.0, 30.0])
    lab = np.empty((size, size, 3))
    yy, xx = np.mgrid[0:size, 0:size]
    center = (size - 1) / 2.0
    truth = (yy - center) ** 2 + (xx - center) ** 2 <= radius**2
    lab[~truth] = bg_lab
    lab[truth] = fg_lab
    img = convert_colorspace(ImageBuffer(lab, Colorspace.CIELAB), Colorspace.SRGB)
    return img, truth


def two_region_fixture(size: int = 256) -> tuple[ImageBuffer, np.ndarray]:
    """Left half smooth gradient, right half fine checkerboard texture.

    Returns the clean image and the boolean mask of the smooth half.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    smooth = 0.25 + 0.5 * (0.5 * yy / size + 0.5 * np.sin(np.pi * xx / size) ** 2)
    idx = np.arange(size) // 2
    board = (idx[:, None] + idx[None, :]) % 2
    texture = np.where(board == 0, 0.3, 0.7)
    data = np.where(xx < size // 2, smooth, texture)
    region = np.zeros((size, size), dtype=bool)
    region[:, : size // 2] = True
    return ImageBuffer(np.clip(data, 0, 1)[:, :, None], Colorspace.LINEAR_GRAY), region


def step_edge(size: int = 64, lo: float = 0.2, hi: float = 0.8) -> ImageBuffer:
    data = np.full((size, size), lo)
    data[:, size // 2:] = hi
    return ImageBuffer(data[:, :, None], Colorspace.LINEAR_GRAY)

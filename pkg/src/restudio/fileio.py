"""8-bit PNG and JPEG I/O at the service boundary.

PNG goes through Pillow; JPEG always goes through the package's own
codec so quantization tables stay recoverable. Pixels are quantized to
8 bits here and nowhere else.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .errors import InvalidArgumentError
from .imagecore import ImageBuffer, Mask, from_uint8, to_uint8
from .jpegcodec import QuantTables, jpeg_decode, jpeg_encode

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
JPEG_MAGIC = b"\xff\xd8"


def encode_png(img: ImageBuffer) -> bytes:
    arr = to_uint8(img)
    mode = "L" if img.channels == 1 else "RGB"
    pil = Image.fromarray(arr[:, :, 0] if mode == "L" else arr, mode)
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> ImageBuffer:
    try:
        pil = Image.open(io.BytesIO(data))
        pil.load()
    except Exception as exc:
        raise InvalidArgumentError(f"undecodable PNG: {exc}") from exc
    if pil.mode in ("L", "I;16", "I"):
        arr = np.asarray(pil.convert("L"))
    elif pil.mode in ("RGB", "RGBA", "P", "LA"):
        arr = np.asarray(pil.convert("RGB"))
    else:
        arr = np.asarray(pil.convert("RGB"))
    return from_uint8(arr)


def encode_mask_png(mask: Mask) -> bytes:
    arr = np.round(mask.alpha * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, "L").save(buf, format="PNG")
    return buf.getvalue()


def decode_mask_png(data: bytes) -> Mask:
    try:
        pil = Image.open(io.BytesIO(data)).convert("L")
    except Exception as exc:
        raise InvalidArgumentError(f"undecodable mask PNG: {exc}") from exc
    return Mask(np.asarray(pil).astype(np.float64) / 255.0)


def decode_image(data: bytes) -> tuple[ImageBuffer, QuantTables | None]:
    """Sniff PNG vs JPEG; JPEG decode also yields the stream's DQT."""
    if data[:8] == PNG_MAGIC:
        return decode_png(data), None
    if data[:2] == JPEG_MAGIC:
        img, tables = jpeg_decode(data)
        return img, tables
    raise InvalidArgumentError("unrecognized image format (expected PNG or JPEG)")


def encode_image(img: ImageBuffer, fmt: str, quality: int = 90) -> bytes:
    if fmt == "png":
        return encode_png(img)
    if fmt == "jpeg":
        return jpeg_encode(img, quality)
    raise InvalidArgumentError(f"unsupported format {fmt!r}")

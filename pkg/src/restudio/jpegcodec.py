"""Baseline sequential JFIF codec with verbatim quantization-table access.

Writes SOI/APP0/DQT/SOF0/DHT/SOS/EOI with the standard Huffman tables and
4:4:4 sampling; decodes any baseline stream with sampling factors up to
2x2. Tables scale from the Annex-K bases by the IJG quality rule, so a
quality factor written by the encoder can be recovered exactly from the
DQT segment. Progressive and arithmetic modes, 16-bit tables, and restart
markers are rejected as unsupported.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import InvalidArgumentError, ParseError, UnsupportedFormatError
from .imagecore import Colorspace, ImageBuffer, to_uint8

ZIGZAG = np.array([
    0,  1,  8, 16,  9,  2,  3, 10,
    17, 24, 32, 25, 18, 11,  4,  5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13,  6,  7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
])

BASE_LUMA = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)

BASE_CHROMA = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.int64)

# Annex-K "typical" Huffman tables: (bits per code length 1..16, symbols).
DC_LUMA_BITS = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
DC_LUMA_VALS = list(range(12))
DC_CHROMA_BITS = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
DC_CHROMA_VALS = list(range(12))
AC_LUMA_BITS = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D]
AC_LUMA_VALS = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12,
    0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16,
    0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39,
    0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79,
    0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98,
    0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4,
    0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA,
    0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
]
AC_CHROMA_BITS = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77]
AC_CHROMA_VALS = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21,
    0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
    0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
    0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0,
    0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34,
    0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
    0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38,
    0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
    0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
    0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78,
    0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96,
    0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
    0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4,
    0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
    0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2,
    0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
    0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9,
    0xEA, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
]


@dataclass
class QuantTables:
    """Luma and chroma quantization tables in natural (row-major) order."""

    luma: np.ndarray
    chroma: np.ndarray

    def __post_init__(self):
        for name in ("luma", "chroma"):
            t = np.asarray(getattr(self, name), dtype=np.int64)
            if t.shape != (8, 8):
                raise InvalidArgumentError(f"{name} table must be 8x8, got {t.shape}")
            if t.min() < 1 or t.max() > 255:
                raise InvalidArgumentError(f"{name} table entries must lie in [1, 255]")
            object.__setattr__(self, name, t)

    def __eq__(self, other):
        return (
            isinstance(other, QuantTables)
            and np.array_equal(self.luma, other.luma)
            and np.array_equal(self.chroma, other.chroma)
        )


def quant_tables_for_quality(quality: int) -> QuantTables:
    """Annex-K base tables scaled by the IJG rule for a quality in [1, 100]."""
    q = int(quality)
    if q < 1 or q > 100:
        raise InvalidArgumentError(f"quality must lie in [1, 100], got {quality}")
    scale = 5000 // q if q < 50 else 200 - 2 * q
    luma = np.clip((BASE_LUMA * scale + 50) // 100, 1, 255)
    chroma = np.clip((BASE_CHROMA * scale + 50) // 100, 1, 255)
    return QuantTables(luma, chroma)


def parse_quant_tables(data: bytes) -> QuantTables:
    """Read the DQT segments of a JFIF stream without decoding pixels."""
    if len(data) < 2 or data[0:2] != b"\xff\xd8":
        raise ParseError("stream does not start with SOI", offset=0, missing_marker="SOI")
    pos = 2
    found: dict[int, np.ndarray] = {}
    while pos + 4 <= len(data):
        if data[pos] != 0xFF:
            raise ParseError(f"expected marker, found byte {data[pos]:#04x}", offset=pos)
        marker = data[pos + 1]
        pos += 2
        if marker == 0xD9 or marker == 0xDA:  # EOI or SOS: tables must precede scan
            break
        if marker == 0x01 or 0xD0 <= marker <= 0xD7:
            continue
        seglen = struct.unpack(">H", data[pos:pos + 2])[0]
        if seglen < 2 or pos + seglen > len(data):
            raise ParseError("segment overruns stream", offset=pos, missing_marker="EOI")
        if marker == 0xDB:
            body = data[pos + 2:pos + seglen]
            i = 0
            while i < len(body):
                pq, tq = body[i] >> 4, body[i] & 15
                if pq != 0:
                    raise UnsupportedFormatError("16-bit quantization tables not supported")
                if i + 65 > len(body):
                    raise ParseError("DQT table truncated", offset=pos + 2 + i)
                zz = np.frombuffer(body[i + 1:i + 65], dtype=np.uint8).astype(np.int64)
                natural = np.zeros(64, dtype=np.int64)
                natural[ZIGZAG] = zz
                found[tq] = natural.reshape(8, 8)
                i += 65
        pos += seglen
    if 0 not in found:
        raise ParseError("no quantization table in stream", offset=pos, missing_marker="DQT")
    return QuantTables(found[0], found.get(1, found[0]))


def _rgb_to_ycbcr(rgb):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    return np.stack([y, cb, cr], axis=-1)


def _ycbcr_to_rgb(ycc):
    y, cb, cr = ycc[..., 0], ycc[..., 1] - 128.0, ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


def _build_encode_table(bits, vals):
    table = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            table[vals[k]] = (code, length)
            code += 1
            k += 1
        code <<= 1
    return table


def _build_decode_lut(bits, vals):
    """16-bit-prefix lookup: (symbol list, code length list) indexed by peek value."""
    syms = np.zeros(1 << 16, dtype=np.int16)
    lens = np.zeros(1 << 16, dtype=np.uint8)
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            lo = code << (16 - length)
            hi = (code + 1) << (16 - length)
            syms[lo:hi] = vals[k]
            lens[lo:hi] = length
            code += 1
            k += 1
        code <<= 1
    return syms.tolist(), lens.tolist()


def _bit_size(v):
    return int(v).bit_length()


class _BitWriter:
    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.nbits = 0

    def put(self, bits, n):
        if n == 0:
            return
        self.acc = ((self.acc << n) | (bits & ((1 << n) - 1))) & 0xFFFFFFFFFFFF
        self.nbits += n
        while self.nbits >= 8:
            byte = (self.acc >> (self.nbits - 8)) & 0xFF
            self.out.append(byte)
            if byte == 0xFF:
                self.out.append(0x00)
            self.nbits -= 8

    def flush(self):
        if self.nbits:
            pad = 8 - self.nbits
            self.put((1 << pad) - 1, pad)


def _put_block(writer, zz, pred, dc_table, ac_table):
    """Huffman-encode one zig-zag block; returns the new DC predictor."""
    put = writer.put
    dc = int(zz[0])
    diff = dc - pred
    s = _bit_size(abs(diff))
    code, length = dc_table[s]
    put(code, length)
    if s:
        put(diff if diff >= 0 else diff + (1 << s) - 1, s)
    nz = np.nonzero(zz[1:])[0]
    k = 1
    for idx in nz:
        pos = int(idx) + 1
        run = pos - k
        while run > 15:
            code, length = ac_table[0xF0]
            put(code, length)
            run -= 16
        v = int(zz[pos])
        s = _bit_size(abs(v))
        code, length = ac_table[(run << 4) | s]
        put(code, length)
        put(v if v >= 0 else v + (1 << s) - 1, s)
        k = pos + 1
    if k <= 63:
        code, length = ac_table[0x00]
        put(code, length)
    return dc


def _plane_to_quantized_zigzag(plane, table):
    """Split a level-shifted plane into 8x8 blocks, DCT, quantize, zig-zag."""
    h, w = plane.shape
    blocks = plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)
    coeffs = sfft.dctn(blocks, axes=(1, 2), norm="ortho")
    quant = np.round(coeffs / table[None, :, :]).astype(np.int32)
    return quant.reshape(-1, 64)[:, ZIGZAG]


def _pad_to_multiple(plane, mult):
    h, w = plane.shape
    ph = (-h) % mult
    pw = (-w) % mult
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def jpeg_encode(img: ImageBuffer, quality: int) -> bytes:
    """Encode as baseline JFIF with 4:4:4 sampling (grayscale: one component)."""
    q = int(quality)
    if q < 1 or q > 100:
        raise InvalidArgumentError(f"quality must lie in [1, 100], got {quality}")
    if img.height < 8 or img.width < 8:
        raise InvalidArgumentError(
            f"image must be at least 8x8, got {img.height}x{img.width}"
        )
    if img.colorspace == Colorspace.CIELAB:
        raise InvalidArgumentError("encode expects sRGB or LinearGray input")
    tables = quant_tables_for_quality(q)
    pixels = to_uint8(img).astype(np.float64)

    if img.channels == 3:
        ycc = _rgb_to_ycbcr(pixels)
        planes = [ycc[:, :, 0], ycc[:, :, 1], ycc[:, :, 2]]
        qtabs = [tables.luma, tables.chroma, tables.chroma]
    else:
        planes = [pixels[:, :, 0]]
        qtabs = [tables.luma]

    comp_blocks = [
        _plane_to_quantized_zigzag(_pad_to_multiple(p, 8) - 128.0, t)
        for p, t in zip(planes, qtabs)
    ]

    out = bytearray()
    out += b"\xff\xd8"  # SOI
    out += b"\xff\xe0" + struct.pack(">H", 16) + b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00"

    dqt = bytearray()
    dqt += b"\x00" + bytes(tables.luma.reshape(-1)[ZIGZAG].astype(np.uint8))
    if img.channels == 3:
        dqt += b"\x01" + bytes(tables.chroma.reshape(-1)[ZIGZAG].astype(np.uint8))
    out += b"\xff\xdb" + struct.pack(">H", 2 + len(dqt)) + dqt

    ncomp = img.channels
    sof = struct.pack(">BHHB", 8, img.height, img.width, ncomp)
    for i in range(ncomp):
        sof += struct.pack("BBB", i + 1, 0x11, 0 if i == 0 else 1)
    out += b"\xff\xc0" + struct.pack(">H", 2 + len(sof)) + sof

    dht = bytearray()
    huff_specs = [(0, 0, DC_LUMA_BITS, DC_LUMA_VALS), (1, 0, AC_LUMA_BITS, AC_LUMA_VALS)]
    if ncomp == 3:
        huff_specs += [
            (0, 1, DC_CHROMA_BITS, DC_CHROMA_VALS),
            (1, 1, AC_CHROMA_BITS, AC_CHROMA_VALS),
        ]
    for cls, dest, bits, vals in huff_specs:
        dht += struct.pack("B", (cls << 4) | dest) + bytes(bits) + bytes(vals)
    out += b"\xff\xc4" + struct.pack(">H", 2 + len(dht)) + dht

    sos = struct.pack("B", ncomp)
    for i in range(ncomp):
        sos += struct.pack("BB", i + 1, 0x00 if i == 0 else 0x11)
    sos += b"\x00\x3f\x00"
    out += b"\xff\xda" + struct.pack(">H", 2 + len(sos)) + sos

    dc_luma = _build_encode_table(DC_LUMA_BITS, DC_LUMA_VALS)
    ac_luma = _build_encode_table(AC_LUMA_BITS, AC_LUMA_VALS)
    writer = _BitWriter()
    if ncomp == 1:
        pred = 0
        for zz in comp_blocks[0]:
            pred = _put_block(writer, zz, pred, dc_luma, ac_luma)
    else:
        # Interleave as MCUs: one block per component in 4:4:4, with
        # per-component DC predictors.
        dc_chroma = _build_encode_table(DC_CHROMA_BITS, DC_CHROMA_VALS)
        ac_chroma = _build_encode_table(AC_CHROMA_BITS, AC_CHROMA_VALS)
        preds = [0, 0, 0]
        htabs = [(dc_luma, ac_luma), (dc_chroma, ac_chroma), (dc_chroma, ac_chroma)]
        for b in range(comp_blocks[0].shape[0]):
            for ci in range(3):
                dc_table, ac_table = htabs[ci]
                preds[ci] = _put_block(writer, comp_blocks[ci][b], preds[ci], dc_table, ac_table)
    writer.flush()
    out += writer.out
    out += b"\xff\xd9"  # EOI
    return bytes(out)


class _ScanReader:
    """Bit reader over a de-stuffed entropy segment with 16-bit peeks."""

    def __init__(self, data: bytes, base_offset: int):
        self.data = data + b"\x00\x00\x00"
        self.nbits_total = len(data) * 8
        self.pos = 0
        self.base_offset = base_offset

    def _peek16(self):
        d = self.data
        i = self.pos >> 3
        r = self.pos & 7
        return ((d[i] << 16) | (d[i + 1] << 8) | d[i + 2]) >> (8 - r) & 0xFFFF

    def read_symbol(self, syms, lens):
        peek = self._peek16()
        length = lens[peek]
        if length == 0 or self.pos + length > self.nbits_total:
            raise ParseError(
                "entropy-coded data truncated or corrupt",
                offset=self.base_offset + (self.pos >> 3),
                missing_marker="EOI",
            )
        self.pos += length
        return syms[peek]

    def receive(self, n):
        if self.pos + n > self.nbits_total:
            raise ParseError(
                "entropy-coded data truncated",
                offset=self.base_offset + (self.pos >> 3),
                missing_marker="EOI",
            )
        v = self._peek16() >> (16 - n)
        self.pos += n
        return v


def _extend(v, s):
    return v - (1 << s) + 1 if v < (1 << (s - 1)) else v


def _blocks_to_plane(blocks, brows, bcols, table):
    coeffs = blocks.astype(np.float64) * table[None, :, :]
    pix = sfft.idctn(coeffs, axes=(1, 2), norm="ortho") + 128.0
    plane = pix.reshape(brows, bcols, 8, 8).transpose(0, 2, 1, 3).reshape(brows * 8, bcols * 8)
    return np.clip(plane, 0.0, 255.0)


def jpeg_decode(data: bytes) -> tuple[ImageBuffer, QuantTables]:
    """Decode a baseline JFIF stream, returning pixels and the DQT verbatim.

    Output samples are quantized to the 8-bit grid (values k/255). Raises
    ParseError on malformed streams (with byte offset) and
    UnsupportedFormatError for progressive/arithmetic/16-bit-table
    streams and restart markers.
    """
    if len(data) < 2 or data[0:2] != b"\xff\xd8":
        raise ParseError("stream does not start with SOI", offset=0, missing_marker="SOI")
    pos = 2
    qtables: dict[int, np.ndarray] = {}
    htables: dict[tuple[int, int], tuple[list, list]] = {}
    frame = None
    scan = None
    scan_data_start = None

    def need(n, expected):
        if pos + n > len(data):
            raise ParseError("unexpected end of stream", offset=len(data), missing_marker=expected)

    while True:
        need(2, "EOI" if frame else "SOF0")
        if data[pos] != 0xFF:
            raise ParseError(f"expected marker, found byte {data[pos]:#04x}", offset=pos)
        marker = data[pos + 1]
        pos += 2
        if marker == 0xD9:  # EOI
            raise ParseError("EOI before image data", offset=pos - 2, missing_marker="SOS")
        if marker in (0x01,) or 0xD0 <= marker <= 0xD7:
            continue  # TEM / bare RST: no payload
        need(2, "segment length")
        seglen = struct.unpack(">H", data[pos:pos + 2])[0]
        if seglen < 2 or pos + seglen > len(data):
            raise ParseError("segment overruns stream", offset=pos, missing_marker="EOI")
        body = data[pos + 2:pos + seglen]
        if marker == 0xDB:  # DQT
            i = 0
            while i < len(body):
                pq, tq = body[i] >> 4, body[i] & 15
                if pq != 0:
                    raise UnsupportedFormatError("16-bit quantization tables not supported")
                if i + 65 > len(body):
                    raise ParseError("DQT table truncated", offset=pos + 2 + i)
                zz = np.frombuffer(body[i + 1:i + 65], dtype=np.uint8).astype(np.int64)
                natural = np.zeros(64, dtype=np.int64)
                natural[ZIGZAG] = zz
                qtables[tq] = natural.reshape(8, 8)
                i += 65
        elif marker == 0xC4:  # DHT
            i = 0
            while i < len(body):
                cls, dest = body[i] >> 4, body[i] & 15
                if i + 17 > len(body):
                    raise ParseError("DHT header truncated", offset=pos + 2 + i)
                bits = list(body[i + 1:i + 17])
                total = sum(bits)
                if i + 17 + total > len(body):
                    raise ParseError("DHT symbols truncated", offset=pos + 2 + i)
                vals = list(body[i + 17:i + 17 + total])
                htables[(cls, dest)] = _build_decode_lut(bits, vals)
                i += 17 + total
        elif marker == 0xC0 or marker == 0xC1:  # SOF0 / SOF1 (huffman sequential)
            precision, height, width, ncomp = struct.unpack(">BHHB", body[0:6])
            if precision != 8:
                raise UnsupportedFormatError(f"{precision}-bit precision not supported")
            comps = []
            for ci in range(ncomp):
                cid, hv, tq = struct.unpack("BBB", body[6 + ci * 3:9 + ci * 3])
                comps.append({"id": cid, "h": hv >> 4, "v": hv & 15, "tq": tq})
            frame = {"h": height, "w": width, "comps": comps}
        elif marker in (0xC2, 0xC3, 0xC5, 0xC6, 0xC7):
            raise UnsupportedFormatError("progressive/lossless JPEG not supported")
        elif marker in (0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF):
            raise UnsupportedFormatError("arithmetic-coded JPEG not supported")
        elif marker == 0xDD:  # DRI
            interval = struct.unpack(">H", body[0:2])[0]
            if interval != 0:
                raise UnsupportedFormatError("restart markers not supported")
        elif marker == 0xDA:  # SOS
            if frame is None:
                raise ParseError("SOS before SOF0", offset=pos - 2, missing_marker="SOF0")
            ns = body[0]
            scan = []
            for si in range(ns):
                cs, tdta = body[1 + si * 2], body[2 + si * 2]
                scan.append({"id": cs, "td": tdta >> 4, "ta": tdta & 15})
            scan_data_start = pos + seglen
            break
        pos += seglen

    # Locate the end of the entropy-coded segment and de-stuff it.
    end = scan_data_start
    while True:
        idx = data.find(b"\xff", end)
        if idx == -1 or idx + 1 >= len(data):
            raise ParseError(
                "entropy-coded data ends without a terminating marker",
                offset=len(data), missing_marker="EOI",
            )
        nxt = data[idx + 1]
        if nxt == 0x00:
            end = idx + 2
            continue
        if 0xD0 <= nxt <= 0xD7:
            raise UnsupportedFormatError("restart markers not supported")
        end = idx
        break
    if data[end + 1] != 0xD9:
        raise ParseError(
            f"unexpected marker {data[end + 1]:#04x} after scan", offset=end, missing_marker="EOI"
        )
    entropy = data[scan_data_start:end].replace(b"\xff\x00", b"\xff")

    comps = frame["comps"]
    max_h = max(c["h"] for c in comps)
    max_v = max(c["v"] for c in comps)
    if not all(1 <= c["h"] <= 2 and 1 <= c["v"] <= 2 for c in comps):
        raise UnsupportedFormatError("sampling factors beyond 2x2 not supported")
    mcus_x = -(-frame["w"] // (8 * max_h))
    mcus_y = -(-frame["h"] // (8 * max_v))

    scan_by_id = {s["id"]: s for s in scan}
    reader = _ScanReader(entropy, scan_data_start)
    comp_state = []
    for c in comps:
        s = scan_by_id.get(c["id"])
        if s is None:
            raise ParseError(f"scan missing component id {c['id']}", offset=scan_data_start)
        if (0, s["td"]) not in htables or (1, s["ta"]) not in htables:
            raise ParseError("scan references undefined Huffman table", offset=scan_data_start)
        if c["tq"] not in qtables:
            raise ParseError("frame references undefined quantization table", offset=scan_data_start)
        bw = mcus_x * c["h"]
        bh = mcus_y * c["v"]
        comp_state.append({
            "c": c,
            "dc": htables[(0, s["td"])],
            "ac": htables[(1, s["ta"])],
            "blocks": np.zeros((bh * bw, 8, 8), dtype=np.int32),
            "bw": bw,
            "bh": bh,
            "pred": 0,
        })

    zz_flat = ZIGZAG.tolist()
    for my in range(mcus_y):
        for mx in range(mcus_x):
            for st in comp_state:
                c = st["c"]
                dc_syms, dc_lens = st["dc"]
                ac_syms, ac_lens = st["ac"]
                for by in range(c["v"]):
                    for bx in range(c["h"]):
                        block = np.zeros(64, dtype=np.int32)
                        s = reader.read_symbol(dc_syms, dc_lens)
                        if s:
                            st["pred"] += _extend(reader.receive(s), s)
                        block[0] = st["pred"]
                        k = 1
                        while k < 64:
                            rs = reader.read_symbol(ac_syms, ac_lens)
                            r, s = rs >> 4, rs & 15
                            if s == 0:
                                if r == 15:
                                    k += 16
                                    continue
                                break
                            k += r
                            if k > 63:
                                raise ParseError(
                                    "AC run exceeds block",
                                    offset=scan_data_start + (reader.pos >> 3),
                                )
                            block[zz_flat[k]] = _extend(reader.receive(s), s)
                            k += 1
                        row = my * c["v"] + by
                        col = mx * c["h"] + bx
                        st["blocks"][row * st["bw"] + col] = block.reshape(8, 8)

    planes = []
    for st in comp_state:
        c = st["c"]
        table = qtables[c["tq"]]
        plane = _blocks_to_plane(st["blocks"].reshape(-1, 8, 8), st["bh"], st["bw"], table)
        # Upsample to full frame resolution (nearest neighbor).
        if c["h"] < max_h:
            plane = np.repeat(plane, max_h // c["h"], axis=1)
        if c["v"] < max_v:
            plane = np.repeat(plane, max_v // c["v"], axis=0)
        planes.append(plane[: frame["h"], : frame["w"]])

    if len(planes) == 1:
        pixels = planes[0][:, :, None]
        buf = ImageBuffer(np.round(pixels) / 255.0, Colorspace.LINEAR_GRAY)
    elif len(planes) == 3:
        ycc = np.stack(planes, axis=-1)
        rgb = np.clip(_ycbcr_to_rgb(ycc), 0.0, 255.0)
        buf = ImageBuffer(np.round(rgb) / 255.0, Colorspace.SRGB)
    else:
        raise UnsupportedFormatError(f"{len(planes)}-component images not supported")

    luma = qtables.get(0)
    chroma = qtables.get(1, luma)
    return buf, QuantTables(luma, chroma)

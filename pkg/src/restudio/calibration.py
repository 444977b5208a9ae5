"""Versioned plain-text data files: estimator calibration and restore constants.

Format is one `key=value` pair per line, `#` comments, with a mandatory
`version` key. Regenerate calibration.txt with `python -m
restudio.gen_calibration`; constants.txt is hand-maintained.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .errors import InvalidArgumentError

CALIBRATION_VERSION = 1
CONSTANTS_VERSION = 1


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"malformed key-value line {lineno}: {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _load(name: str, expected_version: int) -> dict[str, str]:
    text = resources.files("restudio.data").joinpath(name).read_text()
    kv = parse_kv(text)
    version = int(kv.get("version", "-1"))
    if version != expected_version:
        raise InvalidArgumentError(
            f"{name} has version {version}, expected {expected_version}"
        )
    return kv


@lru_cache(maxsize=1)
def load_calibration() -> dict[str, str]:
    return _load("calibration.txt", CALIBRATION_VERSION)


@lru_cache(maxsize=1)
def load_constants() -> dict[str, str]:
    return _load("constants.txt", CONSTANTS_VERSION)


def blur_ratio_table() -> list[tuple[float, float]]:
    """(sigma, expected probe-blur energy ratio) knots, ascending in sigma."""
    kv = load_calibration()
    grid = [float(s) for s in kv["blur.grid"].split(",")]
    return [(s, float(kv[f"blur.ratio.{s:.1f}"])) for s in grid]


def blur_probe_sigma() -> float:
    return float(load_calibration()["blur.probe_sigma"])


def jpeg_blockiness_table() -> list[tuple[int, float]]:
    """(quality, expected blockiness) knots, ascending in quality."""
    kv = load_calibration()
    qs = [int(s) for s in kv["jpeg.knots"].split(",")]
    return [(q, float(kv[f"jpeg.blockiness.q{q}"])) for q in qs]


def jpeg_signature_floor() -> float:
    return float(load_calibration()["jpeg.signature_floor"])


def constant(name: str) -> float:
    return float(load_constants()[name])

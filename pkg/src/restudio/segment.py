"""Click-driven object selection.

The builtin segmenter grows regions in CIELAB from foreground clicks
(background clicks grow exclusion regions first), cleans the result with
3x3 morphology, and feathers the boundary. An external segmenter can be
plugged in over HTTP with the same output contract; both paths guarantee
that foreground clicks land inside the hard mask and background clicks
outside it.
"""

from __future__ import annotations

import base64
import io
import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import requests
from scipy import ndimage

from .errors import (
    EmptySelectionError,
    ExternalProtocolError,
    ExternalUnavailableError,
    InvalidArgumentError,
)
from .imagecore import Colorspace, ImageBuffer, Mask, convert_colorspace, gaussian_blur

DEFAULT_TOLERANCE = 12.0
DEFAULT_FEATHER_RADIUS = 3.0
EXTERNAL_DEADLINE_SECONDS = 10.0
_STRUCT3 = np.ones((3, 3), dtype=bool)


class PointLabel(Enum):
    FOREGROUND = "foreground"
    BACKGROUND = "background"


@dataclass
class ClickPoint:
    x: int
    y: int
    label: PointLabel = PointLabel.FOREGROUND


@dataclass
class ClickPrompt:
    points: list[ClickPoint] = field(default_factory=list)
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if not any(p.label == PointLabel.FOREGROUND for p in self.points):
            raise InvalidArgumentError("prompt needs at least one foreground point")
        if not (self.tolerance > 0):
            raise InvalidArgumentError(f"tolerance must be positive, got {self.tolerance}")

    def foreground(self) -> list[ClickPoint]:
        return [p for p in self.points if p.label == PointLabel.FOREGROUND]

    def background(self) -> list[ClickPoint]:
        return [p for p in self.points if p.label == PointLabel.BACKGROUND]

    def validate_bounds(self, img: ImageBuffer):
        for p in self.points:
            if not (0 <= p.x < img.width and 0 <= p.y < img.height):
                raise InvalidArgumentError(
                    f"click ({p.x}, {p.y}) outside image {img.width}x{img.height}"
                )


@dataclass
class SegmentResult:
    mask: Mask
    hard_mask: np.ndarray
    source: str
    score: float


def feather(hard_mask: np.ndarray | Mask, radius: float) -> Mask:
    """Soften a binary mask with a Gaussian of sigma radius/2.

    Output alpha is snapped to the 8-bit grid so masks survive PNG
    persistence bit-exactly. Radius 0 returns the hard mask unchanged.
    """
    if radius < 0:
        raise InvalidArgumentError(f"feather radius must be >= 0, got {radius}")
    hard = hard_mask.alpha > 0.5 if isinstance(hard_mask, Mask) else hard_mask.astype(bool)
    if radius == 0:
        return Mask(hard.astype(np.float64))
    alpha = gaussian_blur(hard.astype(np.float64), radius / 2.0)
    alpha = np.round(np.clip(alpha, 0.0, 1.0) * 255.0) / 255.0
    return Mask(alpha)


def _grow_region(lab: np.ndarray, seed: tuple[int, int], tolerance: float,
                 blocked: np.ndarray | None) -> np.ndarray:
    """BFS region growing against a running mean color (CIE76 distance).

    Neighbors are visited in row-major order (up, left, right, down) from
    a FIFO queue, so growth is deterministic.
    """
    h, w = lab.shape[:2]
    sy, sx = seed[1], seed[0]
    grown = np.zeros((h, w), dtype=bool)
    if blocked is not None and blocked[sy, sx]:
        return grown
    visited = np.zeros((h, w), dtype=bool)
    visited[sy, sx] = True
    grown[sy, sx] = True
    mean = lab[sy, sx].copy()
    count = 1
    queue = deque([(sy, sx)])
    tol2 = tolerance * tolerance
    while queue:
        cy, cx = queue.popleft()
        for ny, nx in ((cy - 1, cx), (cy, cx - 1), (cy, cx + 1), (cy + 1, cx)):
            if ny < 0 or ny >= h or nx < 0 or nx >= w or visited[ny, nx]:
                continue
            visited[ny, nx] = True
            if blocked is not None and blocked[ny, nx]:
                continue
            diff = lab[ny, nx] - mean
            if diff @ diff < tol2:
                grown[ny, nx] = True
                mean = mean + (lab[ny, nx] - mean) / (count + 1)
                count += 1
                queue.append((ny, nx))
    return grown


def _fill_small_holes(mask: np.ndarray, max_fraction: float = 0.005) -> np.ndarray:
    holes, n = ndimage.label(~mask)
    if n == 0:
        return mask
    border_labels = np.unique(
        np.concatenate([holes[0, :], holes[-1, :], holes[:, 0], holes[:, -1]])
    )
    sizes = np.bincount(holes.reshape(-1), minlength=n + 1)
    limit = max_fraction * mask.size
    out = mask.copy()
    for label in range(1, n + 1):
        if label not in border_labels and sizes[label] < limit:
            out[holes == label] = True
    return out


def _selection_score(lab: np.ndarray, mask: np.ndarray, tolerance: float) -> float:
    ring = ndimage.binary_dilation(mask, _STRUCT3, iterations=3) & ~mask
    if not ring.any() or not mask.any():
        return 1.0
    contrast = float(np.linalg.norm(lab[mask].mean(axis=0) - lab[ring].mean(axis=0)))
    return float(np.clip(contrast / (2.0 * tolerance), 0.0, 1.0))


def _growth_guide(img: ImageBuffer) -> np.ndarray:
    """CIELAB pixels to grow on; noisy inputs are pre-smoothed so per-pixel
    color distances reflect objects rather than noise."""
    sigma_s = 0.0
    if img.height * img.width >= 32 * 32:
        from .estimate import estimate_noise_sigma

        sigma_hat = estimate_noise_sigma(img).sigma_noise
        if sigma_hat >= 2.0:
            sigma_s = min(2.0, sigma_hat / 12.0)
    data = gaussian_blur(img.data, sigma_s) if sigma_s > 0 else img.data
    smoothed = ImageBuffer(np.clip(data, 0.0, 1.0), img.colorspace)
    return convert_colorspace(smoothed, Colorspace.CIELAB).data


def segment_builtin(
    img: ImageBuffer,
    prompt: ClickPrompt,
    feather_radius: float = DEFAULT_FEATHER_RADIUS,
) -> SegmentResult:
    """Seeded region growing with morphological cleanup and hole filling."""
    prompt.validate_bounds(img)
    lab = _growth_guide(img)

    blocked = np.zeros((img.height, img.width), dtype=bool)
    for p in prompt.background():
        blocked |= _grow_region(lab, (p.x, p.y), prompt.tolerance, None)

    grown_per_seed = []
    union = np.zeros_like(blocked)
    for p in prompt.foreground():
        region = _grow_region(lab, (p.x, p.y), prompt.tolerance, blocked)
        if not region.any():
            raise EmptySelectionError(
                f"foreground click ({p.x}, {p.y}) could not grow a region"
            )
        grown_per_seed.append((p, region))
        union |= region

    closed = ndimage.binary_erosion(
        ndimage.binary_dilation(union, _STRUCT3), _STRUCT3, border_value=1
    )
    opened = ndimage.binary_dilation(
        ndimage.binary_erosion(closed, _STRUCT3, border_value=1), _STRUCT3
    )

    labels, _ = ndimage.label(opened, structure=_STRUCT3)
    keep = np.zeros_like(opened)
    for p, region in grown_per_seed:
        lbl = labels[p.y, p.x]
        if lbl > 0:
            keep |= labels == lbl
        else:
            # Morphology erased this seed's pixel; keep its raw grown region
            # so the click-consistency contract holds.
            keep |= region

    keep = _fill_small_holes(keep)
    for p in prompt.background():
        keep[p.y, p.x] = False
    if not keep.any():
        raise EmptySelectionError("selection empty after morphological cleanup")

    return SegmentResult(
        mask=feather(keep, feather_radius),
        hard_mask=keep,
        source="builtin",
        score=_selection_score(lab, keep, prompt.tolerance),
    )


def check_click_consistency(hard_mask: np.ndarray, prompt: ClickPrompt) -> list[str]:
    """Returns a violation message per click that lands on the wrong side."""
    problems = []
    for p in prompt.foreground():
        if not hard_mask[p.y, p.x]:
            problems.append(f"foreground click ({p.x}, {p.y}) outside mask")
    for p in prompt.background():
        if hard_mask[p.y, p.x]:
            problems.append(f"background click ({p.x}, {p.y}) inside mask")
    return problems


def _decode_rle(counts, size) -> np.ndarray:
    """Uncompressed column-major run-length counts, zeros first."""
    h, w = int(size[0]), int(size[1])
    total = h * w
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        run = int(run)
        if run < 0 or pos + run > total:
            raise ExternalProtocolError("run-length counts overrun the mask size")
        flat[pos:pos + run] = value
        pos += run
        value = not value
    if pos != total:
        raise ExternalProtocolError("run-length counts do not cover the mask")
    return flat.reshape((h, w), order="F")


def segment_external(
    img: ImageBuffer,
    prompt: ClickPrompt,
    endpoint: str,
    deadline: float = EXTERNAL_DEADLINE_SECONDS,
    feather_radius: float = DEFAULT_FEATHER_RADIUS,
) -> SegmentResult:
    """One stateless POST to an external segmenter; no retries.

    Request: multipart with an `image` PNG part and a `prompt` JSON part.
    Response: `{"mask_png": base64, "score": s}` or
    `{"mask_rle": {"counts": [...], "size": [h, w]}, "score": s}`.
    """
    from .fileio import encode_png  # local import: fileio pulls in PIL

    prompt.validate_bounds(img)
    payload = {
        "points": [{"x": p.x, "y": p.y, "label": p.label.value} for p in prompt.points]
    }
    try:
        resp = requests.post(
            endpoint,
            files={
                "image": ("image.png", encode_png(img), "image/png"),
                "prompt": ("prompt.json", json.dumps(payload), "application/json"),
            },
            timeout=deadline,
        )
    except (requests.Timeout, requests.ConnectionError) as exc:
        raise ExternalUnavailableError(f"segmenter at {endpoint} unreachable: {exc}") from exc
    if resp.status_code >= 500:
        raise ExternalUnavailableError(f"segmenter returned {resp.status_code}")
    if resp.status_code != 200:
        raise ExternalProtocolError(f"segmenter returned {resp.status_code}")
    try:
        body = resp.json()
    except ValueError as exc:
        raise ExternalProtocolError(f"segmenter response is not JSON: {exc}") from exc

    if "mask_png" in body:
        from PIL import Image

        try:
            raw = base64.b64decode(body["mask_png"])
            arr = np.asarray(Image.open(io.BytesIO(raw)).convert("L"))
        except Exception as exc:
            raise ExternalProtocolError(f"mask_png undecodable: {exc}") from exc
        hard = arr.astype(np.float64) / 255.0 > 0.5
    elif "mask_rle" in body:
        rle = body["mask_rle"]
        hard = _decode_rle(rle.get("counts", []), rle.get("size", (0, 0)))
    else:
        raise ExternalProtocolError("response carries neither mask_png nor mask_rle")

    if hard.shape != (img.height, img.width):
        raise ExternalProtocolError(
            f"mask shape {hard.shape} does not match image {(img.height, img.width)}"
        )
    problems = check_click_consistency(hard, prompt)
    if problems:
        raise ExternalProtocolError("; ".join(problems))
    score = float(np.clip(float(body.get("score", 0.0)), 0.0, 1.0))
    return SegmentResult(
        mask=feather(hard, feather_radius), hard_mask=hard, source="external", score=score
    )

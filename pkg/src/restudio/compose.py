"""Per-object enhancement and layer-stack compositing.

Each layer restores the source frame independently (full frame, then
masked blend), applies its enhancement settings, and is composited over
the running result in stack order; later layers win on overlap. Restored
patches are cached per layer keyed on the restoration inputs, with
bit-identical results to the uncached path.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ExportPolicyError, InvalidArgumentError
from .estimate import DegradationParam
from .fileio import encode_image
from .imagecore import ImageBuffer, Mask, gaussian_blur
from .restore import RestoreTask, TASK_KIND, _TASK_OPS


@dataclass
class EnhanceSettings:
    """Brightness/contrast/smoothness/bokeh; the defaults are an exact no-op."""

    brightness: float = 0.0
    contrast: float = 1.0
    smoothness: float = 0.0
    bokeh_sigma: float = 0.0

    def __post_init__(self):
        if not (-0.5 <= self.brightness <= 0.5):
            raise InvalidArgumentError(f"brightness must lie in [-0.5, 0.5], got {self.brightness}")
        if not (0.25 <= self.contrast <= 4.0):
            raise InvalidArgumentError(f"contrast must lie in [0.25, 4], got {self.contrast}")
        if not (0.0 <= self.smoothness <= 5.0):
            raise InvalidArgumentError(f"smoothness must lie in [0, 5], got {self.smoothness}")
        if not (0.0 <= self.bokeh_sigma <= 8.0):
            raise InvalidArgumentError(f"bokeh_sigma must lie in [0, 8], got {self.bokeh_sigma}")

    def is_noop(self) -> bool:
        return (
            self.brightness == 0.0
            and self.contrast == 1.0
            and self.smoothness == 0.0
            and self.bokeh_sigma == 0.0
        )


def apply_enhance(img: ImageBuffer, settings: EnhanceSettings) -> ImageBuffer:
    """Contrast about mid-gray, then brightness, then the two blurs."""
    if settings.is_noop():
        return img
    data = img.data
    if settings.contrast != 1.0:
        data = (data - 0.5) * settings.contrast + 0.5
    if settings.brightness != 0.0:
        data = data + settings.brightness
    data = np.clip(data, 0.0, 1.0)
    if settings.smoothness > 0.0:
        data = gaussian_blur(data, settings.smoothness)
    if settings.bokeh_sigma > 0.0:
        data = gaussian_blur(data, settings.bokeh_sigma)
    return ImageBuffer(np.clip(data, 0.0, 1.0), img.colorspace)


@dataclass
class ObjectLayer:
    """One selected object: mask, task, parameters, enhancement, cache."""

    id: str
    mask: Mask
    task: RestoreTask | None = None
    predicted: DegradationParam | None = None
    override: DegradationParam | None = None
    strength_scale: float = 1.0
    enhance: EnhanceSettings = field(default_factory=EnhanceSettings)
    cached_patch: ImageBuffer | None = None
    cache_key: str | None = None

    def __post_init__(self):
        if not (0.0 <= self.strength_scale <= 2.0):
            raise InvalidArgumentError(
                f"strength_scale must lie in [0, 2], got {self.strength_scale}"
            )
        if self.override is not None and self.predicted is not None:
            if self.override.kind != self.predicted.kind:
                raise InvalidArgumentError(
                    "override parameter kind must match the predicted kind"
                )

    def effective_param(self) -> DegradationParam | None:
        return self.override if self.override is not None else self.predicted

    def validate_against(self, img: ImageBuffer):
        if not self.mask.matches(img):
            raise InvalidArgumentError(
                f"layer {self.id} mask does not match image dimensions"
            )
        if self.task is not None:
            param = self.effective_param()
            if param is None:
                raise InvalidArgumentError(f"layer {self.id} has a task but no parameter")
            if param.kind != TASK_KIND[self.task]:
                raise InvalidArgumentError(
                    f"layer {self.id} parameter kind does not match its task"
                )


def _param_fingerprint(param: DegradationParam | None) -> str:
    if param is None:
        return "none"
    return f"{param.kind.value}:{param.sigma_blur}:{param.sigma_noise}:{param.quality}"


def restore_cache_key(source: ImageBuffer, layer: ObjectLayer) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(source.data).tobytes())
    task = layer.task.value if layer.task else "none"
    h.update(
        f"{task}|{_param_fingerprint(layer.effective_param())}|{layer.strength_scale}".encode()
    )
    return h.hexdigest()


def restored_patch(source: ImageBuffer, layer: ObjectLayer, use_cache: bool = True) -> ImageBuffer:
    """Full-frame restoration for one layer, honoring the patch cache."""
    if layer.task is None:
        return source
    key = restore_cache_key(source, layer)
    if use_cache and layer.cached_patch is not None and layer.cache_key == key:
        return layer.cached_patch
    patch = _TASK_OPS[layer.task](source, layer.effective_param(), layer.strength_scale)
    if use_cache:
        layer.cached_patch = patch
        layer.cache_key = key
    return patch


def composite(source: ImageBuffer, layers: list[ObjectLayer],
              use_cache: bool = True) -> ImageBuffer:
    """Blend each layer's enhanced patch over the running frame in order."""
    for layer in layers:
        layer.validate_against(source)
    out = source.data
    changed = False
    for layer in layers:
        patch = apply_enhance(restored_patch(source, layer, use_cache), layer.enhance)
        alpha = layer.mask.alpha[:, :, None]
        out = alpha * patch.data + (1.0 - alpha) * out
        changed = True
    if not changed:
        return source
    return ImageBuffer(out, source.colorspace)


def export(
    source: ImageBuffer,
    layers: list[ObjectLayer],
    fmt: str = "png",
    quality: int = 90,
    force: bool = False,
) -> bytes:
    """Composite then encode; JPEG below quality 50 requires force."""
    if fmt not in ("png", "jpeg"):
        raise InvalidArgumentError(f"unsupported export format {fmt!r}")
    if fmt == "jpeg" and quality < 50 and not force:
        raise ExportPolicyError(
            f"JPEG quality {quality} would re-degrade the restored output; "
            "pass force to export anyway"
        )
    return encode_image(composite(source, layers), fmt, quality)

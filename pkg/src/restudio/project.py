"""Project persistence: manifest.json + source.png + masks/<id>.png.

A project is a directory or a zip with the same layout. The manifest is
schema-versioned; loading an unknown version fails rather than guessing.
Mask alphas are stored as 8-bit grayscale PNG, which is lossless for the
masks this package produces (feathering snaps to the 8-bit grid).
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .compose import EnhanceSettings, ObjectLayer
from .degrade import DegradationKind
from .errors import InvalidArgumentError
from .estimate import DegradationParam, make_blur_param
from .fileio import decode_mask_png, decode_png, encode_mask_png, encode_png
from .imagecore import ImageBuffer
from .jpegcodec import QuantTables
from .restore import RestoreTask

SCHEMA_VERSION = 1


@dataclass
class ProjectMeta:
    created: str = ""
    modified: str = ""
    source_quant_tables: QuantTables | None = None

    @staticmethod
    def now() -> str:
        return datetime.now(timezone.utc).isoformat()


def param_to_json(param: DegradationParam | None) -> dict | None:
    if param is None:
        return None
    out = {"kind": param.kind.value, "confidence": param.confidence}
    if param.kind == DegradationKind.BLUR:
        out["sigma_blur"] = param.sigma_blur
    elif param.kind == DegradationKind.NOISE:
        out["sigma_noise"] = param.sigma_noise
    else:
        out["quality"] = param.quality
    return out


def param_from_json(data: dict | None) -> DegradationParam | None:
    if data is None:
        return None
    kind = DegradationKind(data["kind"])
    confidence = float(data.get("confidence", 1.0))
    if kind == DegradationKind.BLUR:
        return make_blur_param(float(data["sigma_blur"]), confidence=confidence)
    if kind == DegradationKind.NOISE:
        return DegradationParam(
            kind=kind, sigma_noise=float(data["sigma_noise"]), confidence=confidence
        )
    return DegradationParam(kind=kind, quality=int(data["quality"]), confidence=confidence)


def _enhance_to_json(settings: EnhanceSettings) -> dict:
    return {
        "brightness": settings.brightness,
        "contrast": settings.contrast,
        "smoothness": settings.smoothness,
        "bokeh_sigma": settings.bokeh_sigma,
    }


def _enhance_from_json(data: dict) -> EnhanceSettings:
    return EnhanceSettings(
        brightness=float(data.get("brightness", 0.0)),
        contrast=float(data.get("contrast", 1.0)),
        smoothness=float(data.get("smoothness", 0.0)),
        bokeh_sigma=float(data.get("bokeh_sigma", 0.0)),
    )


def layer_to_json(layer: ObjectLayer) -> dict:
    return {
        "id": layer.id,
        "mask": f"masks/{layer.id}.png",
        "task": layer.task.value if layer.task else None,
        "predicted": param_to_json(layer.predicted),
        "override": param_to_json(layer.override),
        "strength_scale": layer.strength_scale,
        "enhance": _enhance_to_json(layer.enhance),
    }


def build_manifest(layers: list[ObjectLayer], meta: ProjectMeta) -> dict:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "source": "source.png",
        "created": meta.created or ProjectMeta.now(),
        "modified": meta.modified or ProjectMeta.now(),
        "layers": [layer_to_json(layer) for layer in layers],
    }
    if meta.source_quant_tables is not None:
        manifest["source_quant_tables"] = {
            "luma": meta.source_quant_tables.luma.tolist(),
            "chroma": meta.source_quant_tables.chroma.tolist(),
        }
    return manifest


def _project_files(source, layers, meta) -> dict[str, bytes]:
    files = {
        "manifest.json": json.dumps(build_manifest(layers, meta), indent=2).encode(),
        "source.png": encode_png(source),
    }
    for layer in layers:
        files[f"masks/{layer.id}.png"] = encode_mask_png(layer.mask)
    return files


def save_project_dir(root: Path | str, source: ImageBuffer,
                     layers: list[ObjectLayer], meta: ProjectMeta):
    root = Path(root)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    for name, blob in _project_files(source, layers, meta).items():
        (root / name).write_bytes(blob)


def save_project_zip(source: ImageBuffer, layers: list[ObjectLayer],
                     meta: ProjectMeta) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for name, blob in sorted(_project_files(source, layers, meta).items()):
            zf.writestr(name, blob)
    return buf.getvalue()


def _parse_manifest(files: dict[str, bytes]):
    if "manifest.json" not in files:
        raise InvalidArgumentError("project is missing manifest.json")
    manifest = json.loads(files["manifest.json"])
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InvalidArgumentError(
            f"unsupported project schema version {version!r} (expected {SCHEMA_VERSION})"
        )
    source_name = manifest.get("source", "source.png")
    if source_name not in files:
        raise InvalidArgumentError(f"project is missing {source_name}")
    source = decode_png(files[source_name])
    layers = []
    for entry in manifest.get("layers", []):
        mask_name = entry["mask"]
        if mask_name not in files:
            raise InvalidArgumentError(f"project is missing {mask_name}")
        layers.append(
            ObjectLayer(
                id=entry["id"],
                mask=decode_mask_png(files[mask_name]),
                task=RestoreTask(entry["task"]) if entry.get("task") else None,
                predicted=param_from_json(entry.get("predicted")),
                override=param_from_json(entry.get("override")),
                strength_scale=float(entry.get("strength_scale", 1.0)),
                enhance=_enhance_from_json(entry.get("enhance", {})),
            )
        )
    tables = None
    if "source_quant_tables" in manifest:
        raw = manifest["source_quant_tables"]
        tables = QuantTables(raw["luma"], raw["chroma"])
    meta = ProjectMeta(
        created=manifest.get("created", ""),
        modified=manifest.get("modified", ""),
        source_quant_tables=tables,
    )
    return source, layers, meta


def load_project(path_or_bytes) -> tuple[ImageBuffer, list[ObjectLayer], ProjectMeta]:
    """Load a project from a directory path, a zip path, or zip bytes."""
    files: dict[str, bytes] = {}
    if isinstance(path_or_bytes, (bytes, bytearray)):
        with zipfile.ZipFile(io.BytesIO(path_or_bytes)) as zf:
            for name in zf.namelist():
                files[name] = zf.read(name)
    else:
        path = Path(path_or_bytes)
        if path.is_dir():
            for sub in path.rglob("*"):
                if sub.is_file():
                    files[sub.relative_to(path).as_posix()] = sub.read_bytes()
        elif path.is_file():
            with zipfile.ZipFile(path) as zf:
                for name in zf.namelist():
                    files[name] = zf.read(name)
        else:
            raise InvalidArgumentError(f"no project at {path}")
    return _parse_manifest(files)

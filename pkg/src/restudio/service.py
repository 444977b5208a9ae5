"""HTTP API over the session pipeline.

All endpoints are JSON except image payloads (raw PNG/JPEG bodies and
responses) and the project zip. Mutations serialize per session; preview
rendering is cancelled cooperatively when a newer preview request for the
same layer arrives (latest-wins).
"""

from __future__ import annotations

import base64

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .compose import EnhanceSettings, ObjectLayer, composite, export, restored_patch
from .config import ServiceConfig
from .degrade import DegradationKind
from .errors import (
    EmptySelectionError,
    ExportPolicyError,
    ExternalProtocolError,
    ExternalUnavailableError,
    InsufficientDataError,
    InvalidArgumentError,
    ParseError,
    UnobservableBlurError,
    UnsupportedFormatError,
)
from .estimate import (
    DegradationParam,
    estimate_blur_sigma,
    estimate_jpeg_quality,
    estimate_noise_sigma,
    make_blur_param,
)
from .fileio import decode_image, encode_mask_png, encode_png
from .imagecore import resize_max_dim
from .project import layer_to_json, param_to_json, save_project_zip
from .restore import TASK_KIND, RestoreTask
from .segment import (
    ClickPoint,
    ClickPrompt,
    PointLabel,
    check_click_consistency,
    segment_builtin,
    segment_external,
)
from .session import Session, SessionStore


class PointModel(BaseModel):
    x: int
    y: int
    label: str = "foreground"


class SegmentBody(BaseModel):
    points: list[PointModel]
    tolerance: float = 12.0
    backend: str = "builtin"
    feather_radius: float = 3.0
    # refinement clicks replace the provisional layer instead of adding one
    replace_layer_id: str | None = None


class EstimateBody(BaseModel):
    task: str


class OverrideModel(BaseModel):
    kind: str
    sigma_blur: float | None = None
    sigma_noise: float | None = None
    quality: int | None = None


class RestoreBody(BaseModel):
    override: OverrideModel | None = None
    strength_scale: float = 1.0
    preview: bool = False


class EnhanceBody(BaseModel):
    brightness: float = 0.0
    contrast: float = 1.0
    smoothness: float = 0.0
    bokeh_sigma: float = 0.0


class ExportBody(BaseModel):
    format: str = "png"
    quality: int = 90
    force: bool = False


def _error(status: int, detail: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail, **extra})


def _param_from_override(model: OverrideModel) -> DegradationParam:
    kind = DegradationKind(model.kind)
    if kind == DegradationKind.BLUR:
        if model.sigma_blur is None:
            raise InvalidArgumentError("blur override requires sigma_blur")
        return make_blur_param(model.sigma_blur)
    if kind == DegradationKind.NOISE:
        if model.sigma_noise is None:
            raise InvalidArgumentError("noise override requires sigma_noise")
        return DegradationParam(kind=kind, sigma_noise=model.sigma_noise)
    if model.quality is None:
        raise InvalidArgumentError("jpeg override requires quality")
    return DegradationParam(kind=kind, quality=model.quality)


def _session_state(session: Session, include_masks: bool = False) -> dict:
    layers = []
    for layer in session.layers:
        entry = layer_to_json(layer)
        if include_masks:
            entry["mask_png"] = base64.b64encode(encode_mask_png(layer.mask)).decode()
        layers.append(entry)
    return {
        "id": session.id,
        "created": session.created,
        "modified": session.modified,
        "width": session.source.width,
        "height": session.source.height,
        "channels": session.source.channels,
        "has_source_quant_tables": session.source_quant_tables is not None,
        "layers": layers,
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="restudio", version="0.1.0",
                  description="Interactive per-object image restoration service")
    store = SessionStore(config.persist_dir)
    app.state.config = config
    app.state.store = store
    if config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    def _get_session(session_id: str) -> Session:
        return store.get(session_id)

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        if len(body) > config.max_upload_bytes:
            return _error(413, f"upload exceeds {config.max_upload_mb} MB limit")
        try:
            source, tables = decode_image(body)
        except (ParseError, UnsupportedFormatError, InvalidArgumentError) as exc:
            return _error(422, str(exc))
        session = store.create(source, tables)
        with session.lock:
            store.persist(session)
        return {
            "id": session.id,
            "width": source.width,
            "height": source.height,
            "channels": source.channels,
        }

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str, include_masks: bool = False):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        with session.lock:
            return _session_state(session, include_masks)

    @app.post("/sessions/{session_id}/segment")
    def segment(session_id: str, body: SegmentBody):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        try:
            prompt = ClickPrompt(
                points=[
                    ClickPoint(p.x, p.y, PointLabel(p.label)) for p in body.points
                ],
                tolerance=body.tolerance,
            )
        except (ValueError, InvalidArgumentError) as exc:
            return _error(400, str(exc))
        with session.lock:
            try:
                if body.backend == "builtin":
                    result = segment_builtin(session.source, prompt, body.feather_radius)
                elif body.backend == "external":
                    if not config.external_segmenter_url:
                        return _error(
                            502,
                            "no external segmenter configured; retry with backend=builtin",
                            fallback="builtin",
                        )
                    result = segment_external(
                        session.source,
                        prompt,
                        config.external_segmenter_url,
                        deadline=config.external_deadline_seconds,
                        feather_radius=body.feather_radius,
                    )
                else:
                    return _error(400, f"unknown backend {body.backend!r}")
            except InvalidArgumentError as exc:
                return _error(400, str(exc))
            except EmptySelectionError as exc:
                return _error(409, str(exc), reason="empty-selection")
            except ExternalUnavailableError as exc:
                return _error(502, str(exc), fallback="builtin")
            except ExternalProtocolError as exc:
                return _error(502, str(exc), reason="external-protocol-error")
            violations = check_click_consistency(result.hard_mask, prompt)
            if violations:
                return _error(502, "; ".join(violations), reason="click-consistency")
            if body.replace_layer_id is not None:
                try:
                    layer = session.layer(body.replace_layer_id)
                except KeyError:
                    return _error(404, "unknown layer to replace")
                # a new mask invalidates everything estimated from the old one
                layer.mask = result.mask
                layer.task = None
                layer.predicted = None
                layer.override = None
                layer.cached_patch = None
                layer.cache_key = None
            else:
                layer = ObjectLayer(id=store.next_layer_id(session), mask=result.mask)
                session.layers.append(layer)
            session.touch()
            store.persist(session)
            return {
                "layer_id": layer.id,
                "score": result.score,
                "source": result.source,
                "mask_png": base64.b64encode(encode_mask_png(result.mask)).decode(),
            }

    @app.post("/sessions/{session_id}/layers/{layer_id}/estimate")
    def estimate(session_id: str, layer_id: str, body: EstimateBody):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        try:
            task = RestoreTask(body.task)
        except ValueError:
            return _error(400, f"unknown task {body.task!r}")
        with session.lock:
            try:
                layer = session.layer(layer_id)
            except KeyError:
                return _error(404, "unknown layer")
            try:
                if task == RestoreTask.DENOISE:
                    param = estimate_noise_sigma(session.source, layer.mask)
                elif task == RestoreTask.DEBLUR:
                    param = estimate_blur_sigma(session.source, layer.mask)
                else:
                    if session.source_quant_tables is not None:
                        param = estimate_jpeg_quality(session.source_quant_tables)
                    else:
                        param = estimate_jpeg_quality(session.source)
            except (InsufficientDataError, UnobservableBlurError) as exc:
                return _error(409, str(exc), reason=type(exc).__name__)
            layer.task = task
            layer.predicted = param
            layer.cached_patch = None
            layer.cache_key = None
            session.touch()
            store.persist(session)
            return {"layer_id": layer.id, "task": task.value, "param": param_to_json(param)}

    @app.post("/sessions/{session_id}/layers/{layer_id}/restore")
    def restore_layer(session_id: str, layer_id: str, body: RestoreBody):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        with session.lock:
            try:
                layer = session.layer(layer_id)
            except KeyError:
                return _error(404, "unknown layer")
            if layer.task is None:
                return _error(409, "layer has no task; run estimate first")
            override = None
            if body.override is not None:
                try:
                    override = _param_from_override(body.override)
                except (ValueError, InvalidArgumentError) as exc:
                    return _error(400, str(exc))
                if override.kind != TASK_KIND[layer.task]:
                    return _error(
                        400,
                        f"override kind {override.kind.value} does not match "
                        f"task {layer.task.value}",
                    )
            if not (0.0 <= body.strength_scale <= 2.0):
                return _error(400, "strength_scale must lie in [0, 2]")
            if layer.predicted is None and override is None:
                return _error(409, "layer has neither predicted nor override parameter")

            if not body.preview:
                if override is not None:
                    layer.override = override
                layer.strength_scale = body.strength_scale
                layer.cached_patch = None
                layer.cache_key = None
                restored_patch(session.source, layer)  # cache the full-res patch
                session.touch()
                store.persist(session)
                return {
                    "layer_id": layer.id,
                    "committed": True,
                    "strength_scale": layer.strength_scale,
                    "param": param_to_json(layer.effective_param()),
                }
            # Snapshot inputs for preview rendering outside the lock.
            serial = session.preview_serial.get(layer_id, 0) + 1
            session.preview_serial[layer_id] = serial
            source = session.source
            task = layer.task
            param = override if override is not None else layer.effective_param()

        variants = []
        for factor in config.preview_strengths:
            with session.lock:
                if session.preview_serial.get(layer_id, 0) != serial:
                    return _error(409, "preview superseded by a newer request",
                                  reason="stale-preview")
            strength = min(2.0, factor * body.strength_scale)
            probe = ObjectLayer(id="preview", mask=layer.mask, task=task,
                                predicted=param, strength_scale=strength)
            patch = restored_patch(source, probe, use_cache=False)
            small = resize_max_dim(patch, config.preview_max_dim)
            variants.append({
                "strength_scale": strength,
                "image_png": base64.b64encode(encode_png(small)).decode(),
            })
        with session.lock:
            if session.preview_serial.get(layer_id, 0) != serial:
                return _error(409, "preview superseded by a newer request",
                              reason="stale-preview")
        return {"layer_id": layer_id, "variants": variants}

    @app.post("/sessions/{session_id}/layers/{layer_id}/enhance")
    def enhance(session_id: str, layer_id: str, body: EnhanceBody):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        with session.lock:
            try:
                layer = session.layer(layer_id)
            except KeyError:
                return _error(404, "unknown layer")
            try:
                layer.enhance = EnhanceSettings(
                    brightness=body.brightness,
                    contrast=body.contrast,
                    smoothness=body.smoothness,
                    bokeh_sigma=body.bokeh_sigma,
                )
            except InvalidArgumentError as exc:
                return _error(400, str(exc))
            session.touch()
            store.persist(session)
            return {"layer_id": layer.id, "ok": True}

    @app.get("/sessions/{session_id}/composite")
    def get_composite(session_id: str):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        with session.lock:
            try:
                png = encode_png(composite(session.source, session.layers))
            except InvalidArgumentError as exc:
                return _error(400, str(exc))
            return Response(content=png, media_type="image/png")

    @app.post("/sessions/{session_id}/export")
    def export_session(session_id: str, body: ExportBody):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        with session.lock:
            try:
                blob = export(session.source, session.layers, body.format,
                              body.quality, body.force)
            except ExportPolicyError as exc:
                return _error(409, str(exc), reason="export-policy")
            except InvalidArgumentError as exc:
                return _error(400, str(exc))
            media = "image/png" if body.format == "png" else "image/jpeg"
            return Response(content=blob, media_type=media)

    @app.get("/sessions/{session_id}/project")
    def get_project(session_id: str):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        with session.lock:
            blob = save_project_zip(session.source, session.layers, session.meta())
            return Response(content=blob, media_type="application/zip")

    @app.put("/sessions/{session_id}/project")
    async def put_project(session_id: str, request: Request):
        try:
            session = _get_session(session_id)
        except KeyError:
            return _error(404, "unknown session")
        body = await request.body()
        with session.lock:
            try:
                store.replace_state(session, body)
            except InvalidArgumentError as exc:
                return _error(422, str(exc))
            except Exception as exc:
                return _error(422, f"project archive unreadable: {exc}")
            store.persist(session)
            return {"ok": True, "layers": len(session.layers)}

    return app

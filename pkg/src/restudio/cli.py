"""Command-line interface; each subcommand mirrors an HTTP endpoint.

Commands operate on a project directory (the same layout the service
persists), so scripted and interactive edits produce byte-identical
artifacts.
"""

from __future__ import annotations

import json
import secrets
import sys
from pathlib import Path

import click

from .compose import EnhanceSettings, ObjectLayer, composite, export
from .config import load_config
from .degrade import DegradationKind
from .errors import ExportPolicyError
from .estimate import (
    DegradationParam,
    estimate_blur_sigma,
    estimate_jpeg_quality,
    estimate_noise_sigma,
    make_blur_param,
)
from .fileio import decode_image, encode_png
from .project import ProjectMeta, layer_to_json, load_project, param_to_json, save_project_dir
from .restore import TASK_KIND, RestoreTask
from .segment import ClickPoint, ClickPrompt, PointLabel, segment_builtin, segment_external


@click.group()
def main():
    """Interactive per-object image restoration toolkit."""


def _load(project: str):
    return load_project(project)


def _save(project: str, source, layers, meta):
    meta.modified = ProjectMeta.now()
    save_project_dir(project, source, layers, meta)


def _parse_point(text: str) -> ClickPoint:
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise click.BadParameter(f"point must be X,Y[,fg|bg], got {text!r}")
    label = PointLabel.FOREGROUND
    if len(parts) == 3:
        tag = parts[2].strip().lower()
        if tag in ("fg", "foreground"):
            label = PointLabel.FOREGROUND
        elif tag in ("bg", "background"):
            label = PointLabel.BACKGROUND
        else:
            raise click.BadParameter(f"unknown point label {parts[2]!r}")
    return ClickPoint(int(parts[0]), int(parts[1]), label)


@main.command()
@click.argument("project", type=click.Path())
@click.option("--image", "image_path", type=click.Path(exists=True), required=True)
def init(project, image_path):
    """Create a project directory from a PNG or JPEG image."""
    data = Path(image_path).read_bytes()
    source, tables = decode_image(data)
    meta = ProjectMeta(created=ProjectMeta.now(), source_quant_tables=tables)
    _save(project, source, [], meta)
    click.echo(f"initialized {project} ({source.width}x{source.height})")


@main.command()
@click.argument("project", type=click.Path(exists=True))
@click.option("--point", "points", multiple=True, required=True,
              help="Click as X,Y[,fg|bg]; repeatable.")
@click.option("--tolerance", default=12.0, show_default=True)
@click.option("--backend", type=click.Choice(["builtin", "external"]), default="builtin")
@click.option("--endpoint", default="", help="External segmenter URL.")
@click.option("--feather-radius", default=3.0, show_default=True)
@click.option("--layer-id", default="", help="Explicit id for the new layer.")
def segment(project, points, tolerance, backend, endpoint, feather_radius, layer_id):
    """Segment an object from click prompts and add it as a layer."""
    source, layers, meta = _load(project)
    prompt = ClickPrompt(points=[_parse_point(p) for p in points], tolerance=tolerance)
    if backend == "external":
        url = endpoint or load_config().external_segmenter_url
        if not url:
            raise click.ClickException("external backend requires --endpoint or config")
        result = segment_external(source, prompt, url, feather_radius=feather_radius)
    else:
        result = segment_builtin(source, prompt, feather_radius=feather_radius)
    new_id = layer_id or f"layer-{secrets.token_hex(4)}"
    layers.append(ObjectLayer(id=new_id, mask=result.mask))
    _save(project, source, layers, meta)
    click.echo(json.dumps({"layer_id": new_id, "score": result.score,
                           "source": result.source}))


@main.command()
@click.argument("project", type=click.Path(exists=True))
@click.option("--layer", "layer_id", required=True)
@click.option("--task", type=click.Choice([t.value for t in RestoreTask]), required=True)
def estimate(project, layer_id, task):
    """Predict the degradation parameter for a layer's task."""
    source, layers, meta = _load(project)
    layer = _find_layer(layers, layer_id)
    task = RestoreTask(task)
    if task == RestoreTask.DENOISE:
        param = estimate_noise_sigma(source, layer.mask)
    elif task == RestoreTask.DEBLUR:
        param = estimate_blur_sigma(source, layer.mask)
    elif meta.source_quant_tables is not None:
        param = estimate_jpeg_quality(meta.source_quant_tables)
    else:
        param = estimate_jpeg_quality(source)
    layer.task = task
    layer.predicted = param
    _save(project, source, layers, meta)
    click.echo(json.dumps({"layer_id": layer_id, "task": task.value,
                           "param": param_to_json(param)}))


def _find_layer(layers, layer_id):
    for layer in layers:
        if layer.id == layer_id:
            return layer
    raise click.ClickException(f"no layer {layer_id!r} in project")


@main.command()
@click.argument("project", type=click.Path(exists=True))
@click.option("--layer", "layer_id", required=True)
@click.option("--strength", default=1.0, show_default=True)
@click.option("--override-sigma-blur", type=float, default=None)
@click.option("--override-sigma-noise", type=float, default=None)
@click.option("--override-quality", type=int, default=None)
def restore(project, layer_id, strength, override_sigma_blur,
            override_sigma_noise, override_quality):
    """Commit restoration settings (optionally overriding the prediction)."""
    source, layers, meta = _load(project)
    layer = _find_layer(layers, layer_id)
    if layer.task is None:
        raise click.ClickException("layer has no task; run estimate first")
    override = None
    if override_sigma_blur is not None:
        override = make_blur_param(override_sigma_blur)
    elif override_sigma_noise is not None:
        override = DegradationParam(kind=DegradationKind.NOISE,
                                    sigma_noise=override_sigma_noise)
    elif override_quality is not None:
        override = DegradationParam(kind=DegradationKind.JPEG, quality=override_quality)
    if override is not None:
        if override.kind != TASK_KIND[layer.task]:
            raise click.ClickException(
                f"override kind {override.kind.value} does not match task {layer.task.value}"
            )
        layer.override = override
    layer.strength_scale = strength
    _save(project, source, layers, meta)
    click.echo(json.dumps({"layer_id": layer_id, "committed": True,
                           "strength_scale": strength,
                           "param": param_to_json(layer.effective_param())}))


@main.command()
@click.argument("project", type=click.Path(exists=True))
@click.option("--layer", "layer_id", required=True)
@click.option("--brightness", default=0.0, show_default=True)
@click.option("--contrast", default=1.0, show_default=True)
@click.option("--smoothness", default=0.0, show_default=True)
@click.option("--bokeh", "bokeh_sigma", default=0.0, show_default=True)
def enhance(project, layer_id, brightness, contrast, smoothness, bokeh_sigma):
    """Set per-layer enhancement (brightness/contrast/smoothness/bokeh)."""
    source, layers, meta = _load(project)
    layer = _find_layer(layers, layer_id)
    layer.enhance = EnhanceSettings(brightness=brightness, contrast=contrast,
                                    smoothness=smoothness, bokeh_sigma=bokeh_sigma)
    _save(project, source, layers, meta)
    click.echo(json.dumps({"layer_id": layer_id, "ok": True}))


@main.command("composite")
@click.argument("project", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), required=True)
def composite_cmd(project, out_path):
    """Render the layer stack and write a PNG."""
    source, layers, meta = _load(project)
    Path(out_path).write_bytes(encode_png(composite(source, layers)))
    click.echo(out_path)


@main.command("export")
@click.argument("project", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["png", "jpeg"]), default="png")
@click.option("--quality", default=90, show_default=True)
@click.option("--force", is_flag=True)
def export_cmd(project, out_path, fmt, quality, force):
    """Composite and encode; JPEG below quality 50 needs --force."""
    source, layers, meta = _load(project)
    try:
        blob = export(source, layers, fmt, quality, force)
    except ExportPolicyError as exc:
        raise click.ClickException(str(exc))
    Path(out_path).write_bytes(blob)
    click.echo(out_path)


@main.command()
@click.argument("project", type=click.Path(exists=True))
def state(project):
    """Print the project's layer list as JSON."""
    source, layers, meta = _load(project)
    click.echo(json.dumps({
        "width": source.width,
        "height": source.height,
        "layers": [layer_to_json(layer) for layer in layers],
    }, indent=2))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--port", type=int, default=None)
@click.option("--bind", default=None)
def serve(config_path, port, bind):
    """Run the HTTP service (loopback by default)."""
    import uvicorn

    from .service import create_app

    cfg = load_config(config_path)
    if port is not None:
        cfg.port = port
    if bind is not None:
        cfg.bind = bind
    uvicorn.run(create_app(cfg), host=cfg.bind, port=cfg.port)


@main.command()
@click.option("--out", "out_path", type=click.Path(), default="bench_results.csv",
              show_default=True)
def bench(out_path):
    """Run the acceptance harness and write PSNR results as CSV."""
    from .bench import run_benchmarks, write_csv

    rows = run_benchmarks(echo=click.echo)
    write_csv(rows, out_path)
    failed = [r for r in rows if not r.passed]
    click.echo(f"wrote {out_path}: {len(rows) - len(failed)}/{len(rows)} checks passed")
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()

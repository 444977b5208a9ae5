"""Acceptance harness measurements, shared by `restudio bench` and the tests.

Each check yields a BenchRow; the CLI renders them as CSV. Thresholds are
the frozen acceptance gates.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .compose import ObjectLayer, composite
from .degrade import DegradationKind, apply_awgn, apply_blur, jpeg_decode, jpeg_encode
from .estimate import (
    DegradationParam,
    blockiness,
    estimate_blur_sigma,
    estimate_jpeg_quality,
    estimate_noise_sigma,
    make_blur_param,
)
from .fixtures import (
    NATURAL_NAMES,
    checkerboard,
    constant_image,
    disk_fixture,
    natural_image,
    two_region_fixture,
)
from .imagecore import Mask, gaussian_kernel, psnr
from .jpegcodec import quant_tables_for_quality
from .restore import RestoreTask, deblock_dct, deblur_wiener, denoise_tv, tv_statistic
from .segment import ClickPoint, ClickPrompt, segment_builtin

STRENGTH_GRID_9 = [0.25 * i for i in range(9)]  # 0 .. 2


@dataclass
class BenchRow:
    group: str
    name: str
    value: float
    threshold: float
    op: str  # ">=", "<=", "=="
    passed: bool
    seconds: float = 0.0


def _row(group, name, value, threshold, op, seconds=0.0) -> BenchRow:
    value = float(value)
    threshold = float(threshold)
    passed = {
        ">=": value >= threshold,
        "<=": value <= threshold,
        "==": value == threshold,
    }[op]
    return BenchRow(group, name, value, threshold, op, passed, seconds)


def degradation_rows() -> list[BenchRow]:
    rows = []
    t0 = time.time()
    k = gaussian_kernel(1.5, 15).weights
    rows.append(_row("degrade", "kernel_sum_error", abs(k.sum() - 1.0), 1e-9, "<="))
    sym = max(
        np.abs(k - k.T).max(),
        np.abs(k - k[::-1, :]).max(),
        np.abs(k - k[:, ::-1]).max(),
    )
    rows.append(_row("degrade", "kernel_symmetry_error", sym, 0.0, "<="))

    base = constant_image(0.5, 256)
    for sigma in (10, 25, 50):
        errors = []
        for seed in range(10):
            noisy = apply_awgn(base, sigma, seed)
            measured = float((noisy.data - base.data).std()) * 255.0
            errors.append(abs(measured - sigma) / sigma)
        rows.append(_row("degrade", f"awgn_sigma{sigma}_rel_error", max(errors), 0.02, "<="))

    exact = all(
        estimate_jpeg_quality(quant_tables_for_quality(q)).quality == q
        for q in range(10, 91)
    )
    rows.append(_row("degrade", "dqt_roundtrip_exact_q10_90", float(exact), 1.0, "=="))
    rows.append(_row("degrade", "runtime_seconds", time.time() - t0, 10.0, "<="))
    return rows


def estimator_rows() -> list[BenchRow]:
    rows = []
    t0 = time.time()
    for sigma in (5, 15, 25, 50):
        noisy = apply_awgn(constant_image(0.5, 256), sigma, 100 + sigma)
        est = estimate_noise_sigma(noisy).sigma_noise
        rows.append(_row("estimate", f"noise_sigma{sigma}_rel_error",
                         abs(est - sigma) / sigma, 0.10, "<="))
    for sigma in (0.5, 1.5, 2.5):
        blurred = apply_blur(checkerboard(cell=8, size=128), sigma)
        est = estimate_blur_sigma(blurred).sigma_blur
        rows.append(_row("estimate", f"blur_sigma{sigma}_abs_error",
                         abs(est - sigma), 0.3, "<="))
    img = natural_image("camera")
    for q in (10, 30, 50, 70):
        blob = jpeg_encode(img, q)
        rows.append(_row("estimate", f"jpeg_q{q}_bitstream_error",
                         abs(estimate_jpeg_quality(blob).quality - q), 0, "<="))
        decoded, _ = jpeg_decode(blob)
        rows.append(_row("estimate", f"jpeg_q{q}_pixel_error",
                         abs(estimate_jpeg_quality(decoded).quality - q), 10, "<="))
    rows.append(_row("estimate", "runtime_seconds", time.time() - t0, 60.0, "<="))
    return rows


def restoration_rows() -> list[BenchRow]:
    rows = []
    noise_param = DegradationParam(kind=DegradationKind.NOISE, sigma_noise=25.0)
    for name in NATURAL_NAMES:
        clean = natural_image(name)
        noisy = apply_awgn(clean, 25, 7)
        denoised = denoise_tv(noisy, noise_param, 1.0)
        gain = psnr(clean, denoised) - psnr(clean, noisy)
        rows.append(_row("restore", f"tv_gain_db_{name}", gain, 3.0, ">="))

    import skimage.data as skdata

    from .imagecore import from_uint8

    sharp = from_uint8(skdata.camera()[192:320, 192:320])
    blurred = apply_blur(sharp, 1.5)
    restored = deblur_wiener(blurred, make_blur_param(1.5), 1.0)
    rows.append(_row("restore", "wiener_roundtrip_db", psnr(sharp, restored), 40.0, ">="))

    cam = natural_image("camera")
    for q in (10, 20, 30):
        decoded, _ = jpeg_decode(jpeg_encode(cam, q))
        param = DegradationParam(kind=DegradationKind.JPEG, quality=q)
        deblocked = deblock_dct(decoded, param, 1.0)
        drop = blockiness(decoded) - blockiness(deblocked)
        rows.append(_row("restore", f"deblock_q{q}_blockiness_drop", drop, 0.0, ">="))
    return rows


def per_object_measurement(seed: int = 9) -> dict:
    """Per-object strengths vs the best single global strength (9-point grid)."""
    clean, smooth_region = two_region_fixture()
    noisy = apply_awgn(clean, 25, seed)
    param = DegradationParam(kind=DegradationKind.NOISE, sigma_noise=25.0)

    denoised = {s: denoise_tv(noisy, param, s) for s in STRENGTH_GRID_9}
    best_global = max(psnr(clean, out) for out in denoised.values())

    texture_region = ~smooth_region
    best_strengths = {}
    for label, region in (("smooth", smooth_region), ("texture", texture_region)):
        best_s, best_mse = None, None
        for s in STRENGTH_GRID_9:
            mse_r = float(np.mean((denoised[s].data[region] - clean.data[region]) ** 2))
            if best_mse is None or mse_r < best_mse:
                best_s, best_mse = s, mse_r
        best_strengths[label] = best_s

    layers = [
        ObjectLayer(id="smooth", mask=Mask(smooth_region.astype(float)),
                    task=RestoreTask.DENOISE, predicted=param,
                    strength_scale=best_strengths["smooth"]),
        ObjectLayer(id="texture", mask=Mask(texture_region.astype(float)),
                    task=RestoreTask.DENOISE, predicted=param,
                    strength_scale=best_strengths["texture"]),
    ]
    per_object = psnr(clean, composite(noisy, layers))
    return {
        "per_object_db": per_object,
        "best_global_db": best_global,
        "margin_db": per_object - best_global,
        "strengths": best_strengths,
    }


def per_object_rows() -> list[BenchRow]:
    t0 = time.time()
    result = per_object_measurement()
    rows = [
        _row("per-object", "margin_db_vs_best_global", result["margin_db"], 0.0, ">="),
        _row("per-object", "per_object_db", result["per_object_db"],
             result["best_global_db"], ">="),
    ]
    rows.append(_row("per-object", "runtime_seconds", time.time() - t0, 120.0, "<="))
    return rows


def monotone_rows() -> list[BenchRow]:
    rows = []
    strengths = [0.0, 0.5, 1.0, 1.5, 2.0]
    noisy = apply_awgn(natural_image("camera"), 25, 3)
    noise_param = DegradationParam(kind=DegradationKind.NOISE, sigma_noise=25.0)
    tvs = [tv_statistic(denoise_tv(noisy, noise_param, s)) for s in strengths]
    worst = max(b - a for a, b in zip(tvs, tvs[1:]))
    rows.append(_row("monotone", "tv_max_increase", worst, 0.0, "<="))

    decoded, _ = jpeg_decode(jpeg_encode(natural_image("camera"), 20))
    jpeg_param = DegradationParam(kind=DegradationKind.JPEG, quality=20)
    counts = [
        deblock_dct(decoded, jpeg_param, s, with_stats=True)[1].zeroed_coeffs
        for s in strengths
    ]
    worst = max(a - b for a, b in zip(counts, counts[1:]))
    rows.append(_row("monotone", "deblock_zeroed_max_decrease", worst, 0.0, "<="))

    blurred = apply_blur(natural_image("camera"), 1.5)
    identity = (
        denoise_tv(noisy, noise_param, 0.0) is noisy
        and deblock_dct(decoded, jpeg_param, 0.0) is decoded
        and deblur_wiener(blurred, make_blur_param(1.5), 0.0) is blurred
    )
    rows.append(_row("monotone", "strength0_bit_identity", float(identity), 1.0, "=="))
    return rows


def segmentation_rows() -> list[BenchRow]:
    rows = []
    img, truth = disk_fixture()
    center = img.width // 2
    result = segment_builtin(img, ClickPrompt(points=[ClickPoint(center, center)]))
    iou = (result.hard_mask & truth).sum() / (result.hard_mask | truth).sum()
    rows.append(_row("segment", "disk_iou_clean", iou, 0.95, ">="))

    noisy = apply_awgn(img, 25, 5)
    result = segment_builtin(
        noisy, ClickPrompt(points=[ClickPoint(center, center)], tolerance=20.0)
    )
    iou = (result.hard_mask & truth).sum() / (result.hard_mask | truth).sum()
    rows.append(_row("segment", "disk_iou_noisy_sigma25", iou, 0.80, ">="))
    return rows


def run_benchmarks(echo=None) -> list[BenchRow]:
    groups = [
        ("degradation synthesis", degradation_rows),
        ("estimators", estimator_rows),
        ("restoration gates", restoration_rows),
        ("per-object vs global", per_object_rows),
        ("monotone control", monotone_rows),
        ("segmentation", segmentation_rows),
    ]
    rows = []
    for label, fn in groups:
        if echo:
            echo(f"running {label} ...")
        batch = fn()
        rows.extend(batch)
        if echo:
            for row in batch:
                status = "PASS" if row.passed else "FAIL"
                echo(f"  [{status}] {row.group}/{row.name}: "
                     f"{row.value:.4f} {row.op} {row.threshold:.4f}")
    return rows


def write_csv(rows: list[BenchRow], path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "name", "value", "threshold", "op", "passed"])
        for row in rows:
            writer.writerow([row.group, row.name, f"{row.value:.6f}",
                             f"{row.threshold:.6f}", row.op, row.passed])

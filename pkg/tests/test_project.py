import json
import zipfile
import io

import numpy as np
import pytest

from restudio.compose import EnhanceSettings, ObjectLayer, composite
from restudio.degrade import DegradationKind, apply_awgn
from restudio.errors import InvalidArgumentError
from restudio.estimate import DegradationParam, make_blur_param
from restudio.fixtures import disk_fixture
from restudio.project import (
    ProjectMeta,
    load_project,
    param_from_json,
    param_to_json,
    save_project_dir,
    save_project_zip,
)
from restudio.jpegcodec import quant_tables_for_quality
from restudio.segment import ClickPoint, ClickPrompt, segment_builtin


def sample_project():
    from restudio.fileio import decode_png, encode_png

    img, _ = disk_fixture()
    # sources always enter through the 8-bit I/O boundary, as in a session
    source = decode_png(encode_png(apply_awgn(img, 25.0, 1)))
    res = segment_builtin(source, ClickPrompt(points=[ClickPoint(64, 64)], tolerance=20.0))
    layer = ObjectLayer(
        id="layer-1",
        mask=res.mask,
        task=None,
        predicted=DegradationParam(kind=DegradationKind.NOISE, sigma_noise=25.0),
        strength_scale=1.25,
        enhance=EnhanceSettings(brightness=0.1, contrast=1.5),
    )
    from restudio.restore import RestoreTask

    layer.task = RestoreTask.DENOISE
    meta = ProjectMeta(created=ProjectMeta.now(),
                       source_quant_tables=quant_tables_for_quality(40))
    return source, [layer], meta


class TestParamJson:
    @pytest.mark.parametrize(
        "param",
        [
            DegradationParam(kind=DegradationKind.NOISE, sigma_noise=17.5, confidence=0.8),
            DegradationParam(kind=DegradationKind.JPEG, quality=35, confidence=0.4),
            make_blur_param(2.3, confidence=0.9),
        ],
    )
    def test_round_trip(self, param):
        back = param_from_json(param_to_json(param))
        assert back.kind == param.kind
        assert back.confidence == param.confidence
        if param.kind == DegradationKind.BLUR:
            assert back.sigma_blur == param.sigma_blur
            assert np.array_equal(back.kernel_vec, param.kernel_vec)
        elif param.kind == DegradationKind.NOISE:
            assert back.sigma_noise == param.sigma_noise
        else:
            assert back.quality == param.quality

    def test_none_round_trip(self):
        assert param_from_json(param_to_json(None)) is None


class TestProjectRoundTrip:
    def test_directory_round_trip_composite_bit_identical(self, tmp_path):
        source, layers, meta = sample_project()
        before = composite(source, layers, use_cache=False)
        save_project_dir(tmp_path / "proj", source, layers, meta)
        src2, layers2, meta2 = load_project(tmp_path / "proj")
        after = composite(src2, layers2, use_cache=False)
        assert np.array_equal(before.data, after.data)
        assert meta2.source_quant_tables == meta.source_quant_tables
        assert layers2[0].strength_scale == 1.25
        assert layers2[0].enhance == layers[0].enhance

    def test_zip_round_trip(self):
        source, layers, meta = sample_project()
        blob = save_project_zip(source, layers, meta)
        src2, layers2, meta2 = load_project(blob)
        assert np.array_equal(src2.data, source.data)
        assert np.array_equal(layers2[0].mask.alpha, layers[0].mask.alpha)

    def test_save_load_save_is_stable(self, tmp_path):
        source, layers, meta = sample_project()
        blob1 = save_project_zip(source, layers, meta)
        src2, layers2, meta2 = load_project(blob1)
        blob2 = save_project_zip(src2, layers2, meta2)
        with zipfile.ZipFile(io.BytesIO(blob1)) as z1, zipfile.ZipFile(io.BytesIO(blob2)) as z2:
            for name in ("source.png", "masks/layer-1.png"):
                assert z1.read(name) == z2.read(name)

    def test_unknown_schema_rejected(self, tmp_path):
        source, layers, meta = sample_project()
        root = tmp_path / "proj"
        save_project_dir(root, source, layers, meta)
        manifest = json.loads((root / "manifest.json").read_text())
        manifest["schema_version"] = 999
        (root / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(InvalidArgumentError):
            load_project(root)

    def test_missing_mask_rejected(self, tmp_path):
        source, layers, meta = sample_project()
        root = tmp_path / "proj"
        save_project_dir(root, source, layers, meta)
        (root / "masks" / "layer-1.png").unlink()
        with pytest.raises(InvalidArgumentError):
            load_project(root)

    def test_no_absolute_paths_in_manifest(self, tmp_path):
        source, layers, meta = sample_project()
        root = tmp_path / "proj"
        save_project_dir(root, source, layers, meta)
        manifest = (root / "manifest.json").read_text()
        assert str(tmp_path) not in manifest

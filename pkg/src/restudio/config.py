"""Service configuration: key=value file with environment-variable overrides.

Environment variables use the RESTUDIO_ prefix with the key uppercased
and dots replaced by underscores (e.g. RESTUDIO_EXTERNAL_SEGMENTER_URL).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .calibration import parse_kv

ENV_PREFIX = "RESTUDIO_"


@dataclass
class ServiceConfig:
    bind: str = "127.0.0.1"
    port: int = 8023
    max_upload_mb: int = 32
    external_segmenter_url: str = ""
    external_deadline_seconds: float = 10.0
    preview_strengths: tuple[float, ...] = (0.5, 1.0, 1.5)
    preview_max_dim: int = 512
    persist_dir: str = ""
    ui_dir: str = ""

    @property
    def max_upload_bytes(self) -> int:
        return self.max_upload_mb * 1024 * 1024


def _apply(cfg: ServiceConfig, key: str, value: str):
    if key == "bind":
        cfg.bind = value
    elif key == "port":
        cfg.port = int(value)
    elif key == "max_upload_mb":
        cfg.max_upload_mb = int(value)
    elif key == "external_segmenter_url":
        cfg.external_segmenter_url = value
    elif key == "external_deadline_seconds":
        cfg.external_deadline_seconds = float(value)
    elif key == "preview_strengths":
        cfg.preview_strengths = tuple(float(v) for v in value.split(",") if v.strip())
    elif key == "preview_max_dim":
        cfg.preview_max_dim = int(value)
    elif key == "persist_dir":
        cfg.persist_dir = value
    elif key == "ui_dir":
        cfg.ui_dir = value
    # Unknown keys are ignored so configs stay forward compatible.


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    cfg = ServiceConfig()
    if path is not None:
        text = Path(path).read_text()
        for key, value in parse_kv(text).items():
            _apply(cfg, key, value)
    env = os.environ if env is None else env
    for key in (
        "bind", "port", "max_upload_mb", "external_segmenter_url",
        "external_deadline_seconds", "preview_strengths", "preview_max_dim",
        "persist_dir", "ui_dir",
    ):
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            _apply(cfg, key, env[env_key])
    return cfg

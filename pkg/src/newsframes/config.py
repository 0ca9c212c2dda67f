"""Application configuration for the CLI and the HTTP service.

One JSON file holds the data paths, the service port, the default training
settings, and the cross-validation defaults; individual CLI flags override
single values. The config path itself can come from the NEWSFRAMES_CONFIG
environment variable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import DEFAULT_MIN_PARAGRAPH_CHARS

CONFIG_ENV_VAR = "NEWSFRAMES_CONFIG"


class AppConfigError(ValueError):
    """The application config is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class CvDefaults:
    k: int = 5
    stratified: bool = False
    seed: int = 0


@dataclass(frozen=True)
class AppConfig:
    """Paths and defaults shared by the service and the CLI."""

    corpus_path: str | None = None       # unlabeled paragraph JSONL (annotation queue)
    annotations_path: str = "annotations.jsonl"
    model_dir: str | None = None         # trained artifact served by /api/classify
    port: int = 8000
    min_paragraph_chars: int = DEFAULT_MIN_PARAGRAPH_CHARS
    training: dict = field(default_factory=dict)  # TrainingConfig field overrides
    cv: CvDefaults = field(default_factory=CvDefaults)

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise AppConfigError(f"port must be in [1, 65535], got {self.port}")
        if self.corpus_path is not None and not Path(self.corpus_path).exists():
            raise AppConfigError(f"corpus_path does not exist: {self.corpus_path}")
        annotations_parent = Path(self.annotations_path).resolve().parent
        if not annotations_parent.is_dir():
            raise AppConfigError(
                f"annotations_path parent does not exist: {annotations_parent}"
            )


def load_app_config(path=None) -> AppConfig:
    """Load the config file, falling back to $NEWSFRAMES_CONFIG."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        raise AppConfigError(
            f"no config path given and {CONFIG_ENV_VAR} is not set"
        )
    path = Path(path)
    if not path.exists():
        raise AppConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AppConfigError(f"{path}: invalid JSON: {exc.msg}") from exc
    cv = CvDefaults(**obj.pop("cv", {}))
    known = set(AppConfig.__dataclass_fields__) - {"cv"}
    unknown = [k for k in obj if k not in known]
    if unknown:
        raise AppConfigError(f"{path}: unknown config keys: {', '.join(sorted(unknown))}")
    return AppConfig(cv=cv, **obj)

"""Run configuration: optional TOML file, overridden by command-line flags."""

from __future__ import annotations

import hashlib
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from ._io import dumps


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    seed: int = 0
    jobs: int = 1
    out: str = "."
    paths: dict[str, str] = field(default_factory=dict)
    # per-subcommand parameter tables, e.g. params["cv"]["window"]
    params: dict[str, dict[str, Any]] = field(default_factory=dict)

    def section(self, name: str) -> dict[str, Any]:
        return dict(self.params.get(name, {}))

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(dumps(self.to_dict()).encode()).hexdigest()


_TOP = {"seed", "jobs", "out", "paths"}


def load_config(path: str | Path) -> PipelineConfig:
    """Read a TOML file: top-level ``seed``, ``jobs``, ``out``, a ``[paths]``
    table and one table per subcommand."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = PipelineConfig()
    for key, value in data.items():
        if key in _TOP:
            setattr(cfg, key, value)
        elif isinstance(value, dict):
            cfg.params[key.replace("_", "-")] = value
        else:
            raise ConfigError(f"{path}: unknown top-level key {key!r}")
    if not isinstance(cfg.seed, int) or not isinstance(cfg.jobs, int) or cfg.jobs < 1:
        raise ConfigError(f"{path}: seed must be an integer and jobs a positive integer")
    return cfg


def seed_stream(seed: int, *names: str | int):
    """Independent generator for a named stream, e.g. ``("cv", rep, fold)``."""
    key = tuple(int(hashlib.sha256(str(n).encode()).hexdigest()[:8], 16)
                if isinstance(n, str) else int(n) for n in names)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))

"""Server configuration: YAML file plus flag overrides, flags win."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8900
    model: str = "feature-logistic"  # feature-logistic | cross-encoder
    checkpoint: str | None = None
    batch_cap: int = 1024
    device: str = "cpu"

    def __post_init__(self):
        if self.batch_cap < 1:
            raise ValueError("batch_cap must be >= 1")
        if self.model not in ("feature-logistic", "cross-encoder"):
            raise ValueError(f"unknown model spec: {self.model!r}")

    @classmethod
    def load(cls, config_path: str | None, **overrides) -> "ServerConfig":
        data: dict = {}
        if config_path:
            path = Path(config_path)
            if not path.exists():
                raise FileNotFoundError(f"config file not found: {config_path}")
            loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
            if not isinstance(loaded, dict):
                raise ValueError("config file must hold a mapping")
            unknown = set(loaded) - set(cls.__dataclass_fields__)
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            data.update(loaded)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

"""Run configuration shared by the command-line workflows."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

FORMAT_VERSION = 1
METRICS = ("linear-l2", "geodesic-closed", "geodesic-shape")
SPACES = ("open", "closed", "shape")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    format_version: int = FORMAT_VERSION
    frames: int = 128
    epsilon: float = 1e-6
    seeds: int = 16
    path_points: int = 16
    metric: str = "geodesic-shape"
    space: str = "closed"
    seam_smoothing: bool = True
    sanity_bound: float = math.pi / 2
    include_root_translation: bool = False
    exclude_failures: bool = False
    workers: int = 1

    def __post_init__(self):
        checks = [
            (self.format_version == FORMAT_VERSION, f"format_version must be {FORMAT_VERSION}"),
            (isinstance(self.frames, int) and 4 <= self.frames <= 100_000, "frames must be an integer in [4, 100000]"),
            (0 < self.epsilon < 1, "epsilon must lie in (0, 1)"),
            (isinstance(self.seeds, int) and 1 <= self.seeds <= 1024, "seeds must be an integer in [1, 1024]"),
            (isinstance(self.path_points, int) and 2 <= self.path_points <= 1024,
             "path_points must be an integer in [2, 1024]"),
            (self.metric in METRICS, f"metric must be one of {METRICS}"),
            (self.space in SPACES, f"space must be one of {SPACES}"),
            (0 < self.sanity_bound <= math.pi, "sanity_bound must lie in (0, pi]"),
            (isinstance(self.workers, int) and 1 <= self.workers <= 256, "workers must be an integer in [1, 256]"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        for name in ("seam_smoothing", "include_root_translation", "exclude_failures"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name} must be true or false")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, **kw) -> "RunConfig":
        return RunConfig.from_dict({**self.to_dict(), **{k: v for k, v in kw.items() if v is not None}})

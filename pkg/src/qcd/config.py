"""Run configuration shared by the CLI and the experiment scripts."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

from .sdp import DEFAULT_TOL
from .symsdp import DEFAULT_DIM_CAP
from .adaptive import SMOOTHING_DIM_BUDGET

TOL_RANGE = (1e-12, 1e-4)


@dataclass(frozen=True)
class RunConfig:
    tol: float = DEFAULT_TOL
    seed: int = 0
    threads: int = 1
    dim_cap: int = DEFAULT_DIM_CAP
    smoothing_dim_budget: int = SMOOTHING_DIM_BUDGET
    out: str | None = None
    verbosity: int = 0

    def __post_init__(self):
        lo, hi = TOL_RANGE
        if not lo <= self.tol <= hi:
            raise ValueError(f"tol must lie in [{lo:g}, {hi:g}], got {self.tol:g}")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.dim_cap < 1 or self.smoothing_dim_budget < 1:
            raise ValueError("dimension caps must be positive")

    def merged(self, overrides: dict) -> "RunConfig":
        """Copy with every non-``None`` entry of ``overrides`` applied."""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        return cls().merged(data)

    def to_dict(self) -> dict:
        return asdict(self)

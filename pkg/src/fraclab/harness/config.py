"""Run configuration and manifests, one JSON document per run."""

from __future__ import annotations

import dataclasses
import json
import platform
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..errors import UsageError
from ..fracops import Grid

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    experiment: str
    alpha: Optional[float] = None
    hurst: Optional[float] = None
    potential: Optional[str] = None
    phi: Optional[str] = None
    lam: Optional[float] = None
    x0: Optional[list] = None
    T: float = 1.0
    k: Optional[float] = None
    N: Optional[int] = None
    steps: list = field(default_factory=list)
    samples: Optional[int] = None
    seed: int = 0
    hist_times: list = field(default_factory=list)
    out_prefix: Optional[str] = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise UsageError(f"unsupported schema version {self.schema_version}")
        if not isinstance(self.experiment, str) or not self.experiment:
            raise UsageError("experiment id must be a nonempty string")
        if self.x0 is not None and not isinstance(self.x0, list):
            self.x0 = [float(self.x0)]
        if not isinstance(self.seed, int) or self.seed < 0:
            raise UsageError("seed must be a nonnegative integer")

    def grid(self) -> Grid:
        if self.N is not None:
            return Grid(self.T, self.N)
        if self.k is not None:
            return Grid.from_step(self.k, self.T)
        raise UsageError("config needs either k or N")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise UsageError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid config JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass
class CriterionResult:
    id: str
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    note: str = ""

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.id}: {self.name}" + \
            (f" ({vals})" if vals else "")


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_time: float = 0.0
    criteria: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    python: str = field(default_factory=platform.python_version)

    def add(self, result: CriterionResult) -> None:
        if any(c.id == result.id for c in self.criteria):
            raise UsageError(f"criterion {result.id} recorded twice")
        self.criteria.append(result)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")

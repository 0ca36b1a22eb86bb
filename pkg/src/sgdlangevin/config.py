"""Experiment configuration: one JSON file, flags override individual keys."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .potentials import target_from_dict


@dataclass
class ExperimentConfig:
    target: dict = field(default_factory=dict)
    sampler: str = "sgd_idealized"
    epsilon: float | None = None
    h: float | None = None
    b: float | None = None
    K: int | None = None
    theorem: str = "best"
    chains: int = 1
    seed: int = 0
    checkpoints: list = field(default_factory=list)
    theta0: list | None = None
    out: str = "out"
    trajectory: bool = False
    base_dir: str = "."

    @classmethod
    def load(cls, path=None, **overrides) -> "ExperimentConfig":
        data = {}
        if path is not None:
            path = Path(path)
            data = json.loads(path.read_text())
            data.setdefault("base_dir", str(path.parent))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def build_target(self):
        if not self.target:
            raise InvalidArgument("config has no target description")
        return target_from_dict(self.target, self.base_dir)

    def theta0_for(self, target) -> np.ndarray:
        if self.theta0 is None:
            return np.zeros(target.dim)
        theta0 = np.atleast_1d(np.asarray(self.theta0, dtype=float))
        if theta0.shape != (target.dim,):
            raise InvalidArgument(f"theta0 has shape {theta0.shape}, target dimension is {target.dim}")
        return theta0

    @property
    def manual(self) -> bool:
        return self.h is not None and self.K is not None

    def check(self):
        if self.epsilon is None and not self.manual:
            raise InvalidArgument("config must set epsilon (planning) or both h and K (manual parameters)")
        if self.chains < 1:
            raise InvalidArgument("chains must be >= 1")

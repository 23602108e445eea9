"""Experiment configuration: one dataclass, JSON round-trip, fingerprint."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

KINDS = ("noise-sweep", "learning-curve", "benchmark")


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs shared by the canned experiments.

    Fields irrelevant to a given kind are simply ignored by it, so one
    config file can drive several runs.
    """

    kind: str
    lambda_grid: tuple = (0.01,)
    norm: str = "sum-abs"
    statistic: str = "indicator"
    seed: int = 0
    repetitions: int = 20
    # noise sweep
    noise_grid: tuple = (0.0, 0.1, 0.2, 0.3, 0.4)
    train_boards: int = 500
    # learning curve
    base_samples: int = 80
    growth_step: int = 80
    growth_steps: int = 3
    rho_minus: float = 0.1
    rho_plus: float = 0.3
    # benchmark
    dataset: str | None = None
    dataset_rows: int = 3000
    train_rows: int = 1000
    labeled_fraction: float = 0.05
    unlabeled_fraction: float = 0.30
    validation_fraction: float = 0.25

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        object.__setattr__(self, "noise_grid", tuple(float(v) for v in self.noise_grid))
        if not self.lambda_grid or any(v <= 0 for v in self.lambda_grid):
            raise ValueError("lambda grid entries must be positive")
        if self.repetitions < 1:
            raise ValueError("need at least one repetition")
        for name in ("labeled_fraction", "unlabeled_fraction", "validation_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie strictly between 0 and 1")
        if self.rho_minus < 0 or self.rho_plus < 0 or self.rho_minus + self.rho_plus >= 1:
            raise ValueError("label noise rates must be nonnegative and sum below 1")
        if any(not 0.0 <= v < 1.0 for v in self.noise_grid):
            raise ValueError("noise grid entries must lie in [0, 1)")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda_grid"] = list(self.lambda_grid)
        out["noise_grid"] = list(self.noise_grid)
        return out

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def override(self, **kwargs) -> "ExperimentConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


def config_from_dict(data: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return ExperimentConfig(**data)


def load_config(path) -> ExperimentConfig:
    with Path(path).open() as handle:
        return config_from_dict(json.load(handle))

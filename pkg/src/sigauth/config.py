"""Run configuration shared by the CLI, the pipeline and the benchmark harness."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .auth import ThresholdPolicy
from .nnet import RpropConfig, TrainStop
from .training import TrainConfig


@dataclass
class RunConfig:
    """Every knob needed to reproduce a full generate/enroll/eval run."""

    seed: int = 42
    users: int = 50
    # enrollment samples per user (the 25/10/5 genuine/skilled/random split)
    enroll_genuine: int = 25
    enroll_skilled: int = 10
    enroll_random: int = 5
    # held-out probes per user, disjoint from enrollment by construction
    probe_genuine: int = 8
    probe_skilled: int = 5
    probe_random: int = 3
    noise_level: float = 0.05
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    locals_per_user: int = 4
    hidden: int = 16
    variance_target: float = 0.95
    max_components: int = 32
    max_epochs: int = 200
    err_goal: float = 1e-3
    thresholds: tuple[float, float, float, float] = (0.50, 0.60, 0.75, 0.90)
    repetitions: int = 15
    store_path: str = "store"

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            workers=self.workers,
            n_locals=self.locals_per_user,
            hidden=self.hidden,
            seed=self.seed,
            rprop=RpropConfig(),
            stop=TrainStop(max_epochs=self.max_epochs, err_goal=self.err_goal),
        )

    def policy(self) -> ThresholdPolicy:
        return ThresholdPolicy.from_floats(*self.thresholds)

    def enroll_per_user(self) -> int:
        return self.enroll_genuine + self.enroll_skilled + self.enroll_random

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thresholds"] = list(self.thresholds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError("unknown config keys: %s" % sorted(unknown))
        kwargs = dict(d)
        if "thresholds" in kwargs:
            kwargs["thresholds"] = tuple(kwargs["thresholds"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_file(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )

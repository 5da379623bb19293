"""Experiment configuration: one aggregate of all module settings with
JSON round-tripping and a stable content hash."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath

from .planner import HysteresisConfig, OptimizerConfig
from .priority import RIGHT_BEFORE_LEFT, AwarenessParams, PatternParams
from .risk import CostWeights, RateParams


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1          # simulation / replanning step [s]
    timeout: float = 60.0    # hard run cap [s]
    grace: float = 5.0       # extra time after both agents cleared the zone [s]


@dataclass(frozen=True)
class ReactiveConfig:
    n_profiles: int = 21
    attention_distance: float = 10.0   # non-compliant agents ignore the ego beyond this [m]
    tau0: float = 0.15                 # higher escape rate than the ego planner


@dataclass
class ExperimentConfig:
    ds: float = 0.05
    s_h: float = 10.0
    sigma_smooth: float = 0.3
    corridor_width: float = 3.0
    resample_step: float = 0.5
    v_max: float = 20.0
    convention: str = RIGHT_BEFORE_LEFT
    rates: RateParams = field(default_factory=RateParams)
    weights: CostWeights = field(default_factory=CostWeights)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    hysteresis: HysteresisConfig = field(default_factory=HysteresisConfig)
    awareness: AwarenessParams = field(default_factory=AwarenessParams)
    pattern: PatternParams = field(default_factory=PatternParams)
    reactive: ReactiveConfig = field(default_factory=ReactiveConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    vehicle_length: float = 4.5
    vehicle_width: float = 1.8
    vehicle_mass: float = 1500.0

    @property
    def grid_points(self) -> int:
        return int(round(self.s_h / self.ds)) + 1

    def optimizer_for_ego(self) -> OptimizerConfig:
        """Optimizer bounds with the road speed limit folded in."""
        return replace(self.optimizer, v_max=self.v_max)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        nested = {"rates": RateParams, "weights": CostWeights,
                  "optimizer": OptimizerConfig, "hysteresis": HysteresisConfig,
                  "awareness": AwarenessParams, "pattern": PatternParams,
                  "reactive": ReactiveConfig, "sim": SimConfig}
        for key, klass in nested.items():
            if key in kwargs and isinstance(kwargs[key], dict):
                kwargs[key] = klass(**kwargs[key])
        return cls(**kwargs)

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def save(self, path) -> None:
        FsPath(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(FsPath(path).read_text()))

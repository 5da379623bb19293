"""Run records: executed traces plus computed indicators, JSON on disk."""
from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath


def _round6(x):
    if isinstance(x, float):
        return round(x, 6)
    if isinstance(x, list):
        return [_round6(v) for v in x]
    if isinstance(x, dict):
        return {k: _round6(v) for k, v in x.items()}
    return x


@dataclass
class AgentTrace:
    """Per-step executed state of one agent."""

    role: str = "other"
    length: float = 4.5
    width: float = 1.8
    mass: float = 1500.0
    l: list = field(default_factory=list)
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)
    v: list = field(default_factory=list)
    a: list = field(default_factory=list)
    r: list = field(default_factory=list)
    candidate: list = field(default_factory=list)
    relation: list = field(default_factory=list)

    def append(self, *, l, x, y, v, a, r, candidate, relation):
        self.l.append(round(float(l), 6))
        self.x.append(round(float(x), 6))
        self.y.append(round(float(y), 6))
        self.v.append(round(float(v), 6))
        self.a.append(round(float(a), 6))
        self.r.append(round(float(r), 6))
        self.candidate.append(candidate)
        self.relation.append(relation)

    def to_dict(self) -> dict:
        return {"role": self.role, "length": self.length, "width": self.width,
                "mass": self.mass, "l": self.l, "x": self.x, "y": self.y,
                "v": self.v, "a": self.a, "r": self.r,
                "candidate": self.candidate, "relation": self.relation}

    @classmethod
    def from_dict(cls, d: dict) -> "AgentTrace":
        return cls(**d)


@dataclass
class RunRecord:
    """One executed simulation: traces, scenario, termination, indicators."""

    dt: float
    seed: int | None = None
    scenario: dict = field(default_factory=dict)
    agents: list[AgentTrace] = field(default_factory=list)
    t: list = field(default_factory=list)
    t_steps: int = 0
    zone: dict | None = None
    termination: str = ""
    indicators: dict = field(default_factory=dict)
    config_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "dt": self.dt, "seed": self.seed, "scenario": _round6(self.scenario),
            "t": self.t, "t_steps": self.t_steps,
            "agents": [a.to_dict() for a in self.agents],
            "zone": _round6(self.zone), "termination": self.termination,
            "indicators": _round6(self.indicators), "config_hash": self.config_hash,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        agents = [AgentTrace.from_dict(a) for a in d.get("agents", [])]
        return cls(dt=d["dt"], seed=d.get("seed"), scenario=d.get("scenario", {}),
                   agents=agents, t=d.get("t", []), t_steps=d.get("t_steps", 0),
                   zone=d.get("zone"), termination=d.get("termination", ""),
                   indicators=d.get("indicators", {}),
                   config_hash=d.get("config_hash", ""))

    def save(self, path) -> None:
        path = FsPath(path)
        data = self.to_json().encode()
        if path.suffix == ".gz":
            with gzip.GzipFile(path, "wb", mtime=0) as fh:
                fh.write(data)
        else:
            path.write_bytes(data)

    @classmethod
    def load(cls, path) -> "RunRecord":
        path = FsPath(path)
        if path.suffix == ".gz":
            with gzip.open(path, "rb") as fh:
                data = fh.read()
        else:
            data = path.read_bytes()
        return cls.from_dict(json.loads(data))

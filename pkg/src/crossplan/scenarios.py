"""Scenario construction: analytic following/crossing setups and randomized
four-way junction geometries, plus the spec-file format used by the CLI."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .config import ExperimentConfig
from .geometry import Corridor, Path, build_path, interaction_zone
from .sim import (AgentState, FixedController, FixedManeuver,
                  PlannerController, ReactiveController, World)

ROAD_LENGTH = 80.0        # junction arm length from center [m]
TURN_TANGENT_MAX = 12.0   # fillet tangent length cap [m]


@dataclass
class AgentSetup:
    """One agent of a scenario: path, start state, and controller."""

    waypoints: list
    l0: float
    v0: float
    v_d: float
    controller: dict = field(default_factory=lambda: {"type": "planner"})
    role: str = "other"
    start_road: int | None = None
    goal_road: int | None = None


@dataclass
class ScenarioSpec:
    """JSON-compatible scenario description."""

    agents: list[AgentSetup]
    v_max: float
    seed: int | None = None
    roads: list | None = None          # road centerline waypoint arrays
    lane_widths: list | None = None
    compliant: bool | None = None
    kind: str = "custom"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        d["agents"] = [AgentSetup(**a) for a in d.get("agents", [])]
        return cls(**d)

    def save(self, path) -> None:
        FsPath(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "ScenarioSpec":
        return cls.from_dict(json.loads(FsPath(path).read_text()))


def _right_normal(dx: float, dy: float) -> tuple[float, float]:
    return dy, -dx


def _line_intersection(p1, d1, p2, d2):
    det = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(det) < 1e-12:
        return None
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / det
    return (p1[0] + t * d1[0], p1[1] + t * d1[1])


def lane_through_junction(road_in, road_out, width_in: float, width_out: float) -> list:
    """Waypoints of a lane from the outer end of ``road_in`` to the outer end
    of ``road_out``, offset to the right of travel and joined with a circular
    fillet tangent to both lane lines."""
    a0 = np.asarray(road_in[0], dtype=float)
    center = np.asarray(road_in[-1], dtype=float)
    b1 = np.asarray(road_out[0], dtype=float)

    d_in = center - a0
    d_in = d_in / np.linalg.norm(d_in)
    d_out = b1 - center
    d_out = d_out / np.linalg.norm(d_out)
    off_in = 0.5 * width_in * np.asarray(_right_normal(*d_in))
    off_out = 0.5 * width_out * np.asarray(_right_normal(*d_out))

    in_start = a0 + off_in
    in_end = center + off_in
    out_start = center + off_out
    out_end = b1 + off_out

    turn = math.atan2(d_out[1], d_out[0]) - math.atan2(d_in[1], d_in[0])
    turn = (turn + math.pi) % (2.0 * math.pi) - math.pi
    if abs(turn) < 0.02:
        return [in_start.tolist(), in_end.tolist(), out_start.tolist(), out_end.tolist()]

    p = _line_intersection(in_start, d_in, out_start, d_out)
    if p is None:
        return [in_start.tolist(), in_end.tolist(), out_start.tolist(), out_end.tolist()]
    p = np.asarray(p)
    avail_in = np.linalg.norm(p - in_start)
    avail_out = np.linalg.norm(out_end - p)
    t_len = min(TURN_TANGENT_MAX, 0.45 * min(avail_in, avail_out))
    radius = t_len / math.tan(0.5 * abs(turn))

    t1 = p - t_len * d_in
    t2 = p + t_len * d_out
    n_in = np.asarray(_right_normal(*d_in))
    arc_center = t1 + radius * n_in * (1.0 if turn < 0 else -1.0)
    ang1 = math.atan2(t1[1] - arc_center[1], t1[0] - arc_center[0])
    ang2 = math.atan2(t2[1] - arc_center[1], t2[0] - arc_center[0])
    sweep = ang2 - ang1
    if turn < 0 < sweep:
        sweep -= 2.0 * math.pi
    elif turn > 0 > sweep:
        sweep += 2.0 * math.pi
    n_arc = max(4, int(math.ceil(abs(sweep) * radius / 0.3)))
    arc = [(arc_center + radius * np.asarray([math.cos(ang1 + sweep * k / n_arc),
                                              math.sin(ang1 + sweep * k / n_arc)])).tolist()
           for k in range(n_arc + 1)]
    return [in_start.tolist()] + arc + [out_end.tolist()]


def build_world(spec: ScenarioSpec, cfg: ExperimentConfig, seed: int | None = None) -> World:
    """Instantiate agents and controllers from a scenario spec."""
    agents, controllers = [], []
    for setup in spec.agents:
        path = build_path(setup.waypoints, cfg.resample_step)
        agent = AgentState(path=path, l=setup.l0, v=setup.v0,
                           mass=cfg.vehicle_mass, length=cfg.vehicle_length,
                           width=cfg.vehicle_width, v_d=setup.v_d, role=setup.role)
        ctrl_spec = setup.controller
        kind = ctrl_spec.get("type", "planner")
        if kind == "planner":
            ctrl = PlannerController(cfg)
        elif kind == "fixed":
            ctrl = FixedController(FixedManeuver(ctrl_spec["v_f"], ctrl_spec["a_f"],
                                                 ctrl_spec.get("t_onset", 1.0),
                                                 ctrl_spec.get("duration", 3.0)))
        elif kind == "reactive":
            ctrl = ReactiveController(cfg, bool(ctrl_spec.get("compliant", True)))
        else:
            raise ValueError(f"unknown controller type: {kind!r}")
        agents.append(agent)
        controllers.append(ctrl)
    return World(agents, controllers, cfg, seed=seed if seed is not None else spec.seed,
                 scenario=spec.to_dict())


def following_scenario(variant: str, v_f2: float, a_f2: float,
                       d_0: float = 50.0, path_length: float = 700.0) -> ScenarioSpec:
    """Longitudinal pair on one straight lane. ``variant`` places the fixed
    other agent in front of or behind the ego."""
    waypoints = [[0.0, 0.0], [path_length, 0.0]]
    v_f1 = v_f2
    if variant == "front":
        ego_l0, other_l0 = 10.0, 10.0 + d_0
    elif variant == "back":
        ego_l0, other_l0 = 10.0 + d_0, 10.0
    else:
        raise ValueError("variant must be 'front' or 'back'")
    ego = AgentSetup(waypoints=waypoints, l0=ego_l0, v0=v_f1, v_d=v_f1,
                     controller={"type": "planner"}, role="ego")
    other = AgentSetup(waypoints=waypoints, l0=other_l0, v0=v_f2, v_d=v_f2,
                       controller={"type": "fixed", "v_f": v_f2, "a_f": a_f2},
                       role="other")
    return ScenarioSpec(agents=[ego, other], v_max=20.0, kind=f"following-{variant}")


def intersection_scenario(side: str, v_f2: float, a_f2: float,
                          cfg: ExperimentConfig, d_i: float = 40.0,
                          v_f1: float = 10.0) -> ScenarioSpec:
    """Perpendicular crossing: ego drives south to north, the scripted other
    approaches the crossing from the ego's right (east) or left (west)."""
    ego_wp = [[0.0, -80.0], [0.0, 400.0]]
    if side == "right":
        other_wp = [[80.0, 0.0], [-400.0, 0.0]]
    elif side == "left":
        other_wp = [[-80.0, 0.0], [400.0, 0.0]]
    else:
        raise ValueError("side must be 'right' or 'left'")

    ego_path = build_path(ego_wp, cfg.resample_step)
    other_path = build_path(other_wp, cfg.resample_step)
    zone = interaction_zone(Corridor(ego_path, cfg.corridor_width),
                            Corridor(other_path, cfg.corridor_width))
    ego_l0 = max(zone.bounds_1[0] - d_i, 0.0)
    other_l0 = max(zone.bounds_2[0] - d_i, 0.0)

    ego = AgentSetup(waypoints=ego_wp, l0=ego_l0, v0=v_f1, v_d=v_f1,
                     controller={"type": "planner"}, role="ego")
    other = AgentSetup(waypoints=other_wp, l0=other_l0, v0=v_f2, v_d=v_f2,
                       controller={"type": "fixed", "v_f": v_f2, "a_f": a_f2},
                       role="other")
    return ScenarioSpec(agents=[ego, other], v_max=20.0, kind=f"intersection-{side}")


def randomize_scenario(seed: int, cfg: ExperimentConfig,
                       d_i: float = 45.0, max_tries: int = 100) -> ScenarioSpec:
    """Random four-way junction: jittered road angles, random lane widths,
    distinct start roads with intersecting paths, sampled start/desired
    speeds, and a 50% priority-compliance draw for the other agent."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        angles = [math.radians(base + rng.uniform(-25.0, 25.0))
                  for base in (0.0, 90.0, 180.0, 270.0)]
        widths = [rng.uniform(2.75, 3.5) for _ in range(4)]
        roads = [[[ROAD_LENGTH * math.cos(a), ROAD_LENGTH * math.sin(a)], [0.0, 0.0]]
                 for a in angles]

        start_ego, start_other = rng.choice(4, size=2, replace=False)
        goal_ego = int(rng.choice([i for i in range(4) if i != start_ego]))
        goal_other = int(rng.choice([i for i in range(4) if i != start_other]))
        start_ego, start_other = int(start_ego), int(start_other)

        wp_ego = lane_through_junction(roads[start_ego], roads[goal_ego],
                                       widths[start_ego], widths[goal_ego])
        wp_other = lane_through_junction(roads[start_other], roads[goal_other],
                                         widths[start_other], widths[goal_other])
        path_ego = build_path(wp_ego, cfg.resample_step)
        path_other = build_path(wp_other, cfg.resample_step)
        zone = interaction_zone(Corridor(path_ego, cfg.corridor_width),
                                Corridor(path_other, cfg.corridor_width))
        if not zone.exists:
            continue
        ego_l0 = zone.bounds_1[0] - d_i
        other_l0 = zone.bounds_2[0] - d_i
        if ego_l0 < 0.0 or other_l0 < 0.0:
            continue

        v_f1 = rng.uniform(3.0, 8.5)
        v_f2 = rng.uniform(3.0, 8.5)
        v_d2 = rng.uniform(3.0, 10.0)
        compliant = bool(rng.random() < 0.5)
        ego = AgentSetup(waypoints=wp_ego, l0=float(ego_l0), v0=float(v_f1),
                         v_d=8.5, controller={"type": "planner"}, role="ego",
                         start_road=start_ego, goal_road=goal_ego)
        other = AgentSetup(waypoints=wp_other, l0=float(other_l0), v0=float(v_f2),
                           v_d=float(v_d2),
                           controller={"type": "reactive", "compliant": compliant},
                           role="other", start_road=start_other, goal_road=goal_other)
        return ScenarioSpec(agents=[ego, other], v_max=8.5, seed=seed,
                            roads=roads, lane_widths=widths,
                            compliant=compliant, kind="randomized")
    raise RuntimeError(f"no intersecting scenario found for seed {seed} "
                       f"after {max_tries} tries")

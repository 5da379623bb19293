"""Closed-loop two-agent simulation.

The ego agent runs the full predictive planner; the other agent either
replays a fixed maneuver or reacts through a 21-profile selector with a
priority-compliance switch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, priority
from .config import ExperimentConfig
from .geometry import (Corridor, InteractionZone, Path, boxes_overlap,
                       footprint_corners, interaction_zone)
from .planner import (Candidate, HysteresisState, PlanningScene,
                      build_fixed_candidates, optimize, select)
from .profile import (SampledProfile, SnakeParams, lag_minimum,
                      shift_for_next_cycle)
from .records import AgentTrace, RunRecord
from .risk import AgentPrediction


@dataclass(frozen=True)
class FixedManeuver:
    """Scripted other behavior: constant start speed, then a fixed
    acceleration applied for a set duration."""

    v_f: float
    a_f: float
    t_onset: float = 1.0
    duration: float = 3.0


def fixed_agent_velocity(m: FixedManeuver, t: float) -> float:
    """Velocity of the scripted agent at time ``t`` (clipped at standstill)."""
    dt_acc = min(max(t - m.t_onset, 0.0), m.duration)
    return max(0.0, m.v_f + m.a_f * dt_acc)


@dataclass
class AgentState:
    """Kinematic state of one agent bound to its path."""

    path: Path
    l: float
    v: float
    a: float = 0.0
    r: float = 0.0
    mass: float = 1500.0
    length: float = 4.5
    width: float = 1.8
    v_d: float = 10.0
    role: str = "other"
    finished: bool = False

    @property
    def half_extent(self) -> float:
        # Mean of half-length and half-width: exact contact radius for
        # perpendicular impacts, slightly less than the same-lane bumper
        # distance (cushioned by the position uncertainty).
        return 0.25 * (self.length + self.width)

    def pose(self) -> tuple[float, float, float]:
        x, y = self.path.position(self.l)
        return float(x), float(y), float(self.path.heading_at(self.l))

    def footprint(self) -> np.ndarray:
        x, y, h = self.pose()
        return footprint_corners(x, y, h, self.length, self.width)


def profile_advance(v, ds: float, dt: float) -> float:
    """Distance traveled over [0, dt] along a sampled velocity curve
    (trapezoidal, exact for piecewise-linear v on the grid)."""
    v = np.asarray(v)
    k = min(int(math.floor(dt / ds + 1e-9)), len(v) - 1)
    dist = float(np.sum(0.5 * ds * (v[:k] + v[1:k + 1])))
    rem = dt - k * ds
    if rem > 1e-12 and k + 1 < len(v):
        f = rem / ds
        v_end = v[k] + (v[k + 1] - v[k]) * f
        dist += 0.5 * rem * (v[k] + v_end)
    return dist


class PlannerController:
    """Full predictive planning: priority classification, conditioned
    prediction of others, snake optimization, fixed fallbacks, hysteresis."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.warm: SnakeParams | None = None
        self.hysteresis = HysteresisState()
        self.last_relations: dict[int, priority.PriorityRelation] = {}
        self.last_candidate = "optimized"
        self._resume_hold = 0.0

    def plan(self, world: "World", idx: int) -> SampledProfile:
        cfg = self.cfg
        me = world.agents[idx]
        n = cfg.grid_points
        grid = np.arange(n) * cfg.ds
        opt_cfg = cfg.optimizer_for_ego()
        # Measured acceleration can spike across candidate switches; the
        # actuation model only makes sense within the physical bounds.
        a0 = min(max(me.a, opt_cfg.a_min), opt_cfg.a_max)

        others = []
        self.last_relations = {}
        for j, other in enumerate(world.agents):
            if j == idx or other.finished:
                continue
            zone = world.zone(idx, j)
            rel = priority.classify((me.path, me.l), (other.path, other.l),
                                    zone, cfg.convention)
            self.last_relations[j] = rel
            v_other = priority.predict_other(other.v, rel, cfg.pattern, cfg.v_max,
                                             other.path, other.l, cfg.rates.a_y_max,
                                             n, cfg.ds)
            pred = AgentPrediction.from_velocity(other.path, other.l, v_other,
                                                 cfg.ds, other.mass, other.half_extent)
            alpha = priority.awareness(grid, rel, cfg.awareness)
            others.append((pred, alpha, zone))

        weights = replace(cfg.weights, v_d=me.v_d)
        scene = PlanningScene.assemble(
            ds=cfg.ds, n=n, path=me.path, l0=me.l, v0=me.v, a0=a0,
            mass=me.mass, half_extent=me.half_extent,
            rates=cfg.rates, weights=weights, others=others,
            sigma_smooth=cfg.sigma_smooth)

        if self.warm is None:
            self.warm = SnakeParams(v_p=(me.v,) * 4,
                                    lag=lag_minimum(a0, opt_cfg.a_min, opt_cfg.a_max),
                                    v0=me.v, a0=a0)
        else:
            self.warm = shift_for_next_cycle(self.warm, cfg.sim.dt, me.v, a0)

        params, f_opt, risk_opt, info = optimize(self.warm, scene, opt_cfg)

        candidates: dict[str, Candidate] = {}
        fixed = build_fixed_candidates(me.v, a0, opt_cfg, cfg.s_h, cfg.ds,
                                       cfg.sigma_smooth)
        for cand in fixed:
            risk, util, comf = scene.evaluate_curve(cand.profile.v)
            cand.fitness = risk - util - comf
            cand.risk = risk
            candidates[cand.name] = cand

        if not info.get("degenerate"):
            # The warm start can track a ridge between the yield and pass
            # basins; when a fixed trajectory beats it, re-seed the search
            # from that basin.
            best_fixed = min(fixed, key=lambda c: c.fitness)
            if best_fixed.fitness < f_opt:
                seed = SnakeParams(
                    v_p=tuple(float(np.interp(k * self.warm.s_l,
                                              best_fixed.profile.grid,
                                              best_fixed.profile.v))
                              for k in range(1, 5)),
                    lag=lag_minimum(a0, opt_cfg.a_min, opt_cfg.a_max),
                    v0=me.v, a0=a0)
                params2, f2, risk2, info2 = optimize(seed, scene, opt_cfg)
                if f2 < f_opt:
                    params, f_opt, risk_opt = params2, f2, risk2
            self.warm = params
            prof = SampledProfile(cfg.ds, scene.candidate_curve(params))
            prof = SampledProfile(cfg.ds, prof.v,
                                  np.asarray(_kernels.derivative(prof.v, cfg.ds)),
                                  np.asarray(_kernels.derivative(
                                      _kernels.derivative(prof.v, cfg.ds), cfg.ds)))
            risk, util, comf = scene.evaluate_curve(prof.v)
            candidates["optimized"] = Candidate("optimized", prof,
                                                risk - util - comf, risk, params)

        chosen, self.hysteresis = select(candidates, self.hysteresis,
                                         cfg.hysteresis, cfg.sim.dt)
        # Safety override: at critical risk the hysteresis hold is waived
        # and the safest candidate executes immediately.
        active_risk = candidates[chosen].risk
        if active_risk >= cfg.hysteresis.emergency_risk:
            safest = min(candidates, key=lambda name: candidates[name].risk)
            if candidates[safest].risk < cfg.hysteresis.rel_factor * active_risk:
                chosen = safest
                self.hysteresis = HysteresisState(safest, None, 0.0)
        # Resume rule: risk-only switching can never climb back out of a
        # near-zero-risk fallback, so return to the optimized trajectory
        # once it has stayed below the risk floor for the hold duration.
        if chosen != "optimized" and "optimized" in candidates:
            if candidates["optimized"].risk <= cfg.hysteresis.resume_risk:
                self._resume_hold += cfg.sim.dt
            else:
                self._resume_hold = 0.0
            if self._resume_hold >= cfg.hysteresis.hold_duration - 1e-9:
                chosen = "optimized"
                self.hysteresis = HysteresisState("optimized", None, 0.0)
                self._resume_hold = 0.0
        else:
            self._resume_hold = 0.0
        self.last_candidate = chosen
        return candidates[chosen].profile


class FixedController:
    """Plays back a :class:`FixedManeuver` regardless of the ego."""

    def __init__(self, maneuver: FixedManeuver):
        self.maneuver = maneuver
        self.last_candidate = "fixed"
        self.last_relations: dict[int, priority.PriorityRelation] = {}

    def plan(self, world: "World", idx: int) -> SampledProfile:
        cfg = world.cfg
        t0 = world.t
        v = np.array([fixed_agent_velocity(self.maneuver, t0 + k * cfg.ds)
                      for k in range(cfg.grid_points)])
        return SampledProfile(cfg.ds, v)


class ReactiveController:
    """Selects the best of 21 constant-acceleration profiles under the same
    cost function; when non-compliant it ignores the ego beyond the
    attention distance."""

    def __init__(self, cfg: ExperimentConfig, compliant: bool):
        self.cfg = cfg
        self.compliant = compliant
        self.last_candidate = ""
        self.last_relations: dict[int, priority.PriorityRelation] = {}

    def plan(self, world: "World", idx: int) -> SampledProfile:
        cfg = self.cfg
        me = world.agents[idx]
        n = cfg.grid_points
        grid = np.arange(n) * cfg.ds

        others = []
        for j, other in enumerate(world.agents):
            if j == idx or other.finished:
                continue
            d2 = math.dist(me.pose()[:2], other.pose()[:2])
            if not self.compliant and d2 > cfg.reactive.attention_distance:
                continue
            v_const = np.full(n, other.v)
            pred = AgentPrediction.from_velocity(other.path, other.l, v_const,
                                                 cfg.ds, other.mass, other.half_extent)
            others.append((pred, np.ones(n), world.zone(idx, j)))

        rates = replace(cfg.rates, tau0=cfg.reactive.tau0)
        weights = replace(cfg.weights, v_d=me.v_d)
        scene = PlanningScene.assemble(
            ds=cfg.ds, n=n, path=me.path, l0=me.l, v0=me.v, a0=me.a,
            mass=me.mass, half_extent=me.half_extent,
            rates=rates, weights=weights, others=others,
            sigma_smooth=cfg.sigma_smooth)

        opt_cfg = cfg.optimizer_for_ego()
        accels = np.linspace(opt_cfg.a_min, opt_cfg.a_max, cfg.reactive.n_profiles)
        s = grid
        best = None
        for k, acc in enumerate(accels):
            v = np.clip(me.v + acc * s, 0.0, cfg.v_max)
            risk, util, comf = scene.evaluate_curve(v)
            f = risk - util - comf
            if best is None or f < best[0]:
                best = (f, k, v)
        self.last_candidate = f"a={accels[best[1]]:+.2f}"
        return SampledProfile(cfg.ds, best[2])


class World:
    """Sequential two-phase loop: all agents plan against the frozen
    snapshot, then all advance."""

    def __init__(self, agents: list[AgentState], controllers: list,
                 cfg: ExperimentConfig, seed: int | None = None,
                 scenario: dict | None = None):
        self.agents = agents
        self.controllers = controllers
        self.cfg = cfg
        self.t = 0.0
        self.seed = seed
        self.scenario = scenario or {}
        self._zones: dict[tuple[int, int], InteractionZone] = {}
        self.collision = False
        self.record = self._init_record()

    def _init_record(self) -> RunRecord:
        traces = [AgentTrace(role=a.role, length=a.length, width=a.width,
                             mass=a.mass) for a in self.agents]
        return RunRecord(dt=self.cfg.sim.dt, seed=self.seed,
                         scenario=self.scenario, agents=traces)

    def zone(self, i: int, j: int) -> InteractionZone:
        """Interaction zone between agents i and j (full-path corridors,
        cached; bounds_1 belongs to agent i)."""
        key = (i, j)
        if key not in self._zones:
            ci = Corridor(self.agents[i].path, self.cfg.corridor_width)
            cj = Corridor(self.agents[j].path, self.cfg.corridor_width)
            z = interaction_zone(ci, cj)
            self._zones[key] = z
            self._zones[(j, i)] = z.swapped()
        return self._zones[key]

    def _record_row(self):
        rec = self.record
        rec.t.append(round(self.t, 6))
        for agent, ctrl, trace in zip(self.agents, self.controllers, rec.agents):
            x, y, _ = agent.pose()
            trace.append(l=agent.l, x=x, y=y, v=agent.v, a=agent.a, r=agent.r,
                         candidate=getattr(ctrl, "last_candidate", ""),
                         relation=self._relation_label(ctrl))
        rec.t_steps = len(rec.t)

    def _relation_label(self, ctrl) -> str:
        rels = getattr(ctrl, "last_relations", {})
        for rel in rels.values():
            return rel.kind.value
        return ""

    def step(self):
        """One simulation step: plan on the frozen snapshot, then advance."""
        dt = self.cfg.sim.dt
        plans = []
        for i, (agent, ctrl) in enumerate(zip(self.agents, self.controllers)):
            if agent.finished or ctrl is None:
                plans.append(None)
            else:
                plans.append(ctrl.plan(self, i))
        self._record_row()
        for agent, plan in zip(self.agents, plans):
            if plan is None:
                continue
            # Track the plan's velocity *change* from the measured state so
            # a profile whose v(0) deviates from the actual velocity (lag
            # blending) cannot inject the offset into the executed state.
            v_off = agent.v - float(plan.v[0])
            dist = profile_advance(plan.v, plan.ds, dt) + v_off * dt
            l_new = agent.l + max(dist, 0.0)
            v_new = max(0.0, plan.at(dt)[0] + v_off)
            if l_new >= agent.path.length - 1e-9:
                l_new = agent.path.length
                agent.finished = True
            a_new = (v_new - agent.v) / dt
            agent.r = (a_new - agent.a) / dt
            agent.a = a_new
            agent.v = v_new
            agent.l = l_new
        self.t += dt
        self._check_collision()

    def _check_collision(self):
        active = [a for a in self.agents if not a.finished]
        for i in range(len(active)):
            for j in range(i + 1, len(active)):
                if boxes_overlap(active[i].footprint(), active[j].footprint()):
                    self.collision = True
                    return

    def run(self) -> RunRecord:
        """Run to termination: collision, all finished, conflict cleared
        (+ grace), or timeout."""
        sim = self.cfg.sim
        cleared_at = None
        while True:
            self.step()
            if self.collision:
                self.record.termination = "collision"
                break
            if all(a.finished for a in self.agents):
                self.record.termination = "finished"
                break
            if len(self.agents) == 2:
                z = self.zone(0, 1)
                if z.exists and not (min(z.bounds_1[1] - z.bounds_1[0],
                                         z.bounds_2[1] - z.bounds_2[0]) >= 10.0):
                    past = (self.agents[0].l > z.bounds_1[1]
                            and self.agents[1].l > z.bounds_2[1])
                    if past and cleared_at is None:
                        cleared_at = self.t
                    if cleared_at is not None and self.t - cleared_at >= sim.grace:
                        self.record.termination = "cleared"
                        break
            if self.t >= sim.timeout - 1e-9:
                self.record.termination = "timeout"
                break
        self._record_row()
        z = self.zone(0, 1) if len(self.agents) == 2 else InteractionZone(False)
        self.record.zone = {"exists": z.exists, "bounds_1": list(z.bounds_1),
                            "bounds_2": list(z.bounds_2)}
        return self.record

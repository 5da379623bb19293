"""Per-step ego decision: derivative-free snake optimization with soft
constraints, fixed fallback candidates, and hysteresis-guarded selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .geometry import InteractionZone, Path
from .profile import (GRID_STEP, HORIZON, SIGMA_SMOOTH, SampledProfile,
                      SnakeParams, lag_minimum, smooth)
from .risk import AgentPrediction, CostWeights, RateParams


@dataclass(frozen=True)
class OptimizerConfig:
    """Soft bounds and search settings for the snake optimization."""

    v_max: float = 20.0
    a_min: float = -8.0
    a_max: float = 3.0
    max_cycles: int = 20
    penalty_weight: float = 2e3
    f_tol: float = 1e-3
    bracket_v: float = 1.5       # line-search half width for end velocities [m/s]
    bracket_lag: float = 0.3     # line-search half width for the lag [s]
    max_vertex_step: float = 2.5  # parabola jump cap, in bracket units


@dataclass(frozen=True)
class HysteresisConfig:
    rel_factor: float = 0.8       # new risk must be <= rel_factor * active risk
    abs_margin: float = 10000.0   # ... and <= active risk - abs_margin
    hold_duration: float = 0.5    # [s] of continuous qualification before switching
    # Risk-only switching cannot leave a low-risk fallback again (risk is
    # bounded below by zero), so the planner returns to the optimized
    # trajectory once its risk stays below this floor for the hold duration.
    resume_risk: float = 5000.0
    # Above this active risk the hold period is waived and the planner
    # jumps to the lowest-risk candidate at once (late full-brake rescue).
    emergency_risk: float = 40000.0


@dataclass(frozen=True)
class HysteresisState:
    active: str = "optimized"
    pending: str | None = None
    hold: float = 0.0


@dataclass
class Candidate:
    name: str
    profile: SampledProfile
    fitness: float = math.nan
    risk: float = math.nan
    params: SnakeParams | None = None


@dataclass
class PlanningScene:
    """Frozen per-step inputs for candidate evaluation.

    Other agents are baked into per-sample arrays so every candidate is
    scored against the identical predicted scene.
    """

    ds: float
    n: int
    path: Path
    l0: float
    v0: float
    a0: float
    mass: float
    half_extent: float
    rates: RateParams
    weights: CostWeights
    sigma_smooth: float = SIGMA_SMOOTH
    ox: np.ndarray = field(default=None)
    oy: np.ndarray = field(default=None)
    ovx: np.ndarray = field(default=None)
    ovy: np.ndarray = field(default=None)
    ol: np.ndarray = field(default=None)
    alpha: np.ndarray = field(default=None)
    omass: np.ndarray = field(default=None)
    ext_sum: np.ndarray = field(default=None)
    has_zone: np.ndarray = field(default=None)
    exit_ego: np.ndarray = field(default=None)
    exit_other: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ox is None:
            for name in ("ox", "oy", "ovx", "ovy", "ol", "alpha"):
                setattr(self, name, np.zeros((0, self.n)))
            self.omass = np.zeros(0)
            self.ext_sum = np.zeros(0)
            self.has_zone = np.zeros(0, dtype=np.uint8)
            self.exit_ego = np.zeros(0)
            self.exit_other = np.zeros(0)

    @classmethod
    def assemble(cls, *, ds: float, n: int, path: Path, l0: float, v0: float,
                 a0: float, mass: float, half_extent: float,
                 rates: RateParams, weights: CostWeights,
                 others: list[tuple[AgentPrediction, np.ndarray, InteractionZone | None]] = (),
                 sigma_smooth: float = SIGMA_SMOOTH) -> "PlanningScene":
        """Bundle predicted others (prediction, awareness, zone) into arrays."""
        j = len(others)
        scene = cls(ds=ds, n=n, path=path, l0=l0, v0=v0, a0=a0, mass=mass,
                    half_extent=half_extent, rates=rates, weights=weights,
                    sigma_smooth=sigma_smooth)
        if j == 0:
            return scene
        scene.ox = np.empty((j, n))
        scene.oy = np.empty((j, n))
        scene.ovx = np.empty((j, n))
        scene.ovy = np.empty((j, n))
        scene.ol = np.empty((j, n))
        scene.alpha = np.empty((j, n))
        scene.omass = np.empty(j)
        scene.ext_sum = np.empty(j)
        scene.has_zone = np.zeros(j, dtype=np.uint8)
        scene.exit_ego = np.zeros(j)
        scene.exit_other = np.zeros(j)
        for i, (pred, alpha, zone) in enumerate(others):
            scene.ox[i] = pred.xy[:, 0]
            scene.oy[i] = pred.xy[:, 1]
            scene.ovx[i] = pred.vel[:, 0]
            scene.ovy[i] = pred.vel[:, 1]
            scene.ol[i] = pred.l
            scene.alpha[i] = alpha
            scene.omass[i] = pred.mass
            scene.ext_sum[i] = half_extent + pred.half_extent
            if zone is not None and zone.exists:
                scene.has_zone[i] = 1
                scene.exit_ego[i] = zone.bounds_1[1]
                scene.exit_other[i] = zone.bounds_2[1]
        return scene

    def evaluate_curve(self, v) -> tuple[float, float, float]:
        """(risk, utility, comfort) of one smoothed ego velocity curve."""
        step, px, py, ph, pk = self.path.tables()
        w, p = self.weights, self.rates
        return _kernels.evaluate_profile(
            np.asarray(v, dtype=float), self.ds, self.l0,
            step, px, py, ph, pk, self.mass,
            self.ox, self.oy, self.ovx, self.ovy, self.ol, self.alpha,
            self.omass, self.ext_sum, self.has_zone, self.exit_ego, self.exit_other,
            p.tau0, p.tau_max_inv, p.sigma_pos0, p.sigma_pos_growth,
            p.a_y_max, p.sigma_ay, p.damage_offset,
            w.b_t, w.b_d, w.b_c, w.b_j, w.v_d, w.deviation_sign)

    def candidate_curve(self, params: SnakeParams) -> np.ndarray:
        raw = _kernels.snake_velocity(self.n, self.ds, params.v0, params.a0,
                                      params.v_p, params.lag, params.offset, params.s_l)
        return np.asarray(_kernels.gaussian_smooth(raw, self.ds, self.sigma_smooth))


def constraint_penalty(params: SnakeParams, cfg: OptimizerConfig) -> float:
    """Quadratic soft-constraint penalty: velocity bounds, minimal lag, and
    segment-acceleration bounds. Zero-valued and zero-gradient at the bounds."""
    pen = 0.0
    lag_min = lag_minimum(params.a0, cfg.a_min, cfg.a_max)
    pen += max(0.0, lag_min - params.lag) ** 2
    prev = params.v0
    for vp in params.v_p:
        pen += max(0.0, vp - cfg.v_max) ** 2
        pen += max(0.0, -vp) ** 2
        a_seg = (vp - prev) / params.s_l
        pen += max(0.0, a_seg - cfg.a_max) ** 2
        pen += max(0.0, cfg.a_min - a_seg) ** 2
        prev = vp
    return cfg.penalty_weight * pen


def penalized_fitness(params: SnakeParams, scene: PlanningScene,
                      cfg: OptimizerConfig) -> tuple[float, float]:
    """(penalized fitness, risk) of one snake parameter set."""
    v = scene.candidate_curve(params)
    risk, util, comf = scene.evaluate_curve(v)
    return risk - util - comf + constraint_penalty(params, cfg), risk


def _step_limit(direction: np.ndarray, brackets: np.ndarray) -> float:
    ratio = np.abs(direction) / brackets
    top = ratio.max()
    return 1.0 / top if top > 0.0 else 0.0


def powell_minimize(fn, x0: np.ndarray, brackets: np.ndarray,
                    max_cycles: int = 20, f_tol: float = 1e-3,
                    max_vertex_step: float = 4.0) -> tuple[np.ndarray, float, dict]:
    """Direction-set minimization with three-point parabolic line steps.

    Per direction, evaluates the bracket endpoints, jumps to the fitted
    parabola vertex when it is convex, and keeps the best point seen. After
    each cycle, the direction of largest decrease is replaced by the cycle's
    net displacement.
    """
    x = np.array(x0, dtype=float)
    f0 = fn(x)
    evals = 1
    dirs = np.eye(len(x))
    converged = False
    cycle = 0
    for cycle in range(1, max_cycles + 1):
        x_start = x.copy()
        f_start = f0
        decreases = np.zeros(len(dirs))
        for di, d in enumerate(dirs):
            h = _step_limit(d, brackets)
            if h == 0.0:
                continue
            fm = fn(x - h * d)
            fp = fn(x + h * d)
            evals += 2
            best_a, best_f = 0.0, f0
            if fm < best_f:
                best_a, best_f = -h, fm
            if fp < best_f:
                best_a, best_f = h, fp
            denom = fm - 2.0 * f0 + fp
            if denom > 1e-300:
                a_v = 0.5 * h * (fm - fp) / denom
                a_v = float(np.clip(a_v, -max_vertex_step * h, max_vertex_step * h))
                fv = fn(x + a_v * d)
                evals += 1
                if fv < best_f:
                    best_a, best_f = a_v, fv
            if best_a != 0.0:
                x = x + best_a * d
                decreases[di] = f0 - best_f
                f0 = best_f
        net = x - x_start
        norm = np.linalg.norm(net / brackets)
        if norm > 1e-12:
            dirs[int(np.argmax(decreases))] = net / norm
        if f_start - f0 < f_tol:
            converged = True
            break
    return x, f0, {"cycles": cycle, "evals": evals, "converged": converged}


def optimize(start: SnakeParams, scene: PlanningScene,
             cfg: OptimizerConfig) -> tuple[SnakeParams, float, float, dict]:
    """Optimize the snake decision variables against the frozen scene.

    Returns (params, penalized fitness, risk, info). A non-finite fitness at
    the start point skips the search and flags the diagnostic.
    """
    f_start, _ = penalized_fitness(start, scene, cfg)
    if not np.isfinite(f_start):
        return start, f_start, math.inf, {"cycles": 0, "evals": 1, "converged": False,
                                          "degenerate": True}

    def fn(theta):
        return penalized_fitness(start.with_theta(theta), scene, cfg)[0]

    brackets = np.array([cfg.bracket_v] * 4 + [cfg.bracket_lag])
    theta, f_val, info = powell_minimize(fn, start.theta(), brackets,
                                         cfg.max_cycles, cfg.f_tol, cfg.max_vertex_step)
    params = start.with_theta(theta)
    _, risk = penalized_fitness(params, scene, cfg)
    info["degenerate"] = False
    return params, f_val, risk, info


def build_fixed_candidates(v0: float, a0: float, cfg: OptimizerConfig,
                           s_h: float = HORIZON, ds: float = GRID_STEP,
                           sigma: float = SIGMA_SMOOTH) -> list[Candidate]:
    """Constant-velocity, emergency-stop, and full-acceleration fallbacks,
    lag-blended and smoothed the same way as the snakes."""
    n = int(round(s_h / ds)) + 1
    s = np.arange(n) * ds

    def finish(name: str, raw: np.ndarray, implied_a: float) -> Candidate:
        lag = lag_minimum(implied_a, cfg.a_min, cfg.a_max)
        v = raw.copy()
        if lag > 0.0:
            m = s <= lag
            v[m] += (lag - s[m]) * a0
        prof = smooth(SampledProfile(ds, v), sigma)
        np.clip(prof.v, 0.0, None, out=prof.v)
        return Candidate(name, prof)

    return [
        finish("constant", np.full(n, v0), 0.0),
        finish("stop", np.maximum(v0 + cfg.a_min * s, 0.0), cfg.a_min),
        finish("accel", np.minimum(v0 + cfg.a_max * s, max(cfg.v_max, v0)), cfg.a_max),
    ]


def select(candidates: dict[str, Candidate], state: HysteresisState,
           cfg: HysteresisConfig, dt: float) -> tuple[str, HysteresisState]:
    """Hysteresis selection: switch only to a candidate whose risk has been
    relatively and absolutely below the active one for the hold duration."""
    active = state.active if state.active in candidates else "optimized"
    r_active = candidates[active].risk
    qualifying = {name: c for name, c in candidates.items()
                  if name != active
                  and c.risk <= cfg.rel_factor * r_active
                  and c.risk <= r_active - cfg.abs_margin}
    if not qualifying:
        return active, HysteresisState(active, None, 0.0)

    if state.pending in qualifying:
        hold = state.hold + dt
        pending = state.pending
    else:
        pending = min(qualifying, key=lambda name: qualifying[name].fitness)
        hold = dt
    if hold >= cfg.hold_duration - 1e-9:
        best = min(qualifying, key=lambda name: qualifying[name].fitness)
        return best, HysteresisState(best, None, 0.0)
    return active, HysteresisState(active, pending, hold)

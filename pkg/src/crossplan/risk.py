"""Predictive scene evaluation: event rates, damages, survival, and the
scalar fitness (risk minus utility minus comfort).

These are the reference (NumPy, op-by-op) implementations; the planner's
inner loop uses the fused kernel in :mod:`crossplan._kernels`, which is
tested against this module.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import InteractionZone, Path

_EXP_CLIP = 60.0


@dataclass(frozen=True)
class RateParams:
    """Event-rate and damage model constants."""

    tau0: float = 0.05               # escape rate [1/s]
    tau_max_inv: float = 2.0         # peak critical rate [1/s]
    sigma_pos0: float = 1.5          # position uncertainty at s=0 [m]
    sigma_pos_growth: float = 0.15   # uncertainty growth [m/s]
    a_y_max: float = 3.0             # lateral acceleration limit [m/s^2]
    sigma_ay: float = 0.25           # curve-rate softness [m/s^2]
    damage_offset: float = 1e5       # D_0: base cost of any collision event


@dataclass(frozen=True)
class CostWeights:
    """Driver-specific cost weights; ``deviation_sign=-1`` makes deviation
    from the desired velocity a penalty inside the utility.

    Damages carry the kinetic-energy scale (J for typical car masses), so
    the per-unit benefit weights sit in the hundreds to compete."""

    b_t: float = 100.0
    b_d: float = 400.0
    b_c: float = 300.0
    b_j: float = 200.0
    v_d: float = 10.0
    deviation_sign: float = -1.0


@dataclass
class AgentPrediction:
    """Joint future of one agent: path-bound positions and velocity vectors
    on the prediction grid."""

    path: Path
    l: np.ndarray            # (N,) arc positions [m]
    v: np.ndarray            # (N,) speeds [m/s]
    mass: float
    half_extent: float       # circumscribed footprint radius [m]
    xy: np.ndarray = field(init=False)      # (N, 2)
    vel: np.ndarray = field(init=False)     # (N, 2)

    def __post_init__(self):
        step, px, py, ph, _ = self.path.tables()
        x, y, hh, _ = _kernels.path_state(self.l, step, px, py, ph, self.path.curvature)
        self.xy = np.column_stack([np.asarray(x), np.asarray(y)])
        hh = np.asarray(hh)
        self.vel = np.column_stack([self.v * np.cos(hh), self.v * np.sin(hh)])

    @classmethod
    def from_velocity(cls, path: Path, l0: float, v, ds: float,
                      mass: float, half_extent: float) -> "AgentPrediction":
        v = np.asarray(v, dtype=float)
        l = l0 + np.asarray(_kernels.cumtrapz(v, ds))
        np.clip(l, 0.0, path.length, out=l)
        return cls(path, l, v, mass, half_extent)


def collision_rate(ego: AgentPrediction, other: AgentPrediction,
                   p: RateParams, ds: float) -> np.ndarray:
    """Gaussian-of-gap surrogate collision rate over the grid."""
    s = np.arange(len(ego.v)) * ds
    dist = np.hypot(*(other.xy - ego.xy).T)
    gap = np.maximum(dist - (ego.half_extent + other.half_extent), 0.0)
    sig = p.sigma_pos0 + p.sigma_pos_growth * s
    return p.tau_max_inv * np.exp(-0.5 * (gap / sig) ** 2)


def curve_rate(ego: AgentPrediction, p: RateParams) -> np.ndarray:
    """Rate of losing control, logistic in the lateral acceleration."""
    a_y = ego.v ** 2 * np.abs(ego.path.curvature_at(ego.l))
    z = np.clip((a_y - p.a_y_max) / p.sigma_ay, -_EXP_CLIP, _EXP_CLIP)
    return p.tau_max_inv / (1.0 + np.exp(-z))


def crash_impossible_mask(ego: AgentPrediction, other: AgentPrediction,
                          zone: InteractionZone | None) -> np.ndarray:
    """True where a collision is ruled out: no interaction zone at all, or
    both agents already past their zone exits."""
    if zone is None or not zone.exists:
        return np.ones(len(ego.l), dtype=bool)
    return (ego.l > zone.bounds_1[1]) & (other.l > zone.bounds_2[1])


def damages(ego: AgentPrediction, other: AgentPrediction, damage_offset: float,
            crash_impossible: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Collision and curve damages from the conveyed kinetic energy."""
    mu = ego.mass * other.mass / (2.0 * (ego.mass + other.mass))
    rel = other.vel - ego.vel
    d_coll = damage_offset + mu * (rel ** 2).sum(axis=1)
    if crash_impossible is not None:
        d_coll = np.where(crash_impossible, 0.0, d_coll)
    d_curv = damage_offset + 0.5 * ego.mass * (ego.vel ** 2).sum(axis=1)
    return d_coll, d_curv


def survival(total_rate, ds: float) -> np.ndarray:
    """S(s) = exp(-integral of the total event rate), trapezoidal."""
    return np.exp(-np.asarray(_kernels.cumtrapz(np.asarray(total_rate, dtype=float), ds)))


def _trapz_weights(n: int, ds: float) -> np.ndarray:
    w = np.full(n, ds)
    w[0] = w[-1] = 0.5 * ds
    return w


@dataclass
class ScenePrediction:
    """Per-step rates, damages and survival for one candidate ego plan."""

    ds: float
    coll_rates: np.ndarray       # (J, N)
    coll_damages: np.ndarray     # (J, N)
    curve_rate: np.ndarray       # (N,)
    curve_damage: np.ndarray     # (N,)
    total_rate: np.ndarray       # (N,)
    survival: np.ndarray         # (N,)


def predict_scene(ego: AgentPrediction, others: list[AgentPrediction],
                  p: RateParams, ds: float,
                  awareness: list[np.ndarray] | None = None,
                  zones: list[InteractionZone | None] | None = None) -> ScenePrediction:
    """Assemble the full rate/damage/survival picture for one ego plan."""
    n = len(ego.v)
    coll_rates = np.zeros((len(others), n))
    coll_damages = np.zeros((len(others), n))
    for j, other in enumerate(others):
        rate = collision_rate(ego, other, p, ds)
        if awareness is not None:
            rate = rate * awareness[j]
        zone = zones[j] if zones is not None else None
        mask = crash_impossible_mask(ego, other, zone)
        coll_rates[j] = rate
        coll_damages[j] = damages(ego, other, p.damage_offset, mask)[0]
    c_rate = curve_rate(ego, p)
    c_damage = p.damage_offset + 0.5 * ego.mass * (ego.vel ** 2).sum(axis=1)
    total = p.tau0 + coll_rates.sum(axis=0) + c_rate
    return ScenePrediction(ds, coll_rates, coll_damages, c_rate, c_damage,
                           total, survival(total, ds))


def risk(scene: ScenePrediction) -> float:
    """Temporal integral of rates times damages, survival-discounted."""
    num = (scene.coll_rates * scene.coll_damages).sum(axis=0) + scene.curve_rate * scene.curve_damage
    w = _trapz_weights(len(num), scene.ds)
    return float(np.sum(w * num * scene.survival))


def utility(v, surv, w: CostWeights, ds: float) -> float:
    """Travel reward: speed term plus (signed) desired-velocity deviation."""
    v = np.asarray(v, dtype=float)
    integrand = (w.b_t * np.abs(v) + w.deviation_sign * w.b_d * np.abs(v - w.v_d)) * surv
    return float(np.sum(_trapz_weights(len(v), ds) * integrand))


def comfort(a, r, surv, w: CostWeights, ds: float) -> float:
    """Comfort cost: zero for unchanged behavior, negative otherwise."""
    a = np.asarray(a, dtype=float)
    r = np.asarray(r, dtype=float)
    integrand = -(w.b_c * np.abs(a) + w.b_j * np.abs(r)) * surv
    return float(np.sum(_trapz_weights(len(a), ds) * integrand))


def fitness(risk_value: float, utility_value: float, comfort_value: float) -> float:
    return risk_value - utility_value - comfort_value

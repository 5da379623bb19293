"""Pairwise right-of-way relations and priority-conditioned prediction.

Classifies the geometric relation between two agents (front/back/right/left),
maps it to superiority under the configured rule convention, discounts the
awareness horizon of must-yield agents, and builds the prototypical
acceleration/deceleration velocity assumptions for lateral interactions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import DEFAULT_SPEED_CAP, InteractionZone, Path

RIGHT_BEFORE_LEFT = "right_before_left"
LEFT_BEFORE_RIGHT = "left_before_right"

_EXP_CLIP = 60.0


class RelationKind(str, Enum):
    FRONT = "longitudinal-front"
    BACK = "longitudinal-back"
    RIGHT = "lateral-right"
    LEFT = "lateral-left"
    NONE = "none"

    @property
    def lateral(self) -> bool:
        return self in (RelationKind.RIGHT, RelationKind.LEFT)

    @property
    def longitudinal(self) -> bool:
        return self in (RelationKind.FRONT, RelationKind.BACK)


@dataclass(frozen=True)
class PriorityRelation:
    """Relation of the *other* agent seen from the ego agent."""

    kind: RelationKind
    superior: bool               # other agent holds right-of-way over ego
    zone: InteractionZone


@dataclass(frozen=True)
class AwarenessParams:
    """Sigmoid discount of inferior agents' collision rates; the lateral
    pair sits higher than the longitudinal one (later, sharper cut-off)."""

    k_lon: float = 1.2       # [1/s]
    s_lon: float = 6.5       # [s]
    k_lat: float = 1.5       # [1/s]
    s_lat: float = 7.0       # [s]


@dataclass(frozen=True)
class PatternParams:
    """Delayed acceleration/deceleration assumption for lateral agents."""

    delay: float = 1.0           # s_0 [s]
    accel_end: float = 4.0       # s_a [s]
    a_max: float = 2.5           # acceleration-phase limit [m/s^2]
    decel_end: float = 6.0       # s_d [s]
    a_d: float = -2.0            # fixed deceleration [m/s^2]

    def __post_init__(self):
        if not 0.0 <= self.delay <= self.accel_end:
            raise ValueError("need 0 <= delay <= accel_end")
        if self.a_d >= 0.0:
            raise ValueError("a_d must be negative")
        if self.decel_end <= self.accel_end:
            raise ValueError("deceleration phase must outlast acceleration phase")


def _wrap_pi(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def classify(ego: tuple[Path, float], other: tuple[Path, float],
             zone: InteractionZone,
             convention: str = RIGHT_BEFORE_LEFT,
             shared_lane_length: float = 10.0,
             angle_tol: float = 0.15) -> PriorityRelation:
    """Classify the other agent's relation to the ego agent.

    Longitudinal when the corridors overlap along a shared lane stretch (or
    the approach headings are parallel/antiparallel within ``angle_tol``),
    lateral otherwise, with the side taken from the heading difference at
    the interaction-zone starts. ``none`` when there is no zone or the
    conflict lies behind both agents.
    """
    path1, l1 = ego
    path2, l2 = other
    if zone is None or not zone.exists:
        return PriorityRelation(RelationKind.NONE, False, zone or InteractionZone(False))
    (s1, e1), (s2, e2) = zone.bounds_1, zone.bounds_2
    if l1 > e1 or l2 > e2:
        return PriorityRelation(RelationKind.NONE, False, zone)

    prog1, prog2 = l1 - s1, l2 - s2
    shared_lane = min(e1 - s1, e2 - s2) >= shared_lane_length
    inside1 = s1 <= l1 <= e1
    inside2 = s2 <= l2 <= e2

    g1 = float(path1.heading_at(s1))
    g2 = float(path2.heading_at(s2))
    dg = _wrap_pi(g2 - g1)
    parallel = abs(dg) < angle_tol or abs(abs(dg) - math.pi) < angle_tol

    if (shared_lane and (inside1 or inside2)) or parallel:
        if prog2 >= prog1:
            return PriorityRelation(RelationKind.FRONT, True, zone)
        return PriorityRelation(RelationKind.BACK, False, zone)

    side = RelationKind.RIGHT if math.sin(g2 - g1) > 0.0 else RelationKind.LEFT
    if convention == RIGHT_BEFORE_LEFT:
        superior = side is RelationKind.RIGHT
    elif convention == LEFT_BEFORE_RIGHT:
        superior = side is RelationKind.LEFT
    else:
        raise ValueError(f"unknown rule convention: {convention!r}")
    return PriorityRelation(side, superior, zone)


def awareness(s, relation: PriorityRelation, p: AwarenessParams) -> np.ndarray:
    """Discount factor for the other agent's collision rate over prediction
    time: 1 for superior (or unrelated) agents, a decreasing sigmoid for
    inferior ones."""
    s = np.asarray(s, dtype=float)
    if relation.superior or relation.kind is RelationKind.NONE:
        return np.ones_like(s)
    if relation.kind.lateral:
        k, mid = p.k_lat, p.s_lat
    else:
        k, mid = p.k_lon, p.s_lon
    z = np.clip(k * (s - mid), -_EXP_CLIP, _EXP_CLIP)
    return 1.0 / (1.0 + np.exp(z))


def _curve_speed_table(path: Path, a_y_max: float, cap: float) -> np.ndarray:
    kappa = np.abs(path.curvature)
    return np.sqrt(a_y_max / np.maximum(kappa, a_y_max / (cap * cap)))


def predict_other(v0: float, relation: PriorityRelation, p: PatternParams,
                  v_max: float, path: Path, l0: float, a_y_max: float,
                  n: int, ds: float, cap: float = DEFAULT_SPEED_CAP) -> np.ndarray:
    """Assumed velocity curve of the other agent.

    Lateral superior agents get the delayed acceleration pattern (strength
    fading to zero at ``v_max``), lateral inferior agents the delayed fixed
    deceleration, everything else constant velocity. The result is clipped
    to [0, min(curve speed, v_max)] while stepping along the path.
    """
    s = np.arange(n) * ds
    if relation.kind.lateral and relation.superior:
        a_a = max(0.0, p.a_max * (1.0 - min(v0, v_max) / v_max))
        desired = v0 + a_a * np.clip(s - p.delay, 0.0, p.accel_end - p.delay)
    elif relation.kind.lateral and not relation.superior:
        desired = v0 + p.a_d * np.clip(s - p.delay, 0.0, p.decel_end - p.delay)
    else:
        desired = np.full(n, v0)
    # An agent already observed above the legal limit will not slow down
    # instantly; trust the measurement over the limit.
    v_max = max(v_max, v0)

    vc = _curve_speed_table(path, a_y_max, cap)
    step = path.step
    m = len(vc)
    length = path.length
    out = np.empty(n)
    l = min(max(l0, 0.0), length)
    for i in range(n):
        idx = l / step
        i0 = int(idx)
        if i0 > m - 2:
            i0 = m - 2
        vc_l = vc[i0] + (vc[i0 + 1] - vc[i0]) * (idx - i0)
        v_i = desired[i]
        if v_i < 0.0:
            v_i = 0.0
        lim = vc_l if vc_l < v_max else v_max
        if v_i > lim:
            v_i = lim
        out[i] = v_i
        l += v_i * ds
        if l > length:
            l = length
    return out

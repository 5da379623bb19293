"""Parametric ramp ("snake") ego velocity profiles.

Four fixed-duration linear segments with variable end velocities, an
initial actuation lag, Gaussian corner smoothing, and a time-shift offset
used to warm start consecutive planning cycles.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels

SEGMENT_LENGTH = 2.5      # duration of each ramp segment [s]
N_SEGMENTS = 4
HORIZON = 10.0            # prediction horizon s_h [s]
GRID_STEP = 0.05          # profile/risk sampling step [s]
SIGMA_SMOOTH = 0.3        # Gaussian smoothing std [s]
LAG_BRAKE = 0.4           # full brake actuation lag [s]
LAG_ENGINE = 0.8          # full engine actuation lag [s]


@dataclass(frozen=True)
class SnakeParams:
    """Decision variables of one ego plan plus its warm-start bookkeeping."""

    v_p: tuple[float, float, float, float]
    lag: float
    v0: float
    a0: float = 0.0
    offset: float = 0.0
    s_l: float = SEGMENT_LENGTH

    def theta(self) -> np.ndarray:
        """Free optimization variables (4 end velocities + lag)."""
        return np.array([*self.v_p, self.lag])

    def with_theta(self, theta) -> "SnakeParams":
        return replace(self, v_p=tuple(float(t) for t in theta[:4]), lag=max(0.0, float(theta[4])))


@dataclass
class SampledProfile:
    """Velocity curve on a uniform time grid with optional derivatives."""

    ds: float
    v: np.ndarray
    a: np.ndarray | None = None
    r: np.ndarray | None = None

    @property
    def grid(self) -> np.ndarray:
        return np.arange(len(self.v)) * self.ds

    def at(self, s: float) -> tuple[float, float, float]:
        """Interpolated (v, a, r) at time ``s``."""
        g = self.grid
        v = float(np.interp(s, g, self.v))
        a = float(np.interp(s, g, self.a)) if self.a is not None else 0.0
        r = float(np.interp(s, g, self.r)) if self.r is not None else 0.0
        return v, a, r


def time_grid(s_h: float = HORIZON, ds: float = GRID_STEP) -> np.ndarray:
    return np.arange(int(round(s_h / ds)) + 1) * ds


def lag_minimum(a0: float, a_min: float, a_max: float,
                lag_brake: float = LAG_BRAKE, lag_engine: float = LAG_ENGINE) -> float:
    """Minimal admissible actuation lag given the current acceleration."""
    if a0 >= 0.0:
        return (a0 / a_max) * lag_engine
    return abs(a0 / a_min) * lag_brake


def blend_lag(v_raw, v0: float, a0: float, lag: float,
              s_l: float = SEGMENT_LENGTH, ds: float = GRID_STEP) -> np.ndarray:
    """Blended velocity on [0, lag]: the ramp plus the extrapolated current
    acceleration fading linearly to zero at ``lag``."""
    v_raw = np.asarray(v_raw, dtype=float)
    k = int(np.floor(lag / ds + 1e-12))
    s = np.arange(min(k + 1, len(v_raw))) * ds
    return v_raw[: len(s)] + (lag - s) * a0


def raw_snake(params: SnakeParams, s_h: float = HORIZON, ds: float = GRID_STEP) -> SampledProfile:
    """Unsmoothed snake profile (velocity only)."""
    n = int(round(s_h / ds)) + 1
    v = _kernels.snake_velocity(n, ds, params.v0, params.a0, params.v_p,
                                params.lag, params.offset, params.s_l)
    return SampledProfile(ds, np.asarray(v))


def smooth(prof: SampledProfile, sigma: float = SIGMA_SMOOTH) -> SampledProfile:
    """Gaussian-smoothed profile with derivatives recomputed numerically."""
    v = np.asarray(_kernels.gaussian_smooth(prof.v, prof.ds, sigma))
    a = np.asarray(_kernels.derivative(v, prof.ds))
    r = np.asarray(_kernels.derivative(a, prof.ds))
    return SampledProfile(prof.ds, v, a, r)


def sampled_snake(params: SnakeParams, s_h: float = HORIZON, ds: float = GRID_STEP,
                  sigma: float = SIGMA_SMOOTH) -> SampledProfile:
    return smooth(raw_snake(params, s_h, ds), sigma)


def shift_for_next_cycle(params: SnakeParams, dt: float, v0_new: float,
                         a0_new: float | None = None) -> SnakeParams:
    """Warm start for the next cycle: advance the offset, adopt the measured
    start state, keep the end velocities.

    Once the offset swallows a whole segment the knots roll over so the plan
    keeps a full four-segment horizon (the last value is duplicated).
    """
    offset = params.offset + dt
    v_p = params.v_p
    while offset >= params.s_l:
        offset -= params.s_l
        v_p = (v_p[1], v_p[2], v_p[3], v_p[3])
    return replace(params, v_p=v_p, offset=offset, v0=v0_new,
                   a0=params.a0 if a0_new is None else a0_new)

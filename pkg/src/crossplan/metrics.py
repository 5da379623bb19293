"""Post-hoc indicators on run records: time headway (stable value),
post-encroachment time, two-dimensional headway, and filtered peak jerk."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import boxes_overlap, build_path, footprint_corners
from .records import RunRecord

EPS_V = 0.1          # follower speed below which TH is undefined [m/s]
EPS_GAP_RATE = 0.05  # |d gap / dt| threshold for a stable window [m/s]
STABLE_WINDOW = 2.0  # minimum stable-window duration [s]
TH2D_CAP = 20.0      # extrapolation cap for TH_2D [s]
TH2D_TOL = 0.01      # bisection tolerance [s]
SWEEP_STEP = 0.25    # path sampling step for swept footprints [m]
JERK_WINDOW = 0.5    # rolling-mean window for the jerk filter [s]


@dataclass
class IndicatorSet:
    th_stable: float | None = None
    th_stable_reason: str = ""
    pet: float | None = None
    pet_reason: str = ""
    th_2d: float | None = None
    th_2d_reason: str = ""
    r_max1: float | None = None
    v_low1: float | None = None
    v_up1: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def headway_series(record: RunRecord, follower: int, leader: int) -> np.ndarray:
    """Bumper-to-bumper time headway per step; NaN where the follower is
    (near) standing."""
    fol, led = record.agents[follower], record.agents[leader]
    gap = (np.asarray(led.l) - np.asarray(fol.l)
           - 0.5 * (fol.length + led.length))
    v = np.asarray(fol.v)
    return np.where(v >= EPS_V, gap / np.maximum(v, EPS_V), np.nan)


def time_headway(record: RunRecord, step: int, follower: int, leader: int) -> float | None:
    th = headway_series(record, follower, leader)[step]
    return None if np.isnan(th) else float(th)


def _runs_of(mask: np.ndarray):
    """(start, stop) index pairs of contiguous True runs (stop exclusive)."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(int)))
    return list(zip(edges[::2], edges[1::2]))


def stable_headway(record: RunRecord) -> tuple[float | None, str]:
    """Mean TH over the final window with (near) constant gap.

    A gap growing away at the end counts as unbounded headway (+inf), as
    does a stable gap behind a stopped follower.
    """
    if len(record.agents) < 2 or len(record.t) < 3:
        return None, "too-short"
    l0 = [record.agents[i].l[0] for i in (0, 1)]
    follower, leader = (0, 1) if l0[0] <= l0[1] else (1, 0)
    gap = np.asarray(record.agents[leader].l) - np.asarray(record.agents[follower].l)
    t = np.asarray(record.t)
    dgap = np.gradient(gap, t)
    th = headway_series(record, follower, leader)

    need = max(2, int(round(STABLE_WINDOW / record.dt)))
    stable_runs = [(a, b) for a, b in _runs_of(np.abs(dgap) < EPS_GAP_RATE)
                   if b - a >= need]
    if stable_runs:
        a, b = stable_runs[-1]
        window = th[a:b]
        if np.all(np.isnan(window)):
            return math.inf, "follower-stopped"
        return float(np.nanmean(window)), "stable"
    tail = dgap[-need:]
    if np.mean(tail) > EPS_GAP_RATE:
        return math.inf, "diverging"
    return None, "no-stable-window"


def post_encroachment_time(record: RunRecord) -> tuple[float | None, str]:
    """Signed time between the ego leaving and the other entering the
    interaction zone (positive: ego crossed first)."""
    if not record.zone or not record.zone.get("exists"):
        return None, "no-zone"
    exit_ego = record.zone["bounds_1"][1]
    enter_other = record.zone["bounds_2"][0]
    t = np.asarray(record.t)
    l1 = np.asarray(record.agents[0].l)
    l2 = np.asarray(record.agents[1].l)
    idx1 = np.flatnonzero(l1 > exit_ego)
    idx2 = np.flatnonzero(l2 > enter_other)
    if len(idx1) == 0:
        return None, "no-ego-exit"
    if len(idx2) == 0:
        return None, "no-encroachment"
    t1 = float(t[idx1[0]])
    t2 = float(t[idx2[0]])
    return t2 - t1, "ok"


class SweptConflicts:
    """Precomputed pairs of path positions whose oriented footprints overlap.

    The swept shape of an agent for extrapolation interval T is its footprint
    box swept along the path by ``v*T/2`` in both directions; two sweeps
    intersect iff some precomputed conflict pair is covered by both arcs.
    """

    def __init__(self, record: RunRecord, step: float = SWEEP_STEP):
        spec_agents = record.scenario.get("agents", [])
        self.paths = [build_path(a["waypoints"]) for a in spec_agents[:2]]
        self.dims = [(ag.length, ag.width) for ag in record.agents[:2]]
        self.step = step
        self.cell_eps = 0.5 * step
        a_grid = np.arange(0.0, self.paths[0].length + 1e-9, step)
        b_grid = np.arange(0.0, self.paths[1].length + 1e-9, step)
        pa = self.paths[0].position(a_grid)
        pb = self.paths[1].position(b_grid)
        reach = (0.5 * math.hypot(*self.dims[0]) + 0.5 * math.hypot(*self.dims[1]))
        d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
        cand = np.argwhere(d2 <= reach * reach)
        keep_a, keep_b = [], []
        for ia, ib in cand:
            la, lb = a_grid[ia], b_grid[ib]
            box_a = footprint_corners(*pa[ia], float(self.paths[0].heading_at(la)),
                                      *self.dims[0])
            box_b = footprint_corners(*pb[ib], float(self.paths[1].heading_at(lb)),
                                      *self.dims[1])
            if boxes_overlap(box_a, box_b):
                keep_a.append(la)
                keep_b.append(lb)
        self.conf_a = np.asarray(keep_a)
        self.conf_b = np.asarray(keep_b)

    def sweeps_intersect(self, l1, v1, l2, v2, t_ext) -> bool:
        if len(self.conf_a) == 0:
            return False
        eps = self.cell_eps
        cov_a = np.abs(self.conf_a - l1) <= 0.5 * v1 * t_ext + eps
        cov_b = np.abs(self.conf_b - l2) <= 0.5 * v2 * t_ext + eps
        return bool(np.any(cov_a & cov_b))


def th_2d_at(conflicts: SweptConflicts, l1, v1, l2, v2,
             t_cap: float = TH2D_CAP, tol: float = TH2D_TOL) -> float | None:
    """Minimal extrapolation interval at which the two swept footprints
    overlap, by bisection (the overlap predicate is monotone in T)."""
    if not conflicts.sweeps_intersect(l1, v1, l2, v2, t_cap):
        return None
    lo, hi = 0.0, t_cap
    if conflicts.sweeps_intersect(l1, v1, l2, v2, lo):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if conflicts.sweeps_intersect(l1, v1, l2, v2, mid):
            hi = mid
        else:
            lo = mid
    return hi


def th_2d_scan(conflicts: SweptConflicts, l1, v1, l2, v2,
               t_cap: float = TH2D_CAP, tol: float = TH2D_TOL) -> float | None:
    """Linear-scan reference for the bisection (test oracle)."""
    t = 0.0
    while t <= t_cap:
        if conflicts.sweeps_intersect(l1, v1, l2, v2, t):
            return t
        t += tol
    return None


def th_2d_run(record: RunRecord, conflicts: SweptConflicts | None = None,
              t_cap: float = TH2D_CAP) -> tuple[float | None, str]:
    """Per-run TH_2D: minimum over all steps with both agents active."""
    if len(record.agents) < 2:
        return None, "single-agent"
    if conflicts is None:
        conflicts = SweptConflicts(record)
    a0, a1 = record.agents[0], record.agents[1]
    best = None
    for k in range(len(record.t)):
        val = th_2d_at(conflicts, a0.l[k], a0.v[k], a1.l[k], a1.v[k], t_cap)
        if val is not None and (best is None or val < best):
            best = val
    if best is None:
        return None, "never-overlapping"
    return best, "ok"


def rolling_mean(x, window_samples: int) -> np.ndarray:
    """Centered rolling mean with truncated edge windows."""
    x = np.asarray(x, dtype=float)
    kernel = np.ones(window_samples)
    num = np.convolve(x, kernel, mode="same")
    den = np.convolve(np.ones_like(x), kernel, mode="same")
    return num / den


def max_filtered_jerk(record: RunRecord, agent: int = 0,
                      window: float = JERK_WINDOW) -> float:
    """Peak magnitude of the rolling-mean filtered jerk course."""
    r = np.asarray(record.agents[agent].r, dtype=float)
    if len(r) == 0:
        return 0.0
    w = max(1, int(round(window / record.dt)))
    return float(np.max(np.abs(rolling_mean(r, w))))


def velocity_bounds(record: RunRecord, agent: int = 0) -> tuple[float, float]:
    v = np.asarray(record.agents[agent].v, dtype=float)
    return float(v.min()), float(v.max())


def compute_indicators(record: RunRecord, with_th2d: bool = True) -> IndicatorSet:
    """All indicators for one record (agent 0 is the ego)."""
    ind = IndicatorSet()
    ind.th_stable, ind.th_stable_reason = stable_headway(record)
    ind.pet, ind.pet_reason = post_encroachment_time(record)
    if with_th2d:
        ind.th_2d, ind.th_2d_reason = th_2d_run(record)
    ind.r_max1 = max_filtered_jerk(record)
    ind.v_low1, ind.v_up1 = velocity_bounds(record)
    return ind

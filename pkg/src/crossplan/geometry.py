"""Planar paths, corridors, interaction zones, and footprint helpers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import MultiPolygon, Polygon

DEFAULT_RESAMPLE_STEP = 0.5
DEFAULT_CORRIDOR_WIDTH = 3.0
DEFAULT_SPEED_CAP = 50.0

TWO_PI = 2.0 * np.pi


class PathError(ValueError):
    """Raised for degenerate path construction inputs."""


@dataclass(frozen=True, eq=False)
class Path:
    """Arc-length parametrized planar curve sampled on a uniform grid.

    ``heading`` is stored unwrapped so interpolation never crosses a 2*pi
    seam; public accessors fold back into [0, 2*pi).
    """

    points: np.ndarray          # (N, 2) positions [m]
    step: float                 # uniform arc-length spacing [m]
    heading: np.ndarray         # (N,) unwrapped tangent angles [rad]
    curvature: np.ndarray       # (N,) signed curvature [1/m]

    @property
    def length(self) -> float:
        return self.step * (len(self.points) - 1)

    @property
    def arc(self) -> np.ndarray:
        return self.step * np.arange(len(self.points))

    def _locate(self, l):
        idx = np.clip(np.asarray(l, dtype=float) / self.step, 0.0, len(self.points) - 1.0)
        i0 = np.minimum(idx.astype(int), len(self.points) - 2)
        return i0, idx - i0

    def position(self, l):
        """Interpolated (x, y) at arc length ``l`` (clamped to the path)."""
        i0, f = self._locate(l)
        p = self.points
        if np.ndim(l):
            return p[i0] + (p[i0 + 1] - p[i0]) * f[:, None]
        return p[i0] + (p[i0 + 1] - p[i0]) * f

    def heading_at(self, l):
        """Tangent angle at ``l``, folded into [0, 2*pi)."""
        i0, f = self._locate(l)
        h = self.heading
        return np.mod(h[i0] + (h[i0 + 1] - h[i0]) * f, TWO_PI)

    def curvature_at(self, l):
        i0, f = self._locate(l)
        k = self.curvature
        return k[i0] + (k[i0 + 1] - k[i0]) * f

    def tables(self):
        """(step, x, y, unwrapped heading, curvature) arrays for the kernels."""
        return (self.step, np.ascontiguousarray(self.points[:, 0]),
                np.ascontiguousarray(self.points[:, 1]), self.heading, self.curvature)


@dataclass(frozen=True, eq=False)
class Corridor:
    """Constant-width band swept along a section of a path."""

    path: Path
    width: float = DEFAULT_CORRIDOR_WIDTH
    l_start: float = 0.0
    l_end: float | None = None

    def __post_init__(self):
        end = self.path.length if self.l_end is None else self.l_end
        object.__setattr__(self, "l_end", float(end))
        if self.width <= 0:
            raise ValueError("corridor width must be positive")
        if not 0.0 <= self.l_start <= self.l_end <= self.path.length + 1e-9:
            raise ValueError("corridor bounds must satisfy 0 <= l_start <= l_end <= length")

    def polygon(self) -> Polygon:
        """Sampled polygon of the corridor with flat end caps."""
        ls = np.arange(self.l_start, self.l_end, self.path.step)
        ls = np.append(ls, self.l_end)
        pts = self.path.position(ls)
        gam = _heading_unwrapped(self.path, ls)
        normal = np.column_stack([-np.sin(gam), np.cos(gam)])
        half = 0.5 * self.width
        left = pts + half * normal
        right = pts - half * normal
        ring = np.vstack([left, right[::-1]])
        poly = Polygon(ring)
        if not poly.is_valid:
            poly = poly.buffer(0)
        return poly


def _heading_unwrapped(path: Path, l):
    i0, f = path._locate(l)
    h = path.heading
    return h[i0] + (h[i0 + 1] - h[i0]) * f


@dataclass(frozen=True)
class InteractionZone:
    """Overlap of two corridors, projected to arc intervals on each path."""

    exists: bool
    bounds_1: tuple[float, float] = (0.0, 0.0)   # (I_s, I_e) on path 1 [m]
    bounds_2: tuple[float, float] = (0.0, 0.0)   # (I_s, I_e) on path 2 [m]

    def swapped(self) -> "InteractionZone":
        return InteractionZone(self.exists, self.bounds_2, self.bounds_1)


def build_path(waypoints, resample_step: float = DEFAULT_RESAMPLE_STEP) -> Path:
    """Resample a waypoint polyline at uniform arc length and attach
    heading/curvature computed by finite differences."""
    pts = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    if len(pts) >= 2:
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.hypot(*(pts[1:] - pts[:-1]).T) > 1e-12
        pts = pts[keep]
    if len(pts) < 2:
        raise PathError("need at least 2 distinct waypoints")

    seg = np.hypot(*(pts[1:] - pts[:-1]).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    n = max(2, int(np.ceil(total / resample_step)) + 1)
    grid = np.linspace(0.0, total, n)
    x = np.interp(grid, s, pts[:, 0])
    y = np.interp(grid, s, pts[:, 1])
    step = total / (n - 1)

    dx = np.gradient(x, step, edge_order=2 if n > 2 else 1)
    dy = np.gradient(y, step, edge_order=2 if n > 2 else 1)
    heading = np.unwrap(np.arctan2(dy, dx))
    ddx = np.gradient(dx, step, edge_order=2 if n > 2 else 1)
    ddy = np.gradient(dy, step, edge_order=2 if n > 2 else 1)
    speed_sq = dx * dx + dy * dy
    curvature = np.where(speed_sq > 1e-12,
                         (dx * ddy - dy * ddx) / np.maximum(speed_sq, 1e-12) ** 1.5, 0.0)
    return Path(np.column_stack([x, y]), step, heading, curvature)


def max_curve_velocity(path: Path, l, a_y_max: float, cap: float = DEFAULT_SPEED_CAP):
    """Speed at which lateral acceleration reaches ``a_y_max`` at ``l``,
    bounded above by ``cap`` (which also covers straight sections)."""
    if a_y_max <= 0:
        raise ValueError("a_y_max must be positive")
    kappa = np.abs(path.curvature_at(l))
    kappa_floor = a_y_max / (cap * cap)
    return np.sqrt(a_y_max / np.maximum(kappa, kappa_floor))


def _polygon_vertices(geom) -> np.ndarray:
    if isinstance(geom, Polygon):
        return np.asarray(geom.exterior.coords)
    if isinstance(geom, MultiPolygon):
        return np.vstack([np.asarray(g.exterior.coords) for g in geom.geoms])
    polys = [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon)]
    if polys:
        return np.vstack([np.asarray(g.exterior.coords) for g in polys])
    return np.empty((0, 2))


def _project_interval(corridor: Corridor, verts: np.ndarray) -> tuple[float, float]:
    # Nearest-sample projection of the overlap vertices onto the path.
    path = corridor.path
    i_lo = int(np.floor(corridor.l_start / path.step))
    i_hi = int(np.ceil(corridor.l_end / path.step)) + 1
    samples = path.points[i_lo:i_hi]
    d2 = ((verts[:, None, :] - samples[None, :, :]) ** 2).sum(axis=2)
    ls = (i_lo + np.argmin(d2, axis=1)) * path.step
    lo = float(np.clip(ls.min(), corridor.l_start, corridor.l_end))
    hi = float(np.clip(ls.max(), corridor.l_start, corridor.l_end))
    return lo, hi


def interaction_zone(c1: Corridor, c2: Corridor) -> InteractionZone:
    """Overlap region of two corridor polygons, projected to per-path
    arc-length intervals. ``exists`` is False for disjoint corridors."""
    overlap = c1.polygon().intersection(c2.polygon())
    if overlap.is_empty or overlap.area < 1e-9:
        return InteractionZone(False)
    verts = _polygon_vertices(overlap)
    if len(verts) == 0:
        return InteractionZone(False)
    return InteractionZone(True, _project_interval(c1, verts), _project_interval(c2, verts))


def footprint_corners(x: float, y: float, heading: float, length: float, width: float) -> np.ndarray:
    """Corners of an oriented rectangle centered at (x, y)."""
    c, s = np.cos(heading), np.sin(heading)
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[hl, hw], [hl, -hw], [-hl, -hw], [-hl, hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([x, y])


def boxes_overlap(corners_a: np.ndarray, corners_b: np.ndarray) -> bool:
    """Separating-axis overlap test for two convex quads."""
    for quad in (corners_a, corners_b):
        edges = np.roll(quad, -1, axis=0) - quad
        axes = np.column_stack([-edges[:, 1], edges[:, 0]])
        pa = corners_a @ axes.T
        pb = corners_b @ axes.T
        if np.any(pa.max(axis=0) < pb.min(axis=0)) or np.any(pb.max(axis=0) < pa.min(axis=0)):
            return False
    return True

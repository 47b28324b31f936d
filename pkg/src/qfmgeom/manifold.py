"""Base data manifolds: a Poincaré half-plane patch and a Euclidean box."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .feature_map import DEFAULT_ORDER, FeatureMapSpec

VERTICAL_TOL = 1e-12
KINDS = ("poincare_half_plane", "euclidean_box")


class ManifoldError(ValueError):
    pass


@dataclass(frozen=True)
class ManifoldSpec:
    kind: str
    bounds: tuple[tuple[float, float], ...]
    step: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ManifoldError(f"unknown manifold kind {self.kind!r}")
        if not self.bounds:
            raise ManifoldError("manifold needs at least one coordinate")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ManifoldError(f"invalid bounds [{lo}, {hi}]")
        if not self.step > 0:
            raise ManifoldError("step must be positive")
        if self.kind == "poincare_half_plane":
            if len(self.bounds) != 2:
                raise ManifoldError("the half-plane is two-dimensional")
            if self.bounds[1][0] <= 0:
                raise ManifoldError("half-plane y lower bound must be positive")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def distance(self, p1, p2) -> float:
        if self.kind == "poincare_half_plane":
            return poincare_distance(p1, p2)
        return float(np.linalg.norm(np.asarray(p2, float) - np.asarray(p1, float)))

    def distance_matrix(self, points: np.ndarray) -> np.ndarray:
        if self.kind == "poincare_half_plane":
            return poincare_distance_matrix(points)
        pts = np.asarray(points, dtype=float)
        return np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)

    def geodesic(self, p1, p2, t):
        if self.kind == "poincare_half_plane":
            return poincare_geodesic(p1, p2, t)
        return line_segment(p1, p2, t)

    def geodesic_batch(self, p1s: np.ndarray, p2s: np.ndarray, ts: np.ndarray) -> np.ndarray:
        if self.kind == "poincare_half_plane":
            return poincare_geodesic_batch(p1s, p2s, ts)
        p1s, p2s = np.asarray(p1s, float), np.asarray(p2s, float)
        ts = np.asarray(ts, float)
        return p1s[:, None, :] + ts[None, :, None] * (p2s - p1s)[:, None, :]


PAPER_PATCH = ManifoldSpec("poincare_half_plane", ((-1.0, 1.0), (0.1, 1.1)), 0.1)


@dataclass(frozen=True)
class Grid:
    points: np.ndarray
    labels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.points)

    def index(self, point) -> int:
        key = format_point(point)
        try:
            return self.labels.index(key)
        except ValueError:
            raise KeyError(f"{key} is not a grid point") from None


def _fmt(v: float) -> str:
    return f"{float(v) + 0.0:.12g}"


def format_point(p) -> str:
    return ":".join(_fmt(v) for v in np.asarray(p, dtype=float).ravel())


def axis_values(lo: float, hi: float, step: float) -> np.ndarray:
    count = math.floor((hi - lo) / step + 1 + 1e-9)
    return np.array([round(lo + i * step, 12) + 0.0 for i in range(count)])


def grid_points(m: ManifoldSpec) -> Grid:
    """Inclusive grid, first coordinate varying slowest."""
    axes = [axis_values(lo, hi, m.step) for lo, hi in m.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([a.ravel() for a in mesh], axis=1)
    return Grid(points, tuple(format_point(p) for p in points))


# -- half-plane ------------------------------------------------------------

def _check_upper(*ys):
    for y in ys:
        if not y > 0:
            raise ManifoldError(f"half-plane points need y > 0, got {y}")


def poincare_distance(p1, p2) -> float:
    """Line-or-arc distance of the half-plane patch."""
    x1, y1 = map(float, p1)
    x2, y2 = map(float, p2)
    _check_upper(y1, y2)
    if abs(x1 - x2) <= VERTICAL_TOL:
        return abs(y1 - y2)
    num = math.hypot(x2 - x1, y2 - y1) + math.hypot(x2 - x1, y2 + y1)
    return 2.0 * math.log(num / (2.0 * math.sqrt(y1 * y2)))


def poincare_distance_matrix(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if np.any(pts[:, 1] <= 0):
        raise ManifoldError("half-plane points need y > 0")
    x, y = pts[:, 0], pts[:, 1]
    dx = x[None, :] - x[:, None]
    num = np.hypot(dx, y[None, :] - y[:, None]) + np.hypot(dx, y[None, :] + y[:, None])
    arc = 2.0 * np.log(num / (2.0 * np.sqrt(y[:, None] * y[None, :])))
    vertical = np.abs(dx) <= VERTICAL_TOL
    out = np.where(vertical, np.abs(y[:, None] - y[None, :]), arc)
    np.fill_diagonal(out, 0.0)
    return out


def arc_center(p1, p2) -> tuple[float, float]:
    """Centre on the real axis and radius of the geodesic arc through p1, p2."""
    x1, y1 = map(float, p1)
    x2, y2 = map(float, p2)
    c = (x2 * x2 + y2 * y2 - x1 * x1 - y1 * y1) / (2.0 * (x2 - x1))
    return c, math.hypot(x1 - c, y1)


def poincare_geodesic(p1, p2, t: float) -> np.ndarray:
    """Point at parameter ``t`` on the geodesic from p1 (t=0) to p2 (t=1).

    Vertical segments are linear in y; arcs are linear in the polar angle
    about their centre.  ``t`` outside [0, 1] extends the same curve.
    """
    x1, y1 = map(float, p1)
    x2, y2 = map(float, p2)
    _check_upper(y1, y2)
    if x1 == x2 and y1 == y2:
        raise ManifoldError("geodesic endpoints coincide")
    if t == 0.0:
        return np.array([x1, y1])
    if t == 1.0:
        return np.array([x2, y2])
    if abs(x1 - x2) <= VERTICAL_TOL:
        return np.array([x1, y1 + t * (y2 - y1)])
    c, r = arc_center(p1, p2)
    a1 = math.atan2(y1, x1 - c)
    a2 = math.atan2(y2, x2 - c)
    a = a1 + t * (a2 - a1)
    return np.array([c + r * math.cos(a), r * math.sin(a)])


def poincare_geodesic_batch(p1s: np.ndarray, p2s: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """(B, T, 2) samples of B geodesics at the shared parameters ``ts``."""
    p1s, p2s = np.asarray(p1s, float), np.asarray(p2s, float)
    ts = np.asarray(ts, float)
    x1, y1, x2, y2 = p1s[:, 0:1], p1s[:, 1:2], p2s[:, 0:1], p2s[:, 1:2]
    vertical = np.abs(x1 - x2) <= VERTICAL_TOL
    safe_dx = np.where(vertical, 1.0, x2 - x1)
    c = (x2 * x2 + y2 * y2 - x1 * x1 - y1 * y1) / (2.0 * safe_dx)
    r = np.hypot(x1 - c, y1)
    a1 = np.arctan2(y1, x1 - c)
    a2 = np.arctan2(y2, x2 - c)
    a = a1 + ts[None, :] * (a2 - a1)
    xs = np.where(vertical, x1, c + r * np.cos(a))
    ys = np.where(vertical, y1 + ts[None, :] * (y2 - y1), r * np.sin(a))
    out = np.stack([xs, ys], axis=-1)
    out[:, ts == 0.0, :] = p1s[:, None, :]
    out[:, ts == 1.0, :] = p2s[:, None, :]
    return out


def line_segment(p1, p2, t: float) -> np.ndarray:
    p1, p2 = np.asarray(p1, float), np.asarray(p2, float)
    if t == 0.0:
        return p1.copy()
    if t == 1.0:
        return p2.copy()
    return p1 + t * (p2 - p1)


# -- pulled-back lengths ---------------------------------------------------

def _trapezoid(speeds: np.ndarray, segments: int) -> np.ndarray:
    h = 1.0 / segments
    return h * (speeds[..., 1:-1].sum(axis=-1) + 0.5 * (speeds[..., 0] + speeds[..., -1]))


def pulled_path_length(spec: FeatureMapSpec, path: Callable[[float], Sequence[float]],
                       segments: int = 64, order: int = DEFAULT_ORDER, h: float = 1e-6) -> float:
    """Length of ``t -> U(path(t))`` on [0, 1] under the induced metric.

    Composite trapezoid over ``segments`` intervals; the path velocity is a
    central difference with step ``h``.
    """
    if segments < 2:
        raise ValueError("need at least 2 segments")
    ts = np.linspace(0.0, 1.0, segments + 1)
    pts = np.array([np.asarray(path(t), float) for t in ts])
    vel = np.array([(np.asarray(path(t + h), float) - np.asarray(path(t - h), float)) / (2 * h)
                    for t in ts])
    bars = spec.compiled.bar_coeffs(pts, vel, order)
    speeds = np.sqrt(np.sum(bars**2, axis=-1))
    return float(_trapezoid(speeds, segments))


def pulled_lengths_batch(spec: FeatureMapSpec, manifold: ManifoldSpec, p1s: np.ndarray,
                         p2s: np.ndarray, segments: int = 64, order: int = DEFAULT_ORDER,
                         h: float = 1e-6) -> np.ndarray:
    """Pulled-back lengths of the base geodesics between paired endpoints."""
    p1s, p2s = np.asarray(p1s, float), np.asarray(p2s, float)
    ts = np.linspace(0.0, 1.0, segments + 1)
    pts = manifold.geodesic_batch(p1s, p2s, ts)
    plus = manifold.geodesic_batch(p1s, p2s, ts + h)
    minus = manifold.geodesic_batch(p1s, p2s, ts - h)
    # endpoint overrides in geodesic_batch only touch exact 0/1, not t +- h
    vel = (plus - minus) / (2 * h)
    b, t, m = pts.shape
    bars = spec.compiled.bar_coeffs(pts.reshape(b * t, m), vel.reshape(b * t, m), order)
    speeds = np.sqrt(np.sum(bars**2, axis=-1)).reshape(b, t)
    return _trapezoid(speeds, segments)


def upper_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def pairwise_matrix(n: int, values: np.ndarray) -> np.ndarray:
    out = np.zeros((n, n))
    i, j = upper_pairs(n)
    out[i, j] = values
    out[j, i] = values
    return out

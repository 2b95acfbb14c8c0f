"""Planar placement helpers: epsilon-neighbourhoods of convex hulls and
rejection sampling of generic points."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString, MultiPoint, Point


class HullNeighborhood:
    """Points within ``eps`` of the convex hull of ``points`` (2D)."""

    def __init__(self, points, eps: float):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self.points = pts
        self.eps = float(eps)
        self.hull = MultiPoint([tuple(p) for p in pts]).convex_hull
        self.centroid = pts.mean(axis=0)
        self.diameter = float(np.max(np.linalg.norm(pts[:, None] - pts[None], axis=-1))) if len(pts) > 1 else 0.0

    def distance(self, p) -> float:
        return float(self.hull.distance(Point(float(p[0]), float(p[1]))))

    def contains(self, p) -> bool:
        return self.distance(p) <= self.eps

    def sample(self, rng: np.random.Generator, margin: float) -> np.ndarray:
        """A random point within ``margin`` of the hull."""
        w = rng.dirichlet(np.ones(len(self.points)))
        base = w @ self.points
        r = margin * np.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * np.pi)
        return base + r * np.array([np.cos(phi), np.sin(phi)])

    def line_section(self, origin, direction) -> tuple | None:
        """Segment where the line ``origin + s*direction`` meets the neighbourhood.

        Returns ``(start, end)`` points or ``None``. The neighbourhood is
        approximated by an inscribed polygon, so returned points are inside.
        """
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        reach = np.linalg.norm(np.asarray(origin) - self.centroid) + self.diameter + 2 * self.eps + 1.0
        s0 = float(np.dot(self.centroid - origin, direction))
        a = np.asarray(origin) + (s0 - reach) * direction
        b = np.asarray(origin) + (s0 + reach) * direction
        region = self.hull.buffer(self.eps, quad_segs=32)
        cut = region.intersection(LineString([tuple(a), tuple(b)]))
        if cut.is_empty or cut.length == 0.0:
            return None
        coords = np.array(cut.coords) if cut.geom_type == "LineString" else np.array(
            [c for g in cut.geoms for c in g.coords])
        proj = (coords - origin) @ direction
        lo, hi = coords[np.argmin(proj)], coords[np.argmax(proj)]
        return lo, hi


def point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    t = 0.0 if not ab.any() else float(np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


@dataclass
class Placer:
    """Tracks occupied points and accepts candidates that are free.

    A point is free if it lies in the hull neighbourhood and keeps
    ``min_separation`` from every occupied point.
    """

    region: HullNeighborhood
    min_separation: float
    rng: np.random.Generator
    occupied: list = field(default_factory=list)
    records: list = field(default_factory=list)

    def is_free(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        if not np.all(np.isfinite(p)) or not self.region.contains(p):
            return False
        if not self.occupied:
            return True
        gaps = np.linalg.norm(np.asarray(self.occupied) - p, axis=1)
        return bool(gaps.min() >= self.min_separation)

    def occupy(self, p, label=None, source=None):
        p = np.asarray(p, dtype=float)
        self.occupied.append(p)
        if label is not None:
            self.records.append(PlacedNode(label, tuple(p), source))

    def snapshot(self) -> tuple:
        return len(self.occupied), len(self.records)

    def rollback(self, snap: tuple):
        n_occ, n_rec = snap
        del self.occupied[n_occ:]
        del self.records[n_rec:]


@dataclass(frozen=True)
class PlacedNode:
    label: str
    position: tuple
    source: str


def count_crossings(segments) -> int:
    """Number of segment pairs that cross at a point interior to both."""
    segs = np.asarray(segments, dtype=float).reshape(-1, 2, 2)
    n = len(segs)
    if n < 2:
        return 0
    p, r = segs[:, 0], segs[:, 1] - segs[:, 0]
    i, j = np.triu_indices(n, 1)
    rxs = r[i, 0] * r[j, 1] - r[i, 1] * r[j, 0]
    qp = p[j] - p[i]
    t_num = qp[:, 0] * r[j, 1] - qp[:, 1] * r[j, 0]
    u_num = qp[:, 0] * r[i, 1] - qp[:, 1] * r[i, 0]
    ok = np.abs(rxs) > 1e-14 * (np.linalg.norm(r[i], axis=1) * np.linalg.norm(r[j], axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ok, t_num / rxs, -1.0)
        u = np.where(ok, u_num / rxs, -1.0)
    eps = 1e-9
    return int(np.sum(ok & (t > eps) & (t < 1 - eps) & (u > eps) & (u < 1 - eps)))

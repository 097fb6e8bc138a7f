"""2.5D scene geometry: convex-footprint buildings, occlusion queries, and
generation of candidate installation sites and coverage test points.

Buildings are vertical prisms (convex footprint extruded from the ground to
a per-building height).  All queries are pure functions of immutable data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Shrink margin for "strictly inside" tests, in meters.  Device sites sit
# exactly on wall/roof surfaces and must not self-occlude.
EPS = 1e-9


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("point coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


class Building:
    """Convex prism: CCW footprint polygon (meters) extruded to `height`."""

    def __init__(self, footprint, height: float):
        fp = np.asarray(footprint, dtype=float)
        if fp.ndim != 2 or fp.shape[1] != 2 or fp.shape[0] < 3:
            raise ValueError("footprint must be an (n>=3, 2) vertex array")
        if not np.all(np.isfinite(fp)):
            raise ValueError("footprint vertices must be finite")
        if height <= 0:
            raise ValueError("building height must be positive")
        area2 = _signed_area2(fp)
        if abs(area2) < 1e-9:
            raise ValueError("degenerate footprint (zero area)")
        if area2 < 0:
            raise ValueError("footprint must be counter-clockwise")
        if not _is_convex_ccw(fp):
            raise ValueError("footprint must be convex (decompose before input)")
        self.footprint = fp
        self.footprint.setflags(write=False)
        self.height = float(height)
        # Outward edge normals and offsets for half-space tests: the interior
        # satisfies n.p <= c for every edge.
        d = np.roll(fp, -1, axis=0) - fp
        lengths = np.hypot(d[:, 0], d[:, 1])
        n = np.stack([d[:, 1], -d[:, 0]], axis=1) / lengths[:, None]
        self.edge_normals = n
        self.edge_offsets = np.einsum("ij,ij->i", n, fp)
        self.edge_lengths = lengths
        self.centroid = fp.mean(axis=0)

    def contains_xy(self, points, margin: float = 0.0) -> np.ndarray:
        """True where points (N, 2) lie inside the footprint shrunk by margin."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        s = p @ self.edge_normals.T - self.edge_offsets
        return np.all(s <= -margin, axis=1)


def _signed_area2(fp: np.ndarray) -> float:
    x, y = fp[:, 0], fp[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _is_convex_ccw(fp: np.ndarray) -> bool:
    d = np.roll(fp, -1, axis=0) - fp
    cross = d[:, 0] * np.roll(d[:, 1], -1) - d[:, 1] * np.roll(d[:, 0], -1)
    return bool(np.all(cross > -1e-9))


@dataclass(frozen=True)
class Scene:
    buildings: tuple
    bounds: tuple  # (xmin, ymin, xmax, ymax)
    bs_position: Point3

    def __post_init__(self):
        object.__setattr__(self, "buildings", tuple(self.buildings))
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("bounds rectangle is empty")
        if not (xmin <= self.bs_position.x <= xmax and ymin <= self.bs_position.y <= ymax):
            raise ValueError("base station must lie inside the scene bounds")
        for i, b in enumerate(self.buildings):
            fp = b.footprint
            if fp[:, 0].min() < xmin - EPS or fp[:, 0].max() > xmax + EPS \
                    or fp[:, 1].min() < ymin - EPS or fp[:, 1].max() > ymax + EPS:
                raise ValueError(f"building {i} footprint exceeds scene bounds")


@dataclass(frozen=True)
class CandidateSite:
    id: int
    position: Point3
    kind: str  # "wall" | "rooftop"
    outward_normal: np.ndarray  # unit 2D vector, horizontal


@dataclass(frozen=True)
class TestPoint:
    id: int
    position: Point3


def occluded_from(origin, targets, scene: Scene) -> np.ndarray:
    """Vectorized occlusion test from one origin to many targets.

    Returns a boolean array: True where the open segment origin->target
    passes through the interior of any building prism.  Endpoints touching
    a wall or roof surface do not count as occlusion.
    """
    a = np.asarray(origin, dtype=float)
    b = np.atleast_2d(np.asarray(targets, dtype=float))
    seg = b - a  # (N, 3)
    n_t = b.shape[0]
    hit = np.zeros(n_t, dtype=bool)
    tiny = 1e-15
    for bld in scene.buildings:
        # Half-spaces of the eps-shrunk prism: edge planes plus floor/ceiling.
        e = bld.edge_normals.shape[0]
        normals = np.zeros((e + 2, 3))
        normals[:e, :2] = bld.edge_normals
        normals[e] = (0.0, 0.0, 1.0)
        normals[e + 1] = (0.0, 0.0, -1.0)
        offsets = np.concatenate([bld.edge_offsets - EPS, [bld.height - EPS, -EPS]])

        f0 = normals @ a - offsets                      # (C,)
        g = seg @ normals.T                             # (N, C)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t_star = -f0 / g
        lo = np.where(g < -tiny, t_star, 0.0).max(axis=1)
        hi = np.where(g > tiny, t_star, 1.0).min(axis=1)
        # Constraints parallel to the segment and violated: no intersection.
        dead = np.any((np.abs(g) <= tiny) & (f0 > 0.0), axis=1)
        hit |= (~dead) & (hi - lo > 1e-12) & (hi > 0.0) & (lo < 1.0)
    return hit


def segment_occluded(a: Point3, b: Point3, scene: Scene) -> bool:
    """True iff the open segment (a, b) intersects any building interior."""
    pa, pb = a.as_array(), b.as_array()
    if not np.any(pa != pb):
        raise ValueError("segment endpoints must differ")
    return bool(occluded_from(pa, pb[None, :], scene)[0])


def generate_ris_sites(scene: Scene, spacing: float = 5.0, height: float = 5.0,
                       start_id: int = 0) -> list:
    """Wall-mounted candidate sites at regular arc-length intervals.

    Each exterior wall of length L receives floor(L / spacing) sites, the
    first one spacing/2 from the wall start.  Walls of buildings not taller
    than the mounting height are skipped.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    sites = []
    sid = start_id
    for bld in scene.buildings:
        if bld.height <= height:
            continue
        fp = bld.footprint
        for w in range(fp.shape[0]):
            v0 = fp[w]
            length = bld.edge_lengths[w]
            direction = (np.roll(fp, -1, axis=0)[w] - v0) / length
            count = int(math.floor(length / spacing + 1e-9))
            for k in range(count):
                s = spacing / 2.0 + k * spacing
                xy = v0 + s * direction
                sites.append(CandidateSite(
                    id=sid,
                    position=Point3(float(xy[0]), float(xy[1]), height),
                    kind="wall",
                    outward_normal=bld.edge_normals[w].copy(),
                ))
                sid += 1
    return sites


def generate_ncr_sites(scene: Scene, height: float = 6.5, start_id: int = 0) -> list:
    """Rooftop candidate sites: one per footprint vertex.

    The outward normal is the normalized bisector of the two adjacent
    edges' outward normals.
    """
    sites = []
    sid = start_id
    for bld in scene.buildings:
        if height < bld.height:
            raise ValueError("rooftop site height must not be below the building height")
        fp = bld.footprint
        n_prev = np.roll(bld.edge_normals, 1, axis=0)  # edge ending at vertex v
        for v in range(fp.shape[0]):
            bis = n_prev[v] + bld.edge_normals[v]
            bis /= np.hypot(bis[0], bis[1])
            sites.append(CandidateSite(
                id=sid,
                position=Point3(float(fp[v, 0]), float(fp[v, 1]), height),
                kind="rooftop",
                outward_normal=bis,
            ))
            sid += 1
    return sites


def generate_test_points(scene: Scene, step: float, ue_height: float = 1.5) -> list:
    """Regular grid over the scene bounds at the UE height.

    Points strictly inside a building footprint are excluded.  The grid
    always includes the bounds edges, so the four corners are present even
    when the step exceeds the bounds size.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    xmin, ymin, xmax, ymax = scene.bounds
    xs = _axis_ticks(xmin, xmax, step)
    ys = _axis_ticks(ymin, ymax, step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    inside = np.zeros(pts.shape[0], dtype=bool)
    for bld in scene.buildings:
        inside |= bld.contains_xy(pts, margin=EPS)
    return [TestPoint(id=i, position=Point3(float(p[0]), float(p[1]), ue_height))
            for i, p in enumerate(pts[~inside])]


def _axis_ticks(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9))
    ticks = lo + step * np.arange(n + 1)
    if hi - ticks[-1] > 1e-9:
        ticks = np.append(ticks, hi)
    return ticks


def renumber_sites(sites) -> list:
    """Reassign sequential ids, preserving order."""
    return [replace(s, id=i) for i, s in enumerate(sites)]

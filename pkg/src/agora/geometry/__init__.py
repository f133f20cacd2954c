"""Planar geometry kernels shared by metrics and planners.

Coordinates are planar meters (x east, y north); no geodesic math anywhere.
The batch kernels (point-in-polygon, point-to-polygon distance) exist in two
interchangeable implementations: numba-jitted loops (the default whenever
numba imports) and a pure-numpy twin. Both compute the same arithmetic in the
same order, so their outputs are bit-identical. Select with the AGORA_KERNELS
environment variable (auto | numba | numpy) or set_backend().
"""

from __future__ import annotations

import math
import os
import random
from typing import NamedTuple, Sequence, Union

import numpy as np

from ..errors import GeometryError
from . import _numpy_impl


class Point(NamedTuple):
    x: float
    y: float


PolygonLike = Union[np.ndarray, Sequence[Point], Sequence[Sequence[float]]]

_IMPLS = {"numpy": _numpy_impl}
_NUMBA_ERROR: Exception | None = None
try:
    from . import _numba_impl

    _IMPLS["numba"] = _numba_impl
except Exception as exc:  # numba absent or incompatible; numpy path still works
    _NUMBA_ERROR = exc


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def _initial_backend() -> str:
    env = os.environ.get("AGORA_KERNELS", "auto").strip().lower()
    if env in ("", "auto"):
        return "numba" if "numba" in _IMPLS else "numpy"
    if env not in ("numba", "numpy"):
        raise GeometryError(f"AGORA_KERNELS must be auto, numba or numpy, got {env!r}")
    if env not in _IMPLS:
        raise GeometryError(f"kernel backend {env!r} unavailable: {_NUMBA_ERROR}")
    return env


_active_backend = _initial_backend()


def get_backend() -> str:
    return _active_backend


def set_backend(name: str) -> None:
    global _active_backend
    if name not in ("numba", "numpy"):
        raise GeometryError(f"unknown kernel backend {name!r}")
    if name not in _IMPLS:
        raise GeometryError(f"kernel backend {name!r} unavailable: {_NUMBA_ERROR}")
    _active_backend = name


def as_polygon_array(polygon: PolygonLike) -> np.ndarray:
    """Validate and normalize a polygon to a float64 (n, 2) vertex array.

    Accepts open or explicitly closed rings (a repeated last vertex is
    dropped). Rejects degenerate input: fewer than 3 distinct vertices,
    non-finite coordinates, zero-length edges, or zero area.
    """
    if isinstance(polygon, np.ndarray) and polygon.dtype == np.float64 and polygon.ndim == 2:
        arr = polygon
    else:
        arr = np.asarray(
            [(p[0], p[1]) for p in polygon] if not isinstance(polygon, np.ndarray) else polygon,
            dtype=np.float64,
        )
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError("polygon must be a sequence of (x, y) points")
    if arr.shape[0] >= 4 and arr[0, 0] == arr[-1, 0] and arr[0, 1] == arr[-1, 1]:
        arr = arr[:-1]
    if arr.shape[0] < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    if not np.isfinite(arr).all():
        raise GeometryError("polygon has non-finite coordinates")
    nxt = np.concatenate([arr[1:], arr[:1]])
    if ((nxt - arr) == 0.0).all(axis=1).any():
        raise GeometryError("polygon has a zero-length edge")
    if _shoelace(arr) == 0.0:
        raise GeometryError("polygon has zero area")
    return np.ascontiguousarray(arr)


def _shoelace(arr: np.ndarray) -> float:
    x, y = arr[:, 0], arr[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def polygon_area(polygon: PolygonLike) -> float:
    """Unsigned area of a simple polygon (shoelace formula)."""
    arr = np.asarray([(p[0], p[1]) for p in polygon], dtype=np.float64)
    if arr.shape[0] >= 4 and (arr[0] == arr[-1]).all():
        arr = arr[:-1]
    if arr.shape[0] < 3:
        return 0.0
    return abs(_shoelace(arr))


def polygon_centroid(polygon: PolygonLike) -> Point:
    """Area-weighted centroid of a simple polygon."""
    arr = as_polygon_array(polygon)
    x, y = arr[:, 0], arr[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = float(np.sum(cross)) / 2.0
    cx = float(np.sum((x + xn) * cross)) / (6.0 * a)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * a)
    return Point(cx, cy)


def polygon_is_simple(polygon: PolygonLike) -> bool:
    """True when no two non-adjacent edges intersect (O(n^2); validation only)."""
    try:
        arr = as_polygon_array(polygon)
    except GeometryError:
        return False
    n = arr.shape[0]
    for i in range(n):
        a1, a2 = arr[i], arr[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = arr[j], arr[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                return False
    return True


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r) -> bool:
    return (
        min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
        and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
    )


def _segments_intersect(a1, a2, b1, b2) -> bool:
    d1 = _orient(b1, b2, a1)
    d2 = _orient(b1, b2, a2)
    d3 = _orient(a1, a2, b1)
    d4 = _orient(a1, a2, b2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _on_segment(b1, b2, a1):
        return True
    if d2 == 0 and _on_segment(b1, b2, a2):
        return True
    if d3 == 0 and _on_segment(a1, a2, b1):
        return True
    if d4 == 0 and _on_segment(a1, a2, b2):
        return True
    return False


# --- batch kernels (backend-dispatched) --------------------------------------


def points_in_polygon(points: np.ndarray, polygon: PolygonLike) -> np.ndarray:
    """Even-odd membership for an (n, 2) point array; boundary counts inside."""
    arr = as_polygon_array(polygon)
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 2))
    return _IMPLS[_active_backend].points_in_polygon(pts, arr)


def dists_to_polygon(points: np.ndarray, polygon: PolygonLike) -> np.ndarray:
    """Euclidean point-to-polygon distance for an (n, 2) point array.

    Zero for points inside or on the boundary, else the minimum distance to
    any edge.
    """
    arr = as_polygon_array(polygon)
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 2))
    return _IMPLS[_active_backend].dists_to_polygon(pts, arr)


# --- scalar convenience wrappers ---------------------------------------------


def _check_point(p: Point) -> None:
    if not (math.isfinite(p[0]) and math.isfinite(p[1])):
        raise GeometryError(f"non-finite point {p!r}")


def point_in_polygon(p: Point, polygon: PolygonLike) -> bool:
    _check_point(p)
    return bool(points_in_polygon(np.array([[p[0], p[1]]]), polygon)[0])


def dist_point_polygon(p: Point, polygon: PolygonLike) -> float:
    _check_point(p)
    return float(dists_to_polygon(np.array([[p[0], p[1]]]), polygon)[0])


def within_buffer(p: Point, polygon: PolygonLike, radius: float) -> bool:
    """True iff p is within `radius` meters of the polygon (inclusive)."""
    if not math.isfinite(radius) or radius < 0:
        raise GeometryError(f"buffer radius must be finite and >= 0, got {radius!r}")
    return dist_point_polygon(p, polygon) <= radius


def random_point_in_polygon(polygon: PolygonLike, rng: random.Random, max_tries: int = 100000) -> Point:
    """Uniform sample inside a polygon by bounding-box rejection."""
    arr = as_polygon_array(polygon)
    xmin, ymin = arr.min(axis=0)
    xmax, ymax = arr.max(axis=0)
    for _ in range(max_tries):
        p = Point(rng.uniform(xmin, xmax), rng.uniform(ymin, ymax))
        if point_in_polygon(p, arr):
            return p
    raise GeometryError("rejection sampling failed; polygon area too thin?")

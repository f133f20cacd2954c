"""Numba-jitted geometry kernels (the default backend).

Same arithmetic, same operation order as _numpy_impl; results are
bit-identical. Compiled objects are cached on disk, so only the first import
in a fresh environment pays the JIT cost.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _point_in_polygon(px: float, py: float, poly: np.ndarray) -> bool:
    n = poly.shape[0]
    inside = False
    for i in range(n):
        ax = poly[i, 0]
        ay = poly[i, 1]
        j = i + 1
        if j == n:
            j = 0
        bx = poly[j, 0]
        by = poly[j, 1]

        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        if cross == 0.0:
            lo_x = ax if ax < bx else bx
            hi_x = ax if ax > bx else bx
            lo_y = ay if ay < by else by
            hi_y = ay if ay > by else by
            if lo_x <= px <= hi_x and lo_y <= py <= hi_y:
                return True

        if (ay > py) != (by > py):
            x_int = ax + (bx - ax) * (py - ay) / (by - ay)
            if px < x_int:
                inside = not inside
    return inside


@njit(cache=True)
def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    n_pts = points.shape[0]
    out = np.empty(n_pts, dtype=np.bool_)
    for k in range(n_pts):
        out[k] = _point_in_polygon(points[k, 0], points[k, 1], poly)
    return out


@njit(cache=True)
def dists_to_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    n_pts = points.shape[0]
    n = poly.shape[0]
    out = np.empty(n_pts, dtype=np.float64)
    for k in range(n_pts):
        px = points[k, 0]
        py = points[k, 1]
        if _point_in_polygon(px, py, poly):
            out[k] = 0.0
            continue
        best = np.inf
        for i in range(n):
            ax = poly[i, 0]
            ay = poly[i, 1]
            j = i + 1
            if j == n:
                j = 0
            vx = poly[j, 0] - ax
            vy = poly[j, 1] - ay
            seg_len2 = vx * vx + vy * vy

            t = ((px - ax) * vx + (py - ay) * vy) / seg_len2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            dx = px - (ax + t * vx)
            dy = py - (ay + t * vy)
            d2 = dx * dx + dy * dy
            if d2 < best:
                best = d2
        out[k] = np.sqrt(best)
    return out

"""Pure-numpy geometry kernels.

Arithmetic here mirrors _numba_impl operation for operation so the two
backends return bit-identical arrays.
"""

from __future__ import annotations

import numpy as np


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    x = points[:, 0:1]  # (n, 1)
    y = points[:, 1:2]
    ax = poly[None, :, 0]  # (1, m)
    ay = poly[None, :, 1]
    bx = np.roll(poly[:, 0], -1)[None, :]
    by = np.roll(poly[:, 1], -1)[None, :]

    cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
    on_edge = (
        (cross == 0.0)
        & (x >= np.minimum(ax, bx))
        & (x <= np.maximum(ax, bx))
        & (y >= np.minimum(ay, by))
        & (y <= np.maximum(ay, by))
    )

    straddles = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_int = ax + (bx - ax) * (y - ay) / (by - ay)
    crossings = (straddles & (x < x_int)).sum(axis=1)

    return on_edge.any(axis=1) | (crossings % 2 == 1)


def dists_to_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    x = points[:, 0:1]
    y = points[:, 1:2]
    ax = poly[None, :, 0]
    ay = poly[None, :, 1]
    vx = np.roll(poly[:, 0], -1)[None, :] - ax
    vy = np.roll(poly[:, 1], -1)[None, :] - ay
    seg_len2 = vx * vx + vy * vy  # zero-length edges rejected upstream

    t = ((x - ax) * vx + (y - ay) * vy) / seg_len2
    t = np.minimum(np.maximum(t, 0.0), 1.0)
    dx = x - (ax + t * vx)
    dy = y - (ay + t * vy)
    min_d2 = (dx * dx + dy * dy).min(axis=1)

    inside = points_in_polygon(points, poly)
    return np.where(inside, 0.0, np.sqrt(min_d2))

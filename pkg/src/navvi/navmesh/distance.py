"""Exact squared Euclidean distance transform over the walkability grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import OccupancyGrid


@dataclass(frozen=True)
class DistanceField:
    """Squared distance (in cells²) to the nearest non-walkable cell.

    Non-walkable cells hold exactly 0.  A grid with no non-walkable cell
    holds ``no_obstacle`` everywhere, which exceeds any realizable value.
    """

    width: int
    depth: int
    values: np.ndarray  # int64, shape (width, depth)
    no_obstacle: int


def _edt_1d_lines(f: np.ndarray, out: np.ndarray, inf: int) -> None:
    """Lower envelope of parabolas per row: out[i, x] = min_q (x-q)² + f[i, q].

    All quantities are integers below 2**53, so float comparisons here are
    exact; this is the standard two-pass squared-EDT second phase.
    """
    n = f.shape[1]
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    for i in range(f.shape[0]):
        row = f[i]
        k = 0
        v[0] = 0
        z[0] = -np.inf
        z[1] = np.inf
        for q in range(1, n):
            fq = row[q] + q * q
            while True:
                vk = v[k]
                s = (fq - (row[vk] + vk * vk)) / (2 * (q - vk))
                if s <= z[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        k = 0
        for x in range(n):
            while z[k + 1] < x:
                k += 1
            d = x - v[k]
            val = d * d + row[v[k]]
            out[i, x] = val if val < inf else inf


def distance_transform(grid: OccupancyGrid) -> DistanceField:
    """Exact integer squared EDT, non-walkable cells as sources."""
    w, d = grid.width, grid.depth
    no_obstacle = w * w + d * d  # beyond any in-grid squared distance

    # Pass 1: per-column linear distance along z to the nearest source,
    # by forward/backward sweeps, then squared.
    big = w + d + 1
    lin = np.full((w, d), big, dtype=np.int64)
    lin[~grid.walkable] = 0
    for iz in range(1, d):
        np.minimum(lin[:, iz], lin[:, iz - 1] + 1, out=lin[:, iz])
    for iz in range(d - 2, -1, -1):
        np.minimum(lin[:, iz], lin[:, iz + 1] + 1, out=lin[:, iz])
    f = lin * lin
    np.minimum(f, no_obstacle, out=f)

    # Pass 2: parabola envelope along x for each z row.
    out = np.empty((w, d), dtype=np.int64)
    _edt_1d_lines(f.T, out.T, no_obstacle)
    return DistanceField(width=w, depth=d, values=out, no_obstacle=no_obstacle)

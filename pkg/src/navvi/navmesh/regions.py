"""Watershed partition of the distance field into near-convex regions."""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .distance import DistanceField

_N4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
_N8 = _N4 + ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class RegionMap:
    """Region id per cell; 0 means non-walkable or unassigned."""

    width: int
    depth: int
    labels: np.ndarray  # int32, shape (width, depth)
    region_count: int


def _label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected component labels in scan order, 1-based."""
    w, d = mask.shape
    labels = np.zeros((w, d), dtype=np.int32)
    count = 0
    for ix, iz in zip(*np.nonzero(mask)):
        if labels[ix, iz]:
            continue
        count += 1
        labels[ix, iz] = count
        queue = deque(((int(ix), int(iz)),))
        while queue:
            cx, cz = queue.popleft()
            for dx, dz in _N4:
                nx, nz = cx + dx, cz + dz
                if 0 <= nx < w and 0 <= nz < d and mask[nx, nz] and not labels[nx, nz]:
                    labels[nx, nz] = count
                    queue.append((nx, nz))
    return labels, count


def _shifted(a: np.ndarray, dx: int, dz: int, fill) -> np.ndarray:
    """a sampled at (ix+dx, iz+dz), out-of-grid cells read as fill."""
    w, d = a.shape
    out = np.full((w, d), fill, dtype=a.dtype)
    sx = slice(max(0, -dx), min(w, w - dx))
    sz = slice(max(0, -dz), min(d, d - dz))
    tx = slice(max(0, dx), min(w, w + dx))
    tz = slice(max(0, dz), min(d, d + dz))
    out[sx, sz] = a[tx, tz]
    return out


def watershed_partition(field: DistanceField) -> RegionMap:
    """Priority-flood from the distance field's local maxima.

    Seeds are 4-connected plateaus of cells that are >= every walkable
    8-neighbor within the same connected component (so every component
    seeds at least one region).  Flooding claims cells in decreasing
    distance order through 4-neighbors only, which keeps each region
    4-connected; ties go to the lower region id.
    """
    values = field.values
    walkable = values > 0
    w, d = field.width, field.depth

    comp, _ = _label_components(walkable)
    is_max = walkable.copy()
    for dx, dz in _N8:
        nb_val = _shifted(values, dx, dz, 0)
        nb_comp = _shifted(comp, dx, dz, 0)
        rival = np.where(nb_comp == comp, nb_val, 0)
        is_max &= values >= rival

    seeds, region_count = _label_components(is_max)
    labels = seeds.copy()

    heap = [
        (-int(values[ix, iz]), int(seeds[ix, iz]), int(ix), int(iz))
        for ix, iz in zip(*np.nonzero(seeds))
    ]
    heapq.heapify(heap)
    expanded = np.zeros((w, d), dtype=bool)
    while heap:
        _, rid, ix, iz = heapq.heappop(heap)
        cur = labels[ix, iz]
        if cur == 0:
            labels[ix, iz] = rid
        elif cur != rid or expanded[ix, iz]:
            continue  # claimed by a lower id first, or already expanded
        expanded[ix, iz] = True
        for dx, dz in _N4:
            nx, nz = ix + dx, iz + dz
            if 0 <= nx < w and 0 <= nz < d and walkable[nx, nz] and not labels[nx, nz]:
                heapq.heappush(heap, (-int(values[nx, nz]), rid, nx, nz))

    return RegionMap(width=w, depth=d, labels=labels, region_count=region_count)

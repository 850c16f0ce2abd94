"""Walkability grid: scene rasterization and agent-radius erosion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import Point
from ..world_model import SceneDescription

DEFAULT_CELL_SIZE = 0.20
# Boundary ties are resolved toward -x/-z by nudging sample points, so cell
# counts do not flicker when footprints land exactly on cell centers.
RASTER_EPS = 1e-9
CELL_COUNT_CAP = 4_000_000


class CapacityError(Exception):
    """Scene exceeds the configured rasterization cell budget."""


@dataclass(frozen=True)
class OccupancyGrid:
    """Boolean walkability per cell; walkable[ix, iz], x-major."""

    cell_size: float
    origin: Point  # world position of the grid's (0, 0) corner
    width: int
    depth: int
    walkable: np.ndarray  # bool, shape (width, depth)

    def cell_center(self, ix: int, iz: int) -> Point:
        return (
            self.origin[0] + (ix + 0.5) * self.cell_size,
            self.origin[1] + (iz + 0.5) * self.cell_size,
        )

    def cell_of(self, p: Point) -> tuple[int, int]:
        return (
            int(math.floor((p[0] - self.origin[0]) / self.cell_size)),
            int(math.floor((p[1] - self.origin[1]) / self.cell_size)),
        )

    def in_bounds(self, ix: int, iz: int) -> bool:
        return 0 <= ix < self.width and 0 <= iz < self.depth


def _convex_mask(grid_x: np.ndarray, grid_z: np.ndarray, footprint: tuple[Point, ...]) -> np.ndarray:
    """Cells whose (nudged) centers lie inside a convex CCW polygon."""
    inside = np.ones(grid_x.shape, dtype=bool)
    n = len(footprint)
    for i in range(n):
        ax, az = footprint[i]
        bx, bz = footprint[(i + 1) % n]
        # Inside a CCW polygon means left of (or on) every directed edge.
        inside &= (bx - ax) * (grid_z - az) - (bz - az) * (grid_x - ax) >= 0.0
    return inside


def rasterize(
    scene: SceneDescription,
    cell_size: float = DEFAULT_CELL_SIZE,
    extra_discs: tuple[tuple[Point, float], ...] = (),
    cell_cap: int = CELL_COUNT_CAP,
) -> OccupancyGrid:
    """Grid over the floor; a cell is non-walkable iff its center falls
    inside a static footprint (or one of the extra discs).

    The floor is planar, so the build's slope filter is vacuously satisfied;
    that fact is recorded in the bake metadata rather than checked per cell.
    ``extra_discs`` lets a rebuild treat carve volumes as static obstacles.
    """
    fb = scene.floor_bounds
    width = max(1, int(math.ceil(fb.width / cell_size - 1e-9)))
    depth = max(1, int(math.ceil(fb.depth / cell_size - 1e-9)))
    if width * depth > cell_cap:
        raise CapacityError(
            f"grid {width}x{depth} exceeds cap of {cell_cap} cells"
        )

    cx = fb.x + (np.arange(width) + 0.5) * cell_size + RASTER_EPS
    cz = fb.z + (np.arange(depth) + 0.5) * cell_size + RASTER_EPS
    grid_x, grid_z = np.meshgrid(cx, cz, indexing="ij")

    walkable = np.ones((width, depth), dtype=bool)
    for s in scene.statics:
        walkable &= ~_convex_mask(grid_x, grid_z, s.footprint)
    for center, radius in extra_discs:
        d2 = (grid_x - center[0]) ** 2 + (grid_z - center[1]) ** 2
        walkable &= d2 > radius * radius

    return OccupancyGrid(
        cell_size=cell_size,
        origin=(fb.x, fb.z),
        width=width,
        depth=depth,
        walkable=walkable,
    )


def erosion_radius_cells(agent_radius: float, cell_size: float) -> int:
    """r = ceil(agent_radius / cell_size), guarded against float dust."""
    return int(math.ceil(round(agent_radius / cell_size, 9)))


def _shift(a: np.ndarray, steps: int, axis: int) -> np.ndarray:
    """Shift with False fill; cells outside the grid count as non-walkable."""
    out = np.zeros_like(a)
    if steps == 0:
        return a.copy()
    src = [slice(None), slice(None)]
    dst = [slice(None), slice(None)]
    if steps > 0:
        src[axis] = slice(None, -steps)
        dst[axis] = slice(steps, None)
    else:
        src[axis] = slice(-steps, None)
        dst[axis] = slice(None, steps)
    out[tuple(dst)] = a[tuple(src)]
    return out


def erode(grid: OccupancyGrid, agent_radius: float) -> OccupancyGrid:
    """Morphological erosion by a Chebyshev square of radius r cells.

    A cell survives iff it and every cell within Chebyshev distance r were
    walkable; corridors narrower than twice the agent radius disappear.
    Never turns a non-walkable cell walkable.
    """
    if agent_radius < 0:
        raise ValueError("agent_radius must be non-negative")
    r = erosion_radius_cells(agent_radius, grid.cell_size)
    if r == 0:
        return OccupancyGrid(
            grid.cell_size, grid.origin, grid.width, grid.depth, grid.walkable.copy()
        )
    out = grid.walkable
    for axis in (0, 1):
        acc = out.copy()
        for s in range(1, r + 1):
            acc &= _shift(out, s, axis)
            acc &= _shift(out, -s, axis)
        out = acc
    return OccupancyGrid(grid.cell_size, grid.origin, grid.width, grid.depth, out)

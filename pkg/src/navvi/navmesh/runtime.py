"""Runtime navmesh maintenance: carve volumes, blocking, periodic rebuild."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import Point, dist_point_triangle
from ..world_model import SceneDescription
from .distance import distance_transform
from .grid import erode, erosion_radius_cells, rasterize
from .mesh import NavMesh, triangulate_regions
from .regions import watershed_partition

REBUILD_CHECK_PERIOD = 2.0
REBUILD_AREA_THRESHOLD = 0.01
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class CarveVolume:
    """Disc carved out of walkable space under a dynamic agent."""

    center: Point
    radius: float
    owner: str


def bake(
    scene: SceneDescription,
    cell_size: float = 0.20,
    extra_discs: tuple[tuple[Point, float], ...] = (),
) -> NavMesh:
    """Full build pipeline; extra_discs bakes carve volumes in as statics."""
    grid = rasterize(scene, cell_size, extra_discs)
    eroded = erode(grid, scene.robot.radius)
    field_ = distance_transform(eroded)
    region_map = watershed_partition(field_)
    metadata = {
        "cell_size": cell_size,
        "erosion_radius_cells": erosion_radius_cells(scene.robot.radius, cell_size),
        "agent_radius": scene.robot.radius,
        "carves_baked": len(extra_discs),
        # The floor is a single flat plane, so the walkable-slope limit
        # cannot reject anything; noted so downstream readers know why
        # no slope data appears here.
        "slope_filter": "vacuous (planar floor)",
    }
    return triangulate_regions(region_map, eroded, metadata)


@dataclass
class NavMeshRuntime:
    """Single-writer wrapper: carve bookkeeping plus the rebuild policy.

    Between rebuilds carves only mark whole triangles blocked; the exact
    hole geometry is restored at each rebuild, which re-rasterizes the
    scene with the current carve discs as static obstacles.
    """

    scene: SceneDescription
    mesh: NavMesh
    cell_size: float
    agent_radius: float
    carves: dict[str, CarveVolume] = field(default_factory=dict)
    changed_area_accumulator: float = 0.0
    last_rebuild_check: float = 0.0
    blocked_by: dict[str, frozenset[int]] = field(default_factory=dict)
    _blocked_count: dict[int, int] = field(default_factory=dict)
    _centroids_np: np.ndarray | None = None
    _bounds_np: np.ndarray | None = None

    def __post_init__(self) -> None:
        self._refresh_accel()

    def _refresh_accel(self) -> None:
        if self.mesh.triangles:
            cents = np.asarray(self.mesh.centroids, dtype=np.float64)
            bounds = np.zeros(len(self.mesh.triangles), dtype=np.float64)
            for t in range(len(self.mesh.triangles)):
                cx, cz = self.mesh.centroids[t]
                bounds[t] = max(
                    ((vx - cx) ** 2 + (vz - cz) ** 2) ** 0.5
                    for vx, vz in self.mesh.triangle_points(t)
                )
            self._centroids_np = cents
            self._bounds_np = bounds
        else:
            self._centroids_np = None
            self._bounds_np = None

    def is_blocked(self, t: int) -> bool:
        return self._blocked_count.get(t, 0) > 0

    def blocked_triangles(self) -> frozenset[int]:
        return frozenset(t for t, n in self._blocked_count.items() if n > 0)

    def _carve_triangles(self, carve: CarveVolume) -> frozenset[int]:
        """Triangles within the carve disc inflated by the robot radius."""
        if self._centroids_np is None:
            return frozenset()
        reach = carve.radius + self.agent_radius
        d = self._centroids_np - np.array(carve.center, dtype=np.float64)
        near = np.nonzero((d[:, 0] ** 2 + d[:, 1] ** 2) ** 0.5 <= self._bounds_np + reach)[0]
        hit = []
        for t in near.tolist():
            a, b, c = self.mesh.triangle_points(t)
            if dist_point_triangle(carve.center, a, b, c) <= reach:
                hit.append(t)
        return frozenset(hit)

    def _swap_blocked(self, owner: str, new: frozenset[int]) -> None:
        old = self.blocked_by.get(owner, frozenset())
        if new == old:
            return
        flipped_area = 0.0
        for t in old - new:
            n = self._blocked_count[t] - 1
            self._blocked_count[t] = n
            if n == 0:
                flipped_area += self.mesh.areas[t]
        for t in new - old:
            n = self._blocked_count.get(t, 0) + 1
            self._blocked_count[t] = n
            if n == 1:
                flipped_area += self.mesh.areas[t]
        if new:
            self.blocked_by[owner] = new
        else:
            self.blocked_by.pop(owner, None)
        if self.mesh.total_area > 0:
            self.changed_area_accumulator += flipped_area / self.mesh.total_area

    def apply_carve(self, carve: CarveVolume) -> None:
        """Register or move a carve; accumulates the blocked-area delta."""
        if carve.radius <= 0:
            raise ValueError("carve radius must be positive")
        self.carves[carve.owner] = carve
        self._swap_blocked(carve.owner, self._carve_triangles(carve))

    def remove_carve(self, owner: str) -> None:
        if owner not in self.carves:
            return
        del self.carves[owner]
        self._swap_blocked(owner, frozenset())

    def rebuild_if_due(self, now: float) -> bool:
        """Every 2 s, rebuild when more than 1% of walkable area changed."""
        if now - self.last_rebuild_check < REBUILD_CHECK_PERIOD - _TIME_EPS:
            return False
        self.last_rebuild_check = now
        if self.changed_area_accumulator <= REBUILD_AREA_THRESHOLD:
            return False
        discs = tuple(
            (self.carves[owner].center, self.carves[owner].radius)
            for owner in sorted(self.carves)
        )
        self.mesh = bake(self.scene, self.cell_size, discs)
        self._refresh_accel()
        # Holes are now part of the geometry; re-derive the marker sets
        # against the fresh mesh without counting that as new change.
        self.blocked_by = {}
        self._blocked_count = {}
        for owner in sorted(self.carves):
            new = self._carve_triangles(self.carves[owner])
            if new:
                self.blocked_by[owner] = new
                for t in new:
                    self._blocked_count[t] = self._blocked_count.get(t, 0) + 1
        self.changed_area_accumulator = 0.0
        return True


def new_runtime(scene: SceneDescription, cell_size: float = 0.20) -> NavMeshRuntime:
    mesh = bake(scene, cell_size)
    return NavMeshRuntime(
        scene=scene,
        mesh=mesh,
        cell_size=cell_size,
        agent_radius=scene.robot.radius,
    )

"""Navigation mesh assembly: triangles, portal adjacency, point location."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Point, dist_point_triangle, point_in_triangle
from .contours import trace_contours
from .grid import OccupancyGrid
from .regions import RegionMap
from .triangulate import TriangulationError, _orient, triangulate_polygon


class EmptyMeshError(Exception):
    """Point queries against a mesh with no triangles."""


@dataclass(frozen=True)
class LocateResult:
    triangle: int
    on_mesh: bool
    distance: float  # 0 when on mesh, else distance to the nearest triangle


@dataclass
class NavMesh:
    """Triangulated walkable space with portal adjacency.

    ``neighbors[t]`` holds ``(other, left, right)`` per portal: crossing
    from t into other passes between vertex ``left`` and vertex ``right``
    (seen from t's direction of travel), which is what the funnel consumes.
    """

    cell_size: float
    origin: Point
    vertices_lattice: list[tuple[int, int]]
    vertices: list[Point]
    triangles: list[tuple[int, int, int]]
    tri_region: list[int]
    neighbors: list[list[tuple[int, int, int]]]
    centroids: list[Point]
    areas: list[float]
    total_area: float
    region_count: int
    metadata: dict
    region_tris: dict[int, list[int]] = field(default_factory=dict)
    grid: OccupancyGrid | None = None
    regions: RegionMap | None = None
    _corners: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def triangle_points(self, t: int) -> tuple[Point, Point, Point]:
        i, j, k = self.triangles[t]
        return (self.vertices[i], self.vertices[j], self.vertices[k])

    def corner_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-triangle vertex coordinates as three (n, 2) arrays."""
        if self._corners is None:
            pts = np.asarray(self.vertices, dtype=np.float64)
            tris = np.asarray(self.triangles, dtype=np.intp)
            self._corners = (pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]])
        return self._corners

    def locate(self, p: Point) -> LocateResult:
        """Containing triangle, or the nearest one with on_mesh=False."""
        if not self.triangles:
            raise EmptyMeshError("mesh has no triangles")
        if self.grid is not None and self.regions is not None:
            ix, iz = self.grid.cell_of(p)
            if self.grid.in_bounds(ix, iz):
                region = int(self.regions.labels[ix, iz])
                if region > 0:
                    for t in self.region_tris.get(region, ()):
                        a, b, c = self.triangle_points(t)
                        if point_in_triangle(p, a, b, c):
                            return LocateResult(t, True, 0.0)
        t, d = nearest_triangle(self, p)
        return LocateResult(t, d == 0.0, d)

    def to_dict(self) -> dict:
        portals = []
        for t, adj in enumerate(self.neighbors):
            for other, left, right in adj:
                if t < other:
                    portals.append([t, other, left, right])
        portals.sort()
        return {
            "cell_size": self.cell_size,
            "origin": list(self.origin),
            "vertices": [list(v) for v in self.vertices_lattice],
            "triangles": [list(t) for t in self.triangles],
            "tri_region": list(self.tri_region),
            "portals": portals,
            "metadata": self.metadata,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _edge_distance_sq(px: float, pz: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    abx = b[:, 0] - a[:, 0]
    abz = b[:, 1] - a[:, 1]
    apx = px - a[:, 0]
    apz = pz - a[:, 1]
    denom = abx * abx + abz * abz
    t = np.clip((apx * abx + apz * abz) / np.where(denom > 0.0, denom, 1.0), 0.0, 1.0)
    dx = apx - t * abx
    dz = apz - t * abz
    return dx * dx + dz * dz


def nearest_triangle(
    mesh: NavMesh, p: Point, keep: np.ndarray | None = None
) -> tuple[int, float]:
    """Index and distance of the nearest triangle, optionally masked by keep.

    Selection runs on vectorized squared distances; the winner is re-measured
    with the scalar helper so the reported distance matches a plain loop.
    Returns (-1, inf) when the mask excludes everything.
    """
    a, b, c = mesh.corner_arrays()
    px, pz = p
    d2 = np.minimum(
        _edge_distance_sq(px, pz, a, b),
        np.minimum(_edge_distance_sq(px, pz, b, c), _edge_distance_sq(px, pz, c, a)),
    )
    inside = (
        ((b[:, 0] - a[:, 0]) * (pz - a[:, 1]) - (b[:, 1] - a[:, 1]) * (px - a[:, 0]) >= 0.0)
        & ((c[:, 0] - b[:, 0]) * (pz - b[:, 1]) - (c[:, 1] - b[:, 1]) * (px - b[:, 0]) >= 0.0)
        & ((a[:, 0] - c[:, 0]) * (pz - c[:, 1]) - (a[:, 1] - c[:, 1]) * (px - c[:, 0]) >= 0.0)
    )
    d2 = np.where(inside, 0.0, d2)
    if keep is not None:
        d2 = np.where(keep, d2, np.inf)
    t = int(np.argmin(d2))
    if not np.isfinite(d2[t]):
        return -1, float("inf")
    return t, dist_point_triangle(p, *mesh.triangle_points(t))


def _assemble(
    coord_triangles: list[tuple[tuple, tuple, tuple]],
    tri_region: list[int],
    cell_size: float,
    origin: Point,
    region_count: int,
    metadata: dict,
    grid: OccupancyGrid | None,
    regions: RegionMap | None,
) -> NavMesh:
    vertex_ids: dict[tuple[int, int], int] = {}
    vertices_lattice: list[tuple[int, int]] = []
    triangles: list[tuple[int, int, int]] = []
    for a, b, c in coord_triangles:
        idxs = []
        for coord in (a, b, c):
            vid = vertex_ids.get(coord)
            if vid is None:
                vid = len(vertices_lattice)
                vertex_ids[coord] = vid
                vertices_lattice.append(coord)
            idxs.append(vid)
        triangles.append(tuple(idxs))

    vertices = [
        (origin[0] + ix * cell_size, origin[1] + iz * cell_size)
        for ix, iz in vertices_lattice
    ]

    edge_map: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for t, (i, j, k) in enumerate(triangles):
        for u, v in ((i, j), (j, k), (k, i)):
            edge_map.setdefault((min(u, v), max(u, v)), []).append((t, u, v))

    neighbors: list[list[tuple[int, int, int]]] = [[] for _ in triangles]
    for key, entries in edge_map.items():
        if len(entries) == 1:
            continue
        if len(entries) > 2:
            raise TriangulationError(f"edge {key} shared by {len(entries)} triangles")
        (t1, u1, v1), (t2, u2, v2) = entries
        if (u1, v1) != (v2, u2):
            raise TriangulationError(f"edge {key} has inconsistent winding")
        # Crossing t1 -> t2 passes the directed edge u1 -> v1 of t1, so the
        # far side of the portal has v1 on the traveller's left.
        neighbors[t1].append((t2, v1, u1))
        neighbors[t2].append((t1, v2, u2))

    centroids = []
    areas = []
    for t, (i, j, k) in enumerate(triangles):
        ax, az = vertices[i]
        bx, bz = vertices[j]
        cx, cz = vertices[k]
        centroids.append(((ax + bx + cx) / 3.0, (az + bz + cz) / 3.0))
        lat = (vertices_lattice[i], vertices_lattice[j], vertices_lattice[k])
        areas.append(_orient(*lat) * 0.5 * cell_size * cell_size)

    region_tris: dict[int, list[int]] = {}
    for t, r in enumerate(tri_region):
        region_tris.setdefault(r, []).append(t)

    return NavMesh(
        cell_size=cell_size,
        origin=origin,
        vertices_lattice=vertices_lattice,
        vertices=vertices,
        triangles=triangles,
        tri_region=tri_region,
        neighbors=neighbors,
        centroids=centroids,
        areas=areas,
        total_area=sum(areas),
        region_count=region_count,
        metadata=metadata,
        region_tris=region_tris,
        grid=grid,
        regions=regions,
    )


def triangulate_regions(
    regions: RegionMap,
    grid: OccupancyGrid,
    metadata: dict | None = None,
) -> NavMesh:
    """Contours -> triangles -> portal graph, with exact area verification."""
    polygons = trace_contours(regions)
    coord_triangles = []
    tri_region = []
    for poly in polygons:
        for tri in triangulate_polygon(poly):
            coord_triangles.append(tri)
            tri_region.append(poly.region)

    walkable_cells = int(np.count_nonzero(regions.labels > 0))
    got2 = sum(_orient(a, b, c) for a, b, c in coord_triangles)
    if got2 != 2 * walkable_cells:
        raise TriangulationError(
            f"mesh covers {got2}/2 cells, grid has {walkable_cells} walkable"
        )

    meta = dict(metadata or {})
    meta.setdefault("cell_size", grid.cell_size)
    meta.setdefault("region_count", regions.region_count)
    meta.setdefault("walkable_cells", walkable_cells)

    return _assemble(
        coord_triangles,
        tri_region,
        grid.cell_size,
        grid.origin,
        regions.region_count,
        meta,
        grid,
        regions,
    )

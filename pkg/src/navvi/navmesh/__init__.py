"""Navigation mesh pipeline: occupancy grid to triangles to runtime carves."""

from .contours import RegionPolygon, Ring, trace_contours
from .distance import DistanceField, distance_transform
from .grid import CapacityError, OccupancyGrid, erode, erosion_radius_cells, rasterize
from .mesh import (
    EmptyMeshError,
    LocateResult,
    NavMesh,
    nearest_triangle,
    triangulate_regions,
)
from .regions import RegionMap, watershed_partition
from .runtime import (
    REBUILD_AREA_THRESHOLD,
    REBUILD_CHECK_PERIOD,
    CarveVolume,
    NavMeshRuntime,
    bake,
    new_runtime,
)
from .triangulate import TriangulationError, triangulate_polygon

__all__ = [
    "CapacityError",
    "CarveVolume",
    "DistanceField",
    "EmptyMeshError",
    "LocateResult",
    "NavMesh",
    "NavMeshRuntime",
    "OccupancyGrid",
    "REBUILD_AREA_THRESHOLD",
    "REBUILD_CHECK_PERIOD",
    "RegionMap",
    "RegionPolygon",
    "Ring",
    "TriangulationError",
    "bake",
    "distance_transform",
    "erode",
    "erosion_radius_cells",
    "nearest_triangle",
    "new_runtime",
    "rasterize",
    "trace_contours",
    "triangulate_polygon",
    "triangulate_regions",
    "watershed_partition",
]

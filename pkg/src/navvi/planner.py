"""Route planning: A* over triangle centroids, funnel smoothing, replan policy."""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    Point,
    closest_point_on_polygon,
    dist,
    dist_point_segment,
    point_in_triangle,
)
from .navmesh import NavMesh, NavMeshRuntime, nearest_triangle
from .world_model import GoalSpec

_TIME_EPS = 1e-9


class Unreachable(Exception):
    """No unblocked route exists between the requested endpoints."""


@dataclass(frozen=True)
class PlannerConfig:
    heuristic_scale: float = 1.0  # admissible while <= 1
    replan_period: float = 2.0
    stuck_speed: float = 0.1
    stuck_duration: float = 1.0
    waypoint_radius: float = 1.0
    obstacle_check_radius: float = 5.0
    # Event triggers hold off this long after any plan so a condition that
    # a replan cannot cure does not refire every tick.
    min_replan_interval: float = 0.5
    # Goals farther than this from any unblocked triangle are rejected;
    # keeps goals inside footprints unreachable while absorbing float seams.
    goal_projection_tolerance: float = 0.05


@dataclass(frozen=True)
class PlanStats:
    nodes_expanded: int
    query_time: float  # wall-clock; excluded from logs and determinism checks


@dataclass(frozen=True)
class PathCorridor:
    triangles: tuple[int, ...]
    portals: tuple[tuple[int, int], ...]  # (left, right) vertex ids per crossing


@dataclass(frozen=True)
class Path:
    waypoints: tuple[Point, ...]
    current_index: int
    total_cost: float

    def remaining(self, from_pos: Point) -> list[tuple[Point, Point]]:
        """Segments still ahead of the robot, starting at its position."""
        pts = [from_pos, *self.waypoints[self.current_index :]]
        return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]


class NavGraph:
    """Triangle-centroid graph over unblocked portals; costs are symmetric."""

    def __init__(self, mesh: NavMesh, blocked: frozenset[int] = frozenset()):
        self.mesh = mesh
        self.blocked = blocked

    def centroid(self, t: int) -> Point:
        return self.mesh.centroids[t]

    def neighbors(self, t: int):
        cents = self.mesh.centroids
        ct = cents[t]
        for other, _left, _right in self.mesh.neighbors[t]:
            if other not in self.blocked:
                yield other, dist(ct, cents[other])


def astar(
    graph: NavGraph,
    start: int,
    goal_tri: int,
    goal_point: Point,
    config: PlannerConfig,
) -> tuple[PathCorridor, PlanStats]:
    """Minimum-cost corridor; ties on f broken by smaller h, then node id."""
    t0 = time.perf_counter()
    alpha = config.heuristic_scale

    def h(t: int) -> float:
        return alpha * dist(graph.centroid(t), goal_point)

    g = {start: 0.0}
    parent: dict[int, int] = {}
    closed: set[int] = set()
    h0 = h(start)
    open_heap = [(h0, h0, start)]
    expanded = 0
    while open_heap:
        _f, _h, node = heapq.heappop(open_heap)
        if node in closed:
            continue
        closed.add(node)
        expanded += 1
        if node == goal_tri:
            tris = [node]
            while tris[-1] in parent:
                tris.append(parent[tris[-1]])
            tris.reverse()
            portals = []
            for a, b in zip(tris, tris[1:]):
                entry = next(e for e in graph.mesh.neighbors[a] if e[0] == b)
                portals.append((entry[1], entry[2]))
            stats = PlanStats(expanded, time.perf_counter() - t0)
            return PathCorridor(tuple(tris), tuple(portals)), stats
        base = g[node]
        for other, cost in graph.neighbors(node):
            ng = base + cost
            if ng < g.get(other, math.inf):
                g[other] = ng
                parent[other] = node
                nh = h(other)
                heapq.heappush(open_heap, (ng + nh, nh, other))
    raise Unreachable(f"no route from triangle {start} to {goal_tri}")


def _cross(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def funnel(mesh: NavMesh, corridor: PathCorridor, start: Point, goal: Point) -> Path:
    """Simple string pulling through the portal sequence; O(k) passes."""
    portals: list[tuple[Point, Point]] = [(start, start)]
    for left_id, right_id in corridor.portals:
        portals.append((mesh.vertices[left_id], mesh.vertices[right_id]))
    portals.append((goal, goal))

    waypoints = [start]
    apex = start
    apex_i = 0
    left, right = start, start
    left_i = right_i = 0

    i = 1
    while i < len(portals):
        cand_left, cand_right = portals[i]
        # Right side: candidates may only swing the boundary inward (leftward).
        if _cross(apex, right, cand_right) >= 0.0:
            if apex == right or _cross(apex, left, cand_right) < 0.0:
                right, right_i = cand_right, i
            else:
                # Right boundary crossed the left one: left corner is taut.
                if left != waypoints[-1]:
                    waypoints.append(left)
                apex, apex_i = left, left_i
                left = right = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        if _cross(apex, left, cand_left) <= 0.0:
            if apex == left or _cross(apex, right, cand_left) > 0.0:
                left, left_i = cand_left, i
            else:
                if right != waypoints[-1]:
                    waypoints.append(right)
                apex, apex_i = right, right_i
                left = right = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        i += 1

    if waypoints[-1] != goal:
        waypoints.append(goal)
    total = sum(dist(a, b) for a, b in zip(waypoints, waypoints[1:]))
    return Path(tuple(waypoints), 0, total)


def advance_waypoint(
    rt: NavMeshRuntime, path: Path, robot_pos: Point, config: PlannerConfig
) -> Path:
    """Consume waypoints within the advance radius; the goal never advances.

    Early advancement shortcuts the corner, so it only happens when the
    direct chord to the next waypoint stays on walkable ground; otherwise
    the controller keeps steering for the corner itself, advancing once the
    capture radius is reached (path legs are walkable by construction).
    """
    capture = rt.cell_size
    idx = path.current_index
    last = len(path.waypoints) - 1
    while idx < last:
        d = dist(robot_pos, path.waypoints[idx])
        if d >= config.waypoint_radius:
            break
        if d >= capture and not _chord_walkable(rt, robot_pos, path.waypoints[idx + 1]):
            break
        idx += 1
    if idx == path.current_index:
        return path
    return replace(path, current_index=idx)


def _chord_walkable(rt: NavMeshRuntime, a: Point, b: Point) -> bool:
    """Segment stays on buffered walkable ground, sampled at half-cell steps.

    The one-cell buffer keeps shortcut chords a cell farther from footprints
    than the bare mesh requires; eroded boundaries can sit closer to a
    footprint than the hull radius, so cutting right along them is a contact.
    """
    length = dist(a, b)
    steps = max(1, int(math.ceil(length / (rt.cell_size * 0.5))))
    for k in range(steps + 1):
        t = k / steps
        p = (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)
        if not _walkable_near(rt, p, buffer=1):
            return False
    return True


def _walkable_near(rt: NavMeshRuntime, p: Point, buffer: int = 0) -> bool:
    """Grid walkability with a nudge so exact lattice corners don't flicker.

    With a buffer, every in-bounds cell within that Chebyshev distance must
    be walkable too; cells beyond the grid edge have nothing to hit and pass.
    """
    grid = rt.mesh.grid
    if grid is None:
        return True
    eps = 1e-9
    for dx in (-eps, eps):
        for dz in (-eps, eps):
            ix, iz = grid.cell_of((p[0] + dx, p[1] + dz))
            if not (grid.in_bounds(ix, iz) and grid.walkable[ix, iz]):
                continue
            ok = True
            for nx in range(ix - buffer, ix + buffer + 1):
                for nz in range(iz - buffer, iz + buffer + 1):
                    if grid.in_bounds(nx, nz) and not grid.walkable[nx, nz]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return True
    return False


def path_blocked(rt: NavMeshRuntime, path: Path, robot_pos: Point) -> bool:
    """The waypoints ahead run through a carve disc or off the baked mesh.

    Dynamic agents are tested as discs, not via the triangles they blanket:
    triangle blocking is as coarse as the mesh is, and one forklift on a big
    open-floor triangle must not poison every line across it.  The chord from
    the robot to its current waypoint skips discs already holding the robot,
    since a replan cannot change where the robot stands.
    """
    clear = [
        (rt.carves[owner].center, rt.carves[owner].radius + rt.agent_radius)
        for owner in sorted(rt.carves)
    ]
    chain = path.waypoints[path.current_index :]
    if chain:
        first = chain[0]
        for center, reach in clear:
            if dist(center, robot_pos) <= reach:
                continue
            if dist_point_segment(center, robot_pos, first) < reach:
                return True
    for a, b in zip(chain, chain[1:]):
        if any(dist_point_segment(c, a, b) < reach for c, reach in clear):
            return True
        # Rebuilt holes live only in the baked grid; sample along the leg.
        if not _chord_walkable(rt, a, b):
            return True
    return False


def needs_replan(
    rt: NavMeshRuntime,
    path: Path,
    robot_pos: Point,
    now: float,
    last_plan_time: float,
    slow_since: float | None,
    obstacles: list[tuple[str, Point, float]],
    config: PlannerConfig,
) -> tuple[bool, str | None]:
    """Most specific reason first: invalidation, stuck, proximity, periodic."""
    events_ready = now - last_plan_time >= config.min_replan_interval - _TIME_EPS
    if events_ready:
        segments = path.remaining(robot_pos)
        if path_blocked(rt, path, robot_pos):
            return True, "path_invalidated"
        if slow_since is not None and now - slow_since > config.stuck_duration:
            return True, "stuck"
        for _oid, center, radius in obstacles:
            if dist(center, robot_pos) >= config.obstacle_check_radius:
                continue
            clearance = radius + rt.agent_radius
            if any(
                dist_point_segment(center, a, b) < clearance for a, b in segments
            ):
                return True, "proximity"
    if now - last_plan_time >= config.replan_period - _TIME_EPS:
        return True, "periodic"
    return False, None


def _project(
    mesh: NavMesh,
    blocked: frozenset[int],
    p: Point,
    tolerance: float | None,
) -> tuple[int, Point]:
    """Triangle for p, projecting to the nearest unblocked one if needed."""
    loc = mesh.locate(p)
    if loc.on_mesh and loc.triangle not in blocked:
        return loc.triangle, p
    keep = None
    if blocked:
        keep = np.ones(len(mesh.triangles), dtype=bool)
        keep[list(blocked)] = False
    best_t, best_d = nearest_triangle(mesh, p, keep)
    if best_t < 0:
        raise Unreachable("every triangle is blocked")
    if tolerance is not None and best_d > tolerance:
        raise Unreachable(f"goal is {best_d:.3f} m off the walkable mesh")
    tri = mesh.triangle_points(best_t)
    if point_in_triangle(p, *tri):
        return best_t, p
    return best_t, closest_point_on_polygon(p, tri)


def plan(
    rt: NavMeshRuntime,
    start: Point,
    goal: GoalSpec,
    config: PlannerConfig,
) -> tuple[Path, PlanStats]:
    """locate -> astar -> funnel; avoids every currently blocked triangle."""
    mesh = rt.mesh
    if not mesh.triangles:
        raise Unreachable("navmesh is empty")
    blocked = rt.blocked_triangles()
    start_tri, start_pt = _project(mesh, blocked, start, None)
    goal_tri, goal_pt = _project(
        mesh, blocked, goal.position, config.goal_projection_tolerance
    )
    corridor, stats = astar(NavGraph(mesh, blocked), start_tri, goal_tri, goal_pt, config)
    path = funnel(mesh, corridor, start_pt, goal_pt)
    return path, stats

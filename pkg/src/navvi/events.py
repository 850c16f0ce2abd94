"""Contact and proximity detection, session counters, CSV event log."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .geometry import Point, dist, dist_point_polygon, point_in_polygon
from .world_model import SceneDescription, GoalSpec, StaticObstacle

EVENT_KINDS = (
    "proximity_obstacle",
    "proximity_shelf",
    "collision_obstacle",
    "collision_shelf",
    "goal_reached",
    "replan",
    "cue_emitted",
)

CSV_COLUMNS = (
    "t_s",
    "event_kind",
    "robot_x_m",
    "robot_z_m",
    "detail",
    "shelf_collisions_cum",
    "obstacle_collisions_cum",
)


def category_of(static: StaticObstacle) -> str:
    """Shelves get their own feedback channel; all else is an obstacle."""
    return "shelf" if static.category == "shelf" else "obstacle"


@dataclass(frozen=True)
class InteractionEvent:
    kind: str
    t: float
    robot_pos: Point
    detail: str = ""

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass
class SessionLog:
    start_time: float = 0.0
    events: list[InteractionEvent] = field(default_factory=list)
    shelf_collision_count: int = 0
    obstacle_collision_count: int = 0
    goal_time: float | None = None
    status: str = "running"

    @property
    def elapsed(self) -> float | None:
        if self.goal_time is None:
            return None
        return self.goal_time - self.start_time


def distance_to_static(pos: Point, static: StaticObstacle) -> float:
    """Distance from a point to a footprint; zero anywhere inside it."""
    if point_in_polygon(pos, static.footprint):
        return 0.0
    return dist_point_polygon(pos, static.footprint)


AgentDisc = tuple[str, Point, float]  # id, center, radius


def detect_contacts(
    robot_pos: Point,
    robot_radius: float,
    scene: SceneDescription,
    agent_discs: list[AgentDisc],
) -> list[tuple[str, str]]:
    """(id, category) for every entity the robot disc currently overlaps."""
    out: list[tuple[str, str]] = []
    for static in scene.statics:
        if distance_to_static(robot_pos, static) < robot_radius:
            out.append((static.id, category_of(static)))
    for oid, center, radius in agent_discs:
        if dist(robot_pos, center) < robot_radius + radius:
            out.append((oid, "obstacle"))
    return out


def detect_proximity(
    robot_pos: Point,
    robot_radius: float,
    scene: SceneDescription,
    agent_discs: list[AgentDisc],
    radius: float,
) -> list[tuple[str, float, str]]:
    """(id, surface distance, category) within radius, nearest first."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    out: list[tuple[str, float, str]] = []
    for static in scene.statics:
        d = max(0.0, distance_to_static(robot_pos, static) - robot_radius)
        if d < radius:
            out.append((static.id, d, category_of(static)))
    for oid, center, r in agent_discs:
        d = max(0.0, dist(robot_pos, center) - r - robot_radius)
        if d < radius:
            out.append((oid, d, "obstacle"))
    out.sort(key=lambda item: (item[1], item[0]))
    return out


def check_goal(robot_pos: Point, goal: GoalSpec) -> bool:
    return dist(robot_pos, goal.position) < goal.threshold


def record(log: SessionLog, event: InteractionEvent) -> SessionLog:
    """Append an event, maintaining counters and the goal timestamp."""
    if log.events and event.t < log.events[-1].t:
        raise ValueError(
            f"event at t={event.t} precedes last event t={log.events[-1].t}"
        )
    log.events.append(event)
    if event.kind == "collision_shelf":
        log.shelf_collision_count += 1
    elif event.kind == "collision_obstacle":
        log.obstacle_collision_count += 1
    elif event.kind == "goal_reached" and log.goal_time is None:
        log.goal_time = event.t
        log.status = "goal_reached"
    return log


def finalize(log: SessionLog) -> bytes:
    """CSV dump: one row per event plus a trailing summary row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    shelf = 0
    obstacle = 0
    for ev in log.events:
        if ev.kind == "collision_shelf":
            shelf += 1
        elif ev.kind == "collision_obstacle":
            obstacle += 1
        writer.writerow(
            (
                f"{ev.t:.3f}",
                ev.kind,
                f"{ev.robot_pos[0]:.3f}",
                f"{ev.robot_pos[1]:.3f}",
                ev.detail,
                shelf,
                obstacle,
            )
        )
    elapsed = log.elapsed
    writer.writerow(
        (
            "",
            "summary",
            "",
            "",
            f"status={log.status} elapsed_s={'' if elapsed is None else f'{elapsed:.3f}'}",
            log.shelf_collision_count,
            log.obstacle_collision_count,
        )
    )
    return buf.getvalue().encode("utf-8")


def parse_session_csv(
    data: bytes,
) -> tuple[list[InteractionEvent], int, int, float | None]:
    """Inverse of finalize; returns (events, shelf count, obstacle count, elapsed)."""
    text = data.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header!r}")
    events: list[InteractionEvent] = []
    shelf = obstacle = 0
    elapsed: float | None = None
    for row in reader:
        if row[1] == "summary":
            shelf, obstacle = int(row[5]), int(row[6])
            for part in row[4].split():
                key, _, value = part.partition("=")
                if key == "elapsed_s" and value:
                    elapsed = float(value)
            continue
        events.append(
            InteractionEvent(
                kind=row[1],
                t=float(row[0]),
                robot_pos=(float(row[2]), float(row[3])),
                detail=row[4],
            )
        )
    return events, shelf, obstacle, elapsed


class ContactTracker:
    """Edge-triggers collision events; a contact re-arms after one clear tick."""

    def __init__(self) -> None:
        self._active: set[str] = set()

    def step(self, contacts: list[tuple[str, str]]) -> list[tuple[str, str]]:
        current = {oid for oid, _cat in contacts}
        fresh = [(oid, cat) for oid, cat in contacts if oid not in self._active]
        self._active = current
        return fresh


class ProximityTracker:
    """Edge-triggers proximity events per entity, same hysteresis as contacts."""

    def __init__(self) -> None:
        self._active: set[str] = set()

    def step(
        self, nearby: list[tuple[str, float, str]]
    ) -> list[tuple[str, float, str]]:
        current = {oid for oid, _d, _cat in nearby}
        fresh = [item for item in nearby if item[0] not in self._active]
        self._active = current
        return fresh

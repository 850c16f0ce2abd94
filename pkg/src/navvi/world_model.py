"""Warehouse scene model: static geometry, scripted agents, robot, goal.

Scenes are loaded from the ``navvi-scene/1`` JSON format (see
docs/scene_format.md), validated against the invariants below, and are
immutable afterwards. Agent poses are pure functions of time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterator, Union

from . import SCENE_FORMAT_VERSION
from .geometry import Point, dist, polygon_area

STATIC_CATEGORIES = ("shelf", "wall", "box", "pedestal")
AGENT_KINDS = ("forklift", "pallet_robot", "worker")


class SceneError(Exception):
    """Scene file could not be parsed or failed validation."""


@dataclass(frozen=True)
class FloorBounds:
    """Axis-aligned navigable floor rectangle."""

    x: float
    z: float
    width: float
    depth: float

    def contains(self, p: Point) -> bool:
        return (
            self.x <= p[0] <= self.x + self.width
            and self.z <= p[1] <= self.z + self.depth
        )


@dataclass(frozen=True)
class StaticObstacle:
    id: str
    category: str
    footprint: tuple[Point, ...]  # convex, counter-clockwise
    height: float


@dataclass(frozen=True)
class ScriptStep:
    waypoint: Point
    speed: float


@dataclass(frozen=True)
class DynamicAgent:
    id: str
    kind: str
    radius: float
    script: tuple[ScriptStep, ...]
    loop: bool = False

    def leg_durations(self) -> list[float]:
        """Travel time of each script leg; includes the closing leg when looping."""
        steps = self.script
        durations = []
        for i in range(len(steps) - 1):
            durations.append(dist(steps[i].waypoint, steps[i + 1].waypoint) / steps[i + 1].speed)
        if self.loop and len(steps) > 1:
            durations.append(dist(steps[-1].waypoint, steps[0].waypoint) / steps[0].speed)
        return durations

    def period(self) -> float:
        return sum(self.leg_durations())


@dataclass(frozen=True)
class RobotConfig:
    radius: float = 0.35
    v_max: float = 1.5
    yaw_rate_max: float = 1.5
    spawn_pose: tuple[float, float, float] = (0.0, 0.0, 0.0)  # x, z, heading


@dataclass(frozen=True)
class GoalSpec:
    position: Point
    threshold: float = 1.0


@dataclass(frozen=True)
class SceneDescription:
    floor_bounds: FloorBounds
    statics: tuple[StaticObstacle, ...]
    agents: tuple[DynamicAgent, ...]
    robot: RobotConfig
    goal: GoalSpec
    name: str = ""


def agent_pose_at(agent: DynamicAgent, t: float) -> tuple[Point, Point]:
    """Position and velocity of a scripted agent at time t >= 0.

    Piecewise-linear interpolation along the script waypoints at the
    scripted speeds. Looping scripts wrap modulo their period; otherwise the
    agent holds the final waypoint with zero velocity.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    steps = agent.script
    if len(steps) == 1:
        return (steps[0].waypoint, (0.0, 0.0))

    durations = agent.leg_durations()
    period = sum(durations)
    if agent.loop:
        if period <= 0.0:
            return (steps[0].waypoint, (0.0, 0.0))
        t = math.fmod(t, period)
    elif t >= period:
        return (steps[-1].waypoint, (0.0, 0.0))

    for i, leg_t in enumerate(durations):
        if t < leg_t or i == len(durations) - 1:
            a = steps[i].waypoint
            b = steps[(i + 1) % len(steps)].waypoint
            speed = steps[(i + 1) % len(steps)].speed
            if leg_t <= 0.0:
                return (b, (0.0, 0.0))
            frac = min(t / leg_t, 1.0)
            pos = (a[0] + (b[0] - a[0]) * frac, a[1] + (b[1] - a[1]) * frac)
            length = dist(a, b)
            vel = (
                (b[0] - a[0]) / length * speed,
                (b[1] - a[1]) / length * speed,
            )
            return (pos, vel)
        t -= leg_t
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class Violation:
    subject: str  # obstacle/agent/scene element id
    message: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.message}"


def validate_scene(scene: SceneDescription) -> list[Violation]:
    """All invariant violations in the scene; empty means valid."""
    out: list[Violation] = []
    fb = scene.floor_bounds
    if fb.width <= 0 or fb.depth <= 0:
        out.append(Violation("floor", "floor bounds must have positive width and depth"))
        return out

    seen_ids: set[str] = set()
    for s in scene.statics:
        if s.id in seen_ids:
            out.append(Violation(s.id, "duplicate obstacle id"))
        seen_ids.add(s.id)
        if s.category not in STATIC_CATEGORIES:
            out.append(Violation(s.id, f"unknown static category {s.category!r}"))
        if len(s.footprint) < 3:
            out.append(Violation(s.id, "footprint needs at least 3 vertices"))
            continue
        if polygon_area(s.footprint) <= 0.0:
            out.append(Violation(s.id, "footprint must be counter-clockwise with positive area"))
        for v in s.footprint:
            if not fb.contains(v):
                out.append(Violation(s.id, f"footprint vertex {v} outside floor bounds"))
                break

    for a in scene.agents:
        if a.id in seen_ids:
            out.append(Violation(a.id, "duplicate obstacle id"))
        seen_ids.add(a.id)
        if a.kind not in AGENT_KINDS:
            out.append(Violation(a.id, f"unknown agent kind {a.kind!r}"))
        if a.radius <= 0:
            out.append(Violation(a.id, "agent radius must be positive"))
        if len(a.script) < 1:
            out.append(Violation(a.id, "script needs at least one waypoint"))
        for step in a.script:
            if step.speed <= 0:
                out.append(Violation(a.id, "script speeds must be positive"))
                break
        for step in a.script:
            if not fb.contains(step.waypoint):
                out.append(Violation(a.id, f"script waypoint {step.waypoint} outside floor bounds"))
                break

    r = scene.robot
    if r.radius <= 0:
        out.append(Violation("robot", "radius must be positive"))
    if r.v_max <= 0:
        out.append(Violation("robot", "v_max must be positive"))
    if r.yaw_rate_max <= 0:
        out.append(Violation("robot", "yaw_rate_max must be positive"))

    g = scene.goal
    if g.threshold <= 0:
        out.append(Violation("goal", "threshold must be positive"))
    if not fb.contains(g.position):
        out.append(Violation("goal", f"position {g.position} outside floor bounds"))

    return out


def _point(raw: object, where: str) -> Point:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(v, (int, float)) for v in raw)
    ):
        raise SceneError(f"{where}: expected [x, z] pair, got {raw!r}")
    return (float(raw[0]), float(raw[1]))


def _require(mapping: dict, key: str, where: str) -> object:
    if key not in mapping:
        raise SceneError(f"{where}: missing required field {key!r}")
    return mapping[key]


def load_scene(source: Union[bytes, str, IO]) -> SceneDescription:
    """Parse and validate a navvi-scene/1 file.

    Raises SceneError naming the offending field on parse failures, or
    carrying the violation list when invariants fail.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        data = json.loads(source)
    except json.JSONDecodeError as e:
        raise SceneError(f"scene file is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise SceneError("scene file must be a JSON object")

    version = data.get("version")
    if version != SCENE_FORMAT_VERSION:
        raise SceneError(f"version: expected {SCENE_FORMAT_VERSION!r}, got {version!r}")

    floor_raw = _require(data, "floor", "scene")
    if not isinstance(floor_raw, dict):
        raise SceneError("floor: expected an object")
    try:
        floor = FloorBounds(
            x=float(_require(floor_raw, "x", "floor")),
            z=float(_require(floor_raw, "z", "floor")),
            width=float(_require(floor_raw, "width", "floor")),
            depth=float(_require(floor_raw, "depth", "floor")),
        )
    except (TypeError, ValueError) as e:
        raise SceneError(f"floor: {e}") from e

    statics = []
    for i, raw in enumerate(data.get("statics", [])):
        where = f"statics[{i}]"
        if not isinstance(raw, dict):
            raise SceneError(f"{where}: expected an object")
        sid = str(_require(raw, "id", where))
        footprint = _require(raw, "footprint", where)
        if not isinstance(footprint, list):
            raise SceneError(f"{where}.footprint: expected a vertex list")
        statics.append(
            StaticObstacle(
                id=sid,
                category=str(_require(raw, "category", where)),
                footprint=tuple(_point(v, f"{where}.footprint[{k}]") for k, v in enumerate(footprint)),
                height=float(raw.get("height", 1.0)),
            )
        )

    agents = []
    for i, raw in enumerate(data.get("agents", [])):
        where = f"agents[{i}]"
        if not isinstance(raw, dict):
            raise SceneError(f"{where}: expected an object")
        script_raw = _require(raw, "script", where)
        if not isinstance(script_raw, list):
            raise SceneError(f"{where}.script: expected a list")
        script = []
        for k, step in enumerate(script_raw):
            if not isinstance(step, dict):
                raise SceneError(f"{where}.script[{k}]: expected an object")
            script.append(
                ScriptStep(
                    waypoint=_point(_require(step, "waypoint", f"{where}.script[{k}]"), f"{where}.script[{k}].waypoint"),
                    speed=float(_require(step, "speed", f"{where}.script[{k}]")),
                )
            )
        agents.append(
            DynamicAgent(
                id=str(_require(raw, "id", where)),
                kind=str(_require(raw, "kind", where)),
                radius=float(_require(raw, "radius", where)),
                script=tuple(script),
                loop=bool(raw.get("loop", False)),
            )
        )

    robot_raw = data.get("robot", {})
    if not isinstance(robot_raw, dict):
        raise SceneError("robot: expected an object")
    spawn = robot_raw.get("spawn", [floor.x + floor.width / 2, floor.z + floor.depth / 2, 0.0])
    if not isinstance(spawn, list) or len(spawn) != 3:
        raise SceneError("robot.spawn: expected [x, z, heading]")
    robot = RobotConfig(
        radius=float(robot_raw.get("radius", 0.35)),
        v_max=float(robot_raw.get("v_max", 1.5)),
        yaw_rate_max=float(robot_raw.get("yaw_rate_max", 1.5)),
        spawn_pose=(float(spawn[0]), float(spawn[1]), float(spawn[2])),
    )

    goal_raw = _require(data, "goal", "scene")
    if not isinstance(goal_raw, dict):
        raise SceneError("goal: expected an object")
    goal = GoalSpec(
        position=_point(_require(goal_raw, "position", "goal"), "goal.position"),
        threshold=float(goal_raw.get("threshold", 1.0)),
    )

    scene = SceneDescription(
        floor_bounds=floor,
        statics=tuple(statics),
        agents=tuple(agents),
        robot=robot,
        goal=goal,
        name=str(data.get("name", "")),
    )
    violations = validate_scene(scene)
    if violations:
        raise SceneError(
            "scene failed validation: " + "; ".join(str(v) for v in violations)
        )
    return scene


def serialize_scene(scene: SceneDescription) -> bytes:
    """Inverse of load_scene (round-trips through the scene format)."""
    data = {
        "version": SCENE_FORMAT_VERSION,
        "name": scene.name,
        "floor": {
            "x": scene.floor_bounds.x,
            "z": scene.floor_bounds.z,
            "width": scene.floor_bounds.width,
            "depth": scene.floor_bounds.depth,
        },
        "statics": [
            {
                "id": s.id,
                "category": s.category,
                "footprint": [list(v) for v in s.footprint],
                "height": s.height,
            }
            for s in scene.statics
        ],
        "agents": [
            {
                "id": a.id,
                "kind": a.kind,
                "radius": a.radius,
                "loop": a.loop,
                "script": [
                    {"waypoint": list(st.waypoint), "speed": st.speed} for st in a.script
                ],
            }
            for a in scene.agents
        ],
        "robot": {
            "radius": scene.robot.radius,
            "v_max": scene.robot.v_max,
            "yaw_rate_max": scene.robot.yaw_rate_max,
            "spawn": list(scene.robot.spawn_pose),
        },
        "goal": {
            "position": list(scene.goal.position),
            "threshold": scene.goal.threshold,
        },
    }
    return json.dumps(data, indent=2, sort_keys=True).encode("utf-8")


def iter_obstacle_discs(scene: SceneDescription, t: float) -> Iterator[tuple[str, Point, float]]:
    """(id, center, radius) for every dynamic agent at time t."""
    for agent in scene.agents:
        pos, _vel = agent_pose_at(agent, t)
        yield (agent.id, pos, agent.radius)

"""Operator guidance channels: stereo haptics, audio cues, path polyline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Point, dist, rotate_into_frame

Pose = tuple[float, float, float]  # x, z, heading


@dataclass(frozen=True)
class FeedbackConfig:
    d_max: float = 5.0  # haptic detection perimeter
    center_range: float = 1.0  # half-width of the dead-ahead zone
    shelf_audio_radius: float = 1.0
    direction_announce_period: float = 5.0
    cue_refractory: float = 2.0  # per-kind minimum gap between audio cues
    intensity_scale: float = 1.0 / math.log(2.0)

    def __post_init__(self) -> None:
        if not (self.d_max > self.center_range > 0):
            raise ValueError("require d_max > center_range > 0")


@dataclass(frozen=True)
class HapticCommand:
    left: float
    right: float
    zone: str  # left | center | right | none

    def __post_init__(self) -> None:
        ok = {
            "left": self.right == 0.0,
            "right": self.left == 0.0,
            "center": self.left == self.right,
            "none": self.left == 0.0 and self.right == 0.0,
        }
        if not ok.get(self.zone, False):
            raise ValueError(f"zone {self.zone!r} inconsistent with motor levels")


HAPTIC_SILENT = HapticCommand(0.0, 0.0, "none")


@dataclass(frozen=True)
class AudioCue:
    kind: str  # direction | shelf_proximity | stuck | goal_reached
    timestamp: float
    hour: int | None = None  # only for kind == "direction"

    def __post_init__(self) -> None:
        if self.kind == "direction":
            if self.hour is None or not 1 <= self.hour <= 12:
                raise ValueError("direction cue needs hour in 1..12")
        elif self.hour is not None:
            raise ValueError(f"{self.kind} cue carries no hour")


@dataclass(frozen=True)
class FeedbackFrame:
    haptic: HapticCommand
    cues: tuple[AudioCue, ...]
    path_polyline: tuple[Point, ...]  # robot position, then remaining waypoints
    nearest_obstacle: tuple[str, float, str] | None  # id, surface distance, zone
    raw_intensity: float  # unnormalized value, kept for analysis


def nearest_obstacle(
    pose: Pose,
    robot_radius: float,
    obstacles: list[tuple[str, Point, float]],
    config: FeedbackConfig,
) -> tuple[str, float, Point] | None:
    """Closest obstacle by surface distance within the perimeter.

    Obstacles are (id, center, radius) discs; static footprints enter as
    zero-radius discs at their closest boundary point. The local point is
    the obstacle center in the robot frame: (lateral, forward), +x right.
    """
    x, z, heading = pose
    best: tuple[float, str, Point] | None = None
    for oid, center, radius in obstacles:
        d = max(0.0, dist((x, z), center) - radius - robot_radius)
        if d >= config.d_max:
            continue
        if best is None or (d, oid) < (best[0], best[1]):
            local = rotate_into_frame((center[0] - x, center[1] - z), heading)
            best = (d, oid, local)
    if best is None:
        return None
    return (best[1], best[0], best[2])


def classify_zone(local_x: float, config: FeedbackConfig) -> str:
    if local_x < -config.center_range:
        return "left"
    if local_x > config.center_range:
        return "right"
    return "center"


def intensity(d: float, config: FeedbackConfig) -> float:
    """Log-scaled closeness, 1.0 at contact down to 0.0 at the perimeter."""
    return raw_intensity(d, config) * config.intensity_scale


def raw_intensity(d: float, config: FeedbackConfig) -> float:
    d = min(max(d, 0.0), config.d_max)
    return math.log(1.0 + (1.0 - d / config.d_max))


def haptic_command(
    pose: Pose,
    robot_radius: float,
    obstacles: list[tuple[str, Point, float]],
    config: FeedbackConfig,
) -> HapticCommand:
    hit = nearest_obstacle(pose, robot_radius, obstacles, config)
    if hit is None:
        return HAPTIC_SILENT
    _oid, d, local = hit
    zone = classify_zone(local[0], config)
    level = intensity(d, config)
    if zone == "left":
        return HapticCommand(level, 0.0, "left")
    if zone == "right":
        return HapticCommand(0.0, level, "right")
    return HapticCommand(level, level, "center")


def clock_direction(pose: Pose, goal: Point) -> int:
    """Bearing to the goal as a clock hour; dead ahead is 12, right is 3."""
    x, z, heading = pose
    dx, dz = goal[0] - x, goal[1] - z
    if math.hypot(dx, dz) == 0.0:
        raise ValueError("goal coincides with robot position")
    lateral, forward = rotate_into_frame((dx, dz), heading)
    theta = math.degrees(math.atan2(lateral, forward))
    theta = (theta + 360.0) % 360.0
    hour = math.floor(theta / 30.0 + 0.5) % 12
    return 12 if hour == 0 else hour


def build_frame(
    pose: Pose,
    robot_radius: float,
    obstacles: list[tuple[str, Point, float]],
    path_points: tuple[Point, ...],
    cues: tuple[AudioCue, ...],
    config: FeedbackConfig,
) -> FeedbackFrame:
    hit = nearest_obstacle(pose, robot_radius, obstacles, config)
    haptic = HAPTIC_SILENT
    nearest = None
    raw = 0.0
    if hit is not None:
        oid, d, local = hit
        zone = classify_zone(local[0], config)
        level = intensity(d, config)
        raw = raw_intensity(d, config)
        if zone == "left":
            haptic = HapticCommand(level, 0.0, "left")
        elif zone == "right":
            haptic = HapticCommand(0.0, level, "right")
        else:
            haptic = HapticCommand(level, level, "center")
        nearest = (oid, d, zone)
    polyline = ((pose[0], pose[1]), *path_points) if path_points else ()
    return FeedbackFrame(haptic, cues, polyline, nearest, raw)


@dataclass
class CueScheduler:
    """Rate-limits audio so cues never talk over each other.

    Shelf and stuck cues fire on entering their condition, the goal cue
    fires once, and direction announcements repeat on a period plus once
    after every replan. Every kind honors a shared refractory gap.
    """

    config: FeedbackConfig
    _last_emit: dict[str, float] = field(default_factory=dict)
    _was_near_shelf: bool = False
    _was_stuck: bool = False
    _goal_done: bool = False
    _last_direction: float | None = None
    _direction_pending: bool = False

    def start_epoch(self, now: float) -> None:
        """Treat now as an announcement point; the first periodic direction
        cue then waits out a full period instead of firing immediately."""
        self._last_direction = now

    def _ready(self, kind: str, now: float) -> bool:
        last = self._last_emit.get(kind)
        return last is None or now - last >= self.config.cue_refractory - 1e-9

    def update(
        self,
        now: float,
        *,
        near_shelf: bool,
        stuck: bool,
        goal_reached: bool,
        navigating: bool,
        hour: int | None,
        replanned: bool,
    ) -> tuple[AudioCue, ...]:
        out: list[AudioCue] = []

        if goal_reached and not self._goal_done:
            self._goal_done = True
            out.append(AudioCue("goal_reached", now))
            self._last_emit["goal_reached"] = now

        if near_shelf and not self._was_near_shelf and self._ready("shelf_proximity", now):
            out.append(AudioCue("shelf_proximity", now))
            self._last_emit["shelf_proximity"] = now
        self._was_near_shelf = near_shelf

        if stuck and not self._was_stuck and self._ready("stuck", now):
            out.append(AudioCue("stuck", now))
            self._last_emit["stuck"] = now
        self._was_stuck = stuck

        if replanned:
            self._direction_pending = True
        if navigating and not self._goal_done and hour is not None:
            due = (
                self._direction_pending
                or self._last_direction is None
                or now - self._last_direction
                >= self.config.direction_announce_period - 1e-9
            )
            if due and self._ready("direction", now):
                out.append(AudioCue("direction", now, hour=hour))
                self._last_emit["direction"] = now
                self._last_direction = now
                self._direction_pending = False

        return tuple(out)

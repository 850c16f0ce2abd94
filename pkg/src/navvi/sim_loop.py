"""Fixed-timestep simulation: kinematics, replan policy, feedback, events."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Union

from . import events as ev
from . import feedback as fb
from . import planner as pl
from .geometry import (
    Point,
    closest_point_on_polygon,
    dist,
    rotate_into_frame,
    wrap_angle,
)
from .navmesh import CarveVolume, NavMeshRuntime, new_runtime
from .world_model import SceneDescription, agent_pose_at

Pose = tuple[float, float, float]


@dataclass(frozen=True)
class ControlInput:
    axis_x: float = 0.0  # turn; positive steers right (heading increases)
    axis_y: float = 0.0  # forward/backward
    t: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "axis_x", min(1.0, max(-1.0, self.axis_x)))
        object.__setattr__(self, "axis_y", min(1.0, max(-1.0, self.axis_y)))


IDLE = ControlInput()


@dataclass(frozen=True)
class TickConfig:
    dt: float = 0.02
    v_max: float = 1.5
    yaw_rate_max: float = 1.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @classmethod
    def for_scene(cls, scene: SceneDescription, **overrides) -> "TickConfig":
        """Tick caps default to the scene's robot limits."""
        values = {
            "v_max": scene.robot.v_max,
            "yaw_rate_max": scene.robot.yaw_rate_max,
        }
        values.update(overrides)
        return cls(**values)


@dataclass
class SimState:
    clock: float
    tick_index: int
    pose: Pose
    speed: float  # actual, signed; displacement over dt
    agents: dict[str, tuple[Point, Point]]  # id -> (position, velocity)
    runtime: NavMeshRuntime
    path: pl.Path | None
    log: ev.SessionLog
    status: str  # running | goal_reached | stuck
    slow_since: float | None = None
    last_plan_time: float = 0.0  # last attempt, success or not
    last_plan_success: float = 0.0
    pilot_reverse_until: float = -1.0  # autopilot escape latch; manual control ignores it


def _agent_discs(state: SimState, scene: SceneDescription) -> list[ev.AgentDisc]:
    by_id = {a.id: a for a in scene.agents}
    return [
        (aid, pos, by_id[aid].radius) for aid, (pos, _vel) in state.agents.items()
    ]


def _haptic_discs(
    scene: SceneDescription, robot_pos: Point, agent_discs: list[ev.AgentDisc]
) -> list[tuple[str, Point, float]]:
    """Statics join the haptic field as their closest boundary point."""
    out: list[tuple[str, Point, float]] = [
        (s.id, closest_point_on_polygon(robot_pos, s.footprint), 0.0)
        for s in scene.statics
    ]
    out.extend(agent_discs)
    return out


class Simulation:
    """Owns all mutable session state; tick() is the only way it changes."""

    def __init__(
        self,
        scene: SceneDescription,
        cfg: TickConfig | None = None,
        planner_config: pl.PlannerConfig | None = None,
        feedback_config: fb.FeedbackConfig | None = None,
    ):
        self.scene = scene
        self.cfg = cfg if cfg is not None else TickConfig.for_scene(scene)
        self.planner_config = planner_config or pl.PlannerConfig()
        self.feedback_config = feedback_config or fb.FeedbackConfig()
        self.scheduler = fb.CueScheduler(self.feedback_config)
        self.scheduler.start_epoch(0.0)
        self._contacts = ev.ContactTracker()
        self._near_obstacles = ev.ProximityTracker()
        self._near_shelves = ev.ProximityTracker()

        runtime = new_runtime(scene)
        agents = {a.id: agent_pose_at(a, 0.0) for a in scene.agents}
        for agent in scene.agents:
            pos, _vel = agents[agent.id]
            runtime.apply_carve(CarveVolume(pos, agent.radius, agent.id))

        self.state = SimState(
            clock=0.0,
            tick_index=0,
            pose=scene.robot.spawn_pose,
            speed=0.0,
            agents=agents,
            runtime=runtime,
            path=None,
            log=ev.SessionLog(start_time=0.0),
            status="running",
        )
        self._plan("initial")

    # -- planning ---------------------------------------------------------

    def _plan(self, reason: str) -> None:
        state = self.state
        state.last_plan_time = state.clock
        try:
            path, _stats = pl.plan(
                state.runtime,
                (state.pose[0], state.pose[1]),
                self.scene.goal,
                self.planner_config,
            )
        except pl.Unreachable as exc:
            grace = self.planner_config.replan_period
            if state.clock - state.last_plan_success > grace - 1e-9:
                state.path = None
                if state.status == "running":
                    state.status = "stuck"
            ev.record(
                state.log,
                ev.InteractionEvent(
                    "replan",
                    state.clock,
                    (state.pose[0], state.pose[1]),
                    f"reason={reason} failed={exc}",
                ),
            )
            return
        state.path = path
        state.last_plan_success = state.clock
        if state.status == "stuck":
            state.status = "running"
        ev.record(
            state.log,
            ev.InteractionEvent(
                "replan",
                state.clock,
                (state.pose[0], state.pose[1]),
                f"reason={reason} waypoints={len(path.waypoints)}",
            ),
        )

    # -- kinematics -------------------------------------------------------

    def _blocking_contacts(self, pos: Point, discs: list[ev.AgentDisc]) -> list[str]:
        r = self.scene.robot.radius
        out = [
            s.id
            for s in self.scene.statics
            if ev.distance_to_static(pos, s) < r
        ]
        out.extend(aid for aid, c, ar in discs if dist(pos, c) < r + ar)
        return out

    def apply_control(
        self, input: ControlInput, discs: list[ev.AgentDisc]
    ) -> tuple[Pose, float, list[str]]:
        """Unicycle step, stopping on the contact boundary (no penetration)."""
        x, z, heading = self.state.pose
        dt = self.cfg.dt
        heading = wrap_angle(heading + input.axis_x * self.cfg.yaw_rate_max * dt)
        speed = input.axis_y * self.cfg.v_max
        step = speed * dt
        target = (x + step * math.cos(heading), z + step * math.sin(heading))

        hit = self._blocking_contacts(target, discs)
        if not hit:
            return (target[0], target[1], heading), speed, []
        if self._blocking_contacts((x, z), discs):
            # Already overlapped (an agent drove into us): hold position.
            return (x, z, heading), 0.0, hit
        lo, hi = 0.0, 1.0
        for _ in range(12):
            mid = (lo + hi) / 2.0
            p = (x + step * mid * math.cos(heading), z + step * mid * math.sin(heading))
            if self._blocking_contacts(p, discs):
                hi = mid
            else:
                lo = mid
        pos = (x + step * lo * math.cos(heading), z + step * lo * math.sin(heading))
        actual = math.copysign(dist((x, z), pos) / dt, speed)
        return (pos[0], pos[1], heading), actual, hit

    # -- the tick ---------------------------------------------------------

    def tick(self, input: ControlInput = IDLE) -> fb.FeedbackFrame:
        state = self.state
        if state.status == "goal_reached":
            raise RuntimeError("session already reached the goal")
        scene = self.scene
        pcfg = self.planner_config
        fcfg = self.feedback_config

        # 1. clock; computed from the index so long runs never drift
        state.tick_index += 1
        now = state.tick_index * self.cfg.dt
        state.clock = now

        # 2. agents and their carves
        state.agents = {a.id: agent_pose_at(a, now) for a in scene.agents}
        for agent in scene.agents:
            pos, _vel = state.agents[agent.id]
            state.runtime.apply_carve(CarveVolume(pos, agent.radius, agent.id))
        discs = _agent_discs(state, scene)

        # 3. rebuild policy
        state.runtime.rebuild_if_due(now)

        # 4. replan policy
        replanned = False
        replan_reason: str | None = None
        robot_pos = (state.pose[0], state.pose[1])
        if state.path is not None:
            need, reason = pl.needs_replan(
                state.runtime,
                state.path,
                robot_pos,
                now,
                state.last_plan_time,
                state.slow_since,
                discs,
                pcfg,
            )
            if need:
                assert reason is not None
                self._plan(reason)
                replanned = True
                replan_reason = reason
        elif now - state.last_plan_time >= pcfg.replan_period - 1e-9:
            self._plan("retry")
            replanned = state.path is not None

        # 5. robot kinematics
        state.pose, state.speed, pushed = self.apply_control(input, discs)
        robot_pos = (state.pose[0], state.pose[1])
        commanded = abs(input.axis_y) * self.cfg.v_max
        if commanded >= pcfg.stuck_speed and abs(state.speed) < pcfg.stuck_speed:
            if state.slow_since is None:
                state.slow_since = now
        else:
            state.slow_since = None

        # 6. waypoint progress
        if state.path is not None:
            state.path = pl.advance_waypoint(state.runtime, state.path, robot_pos, pcfg)

        # 7.-8. feedback and events over the post-move state
        r = scene.robot.radius
        contacts = ev.detect_contacts(robot_pos, r, scene, discs)
        contact_ids = {cid for cid, _cat in contacts}
        for cid in pushed:
            if cid not in contact_ids:
                cat = next(
                    (ev.category_of(s) for s in scene.statics if s.id == cid),
                    "obstacle",
                )
                contacts.append((cid, cat))
        for cid, cat in self._contacts.step(contacts):
            ev.record(
                state.log,
                ev.InteractionEvent(
                    f"collision_{cat}", now, robot_pos, f"id={cid}"
                ),
            )

        nearby = ev.detect_proximity(robot_pos, r, scene, discs, fcfg.d_max)
        near_obstacles = [e for e in nearby if e[2] == "obstacle"]
        near_shelves = [
            e for e in nearby if e[2] == "shelf" and e[1] < fcfg.shelf_audio_radius
        ]
        reps = {aid: pos for aid, pos, _r in _haptic_discs(scene, robot_pos, discs)}
        for oid, d, cat in (
            *self._near_obstacles.step(near_obstacles),
            *self._near_shelves.step(near_shelves),
        ):
            lateral, _fwd = rotate_into_frame(
                (reps[oid][0] - robot_pos[0], reps[oid][1] - robot_pos[1]),
                state.pose[2],
            )
            zone = fb.classify_zone(lateral, fcfg)
            ev.record(
                state.log,
                ev.InteractionEvent(
                    f"proximity_{cat}",
                    now,
                    robot_pos,
                    f"id={oid} zone={zone} dist={d:.3f}",
                ),
            )

        goal_hit = ev.check_goal(robot_pos, scene.goal)
        if goal_hit:
            ev.record(
                state.log,
                ev.InteractionEvent(
                    "goal_reached",
                    now,
                    robot_pos,
                    f"dist={dist(robot_pos, scene.goal.position):.3f}",
                ),
            )
            state.status = "goal_reached"
            state.path = None

        hour: int | None = None
        if state.path is not None:
            target = state.path.waypoints[state.path.current_index]
            if dist(robot_pos, target) > 1e-9:
                hour = fb.clock_direction(state.pose, target)
        cues = self.scheduler.update(
            now,
            near_shelf=bool(near_shelves),
            stuck=state.status == "stuck" or replan_reason == "stuck",
            goal_reached=goal_hit,
            navigating=state.status == "running" and state.path is not None,
            hour=hour,
            replanned=replanned,
        )
        for cue in cues:
            detail = f"cue={cue.kind}"
            if cue.hour is not None:
                detail += f" hour={cue.hour}"
            ev.record(
                state.log, ev.InteractionEvent("cue_emitted", now, robot_pos, detail)
            )

        path_points: tuple[Point, ...] = ()
        if state.path is not None:
            path_points = state.path.waypoints[state.path.current_index :]
        return fb.build_frame(
            state.pose, r, _haptic_discs(scene, robot_pos, discs), path_points, cues, fcfg
        )


# -- headless driving -----------------------------------------------------


def autopilot_control(sim: Simulation) -> ControlInput:
    """Steer at the current waypoint; slows through turns, backs out when pinned.

    A robot pinned against geometry (no progress despite commanded speed)
    reverses for a latched interval; one reverse tick frees nothing, it
    just re-pins on the next forward command.
    """
    state = sim.state
    now = state.clock
    if state.path is None:
        return ControlInput(0.0, 0.0, now)
    if now < state.pilot_reverse_until:
        return ControlInput(0.0, -0.4, now)
    stuck_for = sim.planner_config.stuck_duration
    if state.slow_since is not None and now - state.slow_since > stuck_for:
        state.pilot_reverse_until = now + 0.6
        return ControlInput(0.0, -0.4, now)
    x, z, heading = state.pose
    target = state.path.waypoints[state.path.current_index]
    if dist((x, z), target) < 1e-9:
        return ControlInput(0.0, 0.0, now)
    bearing = math.atan2(target[1] - z, target[0] - x)
    err = wrap_angle(bearing - heading)
    axis_x = min(1.0, max(-1.0, 2.0 * err))
    axis_y = max(0.0, math.cos(err))
    return ControlInput(axis_x, axis_y, now)


@dataclass(frozen=True)
class ControlScript:
    mode: str  # autopilot | script
    inputs: tuple[tuple[float, float, float], ...] = ()  # (t, axis_x, axis_y)
    duration: float | None = None

    def control_at(self, t: float) -> ControlInput:
        current = (0.0, 0.0)
        for st, ax, ay in self.inputs:
            if st <= t + 1e-9:
                current = (ax, ay)
            else:
                break
        return ControlInput(current[0], current[1], t)


AUTOPILOT = ControlScript("autopilot")


def parse_control_script(source: Union[bytes, str, IO]) -> ControlScript:
    """Control-script file: {"mode": "autopilot"} or timed axis inputs."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    data = json.loads(source)
    if not isinstance(data, dict) or "mode" not in data:
        raise ValueError("control script must be an object with a 'mode' field")
    mode = data["mode"]
    if mode == "autopilot":
        return ControlScript("autopilot", duration=data.get("duration"))
    if mode != "script":
        raise ValueError(f"unknown control script mode {mode!r}")
    raw = data.get("inputs", [])
    inputs = []
    for i, item in enumerate(raw):
        if not isinstance(item, list) or len(item) != 3:
            raise ValueError(f"inputs[{i}]: expected [t, axis_x, axis_y]")
        inputs.append((float(item[0]), float(item[1]), float(item[2])))
    if sorted(inputs) != inputs:
        raise ValueError("script inputs must be sorted by time")
    if "duration" not in data:
        raise ValueError("timed scripts must declare a duration")
    return ControlScript("script", tuple(inputs), float(data["duration"]))


def run_headless(
    scene: SceneDescription,
    script: ControlScript = AUTOPILOT,
    cfg: TickConfig | None = None,
    time_cap: float = 300.0,
    planner_config: pl.PlannerConfig | None = None,
    feedback_config: fb.FeedbackConfig | None = None,
) -> ev.SessionLog:
    """Tick to completion; identical inputs give byte-identical logs."""
    sim = Simulation(scene, cfg, planner_config, feedback_config)
    state = sim.state
    limit = time_cap if script.duration is None else min(script.duration, time_cap)
    while state.status != "goal_reached":
        if state.clock + sim.cfg.dt > limit + 1e-9:
            if limit == time_cap:
                state.log.status = "timeout"
                return state.log
            break
        if script.mode == "autopilot":
            control = autopilot_control(sim)
        else:
            control = script.control_at(state.clock)
        sim.tick(control)
    state.log.status = state.status
    return state.log

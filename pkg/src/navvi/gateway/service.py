"""Session engine: owns the sim, paces ticks, arbitrates clients."""

from __future__ import annotations

import asyncio
import re
from dataclasses import replace
from pathlib import Path
from typing import Awaitable, Callable

from .. import feedback as fb
from ..sim_loop import IDLE, ControlInput, Simulation, TickConfig
from ..world_model import GoalSpec, SceneDescription, SceneError, load_scene
from . import wire

SendFn = Callable[[str], Awaitable[None]]

_SCENE_NAME = re.compile(r"^[A-Za-z0-9_\-]+$")


class Client:
    _next_id = 0

    def __init__(self, send: SendFn):
        self.send = send
        self.role = "observer"
        Client._next_id += 1
        self.id = Client._next_id


class SessionService:
    """One simulation, one driver, any number of observers.

    Inbound messages mutate queued intent only; the tick loop is the sole
    writer of sim state. Snapshots are emitted on a decimated cadence with
    cues accumulated so none are dropped between snapshots.
    """

    def __init__(
        self,
        scene_dir: Path | None = None,
        tick_hz: float = 50.0,
        snapshot_hz: float = 20.0,
        seed: int = 0,
    ):
        if tick_hz <= 0 or snapshot_hz <= 0:
            raise ValueError("rates must be positive")
        self.scene_dir = Path(scene_dir) if scene_dir else None
        self.dt = 1.0 / tick_hz
        self.snapshot_period = 1.0 / snapshot_hz
        self.seed = seed
        self.clients: list[Client] = []
        self.sim: Simulation | None = None
        self.scene: SceneDescription | None = None
        self.running = False
        self.seq = 0
        self.axes = IDLE
        self._pending_cues: list[fb.AudioCue] = []
        self._next_snapshot = 0.0
        self._stop = asyncio.Event()

    # -- scene handling ----------------------------------------------------

    def list_scenes(self) -> list[str]:
        if self.scene_dir is None or not self.scene_dir.is_dir():
            return []
        return sorted(p.stem for p in self.scene_dir.glob("*.json"))

    def _load(self, name: str) -> SceneDescription:
        if not _SCENE_NAME.match(name):
            raise wire.WireError("bad_scene_name", f"invalid scene name {name!r}")
        if self.scene_dir is None:
            raise wire.WireError("no_scene_dir", "server has no scene directory")
        path = self.scene_dir / f"{name}.json"
        if not path.is_file():
            raise wire.WireError("scene_not_found", f"no scene named {name!r}")
        try:
            return load_scene(path.read_text(encoding="utf-8"))
        except SceneError as exc:
            raise wire.WireError("bad_scene", str(exc)) from exc

    def _fresh_sim(self) -> None:
        assert self.scene is not None
        self.sim = Simulation(
            self.scene, TickConfig.for_scene(self.scene, dt=self.dt, seed=self.seed)
        )
        self.running = False
        self.axes = IDLE
        self._pending_cues = []
        self._next_snapshot = 0.0

    # -- client lifecycle --------------------------------------------------

    async def connect(self, send: SendFn) -> Client:
        client = Client(send)
        client.role = "driver" if not self.clients else "observer"
        self.clients.append(client)
        await self._send(
            client, wire.HelloMsg(role=client.role, scenes=self.list_scenes())
        )
        if self.scene is not None:
            await self._send(client, self._scene_msg())
        if self.sim is not None:
            await self._send(client, self._snapshot())
        return client

    async def disconnect(self, client: Client) -> None:
        if client not in self.clients:
            return
        was_driver = client.role == "driver"
        self.clients.remove(client)
        if was_driver:
            self.axes = IDLE
            if self.clients:
                self.clients[0].role = "driver"
                await self._send(self.clients[0], wire.RoleMsg(role="driver"))

    async def _send(self, client: Client, msg) -> None:
        try:
            await client.send(wire.encode_server_message(msg))
        except Exception:
            await self.disconnect(client)

    async def _broadcast(self, msg) -> None:
        for client in list(self.clients):
            await self._send(client, msg)

    # -- inbound messages --------------------------------------------------

    async def handle_text(self, client: Client, text: str) -> None:
        try:
            msg = wire.parse_client_message(text)
            await self._apply(client, msg)
        except wire.WireError as exc:
            await self._send(
                client, wire.ErrorMsg(code=exc.code, message=str(exc))
            )

    async def _apply(self, client: Client, msg) -> None:
        if client.role != "driver":
            raise wire.WireError("not_driver", "only the driver may send commands")
        if msg.kind == "axes":
            self.axes = ControlInput(msg.axis_x, msg.axis_y)
            return
        if msg.kind == "load_scene":
            self.scene = self._load(msg.name)
            self._fresh_sim()
            await self._broadcast(self._scene_msg())
            await self._broadcast(self._snapshot())
            return
        if msg.kind == "start":
            if self.sim is None:
                raise wire.WireError("no_scene", "load a scene before starting")
            if self.sim.state.status == "goal_reached":
                raise wire.WireError("session_over", "reset before restarting")
            self.running = True
            return
        if msg.kind == "reset":
            if self.scene is None:
                raise wire.WireError("no_scene", "load a scene before resetting")
            self._fresh_sim()
            await self._broadcast(self._snapshot())
            return
        if msg.kind == "set_goal":
            if self.sim is None or self.scene is None:
                raise wire.WireError("no_scene", "load a scene before setting a goal")
            goal = GoalSpec(
                position=(msg.position[0], msg.position[1]),
                threshold=self.scene.goal.threshold,
            )
            self.scene = replace(self.scene, goal=goal)
            self.sim.scene = self.scene
            self.sim.state.path = None
            # Make the retry branch fire on the very next tick.
            self.sim.state.last_plan_time = float("-inf")
            return
        raise wire.WireError("bad_message", f"unhandled kind {msg.kind!r}")

    # -- outbound state ----------------------------------------------------

    def _scene_msg(self) -> wire.SceneLoadedMsg:
        assert self.scene is not None
        s = self.scene
        return wire.SceneLoadedMsg(
            scene=wire.SceneInfo(
                name=s.name,
                floor=(
                    s.floor_bounds.x,
                    s.floor_bounds.z,
                    s.floor_bounds.width,
                    s.floor_bounds.depth,
                ),
                statics=[
                    wire.SceneStatic(
                        id=st.id, category=st.category, footprint=list(st.footprint)
                    )
                    for st in s.statics
                ],
                goal=s.goal.position,
                goal_threshold=s.goal.threshold,
                robot_radius=s.robot.radius,
            )
        )

    def _snapshot(self, frame: fb.FeedbackFrame | None = None) -> wire.SnapshotMsg:
        assert self.sim is not None
        state = self.sim.state
        self.seq += 1
        if frame is not None:
            haptic = frame.haptic
            polyline = frame.path_polyline
            nearest = frame.nearest_obstacle
        else:
            haptic = fb.HAPTIC_SILENT
            polyline = ()
            nearest = None
            if state.path is not None:
                polyline = (
                    (state.pose[0], state.pose[1]),
                    *state.path.waypoints[state.path.current_index :],
                )
        cues = self._pending_cues
        self._pending_cues = []
        return wire.SnapshotMsg(
            seq=self.seq,
            clock=state.clock,
            robot=wire.RobotState(
                x=state.pose[0],
                z=state.pose[1],
                heading=state.pose[2],
                speed=state.speed,
            ),
            agents=[
                wire.AgentState(id=aid, x=pos[0], z=pos[1])
                for aid, (pos, _vel) in state.agents.items()
            ],
            path_polyline=list(polyline),
            haptic=wire.HapticState(
                left=haptic.left, right=haptic.right, zone=haptic.zone
            ),
            cues=[
                wire.CueState(kind=c.kind, timestamp=c.timestamp, hour=c.hour)
                for c in cues
            ],
            nearest_obstacle=(
                wire.NearestObstacle(id=nearest[0], distance=nearest[1], zone=nearest[2])
                if nearest
                else None
            ),
            counters=wire.Counters(
                shelf_collisions=state.log.shelf_collision_count,
                obstacle_collisions=state.log.obstacle_collision_count,
            ),
            status=state.status,
        )

    # -- the loop ----------------------------------------------------------

    async def tick_and_publish(self) -> None:
        """One sim tick plus any due snapshot; no-op when paused."""
        if not self.running or self.sim is None:
            return
        state = self.sim.state
        if state.status == "goal_reached":
            self.running = False
            return
        frame = self.sim.tick(self.axes)
        self._pending_cues.extend(frame.cues)
        terminal = state.status == "goal_reached"
        if terminal:
            self.running = False
        if terminal or state.clock + 1e-9 >= self._next_snapshot:
            self._next_snapshot = state.clock + self.snapshot_period
            await self._broadcast(self._snapshot(frame))

    def stop(self) -> None:
        self._stop.set()

    async def run(self) -> None:
        """Paced real-time loop; lag is absorbed, never compounded."""
        loop = asyncio.get_running_loop()
        next_t = loop.time()
        while not self._stop.is_set():
            await self.tick_and_publish()
            next_t += self.dt
            delay = next_t - loop.time()
            if delay > 0:
                try:
                    await asyncio.wait_for(self._stop.wait(), timeout=delay)
                except asyncio.TimeoutError:
                    pass
            else:
                next_t = loop.time()

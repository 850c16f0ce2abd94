"""navvi-wire/1 message schemas and codecs (JSON text frames)."""

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from .. import WIRE_FORMAT_VERSION


class WireError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# -- client -> server ------------------------------------------------------


class AxesMsg(BaseModel):
    kind: Literal["axes"] = "axes"
    axis_x: float
    axis_y: float


class LoadSceneMsg(BaseModel):
    kind: Literal["load_scene"] = "load_scene"
    name: str


class StartMsg(BaseModel):
    kind: Literal["start"] = "start"


class ResetMsg(BaseModel):
    kind: Literal["reset"] = "reset"


class SetGoalMsg(BaseModel):
    kind: Literal["set_goal"] = "set_goal"
    position: tuple[float, float]


ClientMessage = Annotated[
    Union[AxesMsg, LoadSceneMsg, StartMsg, ResetMsg, SetGoalMsg],
    Field(discriminator="kind"),
]
_client_adapter: TypeAdapter = TypeAdapter(ClientMessage)


def parse_client_message(text: Union[str, bytes]) -> ClientMessage:
    try:
        return _client_adapter.validate_json(text)
    except ValidationError as exc:
        raise WireError("bad_message", f"malformed client message: {exc}") from exc


# -- server -> client ------------------------------------------------------


class RobotState(BaseModel):
    x: float
    z: float
    heading: float
    speed: float


class AgentState(BaseModel):
    id: str
    x: float
    z: float


class HapticState(BaseModel):
    left: float
    right: float
    zone: str


class CueState(BaseModel):
    kind: str
    timestamp: float
    hour: int | None = None


class NearestObstacle(BaseModel):
    id: str
    distance: float
    zone: str


class Counters(BaseModel):
    shelf_collisions: int
    obstacle_collisions: int


class SnapshotMsg(BaseModel):
    kind: Literal["snapshot"] = "snapshot"
    seq: int
    clock: float
    robot: RobotState
    agents: list[AgentState]
    path_polyline: list[tuple[float, float]]
    haptic: HapticState
    cues: list[CueState]
    nearest_obstacle: NearestObstacle | None = None
    counters: Counters
    status: str


class HelloMsg(BaseModel):
    kind: Literal["hello"] = "hello"
    version: str = WIRE_FORMAT_VERSION
    role: str  # driver | observer
    scenes: list[str]


class RoleMsg(BaseModel):
    kind: Literal["role"] = "role"
    role: str


class SceneStatic(BaseModel):
    id: str
    category: str
    footprint: list[tuple[float, float]]


class SceneInfo(BaseModel):
    name: str
    floor: tuple[float, float, float, float]  # x, z, width, depth
    statics: list[SceneStatic]
    goal: tuple[float, float]
    goal_threshold: float
    robot_radius: float


class SceneLoadedMsg(BaseModel):
    kind: Literal["scene_loaded"] = "scene_loaded"
    scene: SceneInfo


class ErrorMsg(BaseModel):
    kind: Literal["error"] = "error"
    code: str
    message: str


ServerMessage = Annotated[
    Union[SnapshotMsg, HelloMsg, RoleMsg, SceneLoadedMsg, ErrorMsg],
    Field(discriminator="kind"),
]
_server_adapter: TypeAdapter = TypeAdapter(ServerMessage)


def encode_server_message(msg: BaseModel) -> str:
    return msg.model_dump_json()


def parse_server_message(text: Union[str, bytes]) -> ServerMessage:
    try:
        return _server_adapter.validate_json(text)
    except ValidationError as exc:
        raise WireError("bad_message", f"malformed server message: {exc}") from exc

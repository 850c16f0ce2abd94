from __future__ import annotations

import json

import pytest

from navvi.world_model import (
    SceneError,
    agent_pose_at,
    iter_obstacle_discs,
    load_scene,
    serialize_scene,
    validate_scene,
)

from scenefab import agent, box, scene_doc, scene_json


def _line_agent(loop: bool = False):
    raw = agent("a1", [(0.0, 0.0), (10.0, 0.0)], speed=1.0, loop=loop)
    scene = load_scene(scene_json(agents=[raw], width=20.0, depth=20.0))
    return scene.agents[0]


def test_agent_pose_midway_along_leg():
    a = _line_agent()
    pos, vel = agent_pose_at(a, 4.0)
    assert pos == pytest.approx((4.0, 0.0))
    assert vel == pytest.approx((1.0, 0.0))


def test_agent_holds_final_waypoint_when_not_looping():
    a = _line_agent(loop=False)
    pos, vel = agent_pose_at(a, 25.0)
    assert pos == pytest.approx((10.0, 0.0))
    assert vel == (0.0, 0.0)


def test_agent_loops_with_period():
    a = _line_agent(loop=True)
    assert agent_pose_at(a, 24.0)[0] == pytest.approx(agent_pose_at(a, 4.0)[0])


def test_agent_pose_rejects_negative_time():
    a = _line_agent()
    with pytest.raises(ValueError):
        agent_pose_at(a, -0.1)


def test_load_scene_round_trips_through_serialize():
    scene = load_scene(
        scene_json(
            statics=[box("b1", 5.0, 5.0, 2.0, 1.0)],
            agents=[agent("a1", [(1.0, 1.0), (9.0, 1.0)])],
        )
    )
    again = load_scene(serialize_scene(scene))
    assert again == scene


def test_load_scene_rejects_wrong_version():
    doc = scene_doc()
    doc["version"] = "navvi-scene/9"
    with pytest.raises(SceneError, match="version"):
        load_scene(json.dumps(doc))


def test_load_scene_rejects_missing_floor():
    doc = scene_doc()
    del doc["floor"]
    with pytest.raises(SceneError, match="floor"):
        load_scene(json.dumps(doc))


def test_load_scene_rejects_malformed_spawn():
    doc = scene_doc()
    doc["robot"]["spawn"] = [1.0, 2.0]
    with pytest.raises(SceneError, match="spawn"):
        load_scene(json.dumps(doc))


def test_load_scene_requires_goal():
    doc = scene_doc()
    del doc["goal"]
    with pytest.raises(SceneError, match="goal"):
        load_scene(json.dumps(doc))


def test_validate_flags_out_of_bounds_goal():
    doc = scene_doc()
    doc["goal"]["position"] = [500.0, 1.0]
    with pytest.raises(SceneError, match="goal"):
        load_scene(json.dumps(doc))


def test_validate_scene_accepts_shipped_scenes(scenes_dir):
    for path in sorted(scenes_dir.glob("*.json")):
        scene = load_scene(path.read_text())
        assert validate_scene(scene) == [], path.name


def test_floor_contains_is_inclusive():
    scene = load_scene(scene_json(width=10.0, depth=8.0, goal=(5.0, 5.0)))
    fb = scene.floor_bounds
    assert fb.contains((0.0, 0.0))
    assert fb.contains((10.0, 8.0))
    assert not fb.contains((10.0001, 4.0))


def test_iter_obstacle_discs_tracks_agent_motion():
    raw = agent("a1", [(2.0, 2.0), (8.0, 2.0)], speed=1.0, radius=0.5, loop=False)
    scene = load_scene(scene_json(agents=[raw]))
    discs_t0 = dict((oid, (c, r)) for oid, c, r in iter_obstacle_discs(scene, 0.0))
    discs_t3 = dict((oid, (c, r)) for oid, c, r in iter_obstacle_discs(scene, 3.0))
    assert discs_t0["a1"][0] == pytest.approx((2.0, 2.0))
    assert discs_t3["a1"][0] == pytest.approx((5.0, 2.0))
    assert discs_t3["a1"][1] == 0.5

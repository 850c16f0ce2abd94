from __future__ import annotations

import pathlib

import pytest

from navvi.navmesh.runtime import NavMeshRuntime, bake
from navvi.world_model import load_scene

SCENES = pathlib.Path(__file__).resolve().parent.parent / "scenes"


@pytest.fixture(scope="session")
def scenes_dir() -> pathlib.Path:
    return SCENES


@pytest.fixture(scope="session")
def warehouse_scene():
    return load_scene((SCENES / "warehouse_a.json").read_text())


@pytest.fixture(scope="session")
def warehouse_mesh(warehouse_scene):
    return bake(warehouse_scene)


@pytest.fixture(scope="session")
def crossing_scene():
    return load_scene((SCENES / "crossing_forklift.json").read_text())


@pytest.fixture(scope="session")
def open_floor_scene():
    return load_scene((SCENES / "open_floor.json").read_text())


@pytest.fixture()
def warehouse_runtime(warehouse_scene, warehouse_mesh):
    # fresh carve state per test; the session bake is shared read-only
    return NavMeshRuntime(
        scene=warehouse_scene,
        mesh=warehouse_mesh,
        cell_size=0.20,
        agent_radius=warehouse_scene.robot.radius,
    )

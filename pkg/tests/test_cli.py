"""CLI subcommands: run, bake, bench, argument handling."""

import json

import pytest

from navvi.events import parse_session_csv
from navvi.gateway.cli import build_parser, main
from scenefab import scene_json


@pytest.fixture()
def small_scene_dir(tmp_path):
    d = tmp_path / "scenes"
    d.mkdir()
    (d / "tiny.json").write_text(
        scene_json(width=8.0, depth=6.0, spawn=(1.0, 1.0, 0.0), goal=(7.0, 5.0))
    )
    return d


def test_run_writes_csv_log(small_scene_dir, tmp_path, capsys):
    out = tmp_path / "out.csv"
    code = main(
        [
            "run",
            "--scene",
            "tiny",
            "--scene-dir",
            str(small_scene_dir),
            "--log-out",
            str(out),
        ]
    )
    assert code == 0
    events, shelf, obstacle, elapsed = parse_session_csv(out.read_bytes())
    assert (shelf, obstacle) == (0, 0)
    assert elapsed is not None and elapsed > 0
    assert any(e.kind == "goal_reached" for e in events)
    err = capsys.readouterr().err
    assert "status=goal_reached" in err


def test_run_defaults_to_stdout(small_scene_dir, capsys):
    code = main(["run", "--scene", "tiny", "--scene-dir", str(small_scene_dir)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("t_s,event_kind,")
    assert ",summary," in out


def test_run_with_timed_script(small_scene_dir, tmp_path, capsys):
    script = tmp_path / "forward.json"
    script.write_text(
        json.dumps({"mode": "script", "inputs": [[0.0, 0.0, 1.0]], "duration": 0.5})
    )
    code = main(
        [
            "run",
            "--scene",
            "tiny",
            "--scene-dir",
            str(small_scene_dir),
            "--script",
            str(script),
        ]
    )
    assert code == 0
    assert "status=running" in capsys.readouterr().err


def test_run_accepts_direct_scene_path(small_scene_dir, capsys):
    code = main(["run", "--scene", str(small_scene_dir / "tiny.json")])
    assert code == 0
    assert "status=goal_reached" in capsys.readouterr().err


def test_run_respects_time_cap(small_scene_dir, tmp_path, capsys):
    code = main(
        [
            "run",
            "--scene",
            "tiny",
            "--scene-dir",
            str(small_scene_dir),
            "--time-cap",
            "0.2",
        ]
    )
    assert code == 0
    assert "status=timeout" in capsys.readouterr().err


def test_bake_dumps_mesh_with_metadata(scenes_dir, tmp_path, capsys):
    out = tmp_path / "mesh.json"
    code = main(
        [
            "bake",
            "--scene",
            "warehouse_a",
            "--scene-dir",
            str(scenes_dir),
            "--mesh-out",
            str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["triangles"] and doc["vertices"] and doc["portals"]
    assert doc["metadata"]["walkable_cells"] > 0
    assert doc["metadata"]["cell_size"] == 0.2
    err = capsys.readouterr().err
    assert "triangles=858" in err and "regions=" in err


def test_bake_stdout_parses_as_json(small_scene_dir, capsys):
    code = main(["bake", "--scene", "tiny", "--scene-dir", str(small_scene_dir)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["metadata"]["region_count"] >= 1


def test_bench_reports_latency_and_nodes(small_scene_dir, capsys):
    code = main(
        [
            "bench",
            "--scene",
            "tiny",
            "--scene-dir",
            str(small_scene_dir),
            "--queries",
            "25",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "plan latency:" in out and "median=" in out and "p99=" in out
    assert "nodes expanded:" in out


def test_bench_is_seed_deterministic(small_scene_dir, capsys):
    main(["bench", "--scene", "tiny", "--scene-dir", str(small_scene_dir),
          "--queries", "10", "--seed", "7"])
    first = capsys.readouterr().out.splitlines()[-1]
    main(["bench", "--scene", "tiny", "--scene-dir", str(small_scene_dir),
          "--queries", "10", "--seed", "7"])
    second = capsys.readouterr().out.splitlines()[-1]
    assert first == second  # node counts; latency lines vary by wall clock


def test_unknown_scene_exits_nonzero(small_scene_dir):
    with pytest.raises(SystemExit) as err:
        main(["run", "--scene", "missing", "--scene-dir", str(small_scene_dir)])
    assert err.value.code not in (0, None)
    assert "missing" in str(err.value.code)


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as err:
        main(["explode"])
    assert err.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_exits_2(small_scene_dir, capsys):
    with pytest.raises(SystemExit) as err:
        main(["run", "--scene", "tiny", "--warp", "9"])
    assert err.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_no_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2


def test_scene_dir_env_fallback(small_scene_dir, monkeypatch, capsys):
    monkeypatch.setenv("NAVVI_SCENE_DIR", str(small_scene_dir))
    code = main(["bake", "--scene", "tiny"])
    assert code == 0
    assert "triangles=" in capsys.readouterr().err


def test_serve_parser_defaults():
    args = build_parser().parse_args(["serve"])
    assert args.port == 8787 and args.tick_hz == 50.0 and args.snapshot_hz == 20.0
    assert args.host == "127.0.0.1"

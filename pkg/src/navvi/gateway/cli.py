"""Command-line entry point: serve, run, bake, bench."""

from __future__ import annotations

import argparse
import os
import statistics
import sys
import time
from pathlib import Path

from .. import planner as pl
from ..navmesh import new_runtime
from ..events import finalize
from ..sim_loop import AUTOPILOT, parse_control_script, run_headless, TickConfig
from ..world_model import GoalSpec, SceneDescription, load_scene


def _scene_dir(explicit: str | None) -> Path | None:
    if explicit:
        return Path(explicit)
    env = os.environ.get("NAVVI_SCENE_DIR")
    if env:
        return Path(env)
    local = Path.cwd() / "scenes"
    return local if local.is_dir() else None


def _resolve_scene(name: str, scene_dir: Path | None) -> Path:
    direct = Path(name)
    if direct.suffix == ".json" and direct.is_file():
        return direct
    if scene_dir is not None:
        candidate = scene_dir / f"{name}.json"
        if candidate.is_file():
            return candidate
    raise SystemExit(f"scene {name!r} not found (searched {scene_dir or 'no scene dir'})")


def _load(name: str, scene_dir: Path | None) -> SceneDescription:
    path = _resolve_scene(name, scene_dir)
    return load_scene(path.read_text(encoding="utf-8"))


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .app import create_app

    app = create_app(
        scene_dir=_scene_dir(args.scene_dir),
        tick_hz=args.tick_hz,
        snapshot_hz=args.snapshot_hz,
        seed=args.seed,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    scene = _load(args.scene, _scene_dir(args.scene_dir))
    if args.script == "autopilot":
        script = AUTOPILOT
    else:
        script = parse_control_script(Path(args.script).read_text(encoding="utf-8"))
    log = run_headless(
        scene,
        script,
        TickConfig.for_scene(scene, seed=args.seed),
        time_cap=args.time_cap,
    )
    data = finalize(log)
    if args.log_out:
        Path(args.log_out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    print(
        f"status={log.status} elapsed={log.elapsed} "
        f"shelf_collisions={log.shelf_collision_count} "
        f"obstacle_collisions={log.obstacle_collision_count}",
        file=sys.stderr,
    )
    return 0


def cmd_bake(args: argparse.Namespace) -> int:
    scene = _load(args.scene, _scene_dir(args.scene_dir))
    runtime = new_runtime(scene)
    text = runtime.mesh.dumps()
    if args.mesh_out:
        Path(args.mesh_out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    meta = runtime.mesh.metadata
    print(
        f"triangles={len(runtime.mesh.triangles)} "
        f"regions={meta.get('region_count')} "
        f"walkable_cells={meta.get('walkable_cells')}",
        file=sys.stderr,
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    import random

    scene = _load(args.scene, _scene_dir(args.scene_dir))
    runtime = new_runtime(scene)
    mesh = runtime.mesh
    cfg = pl.PlannerConfig()
    rng = random.Random(args.seed)
    fb = scene.floor_bounds

    def sample() -> tuple[float, float]:
        while True:
            p = (
                fb.x + rng.random() * fb.width,
                fb.z + rng.random() * fb.depth,
            )
            if mesh.locate(p).on_mesh:
                return p

    pairs = [(sample(), sample()) for _ in range(args.queries)]
    times = []
    nodes = []
    for start, goal in pairs:
        t0 = time.perf_counter()
        try:
            _path, stats = pl.plan(runtime, start, GoalSpec(goal, 1.0), cfg)
        except pl.Unreachable:
            continue
        times.append(time.perf_counter() - t0)
        nodes.append(stats.nodes_expanded)
    if not times:
        print("no solvable queries sampled", file=sys.stderr)
        return 1
    times.sort()
    median = statistics.median(times)
    p99 = times[min(len(times) - 1, int(0.99 * len(times)))]
    print(
        f"scene={args.scene} triangles={len(mesh.triangles)} queries={len(times)}\n"
        f"plan latency: median={median * 1e3:.3f} ms p99={p99 * 1e3:.3f} ms "
        f"max={times[-1] * 1e3:.3f} ms\n"
        f"nodes expanded: median={statistics.median(nodes):.0f} max={max(nodes)}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navvi", description="warehouse teleoperation simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the gateway service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8787)
    serve.add_argument("--scene-dir", default=None)
    serve.add_argument("--tick-hz", type=float, default=50.0)
    serve.add_argument("--snapshot-hz", type=float, default=20.0)
    serve.add_argument("--seed", type=int, default=0)
    serve.set_defaults(fn=cmd_serve)

    run = sub.add_parser("run", help="headless session, CSV log out")
    run.add_argument("--scene", required=True)
    run.add_argument("--scene-dir", default=None)
    run.add_argument("--script", default="autopilot")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--log-out", default=None)
    run.add_argument("--time-cap", type=float, default=300.0)
    run.set_defaults(fn=cmd_run)

    bake = sub.add_parser("bake", help="build and dump the navmesh")
    bake.add_argument("--scene", required=True)
    bake.add_argument("--scene-dir", default=None)
    bake.add_argument("--mesh-out", default=None)
    bake.set_defaults(fn=cmd_bake)

    bench = sub.add_parser("bench", help="measure plan latency on a scene")
    bench.add_argument("--scene", required=True)
    bench.add_argument("--scene-dir", default=None)
    bench.add_argument("--queries", type=int, default=1000)
    bench.add_argument("--seed", type=int, default=0)
    bench.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())

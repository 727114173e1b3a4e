"""Command-line entry point: serve, capture, latency-bench, metrics.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import numpy as np


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="vinesim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the simulator + WebSocket server")
    serve.add_argument("--config", help="TOML config file")
    serve.add_argument("--host", help="bind address (overrides config)")
    serve.add_argument("--port", type=int, help="port (overrides config; 0 = ephemeral)")
    serve.add_argument("--scenario", help="initial scenario name")
    serve.add_argument("--seed", type=int, help="initial scenario seed")
    serve.add_argument(
        "--fast", action="store_true",
        help="run as fast as possible instead of real-time pacing",
    )
    serve.add_argument(
        "--no-sensors", action="store_true",
        help="skip publishing rt/* sensor topics",
    )
    serve.add_argument(
        "--fanout-port", type=int, default=None,
        help="also serve the TCP topic fan-out on this port",
    )

    capture = sub.add_parser("capture", help="fly a circular capture mission")
    capture.add_argument("--config", help="TOML config file")
    capture.add_argument("--center", type=float, nargs=3, metavar=("X", "Y", "Z"),
                         default=None, help="circle centre (default: tree canopy)")
    capture.add_argument("--radius", type=float, default=3.0)
    capture.add_argument("--altitude", type=float, default=None,
                         help="capture altitude (default: centre z)")
    capture.add_argument("--n", type=int, default=18, help="number of viewpoints")
    capture.add_argument("--out", required=True, help="output dataset directory")
    capture.add_argument("--scenario", default="single_tree")
    capture.add_argument("--seed", type=int, default=0)

    bench = sub.add_parser("latency-bench", help="loopback transport latency probe")
    bench.add_argument("--duration", type=float, default=60.0, help="seconds")
    bench.add_argument("--rate", type=float, default=30.0, help="Hz")
    bench.add_argument("--streams", default="odom,rgb,depth",
                       help="comma-separated: odom,rgb,depth,null")
    bench.add_argument("--fast", action="store_true",
                       help="no pacing (synthetic schedule)")
    bench.add_argument("--format", choices=("csv", "json"), default="csv")

    metrics = sub.add_parser("metrics", help="trajectory metrics from a CSV log")
    metrics.add_argument("log", help="trajectory CSV (t,x,y,z,yaw)")
    metrics.add_argument("scene", help="scene JSON file")
    metrics.add_argument("--goal", type=float, nargs=3, required=True,
                         metavar=("X", "Y", "Z"))
    metrics.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _cmd_serve(args) -> int:
    from .config import load_config
    from .middleware import TopicBus, TcpFanout
    from .server.core import SimCore
    from .server.server import SimServer

    cfg = load_config(args.config)
    host = args.host or cfg.server.host
    port = cfg.server.port if args.port is None else args.port
    scenario = args.scenario or cfg.sim.scenario
    seed = cfg.sim.seed if args.seed is None else args.seed

    core = SimCore(cfg.core_config(), scenario=scenario, seed=seed)
    bus = TopicBus()
    server = SimServer(
        core,
        host=host,
        port=port,
        broadcast_hz=cfg.rates.broadcast_hz,
        sensor_hz=cfg.rates.sensor_hz,
        realtime=not args.fast,
        publish_sensors=not args.no_sensors,
        reward=cfg.reward,
        bus=bus,
        agent_hz=cfg.rates.agent_hz,
    )

    async def main():
        fanout = None
        try:
            await server.start()
        except OSError as exc:
            print(f"vinesim serve: cannot bind {host}:{port}: {exc}", file=sys.stderr)
            return 2
        if args.fanout_port is not None:
            fanout = TcpFanout(bus, host=host, port=args.fanout_port)
            print(f"topic fan-out on {fanout.address[0]}:{fanout.address[1]}")
        print(f"serving ws://{host}:{server.port}/sim "
              f"(scenario={scenario}, seed={seed}, "
              f"{'fast' if args.fast else 'real-time'})")
        sys.stdout.flush()
        try:
            await asyncio.Future()
        except asyncio.CancelledError:
            pass
        finally:
            await server.stop()
            if fanout is not None:
                fanout.close()
            st = core.state
            print(
                f"shutdown: sim time {st.time:.3f} s, position "
                f"[{st.position[0]:.3f}, {st.position[1]:.3f}, {st.position[2]:.3f}]"
            )
        return 0

    try:
        return asyncio.run(main()) or 0
    except KeyboardInterrupt:
        return 0


def _cmd_capture(args) -> int:
    from .config import load_config
    from .missions import circular_capture_waypoints, run_capture_mission
    from .server.core import SimCore
    from .world import CANOPY_SEMI_Z, TRUNK_HEIGHT

    cfg = load_config(args.config)
    core = SimCore(cfg.core_config(), scenario=args.scenario, seed=args.seed)
    center = args.center
    if center is None:
        center = [0.0, 0.0, TRUNK_HEIGHT + 0.35 * CANOPY_SEMI_Z]
    altitude = args.altitude if args.altitude is not None else center[2]
    if altitude <= core.scene.ground_z:
        print(
            f"vinesim capture: altitude {altitude} is not above the ground plane "
            f"(z = {core.scene.ground_z})",
            file=sys.stderr,
        )
        return 2
    waypoints = (
        circular_capture_waypoints(center, args.radius, altitude, args.n)
        if args.n > 0
        else []
    )
    manifest = run_capture_mission(core, waypoints, args.out)
    print(
        f"capture: {manifest['completed']}/{manifest['waypoint_count']} viewpoints, "
        f"status: {manifest['status']}, sim time {core.state.time:.1f} s"
    )
    return 0 if manifest["status"] == "complete" else 2


def _cmd_latency_bench(args) -> int:
    from .middleware import STREAM_BUILDERS, measure_latency

    streams = [s.strip() for s in args.streams.split(",") if s.strip()]
    unknown = [s for s in streams if s not in STREAM_BUILDERS]
    if unknown:
        print(f"vinesim latency-bench: unknown stream(s): {unknown}", file=sys.stderr)
        return 1
    results = [
        measure_latency(s, args.duration, args.rate, realtime=not args.fast)
        for s in streams
    ]
    budget_ms = 1000.0 / args.rate
    if args.format == "json":
        print(json.dumps(
            [
                {
                    "stream": r.stream, "mean_ms": r.mean_ms, "std_ms": r.std_ms,
                    "n": r.n, "drops": r.drops, "budget_ms": budget_ms,
                    "within_budget": r.mean_ms < budget_ms,
                }
                for r in results
            ],
            indent=1,
        ))
    else:
        print("stream,mean_ms,std_ms,n")
        for r in results:
            print(r.csv_row())
        for r in results:
            verdict = "within" if r.mean_ms < budget_ms else "EXCEEDS"
            print(
                f"# {r.stream}: mean {r.mean_ms:.3f} ms {verdict} the "
                f"{budget_ms:.1f} ms budget; drops={r.drops}",
                file=sys.stderr,
            )
    return 0


def _cmd_metrics(args) -> int:
    from .missions import (
        flight_time,
        goal_convergence,
        load_trajectory_log,
        obstacle_clearance,
    )
    from .world import load_scene

    log = load_trajectory_log(args.log)
    scene = load_scene(args.scene)
    goal = np.asarray(args.goal, dtype=float)
    values = {
        "flight_time_s": flight_time(log),
        "goal_convergence_m": goal_convergence(log, goal),
        "obstacle_clearance_m": obstacle_clearance(log, scene),
    }
    if args.format == "json":
        print(json.dumps(values, indent=1))
    else:
        print("metric,value")
        for k, v in values.items():
            print(f"{k},{v!r}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "serve": _cmd_serve,
        "capture": _cmd_capture,
        "latency-bench": _cmd_latency_bench,
        "metrics": _cmd_metrics,
    }
    try:
        return handlers[args.command](args)
    except KeyboardInterrupt:
        return 0
    except Exception as exc:
        print(f"vinesim {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front-end.

Subcommands: run (start the service), plan (offline schedule), apply (thin
client: send a heightmap and wait for settle), preset (list/emit), replay
(verify a recorded trace). Exit codes: 2 validation error, 3 timeout.

LIFTTILES_SEED in the environment overrides --seed.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
import time

from . import shapes
from .control import ControlConfig
from .model import LayoutError, layout_from_json
from .planner import PlannerError, TransitionProblem, plan_greedy, schedule_to_json
from .sim import SimConfig
from .trace import TraceError, replay_file

EXIT_VALIDATION = 2
EXIT_TIMEOUT = 3


def _load_layout(path: str):
    with open(path, encoding="utf-8") as fp:
        return layout_from_json(fp.read())


def _seed(args) -> int:
    env = os.environ.get("LIFTTILES_SEED")
    if env is not None:
        return int(env)
    return args.seed


def _parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def cmd_run(args) -> int:
    from .gateway.server import GatewayServer, serve
    from .gateway.session import Session

    layout = _load_layout(args.layout)
    config = SimConfig(seed=_seed(args), sensor_noise_sigma_cm=args.sensor_sigma)
    trace_fp = open(args.trace, "w", encoding="utf-8", buffering=1) if args.trace else None
    session = Session(layout, config, ControlConfig(), trace_fp=trace_fp)
    server = GatewayServer(session, tick_s=args.tick_ms / 1000.0)
    host, port = _parse_addr(args.listen)
    http_host = http_port = None
    if args.http:
        http_host, http_port = _parse_addr(args.http)
    try:
        asyncio.run(serve(server, host, port, http_host, http_port))
    except KeyboardInterrupt:
        pass
    finally:
        if trace_fp:
            trace_fp.close()
    return 0


def cmd_plan(args) -> int:
    layout = _load_layout(args.layout)
    with open(args.to_file, encoding="utf-8") as fp:
        target = shapes.load_heightmap(fp.read(), layout)
    if args.from_file:
        with open(args.from_file, encoding="utf-8") as fp:
            current = shapes.load_heightmap(fp.read(), layout)
        current_entries = {aid: current.entries.get(aid, layout.spec_of(aid).min_height_cm)
                           for aid in target.entries}
    else:
        current_entries = {aid: layout.spec_of(aid).min_height_cm for aid in target.entries}
    problem = TransitionProblem(layout=layout, current=current_entries,
                                target=dict(target.entries))
    schedule = plan_greedy(problem)
    print(schedule_to_json(schedule), end="")
    print(f"makespan {schedule.predicted_makespan_s:.1f} s")
    return 0


def cmd_apply(args) -> int:
    from .gateway.client import GatewayClient

    layout = _load_layout(args.layout) if args.layout else None
    with open(args.heightmap, encoding="utf-8") as fp:
        text = fp.read()
    host, port = _parse_addr(args.connect)
    with GatewayClient(host, port, timeout_s=args.timeout) as client:
        if layout is not None:
            hm = shapes.load_heightmap(text, layout)
            targets = dict(hm.entries)
        else:
            # Without a layout file, only the full JSON flavor is self-describing.
            body = text.split("\n", 1)[1]
            targets = json.loads(body)["entries"]
        resp = client.request("SetTarget", {"targets": targets})
        if resp["kind"] == "Err":
            print(f"error: {resp['payload']['message']}", file=sys.stderr)
            return EXIT_VALIDATION
        client.request("Subscribe", {"on": True})
        deadline = time.monotonic() + args.timeout
        deadband = args.deadband
        start = None
        result = {}

        def on_frame(doc: dict) -> bool:
            nonlocal start
            if doc.get("kind") != "StateSnapshot":
                return True
            if time.monotonic() > deadline:
                return False
            heights = {a["id"]: a["height_cm"] for a in doc["payload"]["actuators"]}
            if start is None:
                start = doc["payload"]["t_s"]
            done = all(abs(heights[aid] - h) <= deadband for aid, h in targets.items())
            if done:
                result["elapsed_s"] = doc["payload"]["t_s"] - start
                return False
            return True

        client.stream(on_frame)
    if "elapsed_s" not in result:
        print("timeout waiting for settle", file=sys.stderr)
        return EXIT_TIMEOUT
    print(f"settled in {result['elapsed_s']:.2f} s (sim time), "
          f"{len(targets)} actuators within ±{deadband} cm")
    return 0


def cmd_preset(args) -> int:
    if args.action == "list":
        for name in shapes.PRESET_NAMES:
            print(name)
        return 0
    if not args.name or not args.layout:
        print("error: preset emit needs NAME and --layout", file=sys.stderr)
        return EXIT_VALIDATION
    layout = _load_layout(args.layout)
    hm = shapes.preset(args.name, layout, args.height)
    print(shapes.heightmap_to_text(hm), end="")
    return 0


def cmd_replay(args) -> int:
    result = replay_file(args.trace)
    if result.identical:
        print(f"identical ({result.records_checked} records)")
        return 0
    print(f"divergent after {result.records_checked} records: {result.first_divergence}",
          file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lifttiles")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="start the control service")
    p.add_argument("--layout", required=True)
    p.add_argument("--tick-ms", type=float, default=1000.0 / 30.0)
    p.add_argument("--listen", default="127.0.0.1:7801")
    p.add_argument("--http", default="127.0.0.1:8701",
                   help="HTTP/WebSocket bind address, empty string to disable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sensor-sigma", type=float, default=0.5)
    p.add_argument("--trace", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plan", help="print a transition schedule and makespan")
    p.add_argument("--layout", required=True)
    p.add_argument("--from", dest="from_file", default=None)
    p.add_argument("--to", dest="to_file", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("apply", help="send a heightmap to a running service and wait")
    p.add_argument("--connect", default="127.0.0.1:7801")
    p.add_argument("--heightmap", required=True)
    p.add_argument("--layout", default=None, help="needed for grid-flavor heightmaps")
    p.add_argument("--timeout", type=float, default=120.0)
    p.add_argument("--deadband", type=float, default=2.0)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("preset", help="list preset names or emit one as a heightmap")
    p.add_argument("action", choices=("list", "emit"))
    p.add_argument("name", nargs="?")
    p.add_argument("--layout")
    p.add_argument("--height", type=float, default=15.0)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("replay", help="re-run a trace file and verify determinism")
    p.add_argument("trace")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LayoutError, shapes.HeightmapError, PlannerError, TraceError,
            FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except TimeoutError as e:  # socket.timeout is an alias since 3.10
        print(f"timeout: {e}", file=sys.stderr)
        return EXIT_TIMEOUT


if __name__ == "__main__":
    sys.exit(main())

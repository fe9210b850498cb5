"""Append-only newline-delimited trace log, with deterministic replay.

State records carry exactly (t_s, id, height_cm, supply, release, fault) in
that order. Meta records (header, command batches, summaries) carry a "kind"
field so state records stay distinguishable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence

from .model import Fault, Layout, Valve, layout_from_json, layout_to_json
from .sim import (OverloadPolicy, SimConfig, SimState, ValveCommand,
                  apply_commands, initial_state, step)

FORMAT_VERSION = "lifttiles-v1"


class TraceError(ValueError):
    pass


class TraceWriter:
    def __init__(self, fp: IO[str]):
        self._fp = fp

    def write_header(self, layout: Layout, config: SimConfig) -> None:
        rec = {
            "kind": "header",
            "format": FORMAT_VERSION,
            "seed": config.seed,
            "dt_s": config.dt_s,
            "sensor_rate_hz": config.sensor_rate_hz,
            "sensor_noise_sigma_cm": config.sensor_noise_sigma_cm,
            "overload_policy": config.overload_policy.value,
            "layout": json.loads(layout_to_json(layout)),
        }
        self._fp.write(json.dumps(rec, sort_keys=True) + "\n")

    def write_commands(self, t_s: float, commands: Sequence[ValveCommand]) -> None:
        if not commands:
            return
        rec = {
            "kind": "command",
            "t_s": t_s,
            "commands": [
                {"id": c.actuator_id, "supply": c.supply.value, "release": c.release.value}
                for c in commands
            ],
        }
        self._fp.write(json.dumps(rec) + "\n")

    def write_step(self, dt_s: float) -> None:
        # Recording the exact dt keeps replay arithmetic bit-identical.
        self._fp.write(json.dumps({"kind": "step", "dt_s": dt_s}) + "\n")

    def write_states(self, state: SimState) -> None:
        for aid in sorted(state.states):
            s = state.states[aid]
            rec = {
                "t_s": state.t_s,
                "id": aid,
                "height_cm": s.height_cm,
                "supply": s.supply.value,
                "release": s.release.value,
                "fault": s.fault.value,
            }
            self._fp.write(json.dumps(rec) + "\n")

    def write_summary(self, summary: dict) -> None:
        self._fp.write(json.dumps({"kind": "summary", **summary}, sort_keys=True) + "\n")


@dataclass
class ReplayResult:
    identical: bool
    records_checked: int
    first_divergence: Optional[str] = None


def replay(lines: Iterable[str]) -> ReplayResult:
    """Re-run a recorded trace and compare every state record byte-for-byte.

    The trace must start with a header; commands are re-applied at their
    recorded times and the simulation is stepped to each state timestamp.
    """
    it = iter(lines)
    try:
        header = json.loads(next(it))
    except StopIteration:
        raise TraceError("empty trace")
    if header.get("kind") != "header":
        raise TraceError("trace does not start with a header record")
    if header.get("format") != FORMAT_VERSION:
        raise TraceError(f"unsupported trace format {header.get('format')!r}")

    layout = layout_from_json(json.dumps(header["layout"]))
    config = SimConfig(dt_s=header["dt_s"], seed=header["seed"],
                       sensor_rate_hz=header["sensor_rate_hz"],
                       sensor_noise_sigma_cm=header["sensor_noise_sigma_cm"],
                       overload_policy=OverloadPolicy(header["overload_policy"]))
    state = initial_state(layout, config)
    checked = 0
    for raw in it:
        raw = raw.rstrip("\n")
        if not raw:
            continue
        rec = json.loads(raw)
        kind = rec.get("kind")
        if kind == "command":
            cmds = [ValveCommand(c["id"], Valve(c["supply"]), Valve(c["release"]))
                    for c in rec["commands"]]
            state = apply_commands(state, cmds)
            continue
        if kind == "step":
            state = step(state, layout, config, dt_s=rec["dt_s"])
            continue
        if kind is not None:  # header/summary/unknown meta
            continue
        expected = json.dumps({
            "t_s": state.t_s,
            "id": rec["id"],
            "height_cm": state.states[rec["id"]].height_cm,
            "supply": state.states[rec["id"]].supply.value,
            "release": state.states[rec["id"]].release.value,
            "fault": state.states[rec["id"]].fault.value,
        })
        checked += 1
        if expected != raw:
            return ReplayResult(identical=False, records_checked=checked,
                                first_divergence=f"expected {expected} got {raw}")
    return ReplayResult(identical=True, records_checked=checked)


def replay_file(path: str) -> ReplayResult:
    with open(path, encoding="utf-8") as fp:
        return replay(fp)

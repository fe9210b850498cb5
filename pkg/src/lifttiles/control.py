"""Bang-bang height regulation with a symmetric deadband, plus settle detection.

control_step and is_settled are pure; run_to_target owns its simulation state
for the duration of the call and drives it at the sensor rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Mapping, Optional, Sequence

from .model import Layout, LayoutError, Valve
from .sim import (SensorReading, SimConfig, SimState, ValveCommand,
                  apply_commands, initial_state, sense, step)
from .trace import TraceWriter


@dataclass(frozen=True)
class ControlConfig:
    deadband_cm: float = 2.0
    settle_hold_s: float = 0.5
    stale_reading_timeout_s: float = 0.5

    def __post_init__(self):
        if self.deadband_cm <= 0:
            raise ValueError("deadband_cm must be positive")
        if self.settle_hold_s < 0:
            raise ValueError("settle_hold_s must be >= 0")


@dataclass(frozen=True)
class TargetAssignment:
    targets: Mapping[str, float]


def validate_targets(targets: Mapping[str, float], layout: Layout) -> None:
    for aid, h in targets.items():
        spec = layout.spec_of(aid)
        if not (spec.min_height_cm <= h <= spec.max_height_cm):
            raise LayoutError(
                f"target {h} cm for {aid!r} outside [{spec.min_height_cm}, {spec.max_height_cm}]")


def control_step(readings: Mapping[str, SensorReading], targets: TargetAssignment,
                 config: ControlConfig, now_s: float) -> tuple[list[ValveCommand], list[str]]:
    """One command per targeted actuator; never opens both valves.

    Below the band: extend. Above: retract. Inside: hold (trapped air sustains
    height). Stale or missing readings hold and are reported as notices.
    """
    commands: list[ValveCommand] = []
    notices: list[str] = []
    for aid in sorted(targets.targets):
        target = targets.targets[aid]
        reading = readings.get(aid)
        if reading is None or now_s - reading.t_s > config.stale_reading_timeout_s:
            commands.append(ValveCommand(aid, Valve.CLOSED, Valve.CLOSED))
            notices.append(f"stale reading for {aid}")
            continue
        err = reading.measured_height_cm - target
        if err < -config.deadband_cm:
            commands.append(ValveCommand(aid, Valve.OPEN, Valve.CLOSED))
        elif err > config.deadband_cm:
            commands.append(ValveCommand(aid, Valve.CLOSED, Valve.OPEN))
        else:
            commands.append(ValveCommand(aid, Valve.CLOSED, Valve.CLOSED))
    return commands, notices


def is_settled(history: Sequence[SensorReading], targets: TargetAssignment,
               config: ControlConfig) -> tuple[bool, dict[str, bool]]:
    """True iff every targeted actuator stayed in band for the trailing hold window."""
    per_id: dict[str, bool] = {}
    for aid in targets.targets:
        target = targets.targets[aid]
        readings = [r for r in history if r.actuator_id == aid]
        if not readings:
            per_id[aid] = False
            continue
        latest = readings[-1].t_s
        run_start = None
        for r in reversed(readings):
            if abs(r.measured_height_cm - target) <= config.deadband_cm:
                run_start = r.t_s
            else:
                break
        per_id[aid] = run_start is not None and latest - run_start >= config.settle_hold_s - 1e-9
    return all(per_id.values()), per_id


@dataclass
class TransitionReport:
    settled: bool
    elapsed_s: float            # when the last actuator entered its final in-band run
    completed_at_s: float       # when settling was confirmed (or timeout hit)
    max_overshoot_cm: float
    residuals_cm: dict[str, float]
    trajectories: dict[str, list[tuple[float, float]]]
    notices: list[str] = field(default_factory=list)
    final_state: Optional[SimState] = None


def run_to_target(layout: Layout, targets: TargetAssignment,
                  control_config: ControlConfig, sim_config: SimConfig,
                  timeout_s: float = 300.0,
                  state: Optional[SimState] = None,
                  trace_fp: Optional[IO[str]] = None) -> TransitionReport:
    """Drive the simulation closed-loop until settled or timeout.

    The loop runs at the sensor rate: sense, command, then step one sensor
    period. Reproducible under a fixed seed.
    """
    validate_targets(targets.targets, layout)
    if state is None:
        state = initial_state(layout, sim_config)
    writer = None
    if trace_fp is not None:
        writer = TraceWriter(trace_fp)
        writer.write_header(layout, sim_config)
        writer.write_states(state)

    period = sim_config.sensor_period_s
    band_entry: dict[str, Optional[float]] = {aid: None for aid in targets.targets}
    approach_side: dict[str, float] = {}  # +1 extending toward target, -1 retracting
    latest: dict[str, SensorReading] = {}
    trajectories: dict[str, list[tuple[float, float]]] = {aid: [] for aid in targets.targets}
    max_overshoot = 0.0
    notices: list[str] = []
    settled = False
    start_t = state.t_s

    while state.t_s - start_t <= timeout_s + 1e-9:
        readings, state = sense(state, layout, sim_config)
        for r in readings:
            if r.actuator_id not in targets.targets:
                continue
            latest[r.actuator_id] = r
            trajectories[r.actuator_id].append((r.t_s, r.measured_height_cm))
            target = targets.targets[r.actuator_id]
            if r.actuator_id not in approach_side:
                approach_side[r.actuator_id] = 1.0 if r.measured_height_cm <= target else -1.0
            if abs(r.measured_height_cm - target) <= control_config.deadband_cm:
                if band_entry[r.actuator_id] is None:
                    band_entry[r.actuator_id] = r.t_s
            else:
                band_entry[r.actuator_id] = None
                # Only excursions past the far band edge count as overshoot.
                over = (approach_side[r.actuator_id] * (r.measured_height_cm - target)
                        - control_config.deadband_cm)
                if over > 0:
                    max_overshoot = max(max_overshoot, over)

        entries = list(band_entry.values())
        if all(e is not None for e in entries):
            newest = max(entries) if entries else state.t_s
            if state.t_s - newest >= control_config.settle_hold_s - 1e-9:
                settled = True
                break

        commands, step_notices = control_step(latest, targets, control_config, state.t_s)
        notices.extend(step_notices)
        state = apply_commands(state, commands)
        if writer is not None:
            writer.write_commands(state.t_s, commands)
            writer.write_step(period)
        state = step(state, layout, sim_config, dt_s=period)
        if writer is not None:
            writer.write_states(state)

    residuals = {aid: state.states[aid].height_cm - targets.targets[aid]
                 for aid in targets.targets}
    entries = [e for e in band_entry.values() if e is not None]
    elapsed = (max(entries) - start_t) if settled and entries else state.t_s - start_t
    if not settled:
        notices.append("timeout before settling")
    report = TransitionReport(settled=settled, elapsed_s=elapsed,
                              completed_at_s=state.t_s - start_t,
                              max_overshoot_cm=max_overshoot,
                              residuals_cm=residuals, trajectories=trajectories,
                              notices=notices, final_state=state)
    if writer is not None:
        writer.write_summary({
            "settled": settled,
            "elapsed_s": elapsed,
            "completed_at_s": report.completed_at_s,
            "max_overshoot_cm": max_overshoot,
        })
    return report

"""Single authoritative session: the only mutation path into a running sim.

All frame handling and sim ticking happens on one logical writer; snapshots
handed out are plain data. Connection layers (TCP, WebSocket) call
handle_line/handle_frame and tick from the same event loop.
"""
from __future__ import annotations

import logging
from dataclasses import replace
from typing import IO, Optional

from .. import shapes
from ..control import ControlConfig, TargetAssignment, control_step, validate_targets
from ..model import (Fault, Layout, LayoutError, Orientation, OverlapError,
                     Pose, UnknownActuatorError, Valve, layout_from_json,
                     move_actuator)
from ..planner import (PlannerError, TransitionProblem, plan_greedy,
                       schedule_to_json)
from ..sim import (SensorReading, SimConfig, SimState, ValveCommand,
                   apply_commands, initial_state, sense, set_load, step)
from ..trace import TraceWriter
from . import frames as fr
from .frames import Frame, FrameError, ack_frame, err_frame

log = logging.getLogger(__name__)


class Session:
    def __init__(self, layout: Layout, sim_config: SimConfig,
                 control_config: Optional[ControlConfig] = None,
                 trace_fp: Optional[IO[str]] = None):
        self.layout = layout
        self.sim_config = sim_config
        self.control_config = control_config or ControlConfig()
        self.state: SimState = initial_state(layout, sim_config)
        self.targets: dict[str, float] = {}
        self.overrides: set[str] = set()
        self.seq = 0
        self.latest_readings: dict[str, SensorReading] = {}
        self._writer = None
        if trace_fp is not None:
            self._writer = TraceWriter(trace_fp)
            self._writer.write_header(layout, sim_config)
            self._writer.write_states(self.state)

    # -- frame handling ----------------------------------------------------

    def handle_line(self, line: str) -> list[str]:
        """Parse + handle one wire line; always exactly one response per request."""
        try:
            frame = fr.parse_frame(line)
        except FrameError as e:
            return [fr.serialize_frame(err_frame(e.correlation_id, "Malformed", str(e)))]
        return [fr.serialize_frame(f) for f in self.handle_frame(frame)]

    def handle_frame(self, frame: Frame) -> list[Frame]:
        kind = frame.kind
        if kind in ("Ack", "Err", "StateSnapshot"):
            return [err_frame(frame.id, "Malformed", f"{kind} is not a request frame")]
        handler = getattr(self, f"_on_{kind.lower()}")
        try:
            return handler(frame)
        except UnknownActuatorError as e:
            return [err_frame(frame.id, "BadId", str(e))]
        except OverlapError as e:
            return [err_frame(frame.id, "Overlap", str(e))]
        except (shapes.HeightmapError, PlannerError, LayoutError, ValueError) as e:
            return [err_frame(frame.id, "OutOfRange", str(e))]

    def _on_settarget(self, frame: fr.SetTargetFrame) -> list[Frame]:
        validate_targets(frame.payload.targets, self.layout)
        self.targets.update(frame.payload.targets)
        self.overrides -= set(frame.payload.targets)  # re-engage the controller
        return [ack_frame(frame.id, {"targets": len(frame.payload.targets)})]

    def _on_loadlayout(self, frame: fr.LoadLayoutFrame) -> list[Frame]:
        import json as _json
        layout = layout_from_json(_json.dumps(frame.payload.layout))
        self.layout = layout
        self.state = initial_state(layout, self.sim_config)
        self.targets.clear()
        self.overrides.clear()
        self.latest_readings.clear()
        return [ack_frame(frame.id, {"actuators": len(layout.actuators)})]

    def _on_loadpreset(self, frame: fr.LoadPresetFrame) -> list[Frame]:
        hm = shapes.preset(frame.payload.name, self.layout, frame.payload.height_cm)
        self.targets.update(hm.entries)
        self.overrides -= set(hm.entries)
        return [ack_frame(frame.id, {"preset": hm.name, "targets": dict(hm.entries)})]

    def _on_overridevalve(self, frame: fr.OverrideValveFrame) -> list[Frame]:
        p = frame.payload
        cmd = ValveCommand(p.actuator_id, Valve(p.supply), Valve(p.release))
        self.state = apply_commands(self.state, [cmd])
        self.overrides.add(p.actuator_id)
        if self._writer is not None:
            self._writer.write_commands(self.state.t_s, [cmd])
        return [ack_frame(frame.id)]

    def _on_moveactuator(self, frame: fr.MoveActuatorFrame) -> list[Frame]:
        p = frame.payload
        pose = Pose(x_cm=p.x_cm, y_cm=p.y_cm, orientation=Orientation(p.orientation),
                    grid_index=p.grid_index)
        self.layout = move_actuator(self.layout, p.actuator_id, pose)
        return [ack_frame(frame.id)]

    def _on_setload(self, frame: fr.SetLoadFrame) -> list[Frame]:
        self.state = set_load(self.state, self.layout, frame.payload.actuator_id,
                              frame.payload.load_kg)
        return [ack_frame(frame.id)]

    def _on_getstate(self, frame: fr.GetStateFrame) -> list[Frame]:
        return [ack_frame(frame.id, {"snapshot": self._snapshot_payload().model_dump()})]

    def _on_plan(self, frame: fr.PlanFrame) -> list[Frame]:
        validate_targets(frame.payload.targets, self.layout)
        current = frame.payload.from_heights
        if current is None:
            current = {aid: self.state.states[aid].height_cm for aid in frame.payload.targets}
        problem = TransitionProblem(layout=self.layout, current=current,
                                    target=frame.payload.targets)
        schedule = plan_greedy(problem)
        import json as _json
        return [ack_frame(frame.id, {"schedule": _json.loads(schedule_to_json(schedule))})]

    def _on_subscribe(self, frame: fr.SubscribeFrame) -> list[Frame]:
        # Registration itself lives in the connection layer; this just acks.
        return [ack_frame(frame.id, {"subscribed": frame.payload.on})]

    # -- sim loop ----------------------------------------------------------

    def tick(self) -> fr.StateSnapshotFrame:
        """Advance one sensor period: sense, control, step; returns a snapshot."""
        period = self.sim_config.sensor_period_s
        readings, self.state = sense(self.state, self.layout, self.sim_config)
        for r in readings:
            self.latest_readings[r.actuator_id] = r
        controlled = {aid: h for aid, h in self.targets.items() if aid not in self.overrides}
        commands, _ = control_step(self.latest_readings, TargetAssignment(controlled),
                                   self.control_config, self.state.t_s)
        self.state = apply_commands(self.state, commands)
        if self._writer is not None:
            self._writer.write_commands(self.state.t_s, commands)
            self._writer.write_step(period)
        self.state = step(self.state, self.layout, self.sim_config, dt_s=period)
        if self._writer is not None:
            self._writer.write_states(self.state)
        self.seq += 1
        return self.snapshot()

    def snapshot(self) -> fr.StateSnapshotFrame:
        return fr.StateSnapshotFrame(kind="StateSnapshot", id="",
                                     payload=self._snapshot_payload())

    def _snapshot_payload(self) -> fr.StateSnapshotPayload:
        records = []
        for aid in sorted(self.state.states):
            s = self.state.states[aid]
            records.append(fr.ActuatorRecord(
                id=aid, height_cm=s.height_cm, supply=s.supply.value,
                release=s.release.value, fault=s.fault.value, load_kg=s.load_kg,
                target_cm=self.targets.get(aid), overridden=aid in self.overrides))
        return fr.StateSnapshotPayload(seq=self.seq, t_s=self.state.t_s, actuators=records)

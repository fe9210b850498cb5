"""Domain types and layout construction for inflatable actuator arrays.

All lengths are centimeters in a room-local frame (y-up for wall layouts),
rates in cm/s, loads in kg, pressures in kPa. Every value here is immutable
after construction; operations return new values.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Tuple

VALID_FOOTPRINTS_CM = (10, 20, 30)

# Full stroke is 135 cm; measured end-to-end times are 16 s up, 4 s down.
DEFAULT_EXTEND_RATE_CM_S = (150.0 - 15.0) / 16.0
DEFAULT_RETRACT_RATE_CM_S = (150.0 - 15.0) / 4.0


class LayoutError(ValueError):
    """Invalid layout construction or mutation."""


class OverlapError(LayoutError):
    def __init__(self, id_a: str, id_b: str):
        super().__init__(f"actuators {id_a!r} and {id_b!r} overlap")
        self.ids = (id_a, id_b)


class UnknownActuatorError(LayoutError):
    def __init__(self, actuator_id: str):
        super().__init__(f"unknown actuator id {actuator_id!r}")
        self.actuator_id = actuator_id


class Orientation(str, enum.Enum):
    FLOOR_VERTICAL = "FloorVertical"
    WALL_HORIZONTAL = "WallHorizontal"


class Valve(str, enum.Enum):
    OPEN = "Open"
    CLOSED = "Closed"


class Fault(str, enum.Enum):
    NONE = "None"
    BUCKLED = "Buckled"


@dataclass(frozen=True)
class ActuatorSpec:
    footprint_cm: int = 30
    min_height_cm: float = 15.0
    max_height_cm: float = 150.0
    max_extend_rate_cm_s: float = DEFAULT_EXTEND_RATE_CM_S
    retract_rate_cm_s: float = DEFAULT_RETRACT_RATE_CM_S
    spring_count: int = 2
    spring_force_kgf: float = 0.8
    rated_load_kg: float = 10.0
    valve_max_flow_units: float = 1.0

    def __post_init__(self):
        if self.footprint_cm not in VALID_FOOTPRINTS_CM:
            raise LayoutError(f"footprint_cm must be one of {VALID_FOOTPRINTS_CM}, got {self.footprint_cm}")
        if not (0 < self.min_height_cm < self.max_height_cm):
            raise LayoutError("require 0 < min_height_cm < max_height_cm")
        if self.max_extend_rate_cm_s <= 0 or self.retract_rate_cm_s <= 0:
            raise LayoutError("rates must be positive")
        if self.valve_max_flow_units <= 0:
            raise LayoutError("valve_max_flow_units must be positive")

    @property
    def stroke_cm(self) -> float:
        return self.max_height_cm - self.min_height_cm


@dataclass(frozen=True)
class Pose:
    x_cm: float
    y_cm: float
    orientation: Orientation = Orientation.FLOOR_VERTICAL
    grid_index: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class Compressor:
    id: str
    pressure_kpa: float = 12.0
    flow_l_min: float = 30.0
    rate_units: float = 1.0

    def __post_init__(self):
        if self.rate_units <= 0:
            raise LayoutError("compressor rate_units must be positive")


@dataclass(frozen=True)
class SupplyLine:
    id: str
    compressor_ids: Tuple[str, ...]
    member_actuator_ids: Tuple[str, ...]  # T-fitting chain order


@dataclass(frozen=True)
class PlacedActuator:
    spec: ActuatorSpec
    pose: Pose


@dataclass(frozen=True)
class Layout:
    actuators: Mapping[str, PlacedActuator]
    supply_lines: Tuple[SupplyLine, ...]
    compressors: Mapping[str, Compressor]

    def spec_of(self, actuator_id: str) -> ActuatorSpec:
        try:
            return self.actuators[actuator_id].spec
        except KeyError:
            raise UnknownActuatorError(actuator_id) from None

    def pose_of(self, actuator_id: str) -> Pose:
        try:
            return self.actuators[actuator_id].pose
        except KeyError:
            raise UnknownActuatorError(actuator_id) from None

    def line_of(self, actuator_id: str) -> Optional[SupplyLine]:
        for line in self.supply_lines:
            if actuator_id in line.member_actuator_ids:
                return line
        return None

    def line_capacity(self, line: SupplyLine) -> float:
        return sum(self.compressors[cid].rate_units for cid in line.compressor_ids
                   if cid in self.compressors)

    def grid_shape(self) -> Optional[Tuple[int, int]]:
        """(rows, cols) covering all grid_index values, or None if none set."""
        idx = [p.pose.grid_index for p in self.actuators.values() if p.pose.grid_index is not None]
        if not idx:
            return None
        return max(r for r, _ in idx) + 1, max(c for _, c in idx) + 1

    def at_grid(self, row: int, col: int) -> Optional[str]:
        for aid, placed in self.actuators.items():
            if placed.pose.grid_index == (row, col):
                return aid
        return None


@dataclass(frozen=True)
class ActuatorState:
    height_cm: float
    supply: Valve = Valve.CLOSED
    release: Valve = Valve.CLOSED
    load_kg: float = 0.0
    fault: Fault = Fault.NONE


@dataclass(frozen=True)
class Violation:
    kind: str  # overlap | orphan | multi-line | unknown-actuator | unknown-compressor | empty-line
    ids: Tuple[str, ...]
    message: str


def footprints_overlap(spec_a: ActuatorSpec, pose_a: Pose, spec_b: ActuatorSpec, pose_b: Pose,
                       eps: float = 1e-9) -> bool:
    """Interior overlap of the two axis-aligned footprint squares (touching is fine)."""
    half = (spec_a.footprint_cm + spec_b.footprint_cm) / 2.0
    return (half - abs(pose_a.x_cm - pose_b.x_cm) > eps
            and half - abs(pose_a.y_cm - pose_b.y_cm) > eps)


def validate_layout(layout: Layout) -> list[Violation]:
    """Every invariant violation, with the actuator ids involved. Pure."""
    violations: list[Violation] = []
    items = sorted(layout.actuators.items())
    for i, (ida, a) in enumerate(items):
        for idb, b in items[i + 1:]:
            if footprints_overlap(a.spec, a.pose, b.spec, b.pose):
                violations.append(Violation("overlap", (ida, idb),
                                            f"footprints of {ida!r} and {idb!r} overlap"))
    membership: dict[str, list[str]] = {}
    for line in layout.supply_lines:
        if not line.member_actuator_ids:
            violations.append(Violation("empty-line", (line.id,), f"supply line {line.id!r} has no members"))
        for aid in line.member_actuator_ids:
            membership.setdefault(aid, []).append(line.id)
            if aid not in layout.actuators:
                violations.append(Violation("unknown-actuator", (aid, line.id),
                                            f"supply line {line.id!r} references unknown actuator {aid!r}"))
        for cid in line.compressor_ids:
            if cid not in layout.compressors:
                violations.append(Violation("unknown-compressor", (cid, line.id),
                                            f"supply line {line.id!r} references unknown compressor {cid!r}"))
    for aid in layout.actuators:
        lines = membership.get(aid, [])
        if not lines:
            violations.append(Violation("orphan", (aid,), f"actuator {aid!r} is on no supply line"))
        elif len(lines) > 1:
            violations.append(Violation("multi-line", (aid, *lines),
                                        f"actuator {aid!r} is on multiple supply lines"))
    return violations


def build_grid_layout(rows: int, cols: int, spec: ActuatorSpec, pitch_cm: float,
                      line_policy: str = "per-row",
                      orientation: Orientation = Orientation.FLOOR_VERTICAL,
                      compressor: Optional[Compressor] = None) -> Layout:
    """Regular rows x cols grid with one compressor per supply line.

    line_policy: "per-row" (default), "per-col", or "single".
    """
    if rows < 1 or cols < 1:
        raise LayoutError("rows and cols must be >= 1")
    if pitch_cm < spec.footprint_cm:
        raise OverlapError(_grid_id(0, 0), _grid_id(0, 1) if cols > 1 else _grid_id(1, 0))
    actuators = {}
    for r in range(rows):
        for c in range(cols):
            pose = Pose(x_cm=c * pitch_cm, y_cm=r * pitch_cm,
                        orientation=orientation, grid_index=(r, c))
            actuators[_grid_id(r, c)] = PlacedActuator(spec, pose)

    if line_policy == "per-row":
        groups = [[_grid_id(r, c) for c in range(cols)] for r in range(rows)]
    elif line_policy == "per-col":
        groups = [[_grid_id(r, c) for r in range(rows)] for c in range(cols)]
    elif line_policy == "single":
        groups = [[_grid_id(r, c) for r in range(rows) for c in range(cols)]]
    else:
        raise LayoutError(f"unknown line policy {line_policy!r}")

    base = compressor or Compressor(id="comp")
    compressors = {}
    lines = []
    for i, members in enumerate(groups):
        cid = f"comp{i}"
        compressors[cid] = replace(base, id=cid)
        lines.append(SupplyLine(id=f"line{i}", compressor_ids=(cid,),
                                member_actuator_ids=tuple(members)))
    layout = Layout(actuators=actuators, supply_lines=tuple(lines), compressors=compressors)
    bad = [v for v in validate_layout(layout) if v.kind == "overlap"]
    if bad:
        raise OverlapError(*bad[0].ids[:2])
    return layout


def _grid_id(row: int, col: int) -> str:
    return f"a{row}_{col}"


def move_actuator(layout: Layout, actuator_id: str, new_pose: Pose) -> Layout:
    """Replace one actuator's pose; supply-line membership is untouched."""
    if actuator_id not in layout.actuators:
        raise UnknownActuatorError(actuator_id)
    moved = layout.actuators[actuator_id]
    for other_id, other in layout.actuators.items():
        if other_id == actuator_id:
            continue
        if footprints_overlap(moved.spec, new_pose, other.spec, other.pose):
            raise OverlapError(actuator_id, other_id)
    actuators = dict(layout.actuators)
    actuators[actuator_id] = PlacedActuator(moved.spec, new_pose)
    return Layout(actuators=actuators, supply_lines=layout.supply_lines,
                  compressors=layout.compressors)


# ---------------------------------------------------------------------------
# Layout file (JSON, canonical: keys sorted lexicographically)

def layout_to_json(layout: Layout) -> str:
    doc = {
        "actuators": {
            aid: {
                "spec": _spec_to_doc(p.spec),
                "pose": _pose_to_doc(p.pose),
            }
            for aid, p in layout.actuators.items()
        },
        "supply_lines": [
            {"id": ln.id, "compressor_ids": list(ln.compressor_ids),
             "member_actuator_ids": list(ln.member_actuator_ids)}
            for ln in layout.supply_lines
        ],
        "compressors": {
            cid: {"pressure_kpa": c.pressure_kpa, "flow_l_min": c.flow_l_min,
                  "rate_units": c.rate_units}
            for cid, c in layout.compressors.items()
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def layout_from_json(text: str) -> Layout:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise LayoutError(f"layout file is not valid JSON: {e}") from e
    try:
        actuators = {
            aid: PlacedActuator(_spec_from_doc(entry["spec"]), _pose_from_doc(entry["pose"]))
            for aid, entry in doc["actuators"].items()
        }
        lines = tuple(
            SupplyLine(id=ln["id"], compressor_ids=tuple(ln["compressor_ids"]),
                       member_actuator_ids=tuple(ln["member_actuator_ids"]))
            for ln in doc["supply_lines"]
        )
        compressors = {
            cid: Compressor(id=cid, **entry) for cid, entry in doc["compressors"].items()
        }
    except (KeyError, TypeError) as e:
        raise LayoutError(f"layout document missing field: {e}") from e
    return Layout(actuators=actuators, supply_lines=lines, compressors=compressors)


def _spec_to_doc(spec: ActuatorSpec) -> dict:
    return {
        "footprint_cm": spec.footprint_cm,
        "min_height_cm": spec.min_height_cm,
        "max_height_cm": spec.max_height_cm,
        "max_extend_rate_cm_s": spec.max_extend_rate_cm_s,
        "retract_rate_cm_s": spec.retract_rate_cm_s,
        "spring_count": spec.spring_count,
        "spring_force_kgf": spec.spring_force_kgf,
        "rated_load_kg": spec.rated_load_kg,
        "valve_max_flow_units": spec.valve_max_flow_units,
    }


def _spec_from_doc(doc: dict) -> ActuatorSpec:
    return ActuatorSpec(**doc)


def _pose_to_doc(pose: Pose) -> dict:
    return {
        "x_cm": pose.x_cm,
        "y_cm": pose.y_cm,
        "orientation": pose.orientation.value,
        "grid_index": list(pose.grid_index) if pose.grid_index is not None else None,
    }


def _pose_from_doc(doc: dict) -> Pose:
    gi = doc.get("grid_index")
    return Pose(x_cm=doc["x_cm"], y_cm=doc["y_cm"],
                orientation=Orientation(doc.get("orientation", "FloorVertical")),
                grid_index=tuple(gi) if gi is not None else None)

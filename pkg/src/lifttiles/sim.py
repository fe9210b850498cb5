"""Deterministic fixed-timestep simulation of the actuator array.

Extension is pneumatic and rate-limited by shared supply lines (equal-split
water-filling per line); retraction is spring-driven and independent per
module. When both valves are open the large release hole dominates and the
module retracts at full rate. Everything is reproducible from the seed.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import (ActuatorSpec, ActuatorState, Compressor, Fault, Layout,
                    SupplyLine, UnknownActuatorError, Valve)

log = logging.getLogger(__name__)

GRAVITY_M_S2 = 9.80665
DEFAULT_TUBE_DIAMETER_CM = 20.0


class OverloadPolicy(str, enum.Enum):
    BUCKLE = "Buckle"
    STALL = "Stall"


@dataclass(frozen=True)
class SimConfig:
    dt_s: float = 0.05
    sensor_noise_sigma_cm: float = 0.5
    sensor_rate_hz: float = 30.0
    seed: int = 0
    overload_policy: OverloadPolicy = OverloadPolicy.BUCKLE
    # Adjacency load sharing: same-height 4-neighbors add capacity.
    neighbor_bonus_kg: float = 5.0
    height_similarity_cm: float = 5.0
    # Per-actuator extension rate multipliers (manufacturing variation).
    rate_multipliers: Mapping[str, float] = field(default_factory=dict)
    # Hook for solenoid/servo switching delay; 0 = instantaneous.
    valve_latency_s: float = 0.0

    def __post_init__(self):
        if self.dt_s <= 0:
            raise ValueError("dt_s must be positive")
        if self.sensor_noise_sigma_cm < 0:
            raise ValueError("sensor_noise_sigma_cm must be >= 0")

    @property
    def sensor_period_s(self) -> float:
        return 1.0 / self.sensor_rate_hz


@dataclass(frozen=True)
class SimState:
    t_s: float
    states: Mapping[str, ActuatorState]
    rng_state: dict
    last_sense_t_s: float = -math.inf


@dataclass(frozen=True)
class SensorReading:
    actuator_id: str
    measured_height_cm: float
    t_s: float


@dataclass(frozen=True)
class ValveCommand:
    actuator_id: str
    supply: Valve
    release: Valve


def initial_state(layout: Layout, config: SimConfig,
                  heights: Optional[Mapping[str, float]] = None) -> SimState:
    states = {}
    for aid, placed in layout.actuators.items():
        h = placed.spec.min_height_cm if heights is None else heights[aid]
        states[aid] = ActuatorState(height_cm=h)
    rng = np.random.default_rng(config.seed)
    return SimState(t_s=0.0, states=states, rng_state=rng.bit_generator.state)


def allocate_flow(line: SupplyLine, open_ids: Iterable[str],
                  specs: Mapping[str, ActuatorSpec], capacity: float) -> dict[str, float]:
    """Equal-split water-filling of line capacity, capped per valve.

    Repeatedly splits the residual capacity equally among members whose valve
    cap is not yet reached; saturated members keep their cap.
    """
    open_ids = set(open_ids)
    off_line = open_ids - set(line.member_actuator_ids)
    if off_line:
        raise UnknownActuatorError(sorted(off_line)[0])
    if not open_ids:
        return {}
    shares = {aid: 0.0 for aid in open_ids}
    active = set(open_ids)
    residual = capacity
    while active and residual > 1e-12:
        level = residual / len(active)
        saturated = set()
        for aid in active:
            cap_left = specs[aid].valve_max_flow_units - shares[aid]
            if cap_left <= level + 1e-15:
                shares[aid] += cap_left
                residual -= cap_left
                saturated.add(aid)
        if not saturated:
            for aid in active:
                shares[aid] += level
            residual = 0.0
            break
        active -= saturated
    return shares


def _four_neighbors(layout: Layout) -> dict[str, list[str]]:
    """Adjacency by grid index when present, else by touching axis-aligned footprints."""
    ids = sorted(layout.actuators)
    nbrs: dict[str, list[str]] = {aid: [] for aid in ids}
    for i, a in enumerate(ids):
        pa = layout.actuators[a].pose
        fa = layout.actuators[a].spec.footprint_cm
        for b in ids[i + 1:]:
            pb = layout.actuators[b].pose
            fb = layout.actuators[b].spec.footprint_cm
            if pa.grid_index is not None and pb.grid_index is not None:
                dr = abs(pa.grid_index[0] - pb.grid_index[0])
                dc = abs(pa.grid_index[1] - pb.grid_index[1])
                adjacent = dr + dc == 1
            else:
                # Aligned on one axis and centers within 1.5x the combined half-widths.
                near = (fa + fb) / 2.0 * 1.5
                dx, dy = abs(pa.x_cm - pb.x_cm), abs(pa.y_cm - pb.y_cm)
                adjacent = (dx < 1e-6 and 0 < dy <= near) or (dy < 1e-6 and 0 < dx <= near)
            if adjacent:
                nbrs[a].append(b)
                nbrs[b].append(a)
    return nbrs


def load_capacity_kg(layout: Layout, states: Mapping[str, ActuatorState],
                     config: SimConfig, actuator_id: str,
                     neighbors: Optional[Mapping[str, list[str]]] = None) -> float:
    """Rated load plus a bonus per same-height 4-neighbor."""
    if neighbors is None:
        neighbors = _four_neighbors(layout)
    spec = layout.spec_of(actuator_id)
    h = states[actuator_id].height_cm
    same = sum(1 for nid in neighbors[actuator_id]
               if abs(states[nid].height_cm - h) <= config.height_similarity_cm)
    return spec.rated_load_kg + config.neighbor_bonus_kg * same


def check_load(state: SimState, layout: Layout, config: SimConfig) -> SimState:
    """Apply the overload policy: mark buckling faults for over-capacity modules."""
    if all(s.load_kg == 0.0 for s in state.states.values()):
        return state
    neighbors = _four_neighbors(layout)
    changed = False
    states = dict(state.states)
    for aid, s in state.states.items():
        if s.fault is Fault.BUCKLED or s.load_kg == 0.0:
            continue
        cap = load_capacity_kg(layout, state.states, config, aid, neighbors)
        if s.load_kg > cap and config.overload_policy is OverloadPolicy.BUCKLE:
            states[aid] = replace(s, fault=Fault.BUCKLED)
            changed = True
    if not changed:
        return state
    return replace(state, states=states)


def _overloaded_ids(state: SimState, layout: Layout, config: SimConfig) -> set[str]:
    if all(s.load_kg == 0.0 for s in state.states.values()):
        return set()
    neighbors = _four_neighbors(layout)
    return {aid for aid, s in state.states.items()
            if s.load_kg > load_capacity_kg(layout, state.states, config, aid, neighbors)}


def theoretical_stall_load_kg(spec: ActuatorSpec, compressor: Compressor,
                              inflated_diameter_cm: float = DEFAULT_TUBE_DIAMETER_CM) -> float:
    """Upper bound on liftable load: pressure over tube cross-section minus springs.

    Returns 0 when the springs win (no pressure, no lift).
    """
    area_m2 = math.pi * (inflated_diameter_cm / 200.0) ** 2
    lift_kg = compressor.pressure_kpa * 1000.0 * area_m2 / GRAVITY_M_S2
    return max(0.0, lift_kg - spec.spring_count * spec.spring_force_kgf)


def step(state: SimState, layout: Layout, config: SimConfig,
         dt_s: Optional[float] = None) -> SimState:
    """Advance the simulation one timestep.

    Buckled modules have both valves forced closed and hold height. Release
    open dominates supply (full-rate retraction). Supply open extends at the
    allocated line share times the module's max rate. Load faults are applied
    after motion.
    """
    dt = config.dt_s if dt_s is None else dt_s
    if dt <= 0:
        raise ValueError("dt must be positive")

    specs = {aid: p.spec for aid, p in layout.actuators.items()}
    stalled = (_overloaded_ids(state, layout, config)
               if config.overload_policy is OverloadPolicy.STALL else set())

    shares: dict[str, float] = {}
    for line in layout.supply_lines:
        open_ids = {aid for aid in line.member_actuator_ids
                    if (s := state.states[aid]).supply is Valve.OPEN
                    and s.release is Valve.CLOSED and s.fault is Fault.NONE}
        shares.update(allocate_flow(line, open_ids, specs, layout.line_capacity(line)))

    states: dict[str, ActuatorState] = {}
    for aid, s in state.states.items():
        spec = specs[aid]
        if s.fault is Fault.BUCKLED:
            states[aid] = replace(s, supply=Valve.CLOSED, release=Valve.CLOSED)
            continue
        h = s.height_cm
        if s.release is Valve.OPEN:
            h = max(spec.min_height_cm, h - spec.retract_rate_cm_s * dt)
        elif s.supply is Valve.OPEN and aid not in stalled:
            rate = shares.get(aid, 0.0) * spec.max_extend_rate_cm_s \
                * config.rate_multipliers.get(aid, 1.0)
            h = min(spec.max_height_cm, h + rate * dt)
        states[aid] = replace(s, height_cm=h)

    moved = SimState(t_s=state.t_s + dt, states=states,
                     rng_state=state.rng_state, last_sense_t_s=state.last_sense_t_s)
    return check_load(moved, layout, config)


def sense(state: SimState, layout: Layout, config: SimConfig) -> tuple[list[SensorReading], SimState]:
    """One noisy reading per actuator, at most sensor_rate_hz frames.

    Returns ([], state) when the sensor period has not elapsed. Deterministic
    per (seed, t): the generator state rides along in SimState.
    """
    if state.t_s - state.last_sense_t_s + 1e-9 < config.sensor_period_s:
        return [], state
    rng = np.random.default_rng()
    rng.bit_generator.state = state.rng_state
    readings = []
    for aid in sorted(state.states):
        spec = layout.spec_of(aid)
        h = state.states[aid].height_cm
        if config.sensor_noise_sigma_cm > 0:
            h = h + rng.normal(0.0, config.sensor_noise_sigma_cm)
        h = min(spec.max_height_cm, max(spec.min_height_cm, h))
        readings.append(SensorReading(actuator_id=aid, measured_height_cm=h, t_s=state.t_s))
    new_state = replace(state, rng_state=rng.bit_generator.state, last_sense_t_s=state.t_s)
    return readings, new_state


def apply_commands(state: SimState, commands: Sequence[ValveCommand]) -> SimState:
    """Set valve fields; last writer wins within the batch; Buckled modules ignore commands."""
    states = dict(state.states)
    for cmd in commands:
        if cmd.actuator_id not in states:
            raise UnknownActuatorError(cmd.actuator_id)
        s = states[cmd.actuator_id]
        if s.fault is Fault.BUCKLED:
            log.warning("ignoring valve command to buckled actuator %s", cmd.actuator_id)
            continue
        states[cmd.actuator_id] = replace(s, supply=cmd.supply, release=cmd.release)
    return replace(state, states=states)


def set_load(state: SimState, layout: Layout, actuator_id: str, load_kg: float) -> SimState:
    """Update one module's load. Loads above the theoretical stall bound are rejected."""
    if actuator_id not in state.states:
        raise UnknownActuatorError(actuator_id)
    if load_kg < 0:
        raise ValueError("load_kg must be >= 0")
    line = layout.line_of(actuator_id)
    if line is not None and line.compressor_ids:
        comp = layout.compressors[line.compressor_ids[0]]
        bound = theoretical_stall_load_kg(layout.spec_of(actuator_id), comp)
        if load_kg > bound:
            raise ValueError(f"load {load_kg} kg exceeds theoretical stall load {bound:.1f} kg")
    states = dict(state.states)
    states[actuator_id] = replace(states[actuator_id], load_kg=load_kg)
    return replace(state, states=states)

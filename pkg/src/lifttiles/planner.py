"""Minimum-makespan valve scheduling for shape transitions.

The flow model is fluid: each supply line's capacity is split among open
supply valves by the same equal-split water-filling the simulator uses, so a
greedy plan that re-splits at every completion event is directly executable.
Retraction is spring-driven and never contends for line capacity.

plan_exact is a small-instance oracle: exhaustive search over valve on/off
patterns on a fixed time grid.
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .model import Layout, LayoutError, Valve
from .sim import SimConfig, SimState, ValveCommand, allocate_flow, apply_commands, initial_state, step

EPS = 1e-9


class PlannerError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionProblem:
    layout: Layout
    current: Mapping[str, float]
    target: Mapping[str, float]

    def __post_init__(self):
        for maps in (self.current, self.target):
            for aid, h in maps.items():
                spec = self.layout.spec_of(aid)
                if not (spec.min_height_cm - EPS <= h <= spec.max_height_cm + EPS):
                    raise PlannerError(f"height {h} cm for {aid!r} out of spec bounds")
        if set(self.current) != set(self.target):
            raise PlannerError("current and target id sets differ")

    def extension_deficits(self) -> dict[str, float]:
        return {aid: self.target[aid] - self.current[aid] for aid in self.current
                if self.target[aid] - self.current[aid] > EPS}

    def retraction_deficits(self) -> dict[str, float]:
        return {aid: self.current[aid] - self.target[aid] for aid in self.current
                if self.current[aid] - self.target[aid] > EPS}


@dataclass(frozen=True)
class Phase:
    duration_s: float
    extend: frozenset[str]
    retract: frozenset[str]


@dataclass(frozen=True)
class Schedule:
    phases: tuple[Phase, ...]
    predicted_makespan_s: float


def validate_schedule(schedule: Schedule, layout: Layout) -> list[str]:
    problems = []
    total = 0.0
    for i, phase in enumerate(schedule.phases):
        if phase.duration_s <= 0:
            problems.append(f"phase {i}: non-positive duration")
        both = phase.extend & phase.retract
        if both:
            problems.append(f"phase {i}: ids extend and retract simultaneously: {sorted(both)}")
        for aid in phase.extend | phase.retract:
            if aid not in layout.actuators:
                problems.append(f"phase {i}: unknown actuator {aid!r}")
        total += phase.duration_s
        # Flow conservation per line (shares come from water-filling, so this
        # guards against hand-built schedules claiming impossible parallelism).
        specs = {aid: p.spec for aid, p in layout.actuators.items()}
        for line in layout.supply_lines:
            open_ids = phase.extend & set(line.member_actuator_ids)
            if open_ids:
                shares = allocate_flow(line, open_ids, specs, layout.line_capacity(line))
                if sum(shares.values()) > layout.line_capacity(line) + 1e-9:
                    problems.append(f"phase {i}: line {line.id} over capacity")
    if schedule.phases and abs(total - schedule.predicted_makespan_s) > 1e-6:
        problems.append("predicted_makespan_s does not equal the sum of phase durations")
    return problems


def lower_bound_makespan(problem: TransitionProblem) -> float:
    """max of per-line aggregate work, per-actuator rate bound, and retraction time."""
    layout = problem.layout
    ext = problem.extension_deficits()
    ret = problem.retraction_deficits()
    bound = 0.0
    for line in layout.supply_lines:
        cap = layout.line_capacity(line)
        work_s = sum(ext[aid] / layout.spec_of(aid).max_extend_rate_cm_s
                     for aid in line.member_actuator_ids if aid in ext)
        if work_s > 0:
            bound = max(bound, work_s / cap)
    for aid, deficit in ext.items():
        spec = layout.spec_of(aid)
        line = layout.line_of(aid)
        cap = layout.line_capacity(line) if line is not None else spec.valve_max_flow_units
        share = min(spec.valve_max_flow_units, cap)
        bound = max(bound, deficit / (spec.max_extend_rate_cm_s * share))
    for aid, deficit in ret.items():
        bound = max(bound, deficit / layout.spec_of(aid).retract_rate_cm_s)
    return bound


def plan_greedy(problem: TransitionProblem) -> Schedule:
    """Equal-split water-filling per line, re-splitting at every completion.

    With every valve cap at or above its line capacity this meets the fluid
    lower bound exactly.
    """
    layout = problem.layout
    specs = {aid: p.spec for aid, p in layout.actuators.items()}
    remaining_ext = problem.extension_deficits()
    remaining_ret = problem.retraction_deficits()
    phases: list[Phase] = []
    t = 0.0
    while remaining_ext or remaining_ret:
        rates: dict[str, float] = {}
        for line in layout.supply_lines:
            open_ids = {aid for aid in line.member_actuator_ids if aid in remaining_ext}
            shares = allocate_flow(line, open_ids, specs, layout.line_capacity(line))
            for aid, share in shares.items():
                rates[aid] = share * specs[aid].max_extend_rate_cm_s
        times = [remaining_ext[aid] / rates[aid] for aid in remaining_ext if rates.get(aid, 0) > 0]
        times += [remaining_ret[aid] / specs[aid].retract_rate_cm_s for aid in remaining_ret]
        if not times:
            raise PlannerError("no progress possible: extension deficit with zero line capacity")
        dt = min(times)
        phases.append(Phase(duration_s=dt,
                            extend=frozenset(remaining_ext),
                            retract=frozenset(remaining_ret)))
        t += dt
        for aid in list(remaining_ext):
            remaining_ext[aid] -= rates.get(aid, 0.0) * dt
            if remaining_ext[aid] <= EPS:
                del remaining_ext[aid]
        for aid in list(remaining_ret):
            remaining_ret[aid] -= specs[aid].retract_rate_cm_s * dt
            if remaining_ret[aid] <= EPS:
                del remaining_ret[aid]
    return Schedule(phases=tuple(phases), predicted_makespan_s=t)


MAX_EXACT_ACTUATORS = 4


def plan_exact(problem: TransitionProblem, time_resolution_s: float = 0.25) -> Schedule:
    """Exhaustive minimum-makespan search over valve patterns on a time grid.

    A* over remaining-deficit states; the admissible heuristic is the fluid
    lower bound rounded up to the grid. Instances above MAX_EXACT_ACTUATORS
    actuators are refused.
    """
    layout = problem.layout
    n = len(problem.current)
    if n > MAX_EXACT_ACTUATORS:
        raise PlannerError(
            f"plan_exact handles at most {MAX_EXACT_ACTUATORS} actuators, got {n}")
    specs = {aid: p.spec for aid, p in layout.actuators.items()}
    res = time_resolution_s
    ext0 = problem.extension_deficits()
    ret = problem.retraction_deficits()
    retract_time = max((ret[aid] / specs[aid].retract_rate_cm_s for aid in ret), default=0.0)

    ids = sorted(ext0)
    lines = [layout.line_of(aid) for aid in ids]
    if any(line is None for line in lines):
        raise PlannerError("extension deficit on an actuator with no supply line")

    def heuristic(rem: tuple[float, ...]) -> int:
        best = 0.0
        per_line: dict[str, float] = {}
        for aid, line, w in zip(ids, lines, rem):
            if w <= EPS or line is None:
                continue
            rate = specs[aid].max_extend_rate_cm_s
            cap = layout.line_capacity(line)
            per_line[line.id] = per_line.get(line.id, 0.0) + w / rate
            best = max(best, w / (rate * min(specs[aid].valve_max_flow_units, cap)))
        for line in layout.supply_lines:
            if line.id in per_line:
                best = max(best, per_line[line.id] / layout.line_capacity(line))
        return math.ceil(best / res - 1e-9)

    start = tuple(ext0[aid] for aid in ids)
    frontier = [(heuristic(start), 0, start, ())]
    seen: dict[tuple, int] = {}
    subsets = [s for k in range(1, len(ids) + 1) for s in itertools.combinations(range(len(ids)), k)]

    best_path: tuple = ()
    slots = 0
    while frontier:
        f, g, rem, path = heapq.heappop(frontier)
        if all(w <= EPS for w in rem):
            best_path, slots = path, g
            break
        key = tuple(round(w, 9) for w in rem)
        if seen.get(key, 1 << 30) <= g:
            continue
        seen[key] = g
        choices = subsets if any(w > EPS for w in rem) else [()]
        for subset in choices:
            open_idx = [i for i in subset if rem[i] > EPS]
            if not open_idx:
                continue
            rates = _subset_rates(layout, specs, ids, open_idx)
            nxt = list(rem)
            for i in open_idx:
                nxt[i] = max(0.0, nxt[i] - rates[i] * res)
            nxt_t = tuple(nxt)
            heapq.heappush(frontier, (g + 1 + heuristic(nxt_t), g + 1, nxt_t, path + (tuple(open_idx),)))

    ext_makespan = slots * res
    makespan = max(ext_makespan, retract_time)
    phases: list[Phase] = []
    t = 0.0
    for step_idx, open_idx in enumerate(best_path):
        extend = frozenset(ids[i] for i in open_idx)
        retracting = frozenset(aid for aid in ret
                               if ret[aid] / specs[aid].retract_rate_cm_s > t + EPS)
        phases.append(Phase(duration_s=res, extend=extend, retract=retracting))
        t += res
    if retract_time > t + EPS:
        phases.append(Phase(duration_s=retract_time - t, extend=frozenset(),
                            retract=frozenset(ret)))
        t = retract_time
    return Schedule(phases=tuple(phases), predicted_makespan_s=makespan)


def _subset_rates(layout: Layout, specs, ids: list[str], open_idx: list[int]) -> dict[int, float]:
    open_ids = {ids[i] for i in open_idx}
    rates: dict[int, float] = {}
    for line in layout.supply_lines:
        members = open_ids & set(line.member_actuator_ids)
        if not members:
            continue
        shares = allocate_flow(line, members, specs, layout.line_capacity(line))
        for aid, share in shares.items():
            rates[ids.index(aid)] = share * specs[aid].max_extend_rate_cm_s
    return rates


@dataclass
class ExecutionReport:
    predicted_makespan_s: float
    simulated_makespan_s: float
    tolerance_s: float
    diverged: bool
    final_state: SimState


def execute_schedule(layout: Layout, schedule: Schedule, sim_config: SimConfig,
                     state: Optional[SimState] = None) -> ExecutionReport:
    """Open-loop execution in the simulator; flags planner/simulator drift."""
    problems = validate_schedule(schedule, layout)
    if problems:
        raise PlannerError("; ".join(problems))
    if state is None:
        state = initial_state(layout, sim_config)
    start_t = state.t_s
    last_motion_t = start_t
    for phase in schedule.phases:
        commands = []
        for aid in sorted(layout.actuators):
            if aid in phase.extend:
                commands.append(ValveCommand(aid, Valve.OPEN, Valve.CLOSED))
            elif aid in phase.retract:
                commands.append(ValveCommand(aid, Valve.CLOSED, Valve.OPEN))
            else:
                commands.append(ValveCommand(aid, Valve.CLOSED, Valve.CLOSED))
        state = apply_commands(state, commands)
        remaining = phase.duration_s
        while remaining > EPS:
            dt = min(sim_config.dt_s, remaining)
            prev = state
            state = step(state, layout, sim_config, dt_s=dt)
            if any(abs(state.states[a].height_cm - prev.states[a].height_cm) > EPS
                   for a in state.states):
                last_motion_t = state.t_s
            remaining -= dt
    simulated = last_motion_t - start_t
    tolerance = sim_config.dt_s * max(1, len(schedule.phases))
    diverged = abs(simulated - schedule.predicted_makespan_s) > tolerance
    return ExecutionReport(predicted_makespan_s=schedule.predicted_makespan_s,
                           simulated_makespan_s=simulated, tolerance_s=tolerance,
                           diverged=diverged, final_state=state)


# ---------------------------------------------------------------------------
# Schedule file (JSON)

def schedule_to_json(schedule: Schedule) -> str:
    doc = {
        "phases": [
            {"duration_s": p.duration_s, "extend": sorted(p.extend), "retract": sorted(p.retract)}
            for p in schedule.phases
        ],
        "predicted_makespan_s": schedule.predicted_makespan_s,
    }
    return json.dumps(doc, indent=2) + "\n"


def schedule_from_json(text: str) -> Schedule:
    doc = json.loads(text)
    phases = tuple(Phase(duration_s=p["duration_s"], extend=frozenset(p["extend"]),
                         retract=frozenset(p["retract"])) for p in doc["phases"])
    return Schedule(phases=phases, predicted_makespan_s=doc["predicted_makespan_s"])

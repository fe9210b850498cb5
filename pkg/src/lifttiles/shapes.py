"""Heightmap authoring and IO, bundled presets, and data physicalization.

Two heightmap file flavors, both starting with the version header line
"lifttiles-v1":
  - grid: comma-separated matrix of cm values, row-major, "." for absent
    cells (unaddressed modules keep their prior target);
  - full: JSON object {"name", "entries": {id: cm}, "metadata"}.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Optional, Sequence

from .model import Layout, UnknownActuatorError

FORMAT_HEADER = "lifttiles-v1"

PRESET_NAMES = ("Flat", "Chair", "Table", "Bed", "ArrowWall", "MeetingPartition")
_PRESET_FILES = {
    "Chair": "chair.csv",
    "Table": "table.csv",
    "Bed": "bed.csv",
    "ArrowWall": "arrow_wall.csv",
    "MeetingPartition": "meeting_partition.csv",
}


class HeightmapError(ValueError):
    pass


@dataclass(frozen=True)
class Heightmap:
    entries: Mapping[str, float]
    name: str = ""
    metadata: Mapping[str, str] = field(default_factory=dict)


def validate_heightmap(heightmap: Heightmap, layout: Layout) -> None:
    for aid, h in heightmap.entries.items():
        if aid not in layout.actuators:
            raise UnknownActuatorError(aid)
        spec = layout.spec_of(aid)
        if not (spec.min_height_cm <= h <= spec.max_height_cm):
            raise HeightmapError(
                f"height {h} cm for {aid!r} outside [{spec.min_height_cm}, {spec.max_height_cm}]")


def _strip_header(text: str) -> str:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise HeightmapError(f'missing "{FORMAT_HEADER}" header line')
    return "\n".join(lines[1:])


def load_heightmap(text: str, layout: Layout, name: str = "") -> Heightmap:
    """Parse either heightmap flavor and validate it against the layout."""
    body = _strip_header(text)
    stripped = body.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(body)
        hm = Heightmap(entries=dict(doc["entries"]), name=doc.get("name", name),
                       metadata=dict(doc.get("metadata", {})))
    else:
        matrix = parse_grid_matrix(body)
        entries = {}
        for r, row in enumerate(matrix):
            for c, value in enumerate(row):
                if value is None:
                    continue
                aid = layout.at_grid(r, c)
                if aid is None:
                    raise UnknownActuatorError(f"grid cell ({r}, {c})")
                entries[aid] = value
        hm = Heightmap(entries=entries, name=name)
    validate_heightmap(hm, layout)
    return hm


def parse_grid_matrix(body: str) -> list[list[Optional[float]]]:
    matrix: list[list[Optional[float]]] = []
    for line in body.splitlines():
        if not line.strip():
            continue
        row: list[Optional[float]] = []
        for cell in line.split(","):
            cell = cell.strip()
            if cell == ".":
                row.append(None)
            else:
                try:
                    row.append(float(cell))
                except ValueError:
                    raise HeightmapError(f"bad grid cell {cell!r}") from None
        matrix.append(row)
    if matrix and any(len(row) != len(matrix[0]) for row in matrix):
        raise HeightmapError("ragged matrix: rows have different lengths")
    return matrix


def heightmap_to_text(heightmap: Heightmap) -> str:
    doc = {
        "name": heightmap.name,
        "entries": dict(sorted(heightmap.entries.items())),
        "metadata": dict(heightmap.metadata),
    }
    return FORMAT_HEADER + "\n" + json.dumps(doc, sort_keys=True, indent=2) + "\n"


def flat_heightmap(layout: Layout, height_cm: float, name: str = "Flat") -> Heightmap:
    hm = Heightmap(entries={aid: height_cm for aid in layout.actuators}, name=name)
    validate_heightmap(hm, layout)
    return hm


def preset(name: str, layout: Layout, height_cm: float = 15.0) -> Heightmap:
    """Bundled application shapes. Patterns center on the layout grid; cells
    outside the pattern get the pattern's lowest level."""
    if name not in PRESET_NAMES:
        raise HeightmapError(f"unknown preset {name!r}; options: {', '.join(PRESET_NAMES)}")
    if name == "Flat":
        return flat_heightmap(layout, height_cm)
    text = resources.files("lifttiles.presets").joinpath(_PRESET_FILES[name]).read_text()
    matrix = parse_grid_matrix(_strip_header(text))
    pr, pc = len(matrix), len(matrix[0])
    shape = layout.grid_shape()
    if shape is None or shape[0] < pr or shape[1] < pc:
        raise HeightmapError(
            f"preset {name!r} needs a grid of at least {pr}x{pc}, layout has {shape}")
    rows, cols = shape
    background = min(v for row in matrix for v in row if v is not None)
    off_r, off_c = (rows - pr) // 2, (cols - pc) // 2
    entries = {}
    for r in range(rows):
        for c in range(cols):
            aid = layout.at_grid(r, c)
            if aid is None:
                continue
            value = background
            if off_r <= r < off_r + pr and off_c <= c < off_c + pc:
                cell = matrix[r - off_r][c - off_c]
                if cell is not None:
                    value = cell
            entries[aid] = value
    hm = Heightmap(entries=entries, name=name)
    validate_heightmap(hm, layout)
    return hm


@dataclass(frozen=True)
class DiffSummary:
    total_extension_cm: float
    total_retraction_cm: float
    max_abs_delta_cm: float


def diff_heightmaps(a: Heightmap, b: Heightmap) -> tuple[dict[str, float], DiffSummary]:
    """Per-id deltas b - a and totals; feeds the planner's transition problem."""
    if set(a.entries) != set(b.entries):
        raise HeightmapError("heightmaps address different id sets")
    deltas = {aid: b.entries[aid] - a.entries[aid] for aid in a.entries}
    return deltas, DiffSummary(
        total_extension_cm=sum(d for d in deltas.values() if d > 0),
        total_retraction_cm=sum(-d for d in deltas.values() if d < 0),
        max_abs_delta_cm=max((abs(d) for d in deltas.values()), default=0.0),
    )


# ---------------------------------------------------------------------------
# Data physicalization

@dataclass(frozen=True)
class PhysicalizationSeries:
    samples: tuple[tuple[float, float], ...]  # (position, data value), position-sorted
    v_min: float
    v_max: float
    h_min: float
    h_max: float

    def __post_init__(self):
        if self.v_min >= self.v_max:
            raise HeightmapError("require v_min < v_max")
        if self.h_min >= self.h_max:
            raise HeightmapError("require h_min < h_max")
        if len(self.samples) < 1:
            raise HeightmapError("series needs at least one sample")
        positions = [p for p, _ in self.samples]
        if positions != sorted(positions):
            raise HeightmapError("samples must be ordered by position")


def physicalize(series: PhysicalizationSeries, probe_position: float) -> float:
    """Map the interpolated data value at a position to a height, linearly."""
    positions = [p for p, _ in series.samples]
    if not (positions[0] - 1e-9 <= probe_position <= positions[-1] + 1e-9):
        raise HeightmapError(
            f"probe {probe_position} outside sampled range [{positions[0]}, {positions[-1]}]")
    v = _interp(series.samples, probe_position)
    v = min(series.v_max, max(series.v_min, v))
    frac = (v - series.v_min) / (series.v_max - series.v_min)
    return series.h_min + frac * (series.h_max - series.h_min)


def _interp(samples: Sequence[tuple[float, float]], x: float) -> float:
    if x <= samples[0][0]:
        return samples[0][1]
    for (x0, y0), (x1, y1) in zip(samples, samples[1:]):
        if x <= x1:
            if x1 == x0:
                return y1
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return samples[-1][1]


def series_from_text(text: str) -> PhysicalizationSeries:
    doc = json.loads(_strip_header(text))
    return PhysicalizationSeries(samples=tuple((float(p), float(v)) for p, v in doc["samples"]),
                                 v_min=doc["v_min"], v_max=doc["v_max"],
                                 h_min=doc["h_min"], h_max=doc["h_max"])


def series_to_text(series: PhysicalizationSeries) -> str:
    doc = {"samples": [list(s) for s in series.samples],
           "v_min": series.v_min, "v_max": series.v_max,
           "h_min": series.h_min, "h_max": series.h_max}
    return FORMAT_HEADER + "\n" + json.dumps(doc, sort_keys=True) + "\n"

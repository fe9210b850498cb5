import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifttiles.model import (ActuatorSpec, Orientation, UnknownActuatorError,
                             build_grid_layout)
from lifttiles.shapes import (FORMAT_HEADER, DiffSummary, Heightmap,
                              HeightmapError, PhysicalizationSeries,
                              PRESET_NAMES, diff_heightmaps, flat_heightmap,
                              heightmap_to_text, load_heightmap, physicalize,
                              preset, series_from_text, series_to_text)

SPEC = ActuatorSpec()


def grid(rows=5, cols=5):
    return build_grid_layout(rows, cols, SPEC, 30.0)


def grid_text(rows):
    return FORMAT_HEADER + "\n" + "\n".join(",".join(str(v) for v in row)
                                            for row in rows) + "\n"


def test_flat_matrix_loads():
    layout = grid()
    hm = load_heightmap(grid_text([[15] * 5] * 5), layout)
    assert len(hm.entries) == 25
    assert set(hm.entries.values()) == {15.0}


def test_out_of_range_matrix_rejected():
    layout = grid()
    with pytest.raises(HeightmapError, match="150"):
        load_heightmap(grid_text([[200] + [15] * 4] + [[15] * 5] * 4), layout)


def test_dot_cells_are_omitted():
    layout = grid(2, 2)
    text = FORMAT_HEADER + "\n100, .\n., 50\n"
    hm = load_heightmap(text, layout)
    assert hm.entries == {"a0_0": 100.0, "a1_1": 50.0}


def test_ragged_matrix_rejected():
    layout = grid(2, 2)
    with pytest.raises(HeightmapError, match="ragged"):
        load_heightmap(FORMAT_HEADER + "\n100, 100\n100\n", layout)


def test_missing_header_rejected():
    with pytest.raises(HeightmapError, match="header"):
        load_heightmap("100, 100\n", grid(1, 2))


def test_matrix_cell_without_actuator_rejected():
    layout = grid(1, 1)
    with pytest.raises(UnknownActuatorError):
        load_heightmap(grid_text([[100, 100]]), layout)


def test_full_json_round_trip():
    layout = grid(2, 2)
    hm = Heightmap(entries={"a0_0": 20.0, "a0_1": 130.0, "a1_0": 75.5, "a1_1": 15.0},
                   name="demo", metadata={"author": "ops"})
    again = load_heightmap(heightmap_to_text(hm), layout)
    assert again == hm


def test_preset_list_names():
    assert PRESET_NAMES == ("Flat", "Chair", "Table", "Bed", "ArrowWall",
                            "MeetingPartition")


def test_flat_preset_fills_layout():
    hm = preset("Flat", grid(), 15.0)
    assert set(hm.entries.values()) == {15.0}
    assert len(hm.entries) == 25


def test_chair_preset_has_seat_and_backrest():
    hm = preset("Chair", grid())
    levels = sorted(set(hm.entries.values()))
    assert len(levels) >= 2
    assert all(15.0 <= v <= 150.0 for v in hm.entries.values())


def test_arrow_wall_is_connected_elevated_mask():
    layout = build_grid_layout(5, 5, SPEC, 30.0,
                               orientation=Orientation.WALL_HORIZONTAL)
    hm = preset("ArrowWall", layout)
    levels = sorted(set(hm.entries.values()))
    assert len(levels) == 2
    low, high = levels
    mask = {layout.pose_of(aid).grid_index for aid, v in hm.entries.items() if v == high}
    assert mask
    # 4-connectivity flood fill covers the whole mask
    seen = set()
    stack = [next(iter(mask))]
    while stack:
        r, c = stack.pop()
        if (r, c) in seen or (r, c) not in mask:
            continue
        seen.add((r, c))
        stack.extend([(r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)])
    assert seen == mask


def test_every_preset_on_its_minimum_layout_is_in_bounds():
    minimum = {"Chair": (3, 3), "Table": (3, 3), "Bed": (3, 3),
               "ArrowWall": (5, 3), "MeetingPartition": (3, 3)}
    for name, (r, c) in minimum.items():
        hm = preset(name, grid(r, c))
        assert all(15.0 <= v <= 150.0 for v in hm.entries.values()), name


def test_preset_on_too_small_layout_names_dimensions():
    with pytest.raises(HeightmapError, match="3x3"):
        preset("Chair", grid(2, 2))


def test_unknown_preset_rejected():
    with pytest.raises(HeightmapError, match="unknown preset"):
        preset("Sofa", grid())


# ---------------------------------------------------------------------------
# diff

def test_diff_identical_maps():
    layout = grid(2, 2)
    a = flat_heightmap(layout, 40.0)
    deltas, summary = diff_heightmaps(a, a)
    assert set(deltas.values()) == {0.0}
    assert summary == DiffSummary(0.0, 0.0, 0.0)


def test_diff_flat15_to_flat150_totals():
    layout = grid()
    deltas, summary = diff_heightmaps(flat_heightmap(layout, 15.0),
                                      flat_heightmap(layout, 150.0))
    assert summary.total_extension_cm == pytest.approx(25 * 135.0)  # 3375
    assert summary.total_retraction_cm == 0.0


def test_diff_mixed_totals_consistent():
    layout = grid(1, 3)
    a = Heightmap(entries={"a0_0": 20.0, "a0_1": 100.0, "a0_2": 60.0})
    b = Heightmap(entries={"a0_0": 50.0, "a0_1": 40.0, "a0_2": 60.0})
    deltas, summary = diff_heightmaps(a, b)
    assert summary.total_extension_cm == pytest.approx(
        sum(d for d in deltas.values() if d > 0))
    assert summary.total_retraction_cm == pytest.approx(
        sum(-d for d in deltas.values() if d < 0))
    assert summary.max_abs_delta_cm == pytest.approx(60.0)


def test_diff_id_mismatch_rejected():
    with pytest.raises(HeightmapError):
        diff_heightmaps(Heightmap(entries={"a": 20.0}), Heightmap(entries={"b": 20.0}))


# ---------------------------------------------------------------------------
# physicalization

def demo_series():
    return PhysicalizationSeries(samples=((0.0, 10.0), (50.0, 20.0), (100.0, 30.0)),
                                 v_min=10.0, v_max=30.0, h_min=15.0, h_max=150.0)


def test_physicalize_endpoints():
    s = demo_series()
    assert physicalize(s, 0.0) == pytest.approx(15.0)
    assert physicalize(s, 100.0) == pytest.approx(150.0)


def test_physicalize_midpoint_linearity():
    s = demo_series()
    assert physicalize(s, 50.0) == pytest.approx((15.0 + 150.0) / 2)


def test_physicalize_rejects_out_of_range_probe():
    with pytest.raises(HeightmapError, match="outside"):
        physicalize(demo_series(), 101.0)


def test_series_text_round_trip():
    s = demo_series()
    assert series_from_text(series_to_text(s)) == s


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 100.0), min_size=2, max_size=8, unique=True),
       st.floats(0.0, 1.0))
def test_physicalize_monotone_in_data_value(values, frac):
    positions = sorted(range(len(values)))
    samples = tuple((float(p), v) for p, v in zip(positions, sorted(values)))
    s = PhysicalizationSeries(samples=samples, v_min=-1.0, v_max=101.0,
                              h_min=15.0, h_max=150.0)
    lo, hi = samples[0][0], samples[-1][0]
    x1 = lo + frac * (hi - lo)
    x2 = min(hi, x1 + 0.25)
    assert physicalize(s, x1) <= physicalize(s, x2) + 1e-9

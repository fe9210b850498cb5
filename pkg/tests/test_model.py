import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifttiles.model import (ActuatorSpec, Compressor, Layout, LayoutError,
                             Orientation, OverlapError, PlacedActuator, Pose,
                             SupplyLine, UnknownActuatorError,
                             build_grid_layout, footprints_overlap,
                             layout_from_json, layout_to_json, move_actuator,
                             validate_layout)

SPEC = ActuatorSpec()


def test_default_rates_match_stroke_timings():
    assert SPEC.max_extend_rate_cm_s == pytest.approx(135.0 / 16.0)
    assert SPEC.retract_rate_cm_s == pytest.approx(135.0 / 4.0)


@pytest.mark.parametrize("kwargs", [
    dict(footprint_cm=25),
    dict(min_height_cm=0.0),
    dict(min_height_cm=200.0),
    dict(max_extend_rate_cm_s=0.0),
    dict(retract_rate_cm_s=-1.0),
])
def test_bad_spec_rejected(kwargs):
    with pytest.raises(LayoutError):
        ActuatorSpec(**kwargs)


def test_5x5_grid_default_lines():
    layout = build_grid_layout(5, 5, SPEC, 30.0)
    assert len(layout.actuators) == 25
    assert len(layout.supply_lines) == 5
    assert all(len(line.member_actuator_ids) == 5 for line in layout.supply_lines)
    assert validate_layout(layout) == []
    assert layout.grid_shape() == (5, 5)


def test_single_unit_grid():
    layout = build_grid_layout(1, 1, SPEC, 30.0)
    assert len(layout.actuators) == 1
    assert len(layout.supply_lines) == 1


def test_tight_pitch_overlaps():
    with pytest.raises(OverlapError) as exc:
        build_grid_layout(2, 2, SPEC, 29.0)
    assert len(exc.value.ids) == 2


def test_line_policies():
    per_col = build_grid_layout(2, 3, SPEC, 30.0, line_policy="per-col")
    assert len(per_col.supply_lines) == 3
    single = build_grid_layout(2, 3, SPEC, 30.0, line_policy="single")
    assert len(single.supply_lines) == 1
    assert len(single.supply_lines[0].member_actuator_ids) == 6


def test_validate_reports_overlap_and_orphan():
    layout = build_grid_layout(2, 2, SPEC, 30.0)
    # duplicate a pose
    acts = dict(layout.actuators)
    acts["a1_1"] = PlacedActuator(SPEC, acts["a0_0"].pose)
    bad = Layout(actuators=acts, supply_lines=layout.supply_lines,
                 compressors=layout.compressors)
    kinds = {v.kind for v in validate_layout(bad)}
    assert "overlap" in kinds

    lines = tuple(SupplyLine(id=l.id, compressor_ids=l.compressor_ids,
                             member_actuator_ids=tuple(m for m in l.member_actuator_ids
                                                       if m != "a0_1"))
                  for l in layout.supply_lines)
    orphaned = Layout(actuators=layout.actuators, supply_lines=lines,
                      compressors=layout.compressors)
    orphan = [v for v in validate_layout(orphaned) if v.kind == "orphan"]
    assert orphan and orphan[0].ids == ("a0_1",)


def test_move_to_same_pose_is_identity():
    layout = build_grid_layout(2, 2, SPEC, 30.0)
    same = move_actuator(layout, "a0_0", layout.pose_of("a0_0"))
    assert layout_to_json(same) == layout_to_json(layout)


def test_move_into_open_space_clears_grid_index():
    layout = build_grid_layout(2, 2, SPEC, 30.0)
    old = layout.pose_of("a0_0")
    moved = move_actuator(layout, "a0_0", Pose(old.x_cm + 60.0, old.y_cm))
    assert moved.pose_of("a0_0").grid_index is None
    assert validate_layout(moved) == []
    # supply-line membership unchanged
    assert moved.line_of("a0_0").id == layout.line_of("a0_0").id


def test_move_onto_occupied_cell_fails():
    layout = build_grid_layout(2, 2, SPEC, 30.0)
    with pytest.raises(OverlapError):
        move_actuator(layout, "a0_0", layout.pose_of("a1_1"))
    with pytest.raises(UnknownActuatorError):
        move_actuator(layout, "nope", Pose(0, 0))


def test_move_away_and_back_is_byte_identical():
    layout = build_grid_layout(3, 3, SPEC, 30.0)
    before = layout_to_json(layout)
    original = layout.pose_of("a2_2")
    away = move_actuator(layout, "a2_2", Pose(500.0, 500.0))
    back = move_actuator(away, "a2_2", original)
    assert layout_to_json(back) == before


def test_layout_json_round_trip():
    layout = build_grid_layout(3, 2, SPEC, 35.0, orientation=Orientation.WALL_HORIZONTAL)
    text = layout_to_json(layout)
    again = layout_from_json(text)
    assert layout_to_json(again) == text


def test_layout_json_rejects_garbage():
    with pytest.raises(LayoutError):
        layout_from_json("not json at all")
    with pytest.raises(LayoutError):
        layout_from_json("{}")


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 40), st.integers(0, 40)),
                min_size=1, max_size=8, unique=True))
def test_nonoverlap_invariant_random_placements(cells):
    # Placements on a 30 cm lattice can touch but never overlap.
    acts = {f"u{i}": PlacedActuator(SPEC, Pose(x * 30.0, y * 30.0))
            for i, (x, y) in enumerate(cells)}
    line = SupplyLine(id="l0", compressor_ids=("c0",),
                      member_actuator_ids=tuple(acts))
    layout = Layout(actuators=acts, supply_lines=(line,),
                    compressors={"c0": Compressor("c0")})
    assert [v for v in validate_layout(layout) if v.kind == "overlap"] == []
    for ida in acts:
        for idb in acts:
            if ida != idb:
                assert not footprints_overlap(SPEC, acts[ida].pose, SPEC, acts[idb].pose)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.floats(30.0, 80.0))
def test_grid_then_validate_clean(rows, cols, pitch):
    layout = build_grid_layout(rows, cols, SPEC, pitch)
    assert validate_layout(layout) == []

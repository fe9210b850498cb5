import json
import os
import signal
import socket
import subprocess
import sys
import time

import pytest

from lifttiles.cli import main
from lifttiles.model import ActuatorSpec, build_grid_layout, layout_to_json
from lifttiles.shapes import FORMAT_HEADER

SPEC = ActuatorSpec()


@pytest.fixture
def layout_5x5(tmp_path):
    path = tmp_path / "layout.json"
    path.write_text(layout_to_json(build_grid_layout(5, 5, SPEC, 30.0)))
    return path


def write_grid(tmp_path, name, value):
    path = tmp_path / name
    rows = "\n".join(",".join([str(value)] * 5) for _ in range(5))
    path.write_text(FORMAT_HEADER + "\n" + rows + "\n")
    return path


def test_plan_prints_makespan_80(tmp_path, layout_5x5, capsys):
    src = write_grid(tmp_path, "flat15.csv", 15)
    dst = write_grid(tmp_path, "flat150.csv", 150)
    code = main(["plan", "--layout", str(layout_5x5),
                 "--from", str(src), "--to", str(dst)])
    out = capsys.readouterr().out
    assert code == 0
    assert "makespan 80.0 s" in out


def test_plan_defaults_from_collapsed(tmp_path, layout_5x5, capsys):
    dst = write_grid(tmp_path, "flat150.csv", 150)
    code = main(["plan", "--layout", str(layout_5x5), "--to", str(dst)])
    assert code == 0
    assert "makespan 80.0 s" in capsys.readouterr().out


def test_plan_validation_error_exits_2(tmp_path, layout_5x5, capsys):
    bad = write_grid(tmp_path, "bad.csv", 500)
    code = main(["plan", "--layout", str(layout_5x5), "--to", str(bad)])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_preset_list_names_all_six(capsys):
    assert main(["preset", "list"]) == 0
    names = capsys.readouterr().out.split()
    assert names == ["Flat", "Chair", "Table", "Bed", "ArrowWall", "MeetingPartition"]


def test_preset_emit_chair(tmp_path, layout_5x5, capsys):
    assert main(["preset", "emit", "Chair", "--layout", str(layout_5x5)]) == 0
    out = capsys.readouterr().out
    assert out.startswith(FORMAT_HEADER)
    doc = json.loads(out.split("\n", 1)[1])
    assert len(doc["entries"]) == 25


def test_replay_verdict_identical(tmp_path, capsys):
    import io
    from lifttiles.control import ControlConfig, TargetAssignment, run_to_target
    from lifttiles.sim import SimConfig

    layout = build_grid_layout(1, 1, SPEC, 30.0)
    trace_path = tmp_path / "run.trace"
    with open(trace_path, "w") as fp:
        run_to_target(layout, TargetAssignment({"a0_0": 100.0}), ControlConfig(),
                      SimConfig(seed=3), timeout_s=30.0, trace_fp=fp)
    assert main(["replay", str(trace_path)]) == 0
    assert "identical" in capsys.readouterr().out


def test_replay_divergent_exits_nonzero(tmp_path, capsys):
    import io
    from lifttiles.control import ControlConfig, TargetAssignment, run_to_target
    from lifttiles.sim import SimConfig

    layout = build_grid_layout(1, 1, SPEC, 30.0)
    trace_path = tmp_path / "run.trace"
    with open(trace_path, "w") as fp:
        run_to_target(layout, TargetAssignment({"a0_0": 100.0}), ControlConfig(),
                      SimConfig(seed=3), timeout_s=30.0, trace_fp=fp)
    lines = trace_path.read_text().splitlines()
    for i, line in enumerate(lines):
        if '"kind"' not in line and '"height_cm"' in line and "100" not in line:
            lines[i] = line.replace('"supply": "Open"', '"supply": "Closed"')
    trace_path.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(trace_path)]) == 1


def wait_for_port(port, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=0.2):
                return
        except OSError:
            time.sleep(0.05)
    raise TimeoutError(f"port {port} never opened")


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_run_and_apply_end_to_end(tmp_path, layout_5x5):
    port = free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "lifttiles.cli", "run",
         "--layout", str(layout_5x5), "--listen", f"127.0.0.1:{port}",
         "--http", "", "--sensor-sigma", "0", "--tick-ms", "1"],
        stdout=subprocess.DEVNULL, stderr=subprocess.PIPE)
    try:
        wait_for_port(port)
        hm = write_grid(tmp_path, "flat50.csv", 50)
        result = subprocess.run(
            [sys.executable, "-m", "lifttiles.cli", "apply",
             "--connect", f"127.0.0.1:{port}", "--heightmap", str(hm),
             "--layout", str(layout_5x5), "--timeout", "60"],
            capture_output=True, text=True, timeout=90)
        assert result.returncode == 0, result.stderr
        assert "settled" in result.stdout
    finally:
        proc.send_signal(signal.SIGINT)
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()


def test_env_seed_overrides_flag(tmp_path, layout_5x5, monkeypatch, capsys):
    # LIFTTILES_SEED is honored by run; verified via the seed recorded in the trace
    import asyncio
    from lifttiles.cli import _seed, build_parser

    monkeypatch.setenv("LIFTTILES_SEED", "4242")
    args = build_parser().parse_args(["run", "--layout", str(layout_5x5), "--seed", "7"])
    assert _seed(args) == 4242
    monkeypatch.delenv("LIFTTILES_SEED")
    assert _seed(args) == 7

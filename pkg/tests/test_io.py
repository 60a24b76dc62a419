import json
import os

import numpy as np
import pytest

from switchctl import io as sio
from switchctl.fixtures import example2_system
from switchctl.simulate import SimulationConfig, simulate_closed_loop
from switchctl.sysmodel import DisturbanceProfile


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    sio.atomic_write_text(target, "first")
    sio.atomic_write_text(target, "second")
    assert target.read_text() == "second"
    assert os.listdir(target.parent) == ["out.txt"]


def test_atomic_write_failure_keeps_old_file(tmp_path):
    target = tmp_path / "out.json"
    sio.write_json(target, {"a": 1})
    with pytest.raises(TypeError):
        sio.write_json(target, {"a": object()})
    assert json.loads(target.read_text()) == {"a": 1}
    assert os.listdir(tmp_path) == ["out.json"]


def test_json_handles_numpy_and_infinities():
    text = sio.dumps({"x": np.arange(3), "y": np.float64(0.5), "z": np.inf, "w": np.nan, 1: (1, 2)})
    assert json.loads(text) == {"x": [0, 1, 2], "y": 0.5, "z": "inf", "w": None, "1": [1, 2]}


def test_system_round_trip(tmp_path):
    sys = example2_system()
    path = sio.save_system(tmp_path / "sys.json", sys)
    back = sio.load_system(path)
    np.testing.assert_array_equal(back.A, sys.A)
    np.testing.assert_array_equal(back.b, sys.b)


def test_disturbance_round_trip(tmp_path):
    d = DisturbanceProfile([0.0, 1.0], [0.5], [0.0, 2.0])
    path = tmp_path / "d.json"
    sio.write_json(path, d.to_dict())
    back = sio.load_disturbance(path)
    np.testing.assert_array_equal(back.E, d.E)
    assert list(back.breakpoints) == [0.5] and list(back.values) == [0.0, 2.0]


def test_trajectory_csv_format(example1_law, tmp_path):
    traj = simulate_closed_loop(example1_law.system, example1_law, SimulationConfig(0.01, 0.1, [-4.0, 5.0]))
    path = sio.write_trajectory(tmp_path / "t.csv", traj)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1,x2,sigma,v"
    assert len(lines) == len(traj.times) + 1
    back = sio.read_trajectory(path)
    # sigma is 1-based on disk
    np.testing.assert_array_equal(back["sigma"], traj.modes + 1)
    np.testing.assert_array_equal(back["states"], traj.states)
    np.testing.assert_array_equal(back["t"], traj.times)
    np.testing.assert_array_equal(back["v"], traj.lyapunov)


def test_events_are_json_lines(tmp_path):
    path = sio.write_events(tmp_path / "e.jsonl", [{"t": 0.0, "x_perp": np.array([1.0])},
                                                   {"t": 1.0, "x_perp": [2.0]}])
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert rows == [{"t": 0.0, "x_perp": [1.0]}, {"t": 1.0, "x_perp": [2.0]}]


def test_rate_csv_header():
    text = sio.rate_csv([(1.0, 0.5, 0.25, 0.125)])
    assert text == "r,beta,epsilon,alpha\n1.0,0.5,0.25,0.125\n"

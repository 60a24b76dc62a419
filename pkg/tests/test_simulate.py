import numpy as np
import pytest

from switchctl.design import certificate_from_blocks
from switchctl.equilibria import diagnose_no_global_exponential
from switchctl.errors import SimulationDiverged
from switchctl.simulate import (SimulationConfig, Trajectory, _rk4_reference, half_time,
                                metrics, simulate_closed_loop, speed_bound_check, step_maps)
from switchctl.sysmodel import DisturbanceProfile, MotorParams, SimplexVector, SwitchedAffineSystem


def test_config_invariants():
    with pytest.raises(ValueError):
        SimulationConfig(0.0, 1.0, [0.0])
    with pytest.raises(ValueError):
        SimulationConfig(0.1, 0.05, [0.0])
    with pytest.raises(ValueError):
        SimulationConfig(0.1, 1.0, [0.0], reference_schedule=[(0.5, [0]), (0.2, [1])])
    with pytest.raises(ValueError):
        SimulationConfig(0.1, 1.0, [0.0], reference_schedule=[(2.0, [0])])
    with pytest.raises(ValueError):
        SimulationConfig(0.1, 1.0, [0.0], integrator="midpoint")


def test_step_maps_match_classical_rk4(rng):
    A = rng.normal(size=(3, 3))
    w = rng.normal(size=3)

    def u(t):
        return np.sin(3 * t) * w

    T, R1, R2, R3 = step_maps(A, 0.01)
    for _ in range(5):
        x = rng.normal(size=3)
        t = rng.uniform(0, 2)
        exact = _rk4_reference(A, x, u, t, 0.01)
        fast = T @ x + R1 @ u(t) + R2 @ u(t + 0.005) + R3 @ u(t + 0.01)
        np.testing.assert_allclose(fast, exact, atol=1e-14)


def test_rk4_local_error_order():
    A = np.array([[0.0, 1.0], [-4.0, -0.3]])
    b = np.array([0.0, 1.0])
    x0 = np.array([1.0, 0.0])
    from scipy.linalg import expm

    def exact(h):
        # augmented exponential for the affine field
        Z = np.zeros((3, 3))
        Z[:2, :2], Z[:2, 2] = A, b
        return (expm(Z * h) @ np.append(x0, 1.0))[:2]

    errs = []
    for h in (0.02, 0.01):
        T, R1, R2, R3 = step_maps(A, h)
        errs.append(np.linalg.norm(T @ x0 + (R1 + R2 + R3) @ b - exact(h)))
    assert errs[0] / errs[1] == pytest.approx(32, rel=0.1)


def test_example1_converges(example1_law, fx):
    cfg = SimulationConfig(1e-3, 12.0, fx["example1"].x0)
    traj = simulate_closed_loop(example1_law.system, example1_law, cfg)
    assert np.linalg.norm(traj.states[-1]) <= 0.05
    assert len(traj.times) == len(traj.states) == len(traj.modes) == len(traj.lyapunov)
    assert set(np.unique(traj.modes)) <= {0, 1, 2}


def test_equilibrium_start_stays(designed):
    for name in ("example1", "example2"):
        law = designed[name]
        cfg = SimulationConfig(1e-3, 1.0, law.x_e)
        traj = simulate_closed_loop(law.system, law, cfg)
        assert np.max(np.abs(traj.states - law.x_e)) <= 10 * cfg.h
        assert traj.lyapunov.max() <= 1e-4


def test_deterministic(example2_law):
    cfg = SimulationConfig(1e-3, 2.0, [1.0, -1.0, 1.0])
    a = simulate_closed_loop(example2_law.system, example2_law, cfg)
    b = simulate_closed_loop(example2_law.system, example2_law, cfg)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.modes, b.modes)


def test_halving_step_keeps_final_error(designed, fx):
    for name in ("example1", "example2"):
        law, x0 = designed[name], fx[name].x0
        errs = []
        for h in (2e-3, 1e-3):
            traj = simulate_closed_loop(law.system, law, SimulationConfig(h, 8.0, x0))
            errs.append(metrics(traj).final_error)
        assert errs[1] <= 2 * errs[0] + 1e-9


def test_sampled_decrease_scales_with_step(designed, fx):
    # positive v-jumps between samples are O(h^2)
    for name in ("example1", "example2"):
        law, x0 = designed[name], fx[name].x0
        jumps = []
        for h in (2e-3, 1e-3):
            traj = simulate_closed_loop(law.system, law, SimulationConfig(h, 3.0, x0))
            jumps.append(metrics(traj).max_v_jump)
        C = [j / h**2 for j, h in zip(jumps, (2e-3, 1e-3))]
        assert np.all(np.isfinite(C))
        assert C[1] <= 1.5 * C[0] + 1e-6


def test_reference_events_retarget(designed):
    law = designed["motor-position"]
    cfg = SimulationConfig(1e-4, 0.2, np.zeros(4), reference_schedule=[(0.0, [1.0]), (0.1, [2.0])])
    traj = simulate_closed_loop(law.system, law, cfg)
    assert [e["x_perp"] for e in traj.events] == [[1.0], [2.0]]
    assert traj.targets[0, 3] == 1.0 and traj.targets[-1, 3] == 2.0
    assert traj.events[1]["step"] == 1000


def test_disturbance_enters_plant(designed):
    law = designed["motor-velocity"]
    J = MotorParams().J
    d = DisturbanceProfile([0.0, 0.0, -1.0 / J, 0.0], [0.05], [0.0, 1e-3])
    cfg = SimulationConfig(1e-4, 0.1, law.x_e, disturbance=d)
    free = simulate_closed_loop(law.system, law, SimulationConfig(1e-4, 0.1, law.x_e))
    hit = simulate_closed_loop(law.system, law, cfg)
    # the step ending at the jump already samples it
    k = 500
    assert np.array_equal(free.states[:k], hit.states[:k])
    assert not np.array_equal(free.states[k], hit.states[k])
    assert not np.allclose(free.states[-1], hit.states[-1])


def test_divergence_is_reported():
    sys = SwitchedAffineSystem([np.diag([0.0, 50.0])] * 2, [[1.0, 0.0], [-1.0, 0.0]])
    law = certificate_from_blocks(sys, SimplexVector([0.5, 0.5]), [[-1.0]], [[1.0]])
    with pytest.raises(SimulationDiverged):
        simulate_closed_loop(sys, law, SimulationConfig(0.05, 100.0, [0.0, 1.0]))


def test_metrics_constant_trajectory():
    n = 2
    x_e = np.array([1.0, 2.0])
    traj = Trajectory(np.arange(5) * 0.1, np.tile(x_e, (5, 1)), np.zeros(5, dtype=int), np.zeros(5),
                      np.tile(x_e, (5, 1)), 0, [], 0.1)
    m = metrics(traj, x_e)
    assert m.final_error == 0.0 and m.settling_time == 0.0 and m.max_v_jump == 0.0
    assert n == traj.states.shape[1]


def test_velocity_returns_to_band(designed):
    law = designed["motor-velocity"]
    J = MotorParams().J
    d = DisturbanceProfile([0.0, 0.0, -1.0 / J, 0.0], [1.0, 2.0], [0.0, 1e-3, 0.0])
    h = 1e-4
    traj = simulate_closed_loop(law.system, law, SimulationConfig(h, 3.0, np.zeros(4), disturbance=d))
    omega = traj.states[:, 2]
    # last 0.2 s before each step and before the end; sampled switching leaves an O(h) chatter
    for end in (1.0, 2.0, 3.0):
        window = omega[int(round((end - 0.2) / h)):int(round(end / h))]
        assert abs(window.mean() - 200.0) <= 0.005 * 200.0, (end, window.mean())
        assert np.max(np.abs(window - 200.0)) <= 0.025 * 200.0, (end, window.min(), window.max())


def test_velocity_chatter_shrinks_with_step(designed):
    law = designed["motor-velocity"]
    ripple = []
    for h in (1e-4, 5e-5):
        traj = simulate_closed_loop(law.system, law, SimulationConfig(h, 0.6, law.x_e))
        w = traj.states[int(round(0.4 / h)):, 2]
        ripple.append(w.max() - w.min())
    assert ripple[1] <= 0.75 * ripple[0]


def test_speed_bound_example1(example1_law):
    diag = diagnose_no_global_exponential(example1_law.ells, example1_law.decomp)
    for tau in (1.0, -5.0):
        traj = simulate_closed_loop(example1_law.system, example1_law,
                                    SimulationConfig(1e-3, 2.0, [tau, 0.0]))
        check = speed_bound_check(traj, diag.ell_bar, example1_law)
        assert check.status == "pass", check


def test_speed_bound_linear_system():
    A = np.diag([0.0, -1.0])
    sys = SwitchedAffineSystem([A, A], [[0.0, 0.0], [0.0, 0.0]])
    law = certificate_from_blocks(sys, SimplexVector([0.5, 0.5]), [[1.0]], [[1.0]], [0.0])
    traj = simulate_closed_loop(sys, law, SimulationConfig(1e-3, 1.0, [2.0, 0.0]))
    check = speed_bound_check(traj, 0.0, law)
    assert check.status == "pass" and check.max_speed <= 1e-12


def test_speed_bound_not_applicable(example1_law):
    traj = simulate_closed_loop(example1_law.system, example1_law,
                                SimulationConfig(1e-3, 0.1, [1.0, 1.0]))
    assert speed_bound_check(traj, 1.0, example1_law).status == "not applicable"


def test_half_time_grows_with_distance(example1_law):
    times = {}
    for s in (1.0, 10.0, 100.0):
        traj = simulate_closed_loop(example1_law.system, example1_law,
                                    SimulationConfig(1e-3, 60.0, [-s, 0.0]))
        times[s] = half_time(traj)
    assert times[1.0] < times[10.0] < times[100.0]
    assert times[100.0] / times[1.0] >= 10

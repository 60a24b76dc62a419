"""Sampled closed-loop simulation.

The mode is chosen at each sample instant and frozen over the step, so every
step integrates one affine field. Fixed-step RK4 (or Euler) is applied
exactly through precomputed linear maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import SwitchingLaw, select_from_values
from .errors import SimulationDiverged
from .sysmodel import DisturbanceProfile, SwitchedAffineSystem, evaluate_disturbance

DIVERGENCE_BOUND = 1e12


@dataclass
class SimulationConfig:
    h: float
    T: float
    x0: np.ndarray
    integrator: str = "rk4"
    reference_schedule: list = field(default_factory=list)  # [(time, x_perp), ...]
    disturbance: DisturbanceProfile | None = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if self.T < self.h:
            raise ValueError("horizon T must be at least one step")
        if self.integrator not in ("rk4", "euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        times = [float(t) for t, _ in self.reference_schedule]
        if any(t < 0 or t > self.T for t in times):
            raise ValueError("reference events must lie in [0, T]")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("reference event times must be increasing")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.h))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    modes: np.ndarray  # zero-based mode applied from each sample on
    lyapunov: np.ndarray  # v relative to the equilibrium active at that sample
    targets: np.ndarray  # equilibrium active at each sample
    switch_count: int
    events: list
    h: float


def step_maps(A, h, integrator="rk4"):
    """``x+ = T x + R1 u(t) + R2 u(t + h/2) + R3 u(t + h)`` for ``x' = A x + u``."""
    n = A.shape[0]
    I = np.eye(n)
    if integrator == "euler":
        return I + h * A, h * I, np.zeros((n, n)), np.zeros((n, n))
    hA = h * A
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    hA4 = hA3 @ hA
    T = I + hA + hA2 / 2 + hA3 / 6 + hA4 / 24
    # split of the classical weights: k1 carries u(t), k2 and k3 u(t+h/2), k4 u(t+h)
    R1 = h / 6 * (I + hA + hA2 / 2 + hA3 / 4)
    R2 = h / 6 * (4 * I + 2 * hA + hA2 / 2)
    R3 = h / 6 * I
    return T, R1, R2, R3


def _rk4_reference(A, x, u, t, h):
    k1 = A @ x + u(t)
    k2 = A @ (x + h / 2 * k1) + u(t + h / 2)
    k3 = A @ (x + h / 2 * k2) + u(t + h / 2)
    k4 = A @ (x + h * k3) + u(t + h)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _state_forms(law):
    """Quadratic forms of f_i in ``(x, 1)``, folding in the coordinate change."""
    n = law.system.n
    T = np.zeros((n + 1, n + 1))
    T[:n, :n] = law.decomp.W.T
    T[:n, n] = -law.decomp.W.T @ law.x_e
    T[n, n] = 1.0
    return np.einsum("ai,kab,bj->kij", T, law.forms, T)


def simulate_closed_loop(sys: SwitchedAffineSystem, law: SwitchingLaw,
                         config: SimulationConfig) -> Trajectory:
    h, K, n = config.h, config.steps, sys.n
    maps = [step_maps(sys.A[i], h, config.integrator) for i in range(sys.N)]
    Tm = np.stack([m[0] for m in maps])
    const = np.stack([(m[1] + m[2] + m[3]) @ sys.b[i] for i, m in enumerate(maps)])
    dist = config.disturbance
    if dist is not None:
        E = dist.E
        dE = np.stack([np.stack([m[1] @ E, m[2] @ E, m[3] @ E]) for m in maps])  # N×3×n

    events = {int(round(t / h)): (float(t), np.atleast_1d(np.asarray(xp, dtype=float)))
              for t, xp in config.reference_schedule}
    times = np.arange(K + 1) * h
    states = np.empty((K + 1, n))
    modes = np.empty(K + 1, dtype=int)
    vals = np.empty(K + 1)
    targets = np.empty((K + 1, n))
    log = []

    x = config.x0.copy()
    prev = None
    switches = 0
    cur = law
    forms = _state_forms(cur)
    for k in range(K + 1):
        if k in events:
            t_ev, xp = events[k]
            cur = cur.retarget(xp)
            forms = _state_forms(cur)
            log.append({"t": t_ev, "step": k, "kind": "reference",
                        "x_perp": xp.tolist(), "x_e": cur.x_e.tolist()})
        z = np.append(x, 1.0)
        sigma = select_from_values((forms @ z) @ z, prev, cur.tie_tol)
        if prev is not None and sigma != prev:
            switches += 1
        prev = sigma
        states[k] = x
        modes[k] = sigma
        targets[k] = cur.x_e
        if k == K:
            break
        xn = Tm[sigma] @ x + const[sigma]
        if dist is not None:
            t = times[k]
            d = (evaluate_disturbance(dist, t), evaluate_disturbance(dist, t + h / 2),
                 evaluate_disturbance(dist, t + h))
            xn += d[0] * dE[sigma, 0] + d[1] * dE[sigma, 1] + d[2] * dE[sigma, 2]
        if not np.all(np.isfinite(xn)) or np.max(np.abs(xn)) > DIVERGENCE_BOUND:
            raise SimulationDiverged(f"state left the finite range at t={times[k + 1]:.6g} "
                                     f"(mode {sigma + 1}, |x|={np.max(np.abs(xn)):.3e})")
        x = xn
    err = states - targets
    vals = np.einsum("ki,ij,kj->k", err, law.certificate.P_state, err)
    return Trajectory(times, states, modes, vals, targets, switches, log, h)


@dataclass
class Metrics:
    final_error: float
    settling_time: float | None
    switch_count: int
    max_v_jump: float


def metrics(traj: Trajectory, x_e=None, band: float = 0.05) -> Metrics:
    """Summary numbers; ``x_e=None`` measures against the running target.

    v-jumps across reference events are excluded.
    """
    target = traj.targets if x_e is None else np.broadcast_to(np.asarray(x_e, dtype=float), traj.states.shape)
    err = np.linalg.norm(traj.states - target, axis=1)
    outside = np.flatnonzero(err > band)
    if outside.size == 0:
        settle = 0.0
    elif outside[-1] == err.size - 1:
        settle = None
    else:
        settle = float(traj.times[outside[-1] + 1])
    dv = np.diff(traj.lyapunov)
    same_target = np.all(traj.targets[1:] == traj.targets[:-1], axis=1)
    jumps = dv[same_target]
    return Metrics(float(err[-1]), settle, traj.switch_count,
                   float(max(jumps.max(initial=0.0), 0.0)))


@dataclass
class SpeedCheck:
    status: str  # "pass" | "fail" | "not applicable"
    max_speed: float
    tol: float


def speed_bound_check(traj: Trajectory, ell_bar: float, law: SwitchingLaw,
                      tol_null: float = 1e-9) -> SpeedCheck:
    """Finite-difference speed against ``ell_bar`` for nullspace starts."""
    xi0 = traj.states[0] - traj.targets[0]
    d = law.decomp
    if d.p and np.linalg.norm(d.V_bar.T @ xi0) > tol_null * (1.0 + np.linalg.norm(xi0)):
        return SpeedCheck("not applicable", float("nan"), float("nan"))
    speed = np.linalg.norm(np.diff(traj.states, axis=0), axis=1) / traj.h
    tol = 10 * traj.h * ell_bar + 1e-9
    vmax = float(speed.max(initial=0.0))
    return SpeedCheck("pass" if vmax <= ell_bar + tol else "fail", vmax, tol)


def half_time(traj: Trajectory) -> float | None:
    """First time the error norm drops to half its initial value."""
    err = np.linalg.norm(traj.states - traj.targets, axis=1)
    idx = np.flatnonzero(err <= 0.5 * err[0])
    return float(traj.times[idx[0]]) if idx.size else None

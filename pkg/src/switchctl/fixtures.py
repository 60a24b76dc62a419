"""Built-in demonstration systems and the certificates published for them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .sysmodel import (MotorParams, SimplexVector, SwitchedAffineSystem,
                       build_dc_motor, convex_combination)

DEMOS = ("example1", "example2", "motor-position", "motor-velocity")


@dataclass(frozen=True)
class Fixture:
    name: str
    system: SwitchedAffineSystem
    lam: SimplexVector
    x_perp: np.ndarray
    P_bar: np.ndarray | None = None  # published certificate blocks, if any
    P_perp: np.ndarray | None = None
    x0: np.ndarray | None = None
    nullspace_weight: float = 1.0  # suggested synthesis weight, see design_switching


def example1_system() -> SwitchedAffineSystem:
    """Two states, the first one integrating the affine input only."""
    Z = np.zeros((2, 2))
    return SwitchedAffineSystem([Z, Z, np.diag([0.0, -1.0])],
                                [[-1.0, 0.0], [1.0, 0.0], [0.0, 0.0]])


def example2_system() -> SwitchedAffineSystem:
    A1 = [[-6, 5, 0], [2, -7, 0], [-2, 0, 0]]
    A2 = [[-6, 2, 0], [2, -7, 0], [2, 3, 0]]
    A3 = [[-3, -1, 0], [-1, -1, 0], [2, -3, 0]]
    return SwitchedAffineSystem([A1, A2, A3], [[1, -1, 0], [-1, 1, 2], [0, 0, -2]])


EXAMPLE2_P_BAR = np.array([[1.1989, -0.0046], [-0.0046, 1.2087]]) * 1e-3
EXAMPLE2_P_PERP = np.array([[1.1542e-3]])
MOTOR_POSITION_P_BAR = np.array([[1.4953, 1.1691, 0.0], [1.1691, 3.7599, 0.0],
                                 [0.0, 0.0, 1.2560]]) * 1e-3
MOTOR_POSITION_P_PERP = np.array([[2.0007]])
MOTOR_VELOCITY_P_BAR = np.array([[0.0142, 0.0057, 0.0068], [0.0057, 0.0108, 0.0027],
                                 [0.0068, 0.0027, 0.0048]])
MOTOR_VELOCITY_P_PERP = np.array([[18.7476]])
# weights quoted with the velocity problem; with the tabulated parameters they
# admit no equilibrium (see motor_velocity_lambda)
MOTOR_VELOCITY_QUOTED_LAMBDA = (0, 0, 0, 0, 0, 0, 0.625, 0.375)
MOTOR_VELOCITY_QUOTED_XE = np.array([7.6202, 29.9719, 200.0034, 0.0])


def motor_velocity_lambda(params: MotorParams | None = None, omega_ref: float = 200.0) -> SimplexVector:
    """Weights on modes 7 and 8 for which the motor settles at ``omega_ref``.

    Solved for the tabulated parameters, so the integrator row balances
    exactly.
    """
    params = params or MotorParams()
    sys = build_dc_motor(params, "velocity", omega_ref)

    def omega_at(a):
        lam = np.zeros(8)
        lam[6], lam[7] = 1.0 - a, a
        A, b = convex_combination(sys, lam)
        x = np.linalg.solve(A[:3, :3], -b[:3])
        return x[2] - omega_ref

    a = brentq(omega_at, 1e-6, 1.0 - 1e-6, xtol=1e-15, rtol=1e-15)
    lam = np.zeros(8)
    lam[6], lam[7] = 1.0 - a, a
    return SimplexVector(lam)


def load(name: str) -> Fixture:
    if name == "example1":
        return Fixture(name, example1_system(), SimplexVector.uniform(3), np.zeros(1),
                       np.array([[1.5]]), np.array([[1.0]]), np.array([-4.0, 5.0]))
    if name == "example2":
        return Fixture(name, example2_system(), SimplexVector.uniform(3), np.zeros(1),
                       EXAMPLE2_P_BAR, EXAMPLE2_P_PERP, np.array([1.0, -1.0, 1.0]))
    if name == "motor-position":
        return Fixture(name, build_dc_motor(mode="position"),
                       SimplexVector([0.25] * 4 + [0.0] * 4), np.zeros(1),
                       MOTOR_POSITION_P_BAR, MOTOR_POSITION_P_PERP, np.zeros(4), 1e4)
    if name == "motor-velocity":
        return Fixture(name, build_dc_motor(mode="velocity", omega_ref=200.0),
                       motor_velocity_lambda(), np.zeros(1),
                       MOTOR_VELOCITY_P_BAR, MOTOR_VELOCITY_P_PERP, np.zeros(4), 1e3)
    raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")

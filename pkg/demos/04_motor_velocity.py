"""
Speed regulation against a load torque
======================================

Integral action on the speed error adds the kernel direction. A load
torque step of 1 mN m hits the shaft between t = 1 s and t = 2 s.
"""

import numpy as np

from switchctl import design_switching
from switchctl.fixtures import load
from switchctl.simulate import SimulationConfig, simulate_closed_loop
from switchctl.sysmodel import DisturbanceProfile, MotorParams

f = load("motor-velocity")
print("weights on the active modes:", np.round(f.lam.weights[6:], 4))
law = design_switching(f.system, f.lam, f.x_perp, nullspace_weight=f.nullspace_weight)
print("equilibrium:", np.round(law.x_e, 4))

J = MotorParams().J
torque = DisturbanceProfile([0.0, 0.0, -1.0 / J, 0.0], [1.0, 2.0], [0.0, 1e-3, 0.0])
h = 1e-4
traj = simulate_closed_loop(f.system, law, SimulationConfig(h, 3.0, np.zeros(4), disturbance=torque))
omega = traj.states[:, 2]
for t0 in np.arange(0.0, 3.0, 0.5):
    w = omega[int(t0 / h):int((t0 + 0.5) / h)]
    print(f"[{t0:.1f}, {t0 + 0.5:.1f}) s: mean speed {w.mean():7.2f} rad/s, ripple {w.max() - w.min():.2f}")

"""
Shaft position tracking with an H-bridge
========================================

The dc motor with an integrator on the shaft angle has a kernel along the
angle, so every angle is a singular equilibrium. Retargeting the law moves
the equilibrium along that kernel without a new design.
"""

import numpy as np

from switchctl import design_switching, verify_certificate
from switchctl.fixtures import load
from switchctl.simulate import SimulationConfig, simulate_closed_loop

f = load("motor-position")
law = design_switching(f.system, f.lam, f.x_perp, nullspace_weight=f.nullspace_weight)
print("verified:", verify_certificate(law).passed)
print("equilibrium (i, v_C, omega, theta):", np.round(law.x_e, 4))

targets = [np.pi, 2 * np.pi, -np.pi, 0.0]
schedule = [(float(k), [th]) for k, th in enumerate(targets)]
h = 1e-4
traj = simulate_closed_loop(f.system, law, SimulationConfig(h, 4.0, np.zeros(4),
                                                            reference_schedule=schedule))
for k, th in enumerate(targets):
    theta = traj.states[int(round((k + 1) / h)) - 1, 3]
    print(f"target {th:+.4f} rad -> {theta:+.4f} rad just before t = {k + 1} s")

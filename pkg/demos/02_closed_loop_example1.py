"""
Closed loop and the missing exponential envelope
================================================

Simulate the example1 law from a few starts. Along the kernel the speed
is capped by the size of the affine terms, so far-away starts take longer
to halve their distance: convergence is not globally exponential.
"""

import numpy as np

from switchctl.design import certificate_from_blocks
from switchctl.equilibria import diagnose_no_global_exponential
from switchctl.fixtures import load
from switchctl.simulate import (SimulationConfig, half_time, metrics, simulate_closed_loop,
                                speed_bound_check)

f = load("example1")
law = certificate_from_blocks(f.system, f.lam, [[1.5]], [[1.0]], f.x_perp)

traj = simulate_closed_loop(f.system, law, SimulationConfig(1e-3, 12.0, [-4.0, 5.0]))
m = metrics(traj)
print(f"from [-4, 5]: final error {m.final_error:.2e}, {m.switch_count} switches, "
      f"largest sampled rise of v {m.max_v_jump:.1e}")

# modes visited over time, 1-based like the CSV output
for t in (0.0, 1.0, 3.0, 6.0):
    k = int(round(t / traj.h))
    print(f"t={t:4.1f}  x={np.round(traj.states[k], 3)}  sigma={traj.modes[k] + 1}")

diag = diagnose_no_global_exponential(law.ells, law.decomp)
print("speed cap along the kernel:", diag.ell_bar)
for s in (1.0, 10.0, 100.0):
    tr = simulate_closed_loop(f.system, law, SimulationConfig(1e-3, 60.0, [-s, 0.0]))
    check = speed_bound_check(tr, diag.ell_bar, law)
    print(f"|x0| = {s:5.0f}: half time {half_time(tr):6.2f} s, max speed {check.max_speed:.3f} ({check.status})")

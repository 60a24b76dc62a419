"""
Designing a switching law for a singular equilibrium
====================================================

Three modes in the plane. Two of them only push the first state left or
right; the third damps the second state. No mode is stable on its own and
the convex combination is singular, yet the origin can be stabilized.
"""

import numpy as np

from switchctl import design_switching, solve_equilibrium, verify_certificate
from switchctl.equilibria import (check_interior_condition, compute_M, nullspace_decomposition,
                                  residual_terms)
from switchctl.fixtures import example1_system
from switchctl.sysmodel import SimplexVector, convex_combination

sys = example1_system()
lam = SimplexVector.parse("1/3,1/3,1/3")

# the averaged matrix has a one-dimensional kernel along x1
A_lam, b_lam = convex_combination(sys, lam)
d = nullspace_decomposition(A_lam)
print("A_lambda =\n", A_lam)
print("kernel basis:", d.V_perp.ravel(), " complement:", d.V_bar.ravel())

# any point on the kernel line is an equilibrium; pick the origin
eq = solve_equilibrium(sys, lam, x_perp=[0.0])
print("x_e =", eq.x_e)

# the residuals M l_i must surround zero so that switching can hold x_e
M = compute_M(A_lam, d)
ells = residual_terms(sys, eq.x_e)
interior = check_interior_condition(M, ells)
print("M l_i =", (M @ ells.T).ravel(), " interior:", interior.valid)

law = design_switching(sys, lam, x_perp=[0.0])
report = verify_certificate(law)
print("P =\n", np.round(law.certificate.P, 4))
print("decrease block eigenvalues:", report.decrease_block.ravel())
print("all checks pass:", report.passed)

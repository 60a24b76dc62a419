"""
Well-conditioned certificates
=============================

The margin objective maximizes how strictly the matrix inequalities hold;
the alternative minimizes the spread of the eigenvalues of P above a floor.
"""

import numpy as np

from switchctl import design_switching
from switchctl.design import certificate_from_blocks
from switchctl.fixtures import load

f = load("example2")
published = certificate_from_blocks(f.system, f.lam, f.P_bar, f.P_perp, f.x_perp)
margin = design_switching(f.system, f.lam, f.x_perp)
tight = design_switching(f.system, f.lam, f.x_perp, objective="min_condition", floor=1e-3)

for name, law in (("published", published), ("margin", margin), ("min_condition", tight)):
    ev = np.linalg.eigvalsh(law.certificate.P)
    print(f"{name:14s} eigenvalues {np.round(ev, 5)}  condition {ev[-1] / ev[0]:.5f}")

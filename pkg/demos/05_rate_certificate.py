"""
Local convergence rate
======================

With identical mode matrices the quantities behind the rate certificate
have closed forms, which makes this system a good first look. The
example2 fixture is a different story: its cross terms let g_i vanish
while h_i stays positive, so no beta > 0 survives the SOS step.
"""

import numpy as np

from switchctl.design import certificate_from_blocks
from switchctl.errors import SosInfeasible
from switchctl.fixtures import load
from switchctl.rate import certify_rate, check_gram_certificates, rate_curve, sos_find_beta
from switchctl.sysmodel import SimplexVector, SwitchedAffineSystem

A = np.diag([-1.0, 0.0])
sys = SwitchedAffineSystem([A, A], [[1.0, -1.0], [1.0, 1.0]])
law = certificate_from_blocks(sys, SimplexVector([0.5, 0.5]), [[1.0]], [[1.0]], [0.0])

res = sos_find_beta(law, 1.0)
print(f"beta at r = 1: {res.beta:.6f} (closed form 1.0); "
      f"Gram issues: {check_gram_certificates(res.certificates) or 'none'}")
cert = certify_rate(law, 1.0)
print(f"alpha = {cert.alpha:.4f} at eps = {cert.eps:.3f}, rho = {cert.rho:.3f}")

print("  R      beta    alpha")
for R, r, beta, eps, alpha in rate_curve(law, np.linspace(0.25, 2.5, 6)):
    print(f"{R:5.2f}  {beta:7.4f}  {alpha:7.4f}")

f = load("example2")
law2 = certificate_from_blocks(f.system, f.lam, f.P_bar, f.P_perp, f.x_perp)
try:
    sos_find_beta(law2, float(np.linalg.eigvalsh(law2.certificate.P)[-1]))
except SosInfeasible as exc:
    print("example2:", exc)

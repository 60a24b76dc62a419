"""Switching-law synthesis from a quadratic certificate on the singular subspace.

Coordinates: for a state x and equilibrium x_e the error is ``xi = x - x_e``
with components ``xi_bar = V_bar' xi`` and ``xi_perp = V_perp' xi``. The
certificate matrix P acts on ``c = W' xi`` with ``W = [V_bar V_perp]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import conic
from .conic import ConicProblem, LinearMatrixExpression
from .equilibria import (InteriorCertificate, NullspaceDecomposition,
                         check_interior_condition, check_zero_defective, compute_M,
                         correction_gain, detect_shared_subset, nullspace_decomposition,
                         residual_terms, solve_equilibrium)
from .errors import (AssumptionViolated, InteriorConditionFailed, LmiInfeasible,
                     NoEquilibrium, ParticularNullspaceUnsupported, SolverError)
from .sysmodel import SimplexVector, SwitchedAffineSystem, convex_combination, validate_system

ELL_TOL = 1e-8
TIE_TOL = 1e-12


def _he(X):
    return X + X.T


@dataclass(frozen=True)
class LyapunovCertificate:
    P_bar: np.ndarray
    P_perp: np.ndarray
    P_cross: np.ndarray
    decomp: NullspaceDecomposition
    lam: SimplexVector
    x_e: np.ndarray
    margins: dict = field(default_factory=dict)

    @property
    def P(self) -> np.ndarray:
        """Full matrix in ``(xi_bar, xi_perp)`` coordinates."""
        return np.block([[self.P_bar, self.P_cross], [self.P_cross.T, self.P_perp]])

    @property
    def P_state(self) -> np.ndarray:
        """Same quadratic form in the original state coordinates."""
        W = self.decomp.W
        return W @ self.P @ W.T


@dataclass(frozen=True)
class SwitchingLaw:
    system: SwitchedAffineSystem
    certificate: LyapunovCertificate
    ells: np.ndarray  # N×n
    S_bar: np.ndarray  # p×n
    S_perp: np.ndarray  # m×n
    U: np.ndarray  # N×p×m
    forms: np.ndarray  # N×(n+1)×(n+1), the quadratic forms of f_i in (c, 1)
    M: np.ndarray
    x_bar: np.ndarray
    interior: InteriorCertificate | None = None
    tie_tol: float = TIE_TOL

    @property
    def x_e(self) -> np.ndarray:
        return self.certificate.x_e

    @property
    def decomp(self) -> NullspaceDecomposition:
        return self.certificate.decomp

    def coords(self, x) -> np.ndarray:
        return self.decomp.W.T @ (np.asarray(x, dtype=float) - self.x_e)

    def retarget(self, x_perp) -> "SwitchingLaw":
        """Move the equilibrium along the nullspace keeping ``x_bar`` fixed."""
        d = self.decomp
        x_perp = np.atleast_1d(np.asarray(x_perp, dtype=float))
        x_e = d.V_bar @ self.x_bar + d.V_perp @ x_perp
        cert = replace(self.certificate, x_e=x_e)
        ells = residual_terms(self.system, x_e)
        return _assemble(self.system, cert, ells, self.M, self.x_bar, self.interior, self.tie_tol)


def _assemble(sys, cert, ells, M, x_bar, interior, tie_tol=TIE_TOL):
    d = cert.decomp
    Vb, Vp = d.V_bar, d.V_perp
    S_bar = cert.P_bar @ Vb.T + cert.P_cross @ Vp.T
    S_perp = cert.P_perp @ Vp.T + cert.P_cross.T @ Vb.T
    N, n = sys.N, sys.n
    U = np.empty((N, d.p, d.m))
    forms = np.zeros((N, n + 1, n + 1))
    for i in range(N):
        Ai, li = sys.A[i], ells[i]
        U[i] = Vb.T @ Ai.T @ S_perp.T + S_bar @ Ai @ Vp
        top = np.block([[_he(S_bar @ Ai @ Vb), U[i]], [U[i].T, _he(S_perp @ Ai @ Vp)]])
        lin = np.concatenate([S_bar @ li, S_perp @ li])
        forms[i, :n, :n] = top
        forms[i, :n, n] = lin
        forms[i, n, :n] = lin
    return SwitchingLaw(sys, cert, ells, S_bar, S_perp, U, forms, M, x_bar, interior, tie_tol)


def _p_cross(P_perp, K):
    return -K.T @ P_perp


def _equilibrium(sys, lam, x_perp, x_e, decomp, A_lam, b_lam):
    if x_e is not None:
        x_e = np.asarray(x_e, dtype=float)
        res = np.max(np.abs(A_lam @ x_e + b_lam))
        if res > 1e-7 * (1.0 + np.linalg.norm(b_lam)):
            raise NoEquilibrium(f"x_e is not an equilibrium for lambda: residual {res:.3e}")
        return decomp.V_bar.T @ x_e, x_e
    eq = solve_equilibrium(sys, lam, x_perp, decomp.rank_tol)
    return eq.x_bar, eq.x_e


def certificate_from_blocks(sys: SwitchedAffineSystem, lam, P_bar, P_perp, x_perp=None,
                            x_e=None, subset=None) -> SwitchingLaw:
    """Build the law from given blocks without checking the LMIs.

    Use :func:`verify_certificate` to audit the result.
    """
    lam = lam if isinstance(lam, SimplexVector) else SimplexVector(lam)
    A_lam, b_lam = convex_combination(sys, lam)
    decomp = nullspace_decomposition(A_lam)
    if check_zero_defective(A_lam, decomp):
        raise AssumptionViolated("zero is a defective eigenvalue of A_lambda")
    x_bar, x_e = _equilibrium(sys, lam, x_perp, x_e, decomp, A_lam, b_lam)
    K = correction_gain(A_lam, decomp)
    M = compute_M(A_lam, decomp)
    P_bar = np.atleast_2d(np.asarray(P_bar, dtype=float))
    P_perp = np.atleast_2d(np.asarray(P_perp, dtype=float))
    cert = LyapunovCertificate(P_bar, P_perp, _p_cross(P_perp, K), decomp, lam, x_e)
    ells = residual_terms(sys, x_e)
    _check_ell_lambda(ells, lam, b_lam)
    if subset is None:
        subset = detect_shared_subset(sys, decomp) or tuple(range(sys.N))
    interior = check_interior_condition(M, ells, subset)
    law = _assemble(sys, cert, ells, M, x_bar, interior)
    return replace(law, certificate=replace(cert, margins=_margins(law, A_lam)))


def _check_ell_lambda(ells, lam, b_lam):
    ell_lam = lam.weights @ ells
    res = float(np.max(np.abs(ell_lam)))
    if res > ELL_TOL * (1.0 + np.max(np.abs(b_lam))):
        raise NoEquilibrium(f"l_lambda = {res:.3e} does not vanish")


def _lmi_blocks(A_lam, decomp):
    Vb, Vp = decomp.V_bar, decomp.V_perp
    return Vb.T @ A_lam @ Vb, Vp.T @ A_lam @ Vb, correction_gain(A_lam, decomp)


def _lmi8_block(P_bar, P_perp, B_bar, B_perp, K):
    return _he(P_bar @ B_bar - K.T @ P_perp @ B_perp)


def _margins(law, A_lam):
    cert = law.certificate
    B_bar, B_perp, K = _lmi_blocks(A_lam, cert.decomp)
    L8 = _lmi8_block(cert.P_bar, cert.P_perp, B_bar, B_perp, K)
    return {"decrease": float(-np.linalg.eigvalsh(L8)[-1]) if L8.size else np.inf,
            "positivity": float(np.linalg.eigvalsh(cert.P)[0])}


class _Vars:
    """Index bookkeeping for the symmetric unknowns P_bar (p×p) and P_perp (m×m)."""

    def __init__(self, p, m):
        self.p, self.m = p, m
        self.bar = conic.sym_basis(p)
        self.perp = conic.sym_basis(m)
        self.count = len(self.bar) + len(self.perp)

    def blocks(self, x):
        x = np.asarray(x)
        nb = len(self.bar)
        P_bar = conic.sym_from_vector(x[:nb], self.p) if self.p else np.zeros((0, 0))
        P_perp = conic.sym_from_vector(x[nb:self.count], self.m)
        return P_bar, P_perp

    def each(self):
        nb = len(self.bar)
        for k, E in enumerate(self.bar):
            yield k, E, np.zeros((self.m, self.m))
        for k, E in enumerate(self.perp):
            yield nb + k, np.zeros((self.p, self.p)), E


def synthesis_lmis(A_lam, decomp: NullspaceDecomposition, margin_positivity=True):
    """The two strict LMIs in the unknowns (P_bar, P_perp) plus the P map."""
    B_bar, B_perp, K = _lmi_blocks(A_lam, decomp)
    V = _Vars(decomp.p, decomp.m)
    dec_terms, pos_terms = [], []
    for k, Eb, Ep in V.each():
        dec_terms.append((k, _lmi8_block(Eb, Ep, B_bar, B_perp, K)))
        cross = _p_cross(Ep, K)
        pos_terms.append((k, np.block([[Eb, cross], [cross.T, Ep]])))
    n = decomp.n
    lmis = []
    if decomp.p:
        lmis.append(LinearMatrixExpression(np.zeros((decomp.p, decomp.p)), dec_terms, "<=",
                                           strict=True, name="decrease"))
    lmis.append(LinearMatrixExpression(np.zeros((n, n)), pos_terms, ">=",
                                       strict=margin_positivity, name="positivity"))
    p_map = dict(pos_terms)
    return V, lmis, p_map


def design_switching(sys: SwitchedAffineSystem, lam, x_perp=None, x_e=None,
                     objective: str = "margin", floor: float = 1e-3,
                     margin: float = conic.STRICT_MARGIN, backend: str = "barrier",
                     nullspace_weight: float = 1.0) -> SwitchingLaw:
    """Run the synthesis pipeline and return a verified law.

    ``objective="margin"`` maximizes the common eigenvalue margin with
    ``P ⪯ I``; ``objective="min_condition"`` minimizes the condition bound of
    P above ``floor * I``. Each failing hypothesis raises its own error.

    In margin mode ``nullspace_weight`` w rescales the normalization and the
    positivity margin to ``diag(I_p, w I_m)``, letting P_perp grow to about
    w while P_bar stays near one. Large w makes the law correct nullspace
    errors aggressively, which is what reference tracking needs.
    """
    if nullspace_weight <= 0:
        raise ValueError("nullspace_weight must be positive")
    report = validate_system(sys)
    if not report:
        raise ValueError("; ".join(report.issues))
    lam = lam if isinstance(lam, SimplexVector) else SimplexVector(lam)
    A_lam, b_lam = convex_combination(sys, lam)
    decomp = nullspace_decomposition(A_lam)
    if check_zero_defective(A_lam, decomp):
        raise AssumptionViolated("zero is a defective eigenvalue of A_lambda")
    x_bar, x_e = _equilibrium(sys, lam, x_perp, x_e, decomp, A_lam, b_lam)
    ells = residual_terms(sys, x_e)
    _check_ell_lambda(ells, lam, b_lam)
    M = compute_M(A_lam, decomp)

    shared = detect_shared_subset(sys, decomp)
    if len(shared) == sys.N:
        interior = check_interior_condition(M, ells, shared)
        if not interior.valid:
            raise InteriorConditionFailed(f"origin not interior to conv(M l_i): {interior.reason}")
    else:
        if not shared:
            raise ParticularNullspaceUnsupported("no mode shares the nullspace of A_lambda")
        interior = check_interior_condition(M, ells, shared)
        if not interior.valid:
            raise ParticularNullspaceUnsupported(
                f"nullspace shared only by modes {[i + 1 for i in shared]} and the reduced "
                f"interior condition fails: {interior.reason}")

    V, lmis, p_map = synthesis_lmis(A_lam, decomp, margin_positivity=(objective == "margin"))
    if objective == "margin":
        # D^-1/2 P D^-1/2 with D = diag(I_p, w I_m)
        scale = np.concatenate([np.ones(decomp.p), np.full(decomp.m, nullspace_weight ** -0.5)])
        scaled = [(k, scale[:, None] * F * scale[None, :]) for k, F in p_map.items()]
        for lmi in lmis:
            if lmi.name == "positivity":
                lmi.terms = scaled
        ceiling = LinearMatrixExpression(-np.eye(decomp.n), scaled, "<=",
                                         strict=False, name="normalization")
        sol = conic.solve(ConicProblem(V.count, lmis + [ceiling], margin=margin), backend=backend)
    elif objective == "min_condition":
        for lmi in lmis:
            lmi.strict = lmi.name == "decrease"
        base = [l for l in lmis if l.name == "decrease"]
        sol = conic.min_condition_number(base, list(p_map), p_map.__getitem__, floor,
                                         V.count, backend=backend)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    if sol.status == conic.INFEASIBLE or sol.status == conic.MARGIN_BELOW_THRESHOLD:
        raise LmiInfeasible(f"LMIs infeasible: {sol.message or sol.status}")
    if sol.status != conic.OPTIMAL:
        raise SolverError(f"conic solver: {sol.status} {sol.message}")
    P_bar, P_perp = V.blocks(sol.values)
    K = correction_gain(A_lam, decomp)
    cert = LyapunovCertificate(P_bar, P_perp, _p_cross(P_perp, K), decomp, lam, x_e)
    law = _assemble(sys, cert, ells, M, x_bar, interior)
    margins = _margins(law, A_lam)
    if objective == "min_condition":
        margins["condition_bound"] = sol.extras.get("condition_bound")
    law = replace(law, certificate=replace(cert, margins=margins))
    rep = verify_certificate(law)
    if not rep.passed:
        raise LmiInfeasible("certificate failed verification: " + "; ".join(rep.failures()))
    return law


def lyapunov_value(law: SwitchingLaw, x) -> float:
    c = law.coords(x)
    return float(c @ law.certificate.P @ c)


def f_values(law: SwitchingLaw, x) -> np.ndarray:
    """Time derivative of v along each mode, from the block quadratic forms."""
    z = np.append(law.coords(x), 1.0)
    return np.einsum("i,kij,j->k", z, law.forms, z)


def f_values_gradient(law: SwitchingLaw, x) -> np.ndarray:
    """Reference evaluation ``grad v(xi) . (A_i xi + l_i)`` in state coordinates."""
    xi = np.asarray(x, dtype=float) - law.x_e
    grad = 2.0 * law.certificate.P_state @ xi
    return (law.system.A @ xi + law.ells) @ grad


def select_mode(law: SwitchingLaw, x, prev_mode: int | None = None) -> int:
    """Zero-based argmin of f_i; near-ties keep ``prev_mode``, else lowest index."""
    return select_from_values(f_values(law, x), prev_mode, law.tie_tol)


def select_from_values(f, prev_mode=None, tie_tol=TIE_TOL) -> int:
    fmin = f.min()
    tol = tie_tol * (1.0 + np.max(np.abs(f)))
    if prev_mode is not None and f[prev_mode] <= fmin + tol:
        return int(prev_mode)
    return int(np.flatnonzero(f <= fmin + tol)[0])


@dataclass
class CertificateReport:
    checks: dict  # name -> {"passed": bool, "value": ...}
    decrease_block: np.ndarray
    positivity_eigenvalues: np.ndarray

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def failures(self) -> list[str]:
        return [f"{k}: {c['value']}" for k, c in self.checks.items() if not c["passed"]]


def verify_certificate(law: SwitchingLaw, tol: float = 1e-9) -> CertificateReport:
    cert = law.certificate
    lam = cert.lam
    sys = law.system
    A_lam, b_lam = convex_combination(sys, lam)
    d = cert.decomp
    B_bar, B_perp, K = _lmi_blocks(A_lam, d)
    L8 = _lmi8_block(cert.P_bar, cert.P_perp, B_bar, B_perp, K)
    L8_direct = _he((cert.P_bar @ d.V_bar.T + cert.P_cross @ d.V_perp.T) @ A_lam @ d.V_bar)
    eig8 = np.linalg.eigvalsh(L8) if L8.size else np.zeros(0)
    eig9 = np.linalg.eigvalsh(cert.P)
    cross_expected = -K.T @ cert.P_perp
    U_lam = np.tensordot(lam.weights, law.U, axes=1)
    ell_lam = lam.weights @ law.ells
    checks = {
        "decrease_lmi": {"passed": bool(eig8.size == 0 or eig8[-1] < 0), "value": eig8.tolist()},
        "decrease_block_consistency": {"passed": bool(np.allclose(L8, L8_direct, atol=1e-9 * (1 + np.abs(L8).max(initial=0)))),
                                       "value": float(np.max(np.abs(L8 - L8_direct), initial=0.0))},
        "positivity_lmi": {"passed": bool(eig9[0] > 0), "value": eig9.tolist()},
        "cross_term": {"passed": bool(np.max(np.abs(cert.P_cross - cross_expected), initial=0.0) <= tol * (1 + np.abs(cert.P_perp).max())),
                       "value": float(np.max(np.abs(cert.P_cross - cross_expected), initial=0.0))},
        "U_lambda": {"passed": bool(np.max(np.abs(U_lam), initial=0.0) <= 1e-8 * (1 + np.abs(law.U).max(initial=0.0))),
                     "value": float(np.max(np.abs(U_lam), initial=0.0))},
        "ell_lambda": {"passed": bool(np.max(np.abs(ell_lam)) <= ELL_TOL * (1 + np.max(np.abs(b_lam)))),
                       "value": float(np.max(np.abs(ell_lam)))},
    }
    if law.interior is not None:
        checks["interior"] = {"passed": bool(law.interior.valid),
                              "value": {"margin": law.interior.margin, "rank": law.interior.rank_ML}}
    return CertificateReport(checks, L8, eig9)


def law_report(law: SwitchingLaw) -> dict:
    """JSON-ready summary of a certificate and its checks."""
    cert = law.certificate
    rep = verify_certificate(law)
    return {
        "lambda": cert.lam.weights.tolist(),
        "x_e": cert.x_e.tolist(),
        "V_bar": cert.decomp.V_bar.tolist(),
        "V_perp": cert.decomp.V_perp.tolist(),
        "P_bar": cert.P_bar.tolist(),
        "P_perp": cert.P_perp.tolist(),
        "P_cross": cert.P_cross.tolist(),
        "margins": {k: v for k, v in cert.margins.items()},
        "interior_mu": None if law.interior is None else law.interior.mu.tolist(),
        "checks": rep.checks,
        "verified": rep.passed,
    }

"""Problem and solution containers shared by the conic backends."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

STRICT_MARGIN = 1e-6
SYMMETRY_TOL = 1e-12

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MARGIN_BELOW_THRESHOLD = "margin_below_threshold"
ITERATION_LIMIT = "iteration_limit"
UNBOUNDED = "unbounded"
BREAKDOWN = "numerical_breakdown"


@dataclass
class LinearMatrixExpression:
    """``constant + sum_k x[k] * coeff_k`` constrained in the Loewner order.

    ``sign=">="`` means the expression must be ⪰ margin·I, ``sign="<="`` that it
    must be ⪯ -margin·I. Non-strict expressions use margin 0.
    """

    constant: np.ndarray
    terms: list[tuple[int, np.ndarray]] = field(default_factory=list)
    sign: str = ">="
    strict: bool = True
    name: str = ""

    def __post_init__(self):
        self.constant = np.atleast_2d(np.asarray(self.constant, dtype=float))
        d = self.constant.shape[0]
        if self.constant.shape != (d, d):
            raise ValueError("LMI constant must be square")
        if self.sign not in (">=", "<="):
            raise ValueError(f"unknown LMI sign {self.sign!r}")
        terms = []
        for k, F in self.terms:
            F = np.atleast_2d(np.asarray(F, dtype=float))
            if F.shape != (d, d):
                raise ValueError(f"LMI term for variable {k} has shape {F.shape}, expected {(d, d)}")
            if np.max(np.abs(F - F.T), initial=0.0) > SYMMETRY_TOL * (1 + np.max(np.abs(F))):
                raise ValueError(f"LMI term for variable {k} is not symmetric")
            terms.append((int(k), 0.5 * (F + F.T)))
        if np.max(np.abs(self.constant - self.constant.T), initial=0.0) > SYMMETRY_TOL * (1 + np.max(np.abs(self.constant))):
            raise ValueError("LMI constant is not symmetric")
        self.constant = 0.5 * (self.constant + self.constant.T)
        self.terms = terms

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, x) -> np.ndarray:
        F = self.constant.copy()
        for k, Fk in self.terms:
            F += x[k] * Fk
        return F

    def oriented(self, x) -> np.ndarray:
        """The expression multiplied by the sign so that feasibility means ⪰."""
        F = self.evaluate(x)
        return F if self.sign == ">=" else -F

    def slack(self, x) -> float:
        return float(np.linalg.eigvalsh(self.oriented(x))[0])


@dataclass
class ConicProblem:
    """LMIs plus linear (in)equalities over ``num_vars`` real variables.

    ``objective=None`` asks for the largest common eigenvalue margin over the
    strict LMIs; otherwise ``objective @ x`` is maximized with every strict
    LMI held at ``margin``.
    """

    num_vars: int
    lmi_constraints: list[LinearMatrixExpression] = field(default_factory=list)
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    objective: np.ndarray | None = None
    margin: float = STRICT_MARGIN
    lower_bounds: np.ndarray | None = None  # only used by the LP path

    def __post_init__(self):
        k = self.num_vars
        for lmi in self.lmi_constraints:
            for idx, _ in lmi.terms:
                if not 0 <= idx < k:
                    raise ValueError(f"variable index {idx} out of range for {k} variables")
        self.A_eq, self.b_eq = _pair(self.A_eq, self.b_eq, k, "equality")
        self.A_ub, self.b_ub = _pair(self.A_ub, self.b_ub, k, "inequality")
        if self.objective is not None:
            self.objective = np.asarray(self.objective, dtype=float).ravel()
            if self.objective.shape != (k,):
                raise ValueError("objective length must equal num_vars")
        if self.lower_bounds is not None:
            self.lower_bounds = np.asarray(self.lower_bounds, dtype=float).ravel()
        if not (self.lmi_constraints or self.A_eq.shape[0] or self.A_ub.shape[0]
                or self.lower_bounds is not None):
            raise ValueError("problem has no constraints")


def _pair(A, b, k, what):
    if A is None:
        return np.zeros((0, k)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[1] != k or A.shape[0] != b.size:
        raise ValueError(f"{what} constraint shapes {A.shape} / {b.shape} inconsistent with {k} variables")
    return A, b


@dataclass
class ConicSolution:
    status: str
    values: np.ndarray | None
    achieved_margin: float = float("nan")
    objective_value: float = float("nan")
    iterations: int = 0
    message: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def verify_solution(problem: ConicProblem, x, tol: float = 1e-8) -> tuple[bool, float, list[str]]:
    """Independent eigenvalue check of every constraint at ``x``.

    Returns ``(passed, strict_margin, issues)`` where ``strict_margin`` is the
    smallest eigenvalue slack over the strict LMIs.
    """
    x = np.asarray(x, dtype=float)
    issues = []
    strict_slacks = []
    for j, lmi in enumerate(problem.lmi_constraints):
        s = lmi.slack(x)
        if lmi.strict:
            strict_slacks.append(s)
        if s < -tol:
            issues.append(f"LMI {lmi.name or j} violated, slack {s:.3e}")
    if problem.A_eq.shape[0]:
        r = np.max(np.abs(problem.A_eq @ x - problem.b_eq))
        if r > tol * (1 + np.max(np.abs(problem.b_eq))):
            issues.append(f"equality residual {r:.3e}")
    if problem.A_ub.shape[0]:
        r = np.max(problem.A_ub @ x - problem.b_ub)
        if r > tol * (1 + np.max(np.abs(problem.b_ub))):
            issues.append(f"inequality violated by {r:.3e}")
    margin = min(strict_slacks) if strict_slacks else float("inf")
    return not issues, margin, issues


def sym_basis(d: int) -> list[np.ndarray]:
    """Basis of d×d symmetric matrices, one per upper-triangular entry."""
    out = []
    for i in range(d):
        for j in range(i, d):
            E = np.zeros((d, d))
            E[i, j] = E[j, i] = 1.0
            out.append(E)
    return out


def sym_from_vector(v, d: int) -> np.ndarray:
    S = np.zeros((d, d))
    iu = np.triu_indices(d)
    S[iu] = v
    return S + S.T - np.diag(np.diag(S))

"""Small dense conic solvers: LP simplex, LMI barrier, LP/SDP primal-dual."""

import numpy as np

from .barrier import solve as solve_barrier
from .problem import (BREAKDOWN, INFEASIBLE, ITERATION_LIMIT, MARGIN_BELOW_THRESHOLD,
                      OPTIMAL, STRICT_MARGIN, UNBOUNDED, ConicProblem,
                      ConicSolution, LinearMatrixExpression, sym_basis,
                      sym_from_vector, verify_solution)
from .primal_dual import StandardForm, solve_lmi, solve_standard
from .simplex import solve_lp

BACKENDS = ("barrier", "primal-dual", "cvxpy")


def solve(problem: ConicProblem, tol: float = 1e-9, max_iter: int = 200,
          backend: str = "barrier") -> ConicSolution:
    """Dispatch an LMI problem to a backend; the barrier method is the default."""
    if backend == "barrier":
        return solve_barrier(problem, tol=tol, max_iter=max_iter)
    if backend == "primal-dual":
        return solve_lmi(problem, tol=max(tol, 1e-9), max_iter=max_iter)
    if backend == "cvxpy":
        from .external import solve_cvxpy
        return solve_cvxpy(problem)
    raise ValueError(f"unknown conic backend {backend!r}")


def min_condition_number(lmis, p_vars, p_map, floor: float, num_vars: int,
                         backend: str = "barrier") -> ConicSolution:
    """Minimize the condition-number bound s with ``floor*I ⪯ P ⪯ s*floor*I``.

    ``lmis`` are the problem-specific constraints over ``num_vars`` variables.
    ``p_map(k)`` returns the coefficient of variable k in the symmetric matrix
    P (constant part zero); ``p_vars`` lists the variables that enter P. One
    extra variable s (index ``num_vars``) is appended.
    """
    n_total = num_vars + 1
    terms = [(k, p_map(k)) for k in p_vars]
    d = terms[0][1].shape[0]
    lower = LinearMatrixExpression(-floor * np.eye(d), terms, ">=", strict=False, name="floor")
    upper = LinearMatrixExpression(np.zeros((d, d)), terms + [(num_vars, -floor * np.eye(d))],
                                   "<=", strict=False, name="ceiling")
    obj = np.zeros(n_total)
    obj[-1] = -1.0
    problem = ConicProblem(n_total, list(lmis) + [lower, upper], objective=obj)
    sol = solve(problem, backend=backend)
    if sol.values is not None:
        sol.extras["condition_bound"] = float(sol.values[-1])
    return sol


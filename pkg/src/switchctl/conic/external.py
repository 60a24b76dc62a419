"""Optional cvxpy backend, used to cross-check the in-house solvers."""

from __future__ import annotations

import numpy as np

from .problem import (INFEASIBLE, MARGIN_BELOW_THRESHOLD, OPTIMAL,
                      ConicProblem, ConicSolution, verify_solution)


def available() -> bool:
    try:
        import cvxpy  # noqa: F401
    except ImportError:
        return False
    return True


def solve_cvxpy(problem: ConicProblem, solver: str | None = None) -> ConicSolution:
    import cvxpy as cp

    x = cp.Variable(problem.num_vars)
    feas = problem.objective is None
    t = cp.Variable() if feas else None
    cons = []
    for lmi in problem.lmi_constraints:
        expr = lmi.constant + sum(x[k] * F for k, F in lmi.terms) if lmi.terms else cp.Constant(lmi.constant)
        if lmi.sign == "<=":
            expr = -expr
        expr = 0.5 * (expr + expr.T)
        eye = np.eye(lmi.dim)
        if lmi.strict:
            cons.append(expr >> (t * eye if feas else problem.margin * eye))
        else:
            cons.append(expr >> 0)
    if problem.A_eq.shape[0]:
        cons.append(problem.A_eq @ x == problem.b_eq)
    if problem.A_ub.shape[0]:
        cons.append(problem.A_ub @ x <= problem.b_ub)
    if feas:
        cons.append(t <= 1e6)
        objective = cp.Maximize(t)
    else:
        objective = cp.Maximize(problem.objective @ x)
    prob = cp.Problem(objective, cons)
    prob.solve(solver=solver)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return ConicSolution(INFEASIBLE, None, message=f"cvxpy status {prob.status}")
    xv = np.asarray(x.value, dtype=float)
    _, margin, _ = verify_solution(problem, xv)
    status = OPTIMAL
    if feas and margin <= 0:
        status = INFEASIBLE
    elif margin < problem.margin - 1e-8:
        status = MARGIN_BELOW_THRESHOLD
    return ConicSolution(status, xv, achieved_margin=margin,
                         objective_value=float(prob.value))

"""Dense two-phase simplex method with Bland's anti-cycling rule.

Only meant for the tiny programs that appear here (a few dozen columns).
"""

from __future__ import annotations

import numpy as np

from .problem import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED,
                      ConicProblem, ConicSolution)

LP_TOL = 1e-10


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]


def _run(T, basis, ncols, tol, max_iter):
    """Minimize the objective stored in the last row of T (reduced costs).

    Entering column: lowest index with negative reduced cost (Bland).
    Leaving row: min ratio, ties by lowest basis index.
    """
    m = T.shape[0] - 1
    for it in range(max_iter):
        cost = T[-1, :ncols]
        entering = next((j for j in range(ncols) if cost[j] < -tol), None)
        if entering is None:
            return "done", it
        col = T[:m, entering]
        best, leave = np.inf, None
        for r in range(m):
            if col[r] > tol:
                ratio = T[r, -1] / col[r]
                if ratio < best - tol or (abs(ratio - best) <= tol and leave is not None
                                          and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave is None:
            return "unbounded", it
        _pivot(T, leave, entering)
        basis[leave] = entering
    return "limit", max_iter


def simplex_standard(c, A, b, tol=LP_TOL, max_iter=5000):
    """Minimize ``c @ x`` subject to ``A x = b``, ``x >= 0``.

    Returns ``(status, x, iterations)``.
    """
    A = np.array(A, dtype=float, ndmin=2)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # phase one: artificial columns n..n+m-1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    status, it1 = _run(T, basis, n + m, tol, max_iter)
    if status == "limit":
        return ITERATION_LIMIT, None, it1
    if -T[-1, -1] > tol * max(1.0, np.abs(b).max(initial=0.0)) * 10:
        return INFEASIBLE, None, it1

    # drive remaining artificials out of the basis where possible
    keep = []
    for r in range(m):
        if basis[r] >= n:
            nz = [j for j in range(n) if abs(T[r, j]) > tol]
            if nz:
                _pivot(T, r, nz[0])
                basis[r] = nz[0]
                keep.append(r)
            # else: redundant row, dropped
        else:
            keep.append(r)
    T2 = np.zeros((len(keep) + 1, n + 1))
    T2[:-1, :n] = T[keep, :n]
    T2[:-1, -1] = T[keep, -1]
    basis2 = [basis[r] for r in keep]
    T2[-1, :n] = c
    for r, j in enumerate(basis2):
        if T2[-1, j] != 0.0:
            T2[-1] -= T2[-1, j] * T2[r]
    status, it2 = _run(T2, basis2, n, tol, max_iter - it1)
    if status == "limit":
        return ITERATION_LIMIT, None, it1 + it2
    if status == "unbounded":
        return UNBOUNDED, None, it1 + it2
    x = np.zeros(n)
    for r, j in enumerate(basis2):
        x[j] = T2[r, -1]
    return OPTIMAL, np.clip(x, 0.0, None), it1 + it2


def solve_lp(problem: ConicProblem, tol: float = LP_TOL, max_iter: int = 5000) -> ConicSolution:
    """Maximize ``objective @ x`` under the problem's linear constraints.

    Variables are free unless ``problem.lower_bounds`` gives a finite bound.
    LMIs are not allowed here.
    """
    if problem.lmi_constraints:
        raise ValueError("solve_lp handles linear constraints only")
    k = problem.num_vars
    lb = problem.lower_bounds if problem.lower_bounds is not None else np.full(k, -np.inf)
    # x = shift + D z, z >= 0; free variables get two columns
    cols, shift = [], np.where(np.isfinite(lb), lb, 0.0)
    for i in range(k):
        e = np.zeros(k)
        e[i] = 1.0
        cols.append(e)
        if not np.isfinite(lb[i]):
            cols.append(-e)
    D = np.array(cols).T
    A_eq = problem.A_eq @ D
    b_eq = problem.b_eq - problem.A_eq @ shift
    A_ub = problem.A_ub @ D
    b_ub = problem.b_ub - problem.A_ub @ shift
    nz, nub = D.shape[1], A_ub.shape[0]
    A = np.block([[A_eq, np.zeros((A_eq.shape[0], nub))],
                  [A_ub, np.eye(nub)]])
    b = np.concatenate([b_eq, b_ub])
    obj = problem.objective if problem.objective is not None else np.zeros(k)
    c = np.concatenate([-(obj @ D), np.zeros(nub)])
    if A.shape[0] == 0:
        if np.any(c < -tol):
            return ConicSolution(UNBOUNDED, None, message="objective unbounded")
        x = shift.copy()
        return ConicSolution(OPTIMAL, x, objective_value=float(obj @ x))
    status, z, iters = simplex_standard(c, A, b, tol=tol, max_iter=max_iter)
    if status != OPTIMAL:
        return ConicSolution(status, None, iterations=iters, message=f"simplex: {status}")
    x = shift + D @ z[:nz]
    return ConicSolution(OPTIMAL, x, objective_value=float(obj @ x), iterations=iters)

"""Infeasible-start primal-dual interior-point method for LP/SDP standard form.

Primal:  minimize  c_lin@x + sum <C_j, X_j>
         subject to A_lin x + sum_j A_j(X_j) = b,  x >= 0,  X_j ⪰ 0
Dual:    maximize  b@y
         subject to c_lin - A_lin' y = s >= 0,  C_j - sum_i y_i A_ij = Z_j ⪰ 0

The search direction is the HKM one with Mehrotra's predictor-corrector. The
barrier method in ``barrier.py`` needs a strictly feasible point; this solver
does not, which is what Gram-matrix programs with forced zero rows require.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .problem import (BREAKDOWN, INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED,
                      ConicProblem, ConicSolution)


@dataclass
class StandardForm:
    b: np.ndarray  # (m,)
    c_lin: np.ndarray = None  # (nl,)
    A_lin: np.ndarray = None  # (m, nl)
    C_blocks: list = field(default_factory=list)  # each (d, d)
    A_blocks: list = field(default_factory=list)  # each (m, d, d)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        m = self.b.size
        if self.c_lin is None:
            self.c_lin = np.zeros(0)
            self.A_lin = np.zeros((m, 0))
        self.c_lin = np.asarray(self.c_lin, dtype=float)
        self.A_lin = np.asarray(self.A_lin, dtype=float).reshape(m, self.c_lin.size)
        self.C_blocks = [np.asarray(C, dtype=float) for C in self.C_blocks]
        self.A_blocks = [np.asarray(A, dtype=float) for A in self.A_blocks]

    def apply(self, x, Xs):
        """A(x, X) = A_lin x + sum_j A_j(X_j)."""
        out = self.A_lin @ x
        for A, X in zip(self.A_blocks, Xs):
            out = out + A.reshape(A.shape[0], -1) @ X.ravel()
        return out

    def adjoint(self, y):
        return self.A_lin.T @ y, [np.tensordot(y, A, axes=1) for A in self.A_blocks]


@dataclass
class PDResult:
    status: str
    x: np.ndarray
    X: list
    y: np.ndarray
    s: np.ndarray
    Z: list
    primal_objective: float
    dual_objective: float
    iterations: int
    residuals: tuple


def _sym(M):
    return 0.5 * (M + M.T)


def _max_step(X, dX):
    """Largest alpha in (0, inf] keeping X + alpha dX ⪰ 0."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _max_step_lin(x, dx):
    neg = dx < 0
    return np.min(-x[neg] / dx[neg]) if np.any(neg) else np.inf


def solve_standard(sf: StandardForm, tol: float = 1e-8, max_iter: int = 100) -> PDResult:
    m = sf.b.size
    nl = sf.c_lin.size
    dims = [C.shape[0] for C in sf.C_blocks]
    nu = nl + sum(dims)
    scale = 1.0 + max([np.max(np.abs(sf.b), initial=0.0)]
                      + [np.max(np.abs(C), initial=0.0) for C in sf.C_blocks]
                      + [np.max(np.abs(sf.c_lin), initial=0.0)])
    init = max(10.0, np.sqrt(max(dims + [nl, 1])), scale)
    x = np.full(nl, init)
    s = np.full(nl, init)
    Xs = [init * np.eye(d) for d in dims]
    Zs = [init * np.eye(d) for d in dims]
    y = np.zeros(m)
    Aflat = [A.reshape(m, -1) for A in sf.A_blocks]
    bnorm = 1.0 + np.linalg.norm(sf.b)
    cnorm = 1.0 + np.linalg.norm(sf.c_lin) + sum(np.linalg.norm(C) for C in sf.C_blocks)

    status = ITERATION_LIMIT
    it = 0
    for it in range(1, max_iter + 1):
        rp = sf.b - sf.apply(x, Xs)
        aty_lin, aty = sf.adjoint(y)
        rd_lin = sf.c_lin - s - aty_lin
        Rd = [C - Z - a for C, Z, a in zip(sf.C_blocks, Zs, aty)]
        gap = x @ s + sum(np.vdot(X, Z) for X, Z in zip(Xs, Zs))
        mu = gap / nu
        pobj = sf.c_lin @ x + sum(np.vdot(C, X) for C, X in zip(sf.C_blocks, Xs))
        dobj = sf.b @ y
        pinf = np.linalg.norm(rp) / bnorm
        dinf = (np.linalg.norm(rd_lin) + sum(np.linalg.norm(R) for R in Rd)) / cnorm
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if max(pinf, dinf, relgap) < tol:
            status = OPTIMAL
            break
        # infeasibility certificates from diverging iterates
        if dobj > 0 and dobj > 1e8 * scale and dinf * cnorm / dobj < tol:
            status = INFEASIBLE
            break
        if pobj < 0 and -pobj > 1e8 * scale and pinf * bnorm / -pobj < tol:
            status = UNBOUNDED
            break

        try:
            Zinv = [np.linalg.inv(Z) for Z in Zs]
        except np.linalg.LinAlgError:
            # a dual block reached the cone boundary
            status = BREAKDOWN
            break
        # Schur complement M_ik = <A_i, X A_k Z^-1> + A_lin diag(x/s) A_lin'
        M = (sf.A_lin * (x / s)) @ sf.A_lin.T
        XAZ = []
        for A, Af, X, Zi in zip(sf.A_blocks, Aflat, Xs, Zinv):
            W = np.einsum("ab,kbc,cd->kad", X, A, Zi)
            XAZ.append(W)
            M += Af @ np.transpose(W, (0, 2, 1)).reshape(m, -1).T
        M = _sym(M)
        try:
            cho = np.linalg.cholesky(M + 1e-14 * np.trace(M) / max(m, 1) * np.eye(m))
            solveM = lambda r: np.linalg.solve(cho.T, np.linalg.solve(cho, r))
        except np.linalg.LinAlgError:
            solveM = lambda r: np.linalg.lstsq(M, r, rcond=None)[0]

        def direction(sigma_mu, corr_lin=None, corr=None):
            # constant part of dX before the dy-dependent term
            hx = sigma_mu / s - x - x * rd_lin / s
            if corr_lin is not None:
                hx = hx - corr_lin / s
            H = []
            for j, (X, Zi, R) in enumerate(zip(Xs, Zinv, Rd)):
                Hj = sigma_mu * Zi - X - _sym(X @ R @ Zi)
                if corr is not None:
                    Hj = Hj - _sym(corr[j] @ Zi)
                H.append(Hj)
            rhs = rp - sf.apply(hx, H)
            dy = solveM(rhs)
            dx = hx + (x / s) * (sf.A_lin.T @ dy)
            ds = rd_lin - sf.A_lin.T @ dy
            dXs, dZs = [], []
            for Hj, W, A, R in zip(H, XAZ, sf.A_blocks, Rd):
                dXs.append(_sym(Hj + _sym(np.tensordot(dy, W, axes=1))))
                dZs.append(_sym(R - np.tensordot(dy, A, axes=1)))
            return dx, ds, dy, dXs, dZs

        def steps(dx, ds, dXs, dZs):
            ap = min([_max_step_lin(x, dx)] + [_max_step(X, d) for X, d in zip(Xs, dXs)])
            ad = min([_max_step_lin(s, ds)] + [_max_step(Z, d) for Z, d in zip(Zs, dZs)])
            return ap, ad

        dx, ds, dy, dXs, dZs = direction(0.0)
        ap, ad = steps(dx, ds, dXs, dZs)
        ap, ad = min(1.0, ap), min(1.0, ad)
        gap_aff = (x + ap * dx) @ (s + ad * ds) + sum(
            np.vdot(X + ap * dX, Z + ad * dZ) for X, dX, Z, dZ in zip(Xs, dXs, Zs, dZs))
        sigma = min(1.0, (gap_aff / gap) ** 3) if gap > 0 else 0.0
        dx, ds, dy, dXs, dZs = direction(sigma * mu, corr_lin=dx * ds,
                                         corr=[dX @ dZ for dX, dZ in zip(dXs, dZs)])
        ap, ad = steps(dx, ds, dXs, dZs)
        ap, ad = min(1.0, 0.95 * ap), min(1.0, 0.95 * ad)
        x = x + ap * dx
        Xs = [_sym(X + ap * d) for X, d in zip(Xs, dXs)]
        y = y + ad * dy
        s = s + ad * ds
        Zs = [_sym(Z + ad * d) for Z, d in zip(Zs, dZs)]

    rp = sf.b - sf.apply(x, Xs)
    aty_lin, aty = sf.adjoint(y)
    Rd = [C - Z - a for C, Z, a in zip(sf.C_blocks, Zs, aty)]
    pobj = sf.c_lin @ x + sum(np.vdot(C, X) for C, X in zip(sf.C_blocks, Xs))
    dobj = sf.b @ y
    res = (np.linalg.norm(rp) / bnorm,
           (np.linalg.norm(sf.c_lin - s - aty_lin) + sum(np.linalg.norm(R) for R in Rd)) / cnorm,
           abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj)))
    return PDResult(status, x, Xs, y, s, Zs, float(pobj), float(dobj), it, res)


def solve_lmi(problem: ConicProblem, tol: float = 1e-8, max_iter: int = 100) -> ConicSolution:
    """Solve an LMI-form problem through the dual of the standard form.

    The LMI variables play the role of the dual vector y; this route is used
    as an independent cross-check of the barrier solver.
    """
    from .barrier import BOX, _reduce  # shared equality elimination
    from .problem import MARGIN_BELOW_THRESHOLD, verify_solution

    red = _reduce(problem)
    if red is None:
        return ConicSolution(INFEASIBLE, None, message="inconsistent equality constraints")
    x0, Zb, blocks, E, f, strict = red
    q = Zb.shape[1]
    feas = problem.objective is None
    C_blocks, A_blocks = [], []
    for (G0, T), st in zip(blocks, strict):
        e = problem.margin if (st and not feas) else 0.0
        C = G0 - e * np.eye(G0.shape[0])
        A = -T
        if feas:
            extra = np.eye(G0.shape[0])[None] if st else np.zeros((1,) + G0.shape)
            A = np.concatenate([A, extra])
        C_blocks.append(C)
        A_blocks.append(A)
    nv = q + (1 if feas else 0)
    A_lin = np.hstack([E, np.zeros((E.shape[0], 1))]) if feas else E
    if feas:
        w = np.zeros(nv)
        w[-1] = 1.0
        # keep t bounded: t <= BOX
        A_lin = np.vstack([A_lin, w])
        f = np.append(f, BOX)
    else:
        w = Zb.T @ problem.objective
    sf = StandardForm(b=w, c_lin=f, A_lin=A_lin.T, C_blocks=C_blocks, A_blocks=A_blocks)
    res = solve_standard(sf, tol=tol, max_iter=max_iter)
    if res.status == INFEASIBLE:
        # dual (our LMI side) unbounded would be UNBOUNDED; primal infeasible
        return ConicSolution(UNBOUNDED, None, iterations=res.iterations)
    if res.status == UNBOUNDED:
        return ConicSolution(INFEASIBLE, None, iterations=res.iterations)
    yv = res.y[:q]
    xval = x0 + Zb @ yv
    passed, margin, issues = verify_solution(problem, xval)
    sol = ConicSolution(res.status, xval, achieved_margin=margin,
                        objective_value=float(problem.objective @ xval) if not feas else margin,
                        iterations=res.iterations)
    if res.status != OPTIMAL:
        return sol
    if feas:
        if margin <= 0:
            sol.status, sol.values = INFEASIBLE, None
        elif margin < problem.margin:
            sol.status = MARGIN_BELOW_THRESHOLD
    elif not passed:
        sol.status = MARGIN_BELOW_THRESHOLD
        sol.message = "; ".join(issues)
    return sol

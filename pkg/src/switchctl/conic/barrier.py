"""Primal log-barrier Newton method for small dense LMI problems.

Equalities are eliminated through a nullspace parametrization
``x = x0 + Z y``, so Newton steps run over ``y`` (plus a margin variable ``t``
in phase one and in feasibility mode). A large box on ``y`` keeps every
subproblem bounded.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .problem import (INFEASIBLE, ITERATION_LIMIT, MARGIN_BELOW_THRESHOLD,
                      OPTIMAL, UNBOUNDED, ConicProblem, ConicSolution,
                      verify_solution)

BOX = 1e6
SHRINK = 0.5
ARMIJO = 0.25


class _Block:
    """Oriented matrix constraint ``G0 + sum_i z_i T_i ⪰ 0`` in z-coordinates."""

    def __init__(self, G0, T):
        self.G0 = G0
        self.T = T  # (q, d, d)
        self.d = G0.shape[0]

    def value(self, z):
        return self.G0 + np.tensordot(z, self.T, axes=1)


def _chol(G):
    try:
        return np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return None


class _Barrier:
    """Minimize ``-tau * w@z - sum log det(blocks) - sum log(lin)``."""

    def __init__(self, blocks, E, f, w):
        self.blocks = blocks
        self.E = E  # linear part: f - E z > 0
        self.f = f
        self.w = w
        self.theta = sum(b.d for b in blocks) + f.size

    def phi(self, z, tau):
        val = -tau * (self.w @ z)
        for b in self.blocks:
            L = _chol(b.value(z))
            if L is None:
                return np.inf
            val -= 2.0 * np.sum(np.log(np.diag(L)))
        s = self.f - self.E @ z
        if np.any(s <= 0):
            return np.inf
        return val - np.sum(np.log(s))

    def derivatives(self, z, tau):
        q = z.size
        g = -tau * self.w.copy()
        H = np.zeros((q, q))
        for b in self.blocks:
            L = _chol(b.value(z))
            Linv = sla.solve_triangular(L, np.eye(b.d), lower=True)
            B = Linv @ b.T @ Linv.T
            g -= np.trace(B, axis1=1, axis2=2)
            Bf = B.reshape(q, -1)
            H += Bf @ Bf.T
        s = self.f - self.E @ z
        Es = self.E / s[:, None]
        g += Es.sum(axis=0)
        H += Es.T @ Es
        return g, H

    def center(self, z, tau, max_iter, stop=None):
        """Damped Newton; returns (z, iterations, converged, stopped_early)."""
        for it in range(max_iter):
            g, H = self.derivatives(z, tau)
            try:
                dz = -np.linalg.solve(H + 1e-14 * np.trace(H) / z.size * np.eye(z.size), g)
            except np.linalg.LinAlgError:
                dz = -np.linalg.lstsq(H, g, rcond=None)[0]
            dec2 = -g @ dz
            if dec2 / 2 <= 1e-10:
                return z, it, True, False
            step, f0 = 1.0, self.phi(z, tau)
            while step > 1e-14:
                f1 = self.phi(z + step * dz, tau)
                if f1 <= f0 - ARMIJO * step * dec2:
                    break
                step *= SHRINK
            else:
                return z, it, True, False
            if f0 - f1 <= 1e-14 * max(1.0, abs(f0)):
                # no measurable progress left at double precision
                return z + step * dz, it + 1, True, False
            z = z + step * dz
            if stop is not None and stop(z):
                return z, it + 1, True, True
        return z, max_iter, False, False


def _run(barrier, z, tol, max_iter, mu, stop=None, upper_stop=None):
    """Outer barrier loop. Returns (z, status, iterations)."""
    tau, total = 1.0, 0
    while True:
        z, it, ok, early = barrier.center(z, tau, max_iter, stop)
        total += it
        if early:
            return z, "stopped", total
        if not ok:
            return z, ITERATION_LIMIT, total
        gap = barrier.theta / tau
        if upper_stop is not None and upper_stop(z, gap):
            return z, "bounded_out", total
        if gap < tol * max(1.0, abs(barrier.w @ z)):
            return z, OPTIMAL, total
        tau *= mu


def _reduce(problem: ConicProblem):
    """Eliminate equalities; return (x0, Z, oriented blocks, E, f, strict flags)."""
    k = problem.num_vars
    if problem.A_eq.shape[0]:
        x0 = np.linalg.lstsq(problem.A_eq, problem.b_eq, rcond=None)[0]
        res = np.max(np.abs(problem.A_eq @ x0 - problem.b_eq))
        if res > 1e-9 * (1 + np.max(np.abs(problem.b_eq))):
            return None
        Z = sla.null_space(problem.A_eq)
    else:
        x0, Z = np.zeros(k), np.eye(k)
    q = Z.shape[1]
    blocks, strict = [], []
    for lmi in problem.lmi_constraints:
        s = 1.0 if lmi.sign == ">=" else -1.0
        G0 = s * lmi.evaluate(x0)
        T = np.zeros((q, lmi.dim, lmi.dim))
        for idx, F in lmi.terms:
            T += s * Z[idx][:, None, None] * F[None]
        blocks.append((G0, T))
        strict.append(lmi.strict)
    E = problem.A_ub @ Z
    f = problem.b_ub - problem.A_ub @ x0
    E = np.vstack([E, np.eye(q), -np.eye(q)])
    f = np.concatenate([f, np.full(2 * q, BOX)])
    return x0, Z, blocks, E, f, strict


def _with_t(blocks, shifts, active):
    """Append a margin variable t entering as ``-t I`` in the active blocks."""
    out = []
    for (G0, T), e, on in zip(blocks, shifts, active):
        d = G0.shape[0]
        Tt = np.zeros((1, d, d))
        if on:
            Tt[0] = -np.eye(d)
        out.append(_Block(G0 - e * np.eye(d), np.concatenate([T, Tt])))
    return out


def _min_eig(blocks, y, shifts, active):
    vals = [np.linalg.eigvalsh(G0 + np.tensordot(y, T, axes=1))[0] - e
            for (G0, T), e, on in zip(blocks, shifts, active) if on]
    return min(vals) if vals else np.inf


def solve(problem: ConicProblem, tol: float = 1e-9, max_iter: int = 200,
          mu: float = 20.0) -> ConicSolution:
    """Solve an LMI problem with the barrier method.

    Feasibility mode (``objective is None``) maximizes the common margin of
    the strict LMIs; objective mode maximizes ``objective @ x`` with every
    strict LMI held at ``problem.margin``. ``max_iter`` bounds the Newton
    steps of each centering pass.
    """
    red = _reduce(problem)
    if red is None:
        return ConicSolution(INFEASIBLE, None, message="inconsistent equality constraints")
    x0, Z, blocks, E, f, strict = red
    q = Z.shape[1]
    nlin = f.size
    feas_mode = problem.objective is None
    shifts = [0.0 if (feas_mode or not s) else problem.margin for s in strict]
    Et = np.hstack([E, np.ones((nlin, 1))])

    def pack(y):
        return x0 + Z @ y

    # phase one: push every constraint to slack t
    all_on = [True] * len(blocks)
    y = np.zeros(q)
    lin_slack = np.min(f - E @ y) if nlin else np.inf
    start = min(_min_eig(blocks, y, shifts, all_on), lin_slack)
    t0 = start - 0.1 * (1.0 + abs(start))
    w = np.zeros(q + 1)
    w[-1] = 1.0
    only_strict = all(strict) and problem.A_ub.shape[0] == 0
    phase1 = _Barrier(_with_t(blocks, shifts, all_on), Et, f, w)

    if feas_mode and only_strict:
        z, status, iters = _run(phase1, np.append(y, t0), tol, max_iter, mu)
        return _finish(problem, pack(z[:q]), status, iters, feas_mode, z[:q])

    z, status, iters = _run(phase1, np.append(y, t0), tol, max_iter, mu,
                            stop=lambda z: z[-1] > 0,
                            upper_stop=lambda z, gap: z[-1] + gap < 0)
    if status in (OPTIMAL, "bounded_out"):
        return ConicSolution(INFEASIBLE, None, achieved_margin=float(z[-1]), iterations=iters,
                             message="no strictly feasible point")
    if status == ITERATION_LIMIT:
        return ConicSolution(ITERATION_LIMIT, None, iterations=iters, message="phase one iteration limit")
    y = z[:q]

    if feas_mode:
        # phase two: strict LMIs carry the margin, the rest stay merely feasible
        tstart = _min_eig(blocks, y, shifts, strict)
        tstart -= 1e-3 * (1.0 + abs(tstart))
        E2 = np.hstack([E, np.zeros((nlin, 1))])
        phase2 = _Barrier(_with_t(blocks, shifts, strict), E2, f, w)
        z, status, it2 = _run(phase2, np.append(y, tstart), tol, max_iter, mu)
        return _finish(problem, pack(z[:q]), status, iters + it2, feas_mode, z[:q])

    c = Z.T @ problem.objective
    phase2 = _Barrier([_Block(G0 - e * np.eye(G0.shape[0]), T) for (G0, T), e in zip(blocks, shifts)],
                      E, f, c)
    y, status, it2 = _run(phase2, y, tol, max_iter, mu)
    return _finish(problem, pack(y), status, iters + it2, feas_mode, y)


def _finish(problem, x, status, iters, feas_mode, y):
    passed, margin, issues = verify_solution(problem, x)
    obj = float(problem.objective @ x) if problem.objective is not None else margin
    sol = ConicSolution(status, x, achieved_margin=margin, objective_value=obj, iterations=iters)
    if status == ITERATION_LIMIT:
        sol.message = "centering iteration limit"
        return sol
    if np.max(np.abs(y), initial=0.0) > 0.5 * BOX:
        sol.status = UNBOUNDED
        sol.message = "iterate reached the variable box"
        return sol
    if not passed:
        sol.status = INFEASIBLE if feas_mode and margin <= 0 else ITERATION_LIMIT
        sol.message = "; ".join(issues)
        if feas_mode and margin <= 0:
            sol.values = None
        return sol
    if feas_mode:
        if margin <= 0:
            sol.status, sol.values = INFEASIBLE, None
            sol.message = f"best margin {margin:.3e} is not positive"
        elif margin < problem.margin:
            sol.status = MARGIN_BELOW_THRESHOLD
            sol.message = f"best margin {margin:.3e} below {problem.margin:.1e}"
        else:
            sol.status = OPTIMAL
    else:
        sol.status = OPTIMAL if margin >= problem.margin - 1e-8 else MARGIN_BELOW_THRESHOLD
    return sol

"""Local exponential-rate certificates around a singular equilibrium.

Work happens in the coordinates ``c = W' xi`` where ``v(c) = c' P c``. The
region trade-off scalar beta comes from two families of SOS constraints,
solved as one conic program in ``b = beta**2``; the rate itself comes from an
eigenvalue search over the simplex perturbation size eps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conic
from .conic import ConicProblem, LinearMatrixExpression, StandardForm, solve_standard
from .design import SwitchingLaw
from .errors import DomainError, RankDeficient, SolverError, SosInfeasible
from .polynomial import (Poly, gram_coefficient_maps, gram_polynomial, monomials,
                         multiplier_maps)
from .sysmodel import SimplexVector

ZERO_WEIGHT = 1e-12
BETA_FLOOR = 1e-6  # in normalized units; anything smaller is solver noise
EPS_POINTS = 50


def gamma(lam, eps: float, i: int) -> SimplexVector:
    """``(1 - eps) lam + eps e_i``; negative eps moves away from vertex i."""
    w = lam.weights if isinstance(lam, SimplexVector) else np.asarray(lam, dtype=float)
    out = (1.0 - eps) * w
    out[i] += eps
    if eps > 1.0 or np.any(out < -1e-12):
        raise DomainError(f"gamma(lambda, {eps:g}, {i + 1}) leaves the simplex")
    return SimplexVector(np.clip(out, 0.0, None))


def active_set(lam) -> tuple[int, ...]:
    w = lam.weights if isinstance(lam, SimplexVector) else np.asarray(lam, dtype=float)
    return tuple(int(i) for i in np.flatnonzero(np.abs(w) > ZERO_WEIGHT))


def eps_limit(lam) -> float:
    """Largest eps for which both perturbations stay in the simplex."""
    w = lam.weights if isinstance(lam, SimplexVector) else np.asarray(lam, dtype=float)
    lim = 1.0
    for i in active_set(w):
        if w[i] < 1.0:
            lim = min(lim, w[i] / (1.0 - w[i]))
    return lim


def _decrease_eigs(law: SwitchingLaw, weights):
    A_g = np.tensordot(weights, law.system.A, axes=1)
    X = law.S_bar @ A_g @ law.decomp.V_bar
    return np.linalg.eigvalsh(X + X.T)


def find_rho(law: SwitchingLaw, eps: float) -> float:
    """Common decay margin of the projected block over the perturbed weights.

    The value may be non-positive when eps is too large. A perturbation that
    leaves the simplex raises DomainError.
    """
    lam = law.certificate.lam
    if law.decomp.p == 0:
        return np.inf
    worst = -np.inf
    for i in active_set(lam):
        for s in (eps, -eps):
            worst = max(worst, _decrease_eigs(law, gamma(lam, s, i).weights)[-1])
    return float(-worst)


@dataclass
class GHEvaluators:
    U: np.ndarray  # |Ka|×p×m
    w: np.ndarray  # |Ka|×n, linear parts in c coordinates
    modes: tuple[int, ...]
    law: SwitchingLaw

    def g(self, k: int, xi) -> np.ndarray:
        c = self._c(xi)
        p = self.law.decomp.p
        cb, cp = c[..., :p], c[..., p:]
        return np.einsum("...i,ij,...j->...", cb, self.U[k], cp) + c @ self.w[k]

    def h(self, k: int, xi) -> np.ndarray:
        return 0.5 * (self._c(xi) @ self.w[k]) ** 2

    def _c(self, xi):
        return np.asarray(xi, dtype=float) @ self.law.decomp.W


def g_h_evaluators(law: SwitchingLaw, modes=None) -> GHEvaluators:
    """g_i and h_i for each mode (active modes by default), taking ``xi = x - x_e``."""
    modes = active_set(law.certificate.lam) if modes is None else tuple(modes)
    w = np.array([np.concatenate([law.S_bar @ law.ells[i], law.S_perp @ law.ells[i]]) for i in modes])
    return GHEvaluators(law.U[list(modes)], w, modes, law)


@dataclass
class QuarticGram:
    basis: list
    gram: np.ndarray
    target: Poly
    label: str

    def reconstruction_error(self) -> float:
        nv = self.target.nvars
        return gram_polynomial(self.basis, self.gram, nv).max_abs_diff(self.target)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.gram)[0])


@dataclass
class BetaResult:
    beta: float
    b_normalized: float
    kappa: float
    r: float
    certificates: list = field(default_factory=list)
    status: str = conic.OPTIMAL
    upper_bound: float = np.inf  # on b in normalized units


def _sos_data(law: SwitchingLaw, r: float):
    P = law.certificate.P
    kappa = float(np.linalg.eigvalsh(P)[-1])
    Pn = P / kappa
    ev = g_h_evaluators(law)
    n, p = law.decomp.n, law.decomp.p
    polys = []
    for k in range(len(ev.modes)):
        Un = ev.U[k] / kappa
        wn = ev.w[k] / kappa
        Q = np.zeros((n, n))
        Q[:p, p:] = Un
        g = Poly.quadratic(Q) + Poly.linear(wn)
        lin = Poly.linear(wn)
        h = 0.5 * (lin * lin)
        polys.append((g, h, wn))
    slack = Poly.constant(n, r / kappa) - Poly.quadratic(Pn)
    return kappa, Pn, polys, slack, ev.modes


def _b_cap(Pn, polys, r_hat):
    Pinv = np.linalg.inv(Pn)
    spread = max((wn @ Pinv @ wn for _, _, wn in polys), default=0.0)
    # max over the level set of g^2 is at least r_hat * w' P^-1 w (compare c and -c)
    return 1.0 / (r_hat * spread) if spread > 0 else np.inf


def sos_find_beta(law: SwitchingLaw, r: float, tol: float = 1e-9, max_iter: int = 150,
                  bisection: bool = False) -> BetaResult:
    """Largest beta for which both SOS families hold on ``v <= r``.

    Modes whose g vanishes identically are dropped; if none remain, beta is
    unbounded and the result carries ``status == "unbounded"``.

    Multipliers are quadratic (Gram basis ``[1, c]``). The quartic in the
    first family has no constant or linear part, so its Gram basis starts at
    degree one; the equations for the dropped monomials stay in the program.
    """
    if not r > 0:
        raise ValueError("level r must be positive")
    kappa, Pn, polys, slack, modes = _sos_data(law, r)
    # a mode with g identically zero satisfies both families for every beta
    keep = [k for k, (g, _, _) in enumerate(polys) if max(map(abs, g.terms.values()), default=0.0) > ZERO_WEIGHT]
    polys, modes = [polys[k] for k in keep], tuple(modes[k] for k in keep)
    if not polys:
        return BetaResult(np.inf, np.inf, kappa, r, [], conic.UNBOUNDED)
    n = law.decomp.n
    r_hat = r / kappa
    cap = _b_cap(Pn, polys, r_hat)
    b_max = 2.0 * cap if np.isfinite(cap) else 1e6

    z_mult = monomials(n, (0, 1))
    z_first = monomials(n, (1, 2))
    z_second = monomials(n, (0, 1, 2))
    support = monomials(n, range(5))
    D_first = gram_coefficient_maps(z_first, support)
    D_second = gram_coefficient_maps(z_second, support)
    D_mult = multiplier_maps(z_mult, slack, support)
    S = len(support)

    def program(fixed_b=None):
        rows_b, rhs, blocks = [], [], []
        for g, h, _ in polys:
            g2, h2 = g * g, h * h
            rows_b.append([h2.coeff(mono) for mono in support])
            rhs.append([g2.coeff(mono) for mono in support])
            rows_b.append([g2.coeff(mono) for mono in support])
            rhs.append([1.0 if sum(mono) == 0 else 0.0 for mono in support])
        K = len(polys)
        m_eq = 2 * K * S
        b_vec = np.concatenate(rhs)
        # block order per mode: first Gram, phi, second Gram, psi
        A_blocks, C_blocks = [], []
        for k in range(K):
            for D, row0 in ((D_first, 2 * k), (D_mult, 2 * k), (D_second, 2 * k + 1), (D_mult, 2 * k + 1)):
                A = np.zeros((m_eq, D.shape[1], D.shape[2]))
                A[row0 * S:(row0 + 1) * S] = D
                A_blocks.append(A)
                C_blocks.append(np.zeros(D.shape[1:]))
        coef_b = np.concatenate(rows_b)
        if fixed_b is None:
            # LP part: b >= 0 and its cap slack
            A_lin = np.zeros((m_eq + 1, 2))
            A_lin[:m_eq, 0] = coef_b
            A_lin[m_eq] = [1.0, 1.0]
            b_all = np.append(b_vec, b_max)
            c_lin = np.array([-1.0, 0.0])
            A_blocks = [np.concatenate([A, np.zeros((1,) + A.shape[1:])]) for A in A_blocks]
        else:
            b_all = b_vec - fixed_b * coef_b
            A_lin, c_lin = None, None
        return StandardForm(b=b_all, c_lin=c_lin, A_lin=A_lin, C_blocks=C_blocks, A_blocks=A_blocks)

    def certificates(X, b):
        out = []
        for k, (g, h, _) in enumerate(polys):
            G1, Phi, G2, Psi = X[4 * k:4 * k + 4]
            phi = gram_polynomial(z_mult, Phi, n)
            psi = gram_polynomial(z_mult, Psi, n)
            m = modes[k] + 1
            out.append(QuarticGram(z_first, G1, g * g - b * (h * h) - phi * slack, f"first family, mode {m}"))
            out.append(QuarticGram(z_mult, Phi, phi, f"first multiplier, mode {m}"))
            out.append(QuarticGram(z_second, G2, 1.0 - b * (g * g) - psi * slack, f"second family, mode {m}"))
            out.append(QuarticGram(z_mult, Psi, psi, f"second multiplier, mode {m}"))
        return out

    if not bisection:
        res = solve_standard(program(), tol=tol, max_iter=max_iter)
        if res.status == conic.OPTIMAL:
            b = float(max(res.x[0], 0.0))
            result = BetaResult(np.sqrt(b) / kappa, b, kappa, r, certificates(res.X, b),
                                conic.OPTIMAL, cap)
            return _accept(result)
        if res.status == conic.ITERATION_LIMIT and max(res.residuals) < 1e-6 and res.x[0] < BETA_FLOOR:
            # stalled next to the optimum, which is already below the floor
            raise SosInfeasible(f"largest beta^2 reached is {res.x[0]:.3e} in normalized units "
                                f"(floor {BETA_FLOOR:g}) before the iteration limit")
        # fall through to bisection

    def feasible(b):
        res = solve_standard(program(b), tol=tol, max_iter=max_iter)
        return res if res.status == conic.OPTIMAL and max(res.residuals) < 1e-7 else None

    best = feasible(BETA_FLOOR)
    if best is None:
        raise SosInfeasible(f"no beta^2 >= {BETA_FLOOR:g} (normalized units) is certified at this level")
    # bisect log b between the floor and the cap
    lo, hi, b_best = np.log(BETA_FLOOR), np.log(min(b_max, 1e6)), BETA_FLOOR
    while hi - lo > 1e-4:
        mid = 0.5 * (lo + hi)
        res = feasible(np.exp(mid))
        if res is None:
            hi = mid
        else:
            lo, best, b_best = mid, res, float(np.exp(mid))
    return _accept(BetaResult(np.sqrt(b_best) / kappa, b_best, kappa, r, certificates(best.X, b_best),
                              conic.OPTIMAL, cap))


def _accept(result: BetaResult) -> BetaResult:
    if result.b_normalized < BETA_FLOOR:
        raise SosInfeasible(
            f"largest certified beta^2 is {result.b_normalized:.3e} in normalized units "
            f"(floor {BETA_FLOOR:g}); the sign-definiteness constraint has no positive solution")
    return result


def check_gram_certificates(certs, recon_tol=1e-7, psd_tol=-1e-8) -> list[str]:
    issues = []
    for cert in certs:
        e = cert.reconstruction_error()
        if e > recon_tol:
            issues.append(f"{cert.label}: reconstruction error {e:.3e}")
        lam = cert.min_eigenvalue()
        if lam < psd_tol:
            issues.append(f"{cert.label}: min eigenvalue {lam:.3e}")
    return issues


def sample_level_set(P, r, count, rng):
    """Uniform samples of ``{c : c' P c <= r}``."""
    n = P.shape[0]
    L = np.linalg.cholesky(P)
    u = rng.normal(size=(count, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rad = rng.uniform(size=(count, 1)) ** (1.0 / n)
    y = u * rad * np.sqrt(r)
    return np.linalg.solve(L.T, y.T).T


def sampled_soundness(law: SwitchingLaw, r: float, beta: float, count=1000, rng=None, tol=1e-6):
    """Fraction of level-set samples obeying ``beta h_i <= |g_i| <= 1/beta``."""
    rng = np.random.default_rng(0) if rng is None else rng
    C = sample_level_set(law.certificate.P, r, count, rng)
    xi = C @ law.decomp.W.T
    ev = g_h_evaluators(law)
    ok = np.ones(count, dtype=bool)
    for k in range(len(ev.modes)):
        g = np.abs(ev.g(k, xi))
        h = ev.h(k, xi)
        ok &= (g >= beta * h - tol) & (g <= 1.0 / beta + tol)
    return float(ok.mean())


@dataclass
class RateCertificate:
    alpha: float
    eps: float
    rho: float
    beta: float
    r: float
    Q: np.ndarray
    status: str
    gram: list = field(default_factory=list)
    weights: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "epsilon": self.eps, "rho": self.rho, "beta": self.beta,
                "r": self.r, "Q_eigenvalues": np.linalg.eigvalsh(self.Q).tolist(),
                "status": self.status,
                "gram_digest": [{"label": g.label, "min_eig": g.min_eigenvalue(),
                                 "reconstruction_error": g.reconstruction_error()} for g in self.gram]}


def residual_matrix(law: SwitchingLaw):
    modes = active_set(law.certificate.lam)
    return law.ells[list(modes)].T, modes


def check_rank(law: SwitchingLaw) -> int:
    L, _ = residual_matrix(law)
    ML = law.M @ L
    s = np.linalg.svd(ML, compute_uv=False)
    return int(np.sum(s > 1e-9 * max(1.0, s[0] if s.size else 0.0)))


def q_matrix(law: SwitchingLaw, eps, rho, beta, weights=None, G=None):
    L, modes = residual_matrix(law)
    WL = np.vstack([law.S_bar @ L, law.S_perp @ L])
    k = len(modes)
    wts = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=float)
    n, p = law.decomp.n, law.decomp.p
    Q = (WL * (eps * beta * wts)) @ WL.T
    Q[:p, :p] += rho * np.eye(p) if G is None else G
    return 0.5 * (Q + Q.T)


def eps_grid(lam, points=EPS_POINTS):
    top = eps_limit(lam)
    return np.linspace(top / points, top, points)


def _refine(grid, best_idx, points=EPS_POINTS):
    lo = grid[max(best_idx - 1, 0)]
    hi = grid[min(best_idx + 1, len(grid) - 1)]
    return np.linspace(lo, hi, points)


def _alpha_at(law, eps, beta, smax, weights=None, general_G=False):
    rho = find_rho(law, eps)
    if not rho > 0:
        return None
    G = _general_G(law, eps, beta, weights) if general_G else None
    Q = q_matrix(law, eps, rho, beta, weights, G)
    alpha = float(np.linalg.svd(Q, compute_uv=False)[-1] / smax)
    return alpha, rho, Q


def _general_G(law, eps, beta, weights):
    """Matrix G maximizing s_min(Q) subject to the perturbed decrease LMIs."""
    p = law.decomp.p
    lam = law.certificate.lam
    basis = conic.sym_basis(p)
    nv = len(basis) + 1
    lmis = []
    for i in active_set(lam):
        for s in (eps, -eps):
            A_g = np.tensordot(gamma(lam, s, i).weights, law.system.A, axes=1)
            X = law.S_bar @ A_g @ law.decomp.V_bar
            lmis.append(LinearMatrixExpression(X + X.T, [(k, E) for k, E in enumerate(basis)],
                                               "<=", strict=False))
    Q0 = q_matrix(law, eps, 0.0, beta, weights)
    n = law.decomp.n
    terms = []
    for k, E in enumerate(basis):
        F = np.zeros((n, n))
        F[:p, :p] = E
        terms.append((k, F))
    terms.append((nv - 1, -np.eye(n)))
    lmis.append(LinearMatrixExpression(Q0, terms, ">=", strict=False))
    lmis.append(LinearMatrixExpression(np.zeros((p, p)), [(k, E) for k, E in enumerate(basis)],
                                       ">=", strict=False))
    obj = np.zeros(nv)
    obj[-1] = 1.0
    sol = conic.solve(ConicProblem(nv, lmis, objective=obj))
    if sol.values is None:
        raise SolverError(f"general G search failed: {sol.status}")
    return conic.sym_from_vector(sol.values[:-1], p)


def certify_rate(law: SwitchingLaw, r: float, eps_candidates=None, beta: float | None = None,
                 weights=None, general_G: bool = False, refine: bool = True) -> RateCertificate:
    """Best rate over an eps grid at level r.

    ``beta`` defaults to the SOS-certified value; passing it explicitly skips
    the SOS step, and the status then says the region is not certified.
    """
    m = law.decomp.m
    if check_rank(law) != m:
        raise RankDeficient(f"rank(M L) = {check_rank(law)} < m = {m}")
    gram, status = [], "certified"
    if beta is None:
        res = sos_find_beta(law, r)
        beta, gram = res.beta, res.certificates
    else:
        status = "beta supplied, region not certified"
    if not beta > 0:
        raise ValueError("beta must be positive")
    lam = law.certificate.lam
    smax = float(np.linalg.eigvalsh(law.certificate.P)[-1])
    grid = eps_grid(lam) if eps_candidates is None else np.asarray(eps_candidates, dtype=float)
    best = _search(law, grid, beta, smax, weights, general_G)
    if best is None:
        raise RankDeficient("no eps on the grid gives a positive decay margin")
    if refine and eps_candidates is None:
        idx = int(np.argmin(np.abs(grid - best[0])))
        fine = _search(law, _refine(grid, idx), beta, smax, weights, general_G)
        if fine is not None and fine[1] > best[1]:
            best = fine
    eps, alpha, rho, Q = best
    return RateCertificate(alpha, eps, rho, beta, r, Q, status, gram,
                           None if weights is None else np.asarray(weights, dtype=float))


def _search(law, grid, beta, smax, weights, general_G):
    best = None
    for eps in grid:
        try:
            out = _alpha_at(law, eps, beta, smax, weights, general_G)
        except DomainError:
            continue
        if out is None:
            continue
        alpha, rho, Q = out
        if best is None or alpha > best[1]:
            best = (float(eps), alpha, rho, Q)
    return best


def rate_curve(law: SwitchingLaw, radii, beta: float | None = None):
    """alpha over squared ball radii R, with levels ``r = R * s_max(P)``.

    Every level is evaluated on the same eps candidates (the base grid plus
    the refinements of all levels), so the curve inherits the monotonicity
    of beta.
    """
    smax = float(np.linalg.eigvalsh(law.certificate.P)[-1])
    levels = [float(R) * smax for R in radii]
    betas = []
    for r in levels:
        betas.append(beta if beta is not None else sos_find_beta(law, r).beta)
    grid = eps_grid(law.certificate.lam)
    cands = [grid]
    for b in betas:
        best = _search(law, grid, b, smax, None, False)
        if best is not None:
            cands.append(_refine(grid, int(np.argmin(np.abs(grid - best[0])))))
    union = np.unique(np.concatenate(cands))
    rows = []
    for R, r, b in zip(radii, levels, betas):
        cert = certify_rate(law, r, eps_candidates=union, beta=b, refine=False)
        if beta is None:
            cert.status = "certified"
        rows.append((float(R), r, b, cert.eps, cert.alpha))
    return rows

"""Nullspace bases, the defective-zero test, singular equilibria and the
interior condition on the projected affine terms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import ConicProblem, solve_lp
from .errors import AssumptionViolated, NoEquilibrium, NotSingular
from .sysmodel import SimplexVector, SwitchedAffineSystem, convex_combination

RANK_TOL = 1e-9
INTERIOR_TOL = 1e-7


@dataclass(frozen=True)
class NullspaceDecomposition:
    V_perp: np.ndarray  # n×m, spans ker A_lam
    V_bar: np.ndarray  # n×p, spans the orthogonal complement
    m: int
    rank_tol: float

    @property
    def n(self) -> int:
        return self.V_perp.shape[0]

    @property
    def p(self) -> int:
        return self.n - self.m

    @property
    def W(self) -> np.ndarray:
        """Orthogonal change of coordinates ``[V_bar V_perp]``."""
        return np.hstack([self.V_bar, self.V_perp])


def _sign_fix(V):
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        mags = np.abs(col)
        i = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-12))[0])
        if col[i] < 0:
            V[:, j] = -col
    return V


def _canonical_basis(Q):
    """Orthonormal basis of span(Q) built from projected unit vectors.

    At each step the unit vector whose projection keeps the largest norm is
    taken (lowest index on ties), so coordinate subspaces get unit columns.
    """
    n, k = Q.shape
    if k == 0:
        return np.zeros((n, 0))
    proj = Q @ Q.T
    basis = []
    for _ in range(k):
        cand = proj.copy()
        if basis:
            B = np.array(basis).T
            cand -= B @ (B.T @ cand)
        norms = np.linalg.norm(cand, axis=0)
        j = int(np.flatnonzero(norms >= norms.max() * (1 - 1e-9))[0])
        v = cand[:, j] / norms[j]
        if basis:
            B = np.array(basis).T
            v -= B @ (B.T @ v)
            v /= np.linalg.norm(v)
        basis.append(v)
    return np.array(basis).T


def nullspace_decomposition(A_lam, rank_tol: float = RANK_TOL) -> NullspaceDecomposition:
    """Split R^n into ker A_lam and its orthogonal complement via the SVD.

    Singular values at or below ``n * rank_tol * s_max`` count as zero.
    """
    A = np.asarray(A_lam, dtype=float)
    n = A.shape[0]
    U, svals, Vt = np.linalg.svd(A)
    smax = svals[0] if svals.size else 0.0
    thresh = n * rank_tol * smax
    rank = int(np.sum(svals > thresh)) if smax > 0 else 0
    m = n - rank
    if m == 0:
        raise NotSingular(f"not a singular combination: smallest singular value {svals[-1]:.3e} "
                          f"exceeds threshold {thresh:.3e}")
    V_perp = _sign_fix(_canonical_basis(Vt[rank:].T))
    V_bar = _sign_fix(_canonical_basis(Vt[:rank].T))
    return NullspaceDecomposition(V_perp, V_bar, m, rank_tol)


def projected_block(A_lam, decomp: NullspaceDecomposition) -> np.ndarray:
    return decomp.V_bar.T @ A_lam @ decomp.V_bar


def check_zero_defective(A_lam, decomp: NullspaceDecomposition) -> bool:
    """True when zero is a defective eigenvalue of A_lam.

    Equivalent to the projected block ``V_bar' A V_bar`` being singular.
    """
    if decomp.p == 0:
        return False
    B = projected_block(np.asarray(A_lam, dtype=float), decomp)
    s = np.linalg.svd(B, compute_uv=False)
    scale = np.linalg.norm(A_lam, 2)
    return bool(s[-1] <= decomp.n * decomp.rank_tol * max(scale, np.finfo(float).tiny))


def defective_oracle(A, tol: float = RANK_TOL) -> bool:
    """rank(A^2) < rank(A), computed independently of any basis."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]

    def rank(X, ref):
        s = np.linalg.svd(X, compute_uv=False)
        return int(np.sum(s > n * tol * ref))

    ref = np.linalg.norm(A, 2)
    return rank(A @ A, ref * ref) < rank(A, ref)


@dataclass(frozen=True)
class EquilibriumSpec:
    lam: SimplexVector
    x_e: np.ndarray
    x_bar: np.ndarray
    x_perp: np.ndarray
    residual: float
    decomp: NullspaceDecomposition


def solve_equilibrium(sys: SwitchedAffineSystem, lam, x_perp=None,
                      rank_tol: float = RANK_TOL) -> EquilibriumSpec:
    """Singular equilibrium ``x_e = V_bar x_bar + V_perp x_perp`` for lam.

    ``x_bar`` solves ``A_lam V_bar x_bar = -b_lam`` in the least-squares
    sense; the solution is accepted only if the residual vanishes.
    """
    lam = lam if isinstance(lam, SimplexVector) else SimplexVector(lam)
    A_lam, b_lam = convex_combination(sys, lam)
    decomp = nullspace_decomposition(A_lam, rank_tol)
    if check_zero_defective(A_lam, decomp):
        raise AssumptionViolated("zero is a defective eigenvalue of A_lambda")
    x_perp = np.zeros(decomp.m) if x_perp is None else np.atleast_1d(np.asarray(x_perp, dtype=float))
    if x_perp.shape != (decomp.m,):
        raise ValueError(f"x_perp must have length m={decomp.m}")
    G = A_lam @ decomp.V_bar
    x_bar = np.linalg.lstsq(G, -b_lam, rcond=None)[0] if decomp.p else np.zeros(0)
    residual = float(np.max(np.abs(G @ x_bar + b_lam), initial=0.0))
    tol = 1e-7 * (1.0 + np.linalg.norm(b_lam))
    if residual > tol:
        raise NoEquilibrium(f"lambda admits no equilibrium: residual {residual:.3e} > {tol:.3e}")
    x_e = decomp.V_bar @ x_bar + decomp.V_perp @ x_perp
    return EquilibriumSpec(lam, x_e, x_bar, x_perp, residual, decomp)


def correction_gain(A_lam, decomp: NullspaceDecomposition) -> np.ndarray:
    """``V_perp' A V_bar (V_bar' A V_bar)^-1`` (m×p)."""
    B = projected_block(A_lam, decomp)
    C = decomp.V_perp.T @ A_lam @ decomp.V_bar
    if decomp.p == 0:
        return np.zeros((decomp.m, 0))
    if check_zero_defective(A_lam, decomp):
        raise AssumptionViolated("projected block V_bar' A V_bar is singular")
    return np.linalg.solve(B.T, C.T).T


def compute_M(A_lam, decomp: NullspaceDecomposition) -> np.ndarray:
    """``M = V_perp' - K V_bar'`` with K from :func:`correction_gain`.

    M annihilates the range of A_lam restricted to the complement and is the
    identity on the nullspace.
    """
    K = correction_gain(np.asarray(A_lam, dtype=float), decomp)
    return decomp.V_perp.T - K @ decomp.V_bar.T


def residual_terms(sys: SwitchedAffineSystem, x_e) -> np.ndarray:
    """Rows ``l_i = A_i x_e + b_i``."""
    return sys.A @ np.asarray(x_e, dtype=float) + sys.b


def detect_shared_subset(sys: SwitchedAffineSystem, decomp: NullspaceDecomposition,
                         tol: float = 1e-9) -> tuple[int, ...]:
    scale = 1.0 + max(np.max(np.abs(Ai)) for Ai in sys.A)
    return tuple(i for i in range(sys.N)
                 if np.max(np.abs(sys.A[i] @ decomp.V_perp), initial=0.0) <= tol * scale)


@dataclass(frozen=True)
class InteriorCertificate:
    mu: np.ndarray  # full length N, zero outside subset
    margin: float
    rank_ML: int
    subset: tuple[int, ...]
    valid: bool
    reason: str = ""


def check_interior_condition(M, ells, subset=None, tol: float = INTERIOR_TOL) -> InteriorCertificate:
    """Is the origin interior to conv{M l_i : i in subset}?

    Solved as the LP ``max t`` s.t. ``sum mu_i M l_i = 0``, ``sum mu_i = 1``,
    ``mu_i >= t``; valid when ``t >= tol`` and the vectors span R^m.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    ells = np.asarray(ells, dtype=float)
    N = ells.shape[0]
    subset = tuple(range(N)) if subset is None else tuple(sorted(subset))
    if not subset:
        raise ValueError("subset must be non-empty")
    ML = M @ ells[list(subset)].T  # m × k
    m, k = ML.shape
    sv = np.linalg.svd(ML, compute_uv=False)
    rank = int(np.sum(sv > 1e-9 * max(1.0, sv[0] if sv.size else 0.0)))

    # variables (mu_1..mu_k, t), mu >= 0, t >= 0
    A_eq = np.vstack([np.hstack([ML, np.zeros((m, 1))]), np.append(np.ones(k), 0.0)])
    b_eq = np.append(np.zeros(m), 1.0)
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    obj = np.zeros(k + 1)
    obj[-1] = 1.0
    # normalize the rows so the LP tolerance is scale free
    scale = np.maximum(np.abs(ML).max(axis=1, initial=0.0), 1e-300)[:, None]
    A_eq[:m, :k] = ML / scale
    sol = solve_lp(ConicProblem(k + 1, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=np.zeros(k),
                                objective=obj, lower_bounds=np.zeros(k + 1)))
    mu = np.zeros(N)
    if not sol.ok:
        return InteriorCertificate(mu, -np.inf, rank, subset, False, "origin outside the hull")
    mu[list(subset)] = sol.values[:k]
    margin = float(sol.values[:k].min())
    valid = margin >= tol and rank == m
    reason = "" if valid else ("rank deficient" if rank != m else f"margin {margin:.3e} below {tol:.1e}")
    return InteriorCertificate(mu, margin, rank, subset, valid, reason)


@dataclass(frozen=True)
class SpeedDiagnostic:
    triggered: bool
    ell_bar: float
    message: str


def diagnose_no_global_exponential(ells, decomp: NullspaceDecomposition,
                                   tol: float = 1e-9) -> SpeedDiagnostic:
    """Flag systems whose affine terms all lie in the shared nullspace.

    Then trajectories started in the nullspace move no faster than
    ``max_i ||l_i||``, so no global exponential rate can exist.
    """
    ells = np.asarray(ells, dtype=float)
    norms = np.linalg.norm(ells, axis=1)
    ell_bar = float(norms.max(initial=0.0))
    comp = np.linalg.norm(ells @ decomp.V_bar, axis=1) if decomp.p else np.zeros(len(ells))
    triggered = bool(np.all(comp <= tol * (1.0 + ell_bar)))
    msg = (f"state speed inside the nullspace is bounded by {ell_bar:g}; no global exponential rate"
           if triggered else "affine terms leave the nullspace")
    return SpeedDiagnostic(triggered, ell_bar, msg)

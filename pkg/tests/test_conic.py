import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from switchctl import conic
from switchctl.conic import (ConicProblem, LinearMatrixExpression, StandardForm,
                             min_condition_number, solve, solve_lp, solve_standard,
                             sym_basis, sym_from_vector, verify_solution)
from switchctl.conic.external import available as cvxpy_available
from switchctl.design import synthesis_lmis
from switchctl.equilibria import nullspace_decomposition
from switchctl.fixtures import example2_system
from switchctl.sysmodel import SimplexVector, convex_combination

ALL = ["barrier", "primal-dual"] + (["cvxpy"] if cvxpy_available() else [])
# the external first-order solver is only accurate to a few digits
TOL = {"barrier": 1e-6, "primal-dual": 1e-6, "cvxpy": 1e-4}


def two_by_two():
    lmi = LinearMatrixExpression([[0.0, 1.0], [1.0, 0.0]], [(0, np.eye(2))], ">=")
    return ConicProblem(1, [lmi], A_ub=[[1.0]], b_ub=[2.0])


@pytest.mark.parametrize("backend", ALL)
def test_margin_two_by_two(backend):
    sol = solve(two_by_two(), backend=backend)
    assert sol.ok
    assert sol.values[0] == pytest.approx(2.0, abs=TOL[backend])
    assert sol.achieved_margin == pytest.approx(1.0, abs=TOL[backend])


@pytest.mark.parametrize("backend", ["barrier", "primal-dual"])
def test_negative_constant_infeasible(backend):
    lmi = LinearMatrixExpression(-np.eye(2), [], ">=", strict=False)
    pad = LinearMatrixExpression(np.zeros((1, 1)), [(0, [[1.0]])], ">=", strict=False)
    sol = solve(ConicProblem(1, [lmi, pad]), backend=backend)
    assert sol.status == conic.INFEASIBLE


def test_example1_synthesis_problem():
    A = np.diag([0.0, -1 / 3])
    d = nullspace_decomposition(A)
    V, lmis, _ = synthesis_lmis(A, d)
    ceiling = LinearMatrixExpression(-np.eye(2), [(k, F) for k, F in _p_terms(lmis)], "<=", strict=False)
    sol = solve(ConicProblem(V.count, lmis + [ceiling]))
    assert sol.ok and sol.achieved_margin > 0
    P_bar, P_perp = V.blocks(sol.values)
    assert P_bar.item() > 0 and P_perp.item() > 0


def _p_terms(lmis):
    return next(l for l in lmis if l.name == "positivity").terms


def test_returned_solutions_verify():
    sol = solve(two_by_two())
    ok, margin, issues = verify_solution(two_by_two(), sol.values)
    assert ok and not issues
    assert margin >= sol.achieved_margin - 1e-8


def test_objective_mode_keeps_margin():
    # maximize y subject to [[1 - y, 0], [0, 1]] ⪰ margin
    lmi = LinearMatrixExpression(np.eye(2), [(0, np.diag([-1.0, 0.0]))], ">=")
    sol = solve(ConicProblem(1, [lmi], objective=[1.0], margin=1e-6))
    assert sol.ok
    assert sol.values[0] == pytest.approx(1.0 - 1e-6, abs=1e-6)
    assert lmi.slack(sol.values) >= 1e-6 - 1e-8


def test_adding_constraint_never_raises_margin():
    base = two_by_two()
    sol1 = solve(base)
    extra = LinearMatrixExpression([[1.5]], [(0, [[-0.5]])], ">=")
    tighter = ConicProblem(1, base.lmi_constraints + [extra], A_ub=base.A_ub, b_ub=base.b_ub)
    sol2 = solve(tighter)
    assert sol2.achieved_margin <= sol1.achieved_margin + 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(2, 4))
def test_random_feasible_problems(seed, k, d):
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-5, 5, size=k)
    lmis = []
    for _ in range(2):
        terms = []
        for j in range(k):
            F = rng.normal(size=(d, d))
            terms.append((j, F + F.T))
        shift = sum(x0[j] * F for j, F in terms)
        # x0 leaves slack exactly 1
        lmis.append(LinearMatrixExpression(np.eye(d) - shift, terms, ">="))
    units = [np.diag(np.eye(k)[j]) for j in range(k)]
    lmis.append(LinearMatrixExpression(10 * np.eye(k), [(j, -E) for j, E in enumerate(units)],
                                       ">=", strict=False))
    lmis.append(LinearMatrixExpression(10 * np.eye(k), [(j, E) for j, E in enumerate(units)],
                                       ">=", strict=False))
    prob = ConicProblem(k, lmis)
    sol = solve(prob)
    assert sol.ok
    ok, margin, _ = verify_solution(prob, sol.values)
    assert ok and margin >= 1.0 - 1e-6


def test_lp_symmetric_optimum():
    # variables mu1, mu2, t; maximize t
    prob = ConicProblem(3, A_eq=[[1, 1, 0], [-1, 1, 0]], b_eq=[1, 0],
                        A_ub=[[-1, 0, 1], [0, -1, 1]], b_ub=[0, 0],
                        objective=[0, 0, 1], lower_bounds=[0, 0, 0])
    sol = solve_lp(prob)
    assert sol.ok
    np.testing.assert_allclose(sol.values, [0.5, 0.5, 0.5], atol=1e-10)


def test_lp_infeasible():
    prob = ConicProblem(2, A_eq=[[1, 1], [1, 1]], b_eq=[1, 2], objective=[1, 0],
                        lower_bounds=[0, 0])
    assert solve_lp(prob).status == conic.INFEASIBLE


def test_lp_single_variable():
    prob = ConicProblem(2, A_eq=[[1, 0]], b_eq=[1], A_ub=[[-1, 1]], b_ub=[0],
                        objective=[0, 1], lower_bounds=[0, 0])
    sol = solve_lp(prob)
    assert sol.ok and sol.values[1] == pytest.approx(1.0, abs=1e-10)


def test_lp_unbounded():
    prob = ConicProblem(1, A_ub=[[-1.0]], b_ub=[0.0], objective=[1.0], lower_bounds=[0.0])
    assert solve_lp(prob).status == conic.UNBOUNDED


def test_min_condition_floor_only():
    d = 2
    basis = sym_basis(d)
    p_map = dict(enumerate(basis))
    sol = min_condition_number([], list(p_map), p_map.__getitem__, 1e-3, len(basis))
    assert sol.ok
    P = sym_from_vector(sol.values[:-1], d)
    assert sol.extras["condition_bound"] == pytest.approx(1.0, abs=1e-5)
    np.testing.assert_allclose(P, 1e-3 * np.eye(d), atol=1e-8)


def test_min_condition_binding_constraint():
    # force P[0,0] >= 2 * P[1,1] through an extra LMI
    d = 2
    basis = sym_basis(d)
    p_map = dict(enumerate(basis))
    extra = LinearMatrixExpression(np.zeros((1, 1)), [(0, [[1.0]]), (2, [[-2.0]])], ">=", strict=False)
    sol = min_condition_number([extra], list(p_map), p_map.__getitem__, 1e-3, len(basis))
    assert sol.ok and sol.extras["condition_bound"] > 1.5
    P = sym_from_vector(sol.values[:-1], d)
    ev = np.linalg.eigvalsh(P)
    assert ev[-1] / ev[0] <= sol.extras["condition_bound"] + 1e-6


def test_primal_dual_standard_lp():
    # min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0
    sf = StandardForm(b=[1.0], c_lin=[1.0, 2.0], A_lin=[[1.0, 1.0]])
    res = solve_standard(sf)
    assert res.status == conic.OPTIMAL
    np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-7)


def test_primal_dual_small_sdp():
    # min <C, X> s.t. trace X = 1, X ⪰ 0 → smallest eigenvalue of C
    C = np.array([[2.0, 1.0], [1.0, 3.0]])
    sf = StandardForm(b=[1.0], C_blocks=[C], A_blocks=[np.eye(2)[None]])
    res = solve_standard(sf)
    assert res.status == conic.OPTIMAL
    assert res.primal_objective == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-7)


@pytest.mark.parametrize("backend", ALL[1:])
def test_backends_agree_on_synthesis_problem(backend):
    A, _ = convex_combination(example2_system(), SimplexVector.uniform(3))
    d = nullspace_decomposition(A)
    V, lmis, _ = synthesis_lmis(A, d)
    ceiling = LinearMatrixExpression(-np.eye(3), _p_terms(lmis), "<=", strict=False)
    prob = ConicProblem(V.count, lmis + [ceiling])
    ref = solve(prob, backend="barrier")
    other = solve(prob, backend=backend)
    assert ref.ok and other.ok
    assert other.achieved_margin == pytest.approx(ref.achieved_margin, rel=1e-4, abs=TOL[backend])


def test_invalid_terms_rejected():
    with pytest.raises(ValueError):
        LinearMatrixExpression(np.eye(2), [(0, [[0.0, 1.0], [0.0, 0.0]])])
    with pytest.raises(ValueError):
        ConicProblem(1, [LinearMatrixExpression(np.eye(2), [(3, np.eye(2))])])
    with pytest.raises(ValueError):
        ConicProblem(1)


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve(two_by_two(), backend="nope")

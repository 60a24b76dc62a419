import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from switchctl.design import (certificate_from_blocks, design_switching, f_values,
                              f_values_gradient, law_report, lyapunov_value, select_mode,
                              verify_certificate)
from switchctl.errors import (AssumptionViolated, InteriorConditionFailed, LmiInfeasible,
                              NoEquilibrium, ParticularNullspaceUnsupported)
from switchctl.fixtures import DEMOS
from switchctl.sysmodel import SimplexVector, SwitchedAffineSystem

PAIR = SimplexVector([0.5, 0.5])


def test_example1_design_succeeds(fx):
    f = fx["example1"]
    law = design_switching(f.system, f.lam, x_e=[0.0, 0.0])
    assert verify_certificate(law).passed
    assert law.certificate.margins["decrease"] > 0


def test_example1_published_pair_is_admissible(example1_law):
    rep = verify_certificate(example1_law)
    assert rep.passed, rep.failures()
    assert rep.decrease_block.item() == pytest.approx(-1.0, abs=1e-12)
    np.testing.assert_allclose(rep.positivity_eigenvalues, [1.0, 1.5], atol=1e-12)


@pytest.mark.parametrize("name", DEMOS)
def test_fixtures_design(designed, name):
    assert verify_certificate(designed[name]).passed


def test_motor_position_published_certificate(fx):
    f = fx["motor-position"]
    law = certificate_from_blocks(f.system, f.lam, f.P_bar, f.P_perp, f.x_perp)
    assert verify_certificate(law).passed
    assert law.certificate.P_perp.item() == pytest.approx(2.0007)


def test_motor_velocity_published_certificate(fx):
    f = fx["motor-velocity"]
    law = certificate_from_blocks(f.system, f.lam, f.P_bar, f.P_perp, f.x_perp)
    rep = verify_certificate(law)
    assert rep.passed, rep.failures()


def test_example2_published_certificate(example2_law):
    assert verify_certificate(example2_law).passed


def test_defective_combination():
    J = np.array([[0.0, 1.0], [0.0, 0.0]])
    sys = SwitchedAffineSystem([J, J], [[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(AssumptionViolated):
        design_switching(sys, PAIR)


def test_no_equilibrium():
    A = np.diag([0.0, -1.0])
    sys = SwitchedAffineSystem([A, A], [[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(NoEquilibrium):
        design_switching(sys, PAIR)


def test_interior_condition_failure():
    A = np.diag([0.0, -1.0])
    sys = SwitchedAffineSystem([A, A, A], [[1.0, 0.0], [2.0, 0.0], [0.0, 0.0]])
    with pytest.raises(InteriorConditionFailed):
        design_switching(sys, SimplexVector.vertex(3, 2))


def test_particular_nullspace():
    sys = SwitchedAffineSystem([np.diag([1.0, -1.0]), np.diag([-1.0, -1.0])], [[0, 0], [0, 0]])
    with pytest.raises(ParticularNullspaceUnsupported):
        design_switching(sys, PAIR)


def test_unstable_row_block_is_infeasible():
    A = np.diag([0.0, 1.0])
    sys = SwitchedAffineSystem([A, A], [[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(LmiInfeasible):
        design_switching(sys, PAIR)


def test_hypothesis_names():
    J = np.array([[0.0, 1.0], [0.0, 0.0]])
    sys = SwitchedAffineSystem([J, J], [[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(AssumptionViolated) as info:
        design_switching(sys, PAIR)
    assert info.value.hypothesis == "AssumptionViolated"


def test_verify_rejects_indefinite(fx):
    f = fx["example1"]
    law = certificate_from_blocks(f.system, f.lam, [[-1.0]], [[1.0]], f.x_perp)
    rep = verify_certificate(law)
    assert not rep.checks["positivity_lmi"]["passed"]
    assert not rep.passed


def test_lyapunov_values(example1_law):
    assert lyapunov_value(example1_law, [0.0, 0.0]) == 0.0
    assert lyapunov_value(example1_law, [1.0, 1.0]) == pytest.approx(2.5, abs=1e-14)
    x = np.array([0.3, -0.7])
    assert lyapunov_value(example1_law, 2 * x) == pytest.approx(4 * lyapunov_value(example1_law, x))


def test_f_values_examples(example1_law):
    np.testing.assert_allclose(f_values(example1_law, [0.0, 0.0]), 0.0, atol=1e-15)
    # grad v = (2, 0) and the first entries of A_i xi + l_i are (-1, 1, 0)
    np.testing.assert_allclose(f_values(example1_law, [1.0, 0.0]), [-2.0, 2.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(f_values_gradient(example1_law, [1.0, 0.0]), [-2.0, 2.0, 0.0], atol=1e-14)


def test_f_convex_identity(example2_law, rng):
    lam = example2_law.certificate.lam.weights
    for _ in range(20):
        x = example2_law.x_e + rng.normal(size=3)
        xi = x - example2_law.x_e
        grad = 2 * example2_law.certificate.P_state @ xi
        A_lam = np.tensordot(lam, example2_law.system.A, axes=1)
        ell_lam = lam @ example2_law.ells
        assert lam @ f_values(example2_law, x) == pytest.approx(grad @ (A_lam @ xi + ell_lam), abs=1e-10)


def test_select_mode_examples(example1_law):
    assert select_mode(example1_law, [1.0, 0.0]) == 0
    assert select_mode(example1_law, [0.0, 0.0], prev_mode=1) == 1
    assert select_mode(example1_law, [-1.0, 0.0]) == 1
    assert select_mode(example1_law, [0.0, 0.0]) == 0


def _all_laws(designed, example1_law, example2_law):
    return list(designed.values()) + [example1_law, example2_law]


def test_f_values_match_gradient_oracle(designed, example1_law, example2_law, rng):
    laws = _all_laws(designed, example1_law, example2_law)
    for k in range(1000):
        law = laws[k % len(laws)]
        scale = 10.0 ** rng.uniform(-3, 2)
        x = law.x_e + scale * rng.normal(size=law.system.n)
        f = f_values(law, x)
        ref = f_values_gradient(law, x)
        assert np.all(np.abs(f - ref) <= 1e-9 * (1 + np.abs(ref)) + 1e-9 * np.abs(ref).max()), (k, f, ref)


def test_decrease_along_law(designed, rng):
    for law in designed.values():
        lam = law.certificate.lam.weights
        d = law.decomp
        for _ in range(200):
            xi = rng.normal(size=law.system.n)
            f = f_values(law, law.x_e + xi)
            f_lam = lam @ f
            xb = d.V_bar.T @ xi
            quad = 2 * xb @ law.S_bar @ np.tensordot(lam, law.system.A, axes=1) @ d.V_bar @ xb
            assert f_lam == pytest.approx(quad, rel=1e-8, abs=1e-8 * (1 + abs(quad)))
            assert f.min() <= f_lam + 1e-12 * (1 + abs(f_lam))
            assert f_lam < 0


def test_nullspace_directions_decrease(designed, rng):
    for law in designed.values():
        d = law.decomp
        for _ in range(50):
            xi = d.V_perp @ rng.normal(size=d.m)
            assert f_values(law, law.x_e + xi).min() < 0


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_select_mode_scale_invariant(scale, seed):
    from switchctl.fixtures import load
    f = load("example2")
    base = certificate_from_blocks(f.system, f.lam, f.P_bar, f.P_perp)
    scaled = certificate_from_blocks(f.system, f.lam, scale * f.P_bar, scale * f.P_perp)
    x = base.x_e + np.random.default_rng(seed).normal(size=3)
    assert select_mode(base, x) == select_mode(scaled, x)


def test_min_condition_example2(fx):
    f = fx["example2"]
    law = design_switching(f.system, f.lam, f.x_perp, objective="min_condition", floor=1e-3)
    P = law.certificate.P
    P_paper = certificate_from_blocks(f.system, f.lam, f.P_bar, f.P_perp).certificate.P
    assert np.linalg.cond(P) <= 1.05 * np.linalg.cond(P_paper)
    assert np.linalg.eigvalsh(P)[0] >= 1e-3 - 1e-9
    assert verify_certificate(law).passed


def test_nullspace_weight_scales_perp_block(fx):
    f = fx["motor-position"]
    light = design_switching(f.system, f.lam, f.x_perp)
    heavy = design_switching(f.system, f.lam, f.x_perp, nullspace_weight=1e3)
    assert heavy.certificate.P_perp.item() > 100 * light.certificate.P_perp.item()
    with pytest.raises(ValueError):
        design_switching(f.system, f.lam, f.x_perp, nullspace_weight=0.0)


def test_report_is_complete(example1_law):
    rep = law_report(example1_law)
    for key in ("P_bar", "P_perp", "P_cross", "margins", "lambda", "x_e", "checks", "verified"):
        assert key in rep
    assert set(rep["checks"]) >= {"decrease_lmi", "positivity_lmi", "cross_term", "U_lambda",
                                  "ell_lambda", "interior"}


def test_retarget_moves_along_nullspace(designed):
    law = designed["motor-position"]
    moved = law.retarget([np.pi])
    np.testing.assert_allclose(moved.x_e, [0.0, 24.0, 0.0, np.pi], atol=1e-9)
    assert verify_certificate(moved).passed

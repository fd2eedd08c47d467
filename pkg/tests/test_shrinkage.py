import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from coupledro import polyhedra as ph
from coupledro.errors import AssumptionViolated, NotNested, OriginNotContained, ParameterOutOfRange
from coupledro.experiments import supply_chain_intro
from coupledro.shrinkage import (
    ShrinkageReport,
    bound_check,
    closed_form_q_norm,
    compute_coeff_factors,
    compute_rhs_factors,
    projection_bounds,
    translate_by_symmetry_point,
)
from oracles import rhs_factors_by_linprog


def factors(rep):
    return (rep.rho_ro, rep.gamma_ro, rep.rho_aro, rep.gamma_aro)


def test_supply_chain_scenarios():
    _, U, Ua = supply_chain_intro("a")
    np.testing.assert_allclose(factors(compute_rhs_factors(U, Ua)), (1, 1, 0.75, 1), atol=1e-9)
    _, U, Ub = supply_chain_intro("b")
    np.testing.assert_allclose(factors(compute_rhs_factors(U, Ub)), (0.5, 1, 0.5, 1), atol=1e-9)
    np.testing.assert_allclose(projection_bounds(Ub), [0.5, 1.0], atol=1e-9)


def test_identical_sets_give_unit_factors():
    U = ph.box_spec([0, 0, 0], [1, 2, 1])
    rep = compute_rhs_factors(U, U)
    np.testing.assert_allclose(factors(rep) + (rep.rho_adapt,), (1, 1, 1, 1, 1), atol=1e-9)


def test_coupled_u_is_rejected():
    U = ph.box_spec([0, 0], [1, 1], [ph.BudgetRow([1, 1], 1.5)])
    with pytest.raises(ValueError):
        compute_rhs_factors(U, U)


def test_static_only_skips_adaptive_factors():
    _, U, Ub = supply_chain_intro("b")
    rep = compute_rhs_factors(U, Ub, static_only=True)
    assert rep.rho_ro == pytest.approx(0.5) and math.isnan(rep.rho_aro) and math.isnan(rep.rho_adapt)


def test_not_nested_is_rejected():
    U = ph.box_spec([0, 0], [1, 1])
    big = ph.box_spec([0, 0], [2, 1])
    with pytest.raises(NotNested):
        compute_rhs_factors(U, big)


def l1_l2_example(p=2):
    """Block 1 is the l1 ball, block 2 the l2 ball, coupled by u1 = u2."""
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * p)).reshape(p, -1).T
    l1 = ph.Halfspaces(signs, np.ones(len(signs)))
    blocks = ((0, p), (p, p))
    U = ph.UncertaintySpec(2 * p, blocks, ((l1,), (ph.L2Ball(1.0),)), ())
    E = np.hstack([np.eye(p), -np.eye(p)])
    C = ph.Halfspaces(np.vstack([E, -E]), np.zeros(2 * p))
    return U, ph.UncertaintySpec(2 * p, blocks, U.cw_atoms, (C,))


def test_coeff_factors_of_l1_l2_intersection():
    U, Ubar = l1_l2_example(2)
    rep = compute_coeff_factors(U, Ubar)
    assert rep.rho_ro == pytest.approx(1 / math.sqrt(2), abs=1e-7)
    assert rep.gamma_ro == pytest.approx(1.0, abs=1e-7)


def test_coeff_factors_of_box_and_ball():
    # box [-1, 1]^2 cut by the unit ball, blocks of width one
    U = ph.UncertaintySpec(2, ((0, 1), (1, 1)), ((ph.Box([-1.0], [1.0]),), (ph.Box([-1.0], [1.0]),)), ())
    Ubar = ph.UncertaintySpec(2, U.blocks, U.cw_atoms, (ph.L2Ball(1.0),))
    rep = compute_coeff_factors(U, Ubar)
    assert rep.rho_aro == pytest.approx(1 / math.sqrt(2), abs=1e-7)
    assert (rep.rho_ro, rep.gamma_ro) == pytest.approx((1.0, 1.0))


def test_coeff_factors_need_origin():
    U = ph.box_spec([1, 1], [2, 2])
    with pytest.raises(OriginNotContained):
        compute_coeff_factors(U, U)


def test_translation_cases():
    U = ph.box_spec([0, 0], [3, 3])
    Ubar = ph.box_spec([1, 1], [2, 2])
    _, _, shift = translate_by_symmetry_point(U, Ubar)
    np.testing.assert_allclose(shift, [1, 1], atol=1e-9)
    sym = ph.box_spec([-1, -1], [1, 1])
    _, _, shift = translate_by_symmetry_point(sym, sym)
    np.testing.assert_allclose(shift, [0, 0], atol=1e-9)
    tri = ph.UncertaintySpec(2, ((0, 2),), ((ph.Halfspaces([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]],
                                                          [-0.5, -0.5, 2.0]),),), ())
    # triangle with corner (0.5, 0.5) and legs of length 1; the corner is in the set
    _, Tt, shift = translate_by_symmetry_point(tri, tri)
    np.testing.assert_allclose(shift, [0.5, 0.5], atol=1e-9)
    assert ph.membership(Tt, [0.0, 0.0])
    # the same triangle pushed off the lower corner uses the symmetry point
    off = ph.UncertaintySpec(2, ((0, 2),), ((ph.Halfspaces([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]],
                                                          [1.0, 1.0, -1.0]),),), ())
    _, _, shift = translate_by_symmetry_point(off, off)
    np.testing.assert_allclose(shift, [2 / 3, 2 / 3], atol=1e-6)


@pytest.mark.parametrize("alpha,beta,m,q", [(1.0, 1.5, 2, 1), (2.0, 3.0, 4, 2), (0.5, 0.5, 3, 3)])
def test_closed_form_q_norm(alpha, beta, m, q):
    assert closed_form_q_norm(alpha, beta, m, q) == pytest.approx(beta / (alpha * m ** (1 / q)))


def test_closed_form_q_norm_range():
    with pytest.raises(ParameterOutOfRange):
        closed_form_q_norm(1.0, 0.5, 3, 2)
    with pytest.raises(ParameterOutOfRange):
        closed_form_q_norm(1.0, 3.0, 4, 2)


def test_closed_form_matches_budget_set_factor():
    rng = np.random.default_rng(17)
    for _ in range(5):
        m = int(rng.integers(2, 5))
        alpha = float(rng.uniform(0.5, 2))
        beta = float(rng.uniform(alpha, alpha * m))
        U = ph.box_spec(np.zeros(m), np.full(m, alpha))
        Ubar = ph.box_spec(np.zeros(m), np.full(m, alpha), [ph.BudgetRow(np.ones(m), beta)])
        rep = compute_rhs_factors(U, Ubar)
        assert rep.rho_adapt == pytest.approx(closed_form_q_norm(alpha, beta, m, 1), abs=1e-7)


def report(rho_ro=0.5, gamma_ro=1.0, rho_aro=0.5, gamma_aro=1.0, rho_adapt=0.5, m=2):
    return ShrinkageReport(rho_ro, gamma_ro, rho_aro, gamma_aro, rho_adapt, [(1.0, 1.0)] * m)


def test_bound_check_pass_and_fail():
    ok = bound_check(report(), {"z_ro": 600, "z_cp": 450, "z_aro": 600, "z_acp": 450})
    assert ok.passed and all(line.startswith("PASS") for line in ok.lines())
    bad = bound_check(report(), {"z_ro": 600, "z_cp": 200})
    assert not bad.passed
    assert any(line.startswith("FAIL static") for line in bad.lines())


def test_bound_check_rejects_nonpositive_objectives():
    with pytest.raises(AssumptionViolated):
        bound_check(report(), {"z_ro": 0.0, "z_cp": 1.0})
    with pytest.raises(AssumptionViolated):
        bound_check(report(), {"z_ro": 1.0, "z_cp": math.inf})


def random_coupled_box(seed, m):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    H = rng.uniform(-0.5, 1.5, (k, m))
    h = rng.uniform(0.3, 1.5, k)
    return H, h


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 4))
def test_factors_match_linprog_oracle(seed, m):
    H, h = random_coupled_box(seed, m)
    U = ph.box_spec(np.zeros(m), np.ones(m))
    Ubar = ph.box_spec(np.zeros(m), np.ones(m), [ph.Halfspaces(H, h)])
    rep = compute_rhs_factors(U, Ubar)
    ref = rhs_factors_by_linprog(np.eye(m), np.ones(m), np.vstack([np.eye(m), H]),
                                 np.concatenate([np.ones(m), h]))
    for key in ("rho_ro", "gamma_ro", "rho_aro", "rho_adapt"):
        assert getattr(rep, key) == pytest.approx(ref[key], abs=1e-7), key


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 4))
def test_factor_orderings(seed, m):
    H, h = random_coupled_box(seed, m)
    Ubar = ph.box_spec(np.zeros(m), np.ones(m), [ph.Halfspaces(H, h)])
    rep = compute_rhs_factors(ph.box_spec(np.zeros(m), np.ones(m)), Ubar)
    assume(rep.gamma_ro > 1e-9)
    eps = 1e-9
    assert 0 < rep.rho_ro <= rep.gamma_ro + eps <= 1 + 2 * eps
    assert rep.rho_aro <= rep.rho_ro + eps
    assert rep.rho_adapt >= 1 / m - eps
    assert rep.rho_adapt >= rep.rho_aro / rep.gamma_ro - eps

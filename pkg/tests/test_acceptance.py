"""Acceptance criteria, one group of tests per criterion.

Every check is recorded through ``acceptance_log.record``; the terminal
summary then prints one PASS/FAIL line per criterion.
"""

import functools
import math
import time

import numpy as np
import pytest

from acceptance_log import record
from coupledro import experiments as ex
from coupledro import polyhedra as ph
from coupledro import solvers as sv
from coupledro.lp_core import LinearProgram, Status, dual_objective, solve_lp
from coupledro.robust_model import CoeffRobustProblem
from coupledro.shrinkage import closed_form_q_norm, compute_rhs_factors
from instances import random_coeff_instance, random_rhs_instance
from oracles import brute_force_lp, polytope_vertices, rhs_robust_by_vertices

TOL = 1e-6


def close(a, b, tol=TOL):
    return a is not None and b is not None and abs(a - b) <= tol


# ---------------------------------------------------------------- 1


def test_intro_example():
    t0 = time.perf_counter()
    z = {}
    for label, coupling in (("ro", "none"), ("cp_a", "a"), ("cp_b", "b")):
        prob, _, _ = ex.supply_chain_intro(coupling)
        z[label] = sv.solve_projection(prob).objective
        aprob, _, _ = ex.supply_chain_intro(coupling, adaptive=True)
        z["a" + label] = sv.solve_full_adaptive_vertex(aprob).objective
    elapsed = time.perf_counter() - t0
    want = {"ro": 600, "cp_a": 600, "cp_b": 450, "aro": 600, "acp_a": 450, "acp_b": 450}
    ok = all(close(z[k], v) for k, v in want.items()) and elapsed < 1.0
    record(1, "static and adaptive values", ok, f"{z} in {elapsed:.3f}s")
    assert ok


# ---------------------------------------------------------------- 2


def intro_pair(coupling, costs, adaptive):
    lo_prob, _, _ = ex.supply_chain_intro("none", costs=costs, adaptive=adaptive)
    hi_prob, _, _ = ex.supply_chain_intro(coupling, costs=costs, adaptive=adaptive)
    solve = sv.solve_full_adaptive_vertex if adaptive else sv.solve_projection
    return solve(lo_prob).objective, solve(hi_prob).objective


TIGHT_CASES = [
    pytest.param("b", (0, 0, 0, 1, 1), False, (1.0, 1.0), id="static-upper"),
    pytest.param("b", (1, 0, 1, 0, 0), False, (2.0, 1.0), id="static-lower"),
    pytest.param("a", (1, 1, 1, 1, 1), True, (4.0, 3.0), id="adaptive-lower"),
    pytest.param("a", (1, 1, 1, 100, 1), True, (4.0, 4.0), id="adaptive-upper",
                 marks=pytest.mark.xfail(strict=True, reason="optimum is 3.5 (x = (1, 1) and y22 = u2); "
                                                             "see the decisions ledger")),
]


@pytest.mark.parametrize("coupling,costs,adaptive,want", TIGHT_CASES)
def test_tightness_supply_chain(coupling, costs, adaptive, want):
    got = intro_pair(coupling, costs, adaptive)
    ok = close(got[0], want[0]) and close(got[1], want[1])
    record(2, f"supply chain {coupling} costs={costs}", ok, f"got {got}, want {want}")
    assert ok


def ball_instance_value(c, coupled):
    l1 = ph.Halfspaces([[1, 1], [1, -1], [-1, 1], [-1, -1]], np.ones(4))
    atoms = ()
    if coupled:
        E = np.hstack([np.eye(2), -np.eye(2)])
        atoms = (ph.Halfspaces(np.vstack([E, -E]), np.zeros(4)),)
    S = ph.UncertaintySpec(4, ((0, 2), (2, 2)), ((l1,), (ph.L2Ball(1.0),)), atoms)
    prob = CoeffRobustProblem(c, [], [1.0, 1.0], S, F=[np.eye(4)[:2], np.eye(4)[2:]],
                              lower=np.full(4, -np.inf))
    return sv.solve_cutting_plane(prob, tol=1e-9).objective


@pytest.mark.parametrize("c,want", [((0, 0, 1, 1), (math.sqrt(2), 2.0)), ((1, 1, 0, 0), (2.0, 2.0))])
def test_tightness_coefficient_ball(c, want):
    got = (ball_instance_value(c, False), ball_instance_value(c, True))
    ok = close(got[0], want[0]) and close(got[1], want[1])
    record(2, f"l1/l2 blocks c={c}", ok, f"got {got}, want {want}")
    assert ok


def test_tightness_closed_forms():
    out = sv.verify_closed_form_instances()
    pairs = [(r["name"], tuple(r["c"]), r["z_aro"], r["z_acp"]) for r in out["instances"]]
    want = {("linear recourse", (1.0, 1.0)): (2.0, 4.0), ("linear recourse", (1.0, 0.0)): (1.0, 1.0),
            ("convex recourse", (1.0, 1.0)): (2.0, 8.0)}
    ok = out["all_tight"]
    for name, c, za, zc in pairs:
        if (name, c) in want:
            ok &= (za, zc) == want[(name, c)]
    record(2, "closed-form instances", ok, str(pairs))
    assert ok


# ---------------------------------------------------------------- 3


def test_shrinkage_scenarios():
    _, U, Ua = ex.supply_chain_intro("a")
    _, _, Ub = ex.supply_chain_intro("b")
    ra, rb = compute_rhs_factors(U, Ua), compute_rhs_factors(U, Ub)
    got_a = (ra.rho_ro, ra.gamma_ro, ra.rho_aro, ra.gamma_aro)
    got_b = (rb.rho_ro, rb.gamma_ro, rb.rho_aro, rb.gamma_aro)
    ok = np.allclose(got_a, (1, 1, 0.75, 1), atol=1e-9) and np.allclose(got_b, (0.5, 1, 0.5, 1), atol=1e-9)
    record(3, "supply chain scenarios", ok, f"a={got_a} b={got_b}")
    assert ok


def test_shrinkage_closed_form_triples():
    rng = np.random.default_rng(2023)
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(2, 6))
        alpha = float(rng.uniform(0.2, 3.0))
        beta = float(rng.uniform(alpha, alpha * m))
        U = ph.box_spec(np.zeros(m), np.full(m, alpha))
        Ubar = ph.box_spec(np.zeros(m), np.full(m, alpha), [ph.BudgetRow(np.ones(m), beta)])
        lp_value = compute_rhs_factors(U, Ubar).rho_adapt
        worst = max(worst, abs(lp_value - closed_form_q_norm(alpha, beta, m, 1)))
    ok = worst <= 1e-7
    record(3, "budget-set closed form on 20 triples", ok, f"max error {worst:.2e}")
    assert ok


# ---------------------------------------------------------------- 4


def test_static_methods_agree():
    worst, count = 0.0, 0
    for seed in range(100):
        prob, _, Ubar = random_rhs_instance(1000 + seed)
        vals = [sv.solve_projection(prob).objective, sv.solve_rc(prob).objective,
                sv.solve_cutting_plane(prob, tol=1e-9).objective]
        P = Ubar.to_polyhedron()
        vals.append(rhs_robust_by_vertices(prob.c, prob.d, prob.A, prob.G, prob.b, polytope_vertices(P.A, P.b)))
        worst = max(worst, max(vals) - min(vals))
        count += 1
    for seed in range(30):
        prob, _, _ = random_coeff_instance(2000 + seed)
        vals = [sv.solve_rc(prob).objective, sv.solve_cutting_plane(prob, tol=1e-9).objective]
        worst = max(worst, max(vals) - min(vals))
        count += 1
    ok = worst <= TOL
    record(4, f"{count} random instances", ok, f"max spread {worst:.2e}")
    assert ok


# ---------------------------------------------------------------- 5 and 6


@functools.lru_cache(maxsize=None)
def lot_sizing_rows():
    rows = []
    for m in (2, 3, 4, 5):
        cfg = ex.ExperimentConfig("lot_sizing", m, seed=7, instances=8, scenario_count=50, starts=10,
                                  tol=1e-6)
        rows += ex.run_experiment(cfg)
    return rows


def test_adaptive_ordering():
    by_instance = {}
    for r in lot_sizing_rows():
        by_instance.setdefault((r.size, r.seed), {})[r.method] = r
    bad = []
    for key, rs in by_instance.items():
        z = {k: v.objective for k, v in rs.items()}
        if not (z["scenarios"] <= z["benders"] + TOL and z["benders"] <= z["vertex"] + TOL
                and z["vertex"] <= z["ldr"] + TOL and abs(z["benders"] - z["vertex"]) <= 1e-3):
            bad.append((key, z))
    ok = len(by_instance) >= 30 and not bad
    record(5, f"{len(by_instance)} lot-sizing instances", ok, f"violations {bad[:3]}")
    assert ok


def test_sandwich_lot_sizing():
    rows = [r for r in lot_sizing_rows() if r.verdict != "n/a"]
    bad = [r for r in rows if r.verdict != "pass" or not (1 / math.sqrt(r.size) - TOL <= r.ratio <= 1 + TOL)]
    ok = len(rows) >= 60 and not bad
    record(6, "lot sizing", ok, f"{len(rows)} checked rows, {len(bad)} bad")
    assert ok


@functools.lru_cache(maxsize=None)
def supply_chain_rows():
    out = {}
    for M in (3, 6, 10):
        cfg = ex.ExperimentConfig("supply_chain", M, seed=1, instances=20, methods=["projection"], strict=True)
        out[M] = ex.run_experiment(cfg)
    return out


@functools.lru_cache(maxsize=None)
def alpha_sweep_rows():
    M = 4
    cfg = ex.ExperimentConfig("supply_chain", M, seed=2, instances=20, methods=["projection"], sweep="alpha",
                              sweep_values=[0.0, 0.25, 0.5, 0.75, 1.0], gamma=math.sqrt(M), strict=True)
    return ex.run_experiment(cfg)


def test_sandwich_supply_chain_static():
    rows = [r for rs in supply_chain_rows().values() for r in rs] + list(alpha_sweep_rows())
    bad = [r for r in rows if r.verdict != "pass"]
    ok = len(rows) >= 150 and not bad
    record(6, "supply chain static sweeps", ok, f"{len(rows)} rows, {len(bad)} bad")
    assert ok


def test_sandwich_supply_chain_adaptive():
    # a norm budget of sqrt(M) leaves the set polyhedral, as the vertex method needs
    cfg = ex.ExperimentConfig("supply_chain", 3, seed=3, instances=10, methods=["vertex"], adaptive=True,
                              gamma=math.sqrt(3), strict=True)
    rows = ex.run_experiment(cfg)
    bad = [r for r in rows if r.verdict != "pass"]
    ok = len(rows) == 10 and not bad
    record(6, "supply chain adaptive (with the adaptivity factor)", ok, f"{len(rows)} rows, {len(bad)} bad")
    assert ok


def test_sandwich_coefficient_family():
    bad, n = [], 0
    for seed in range(20):
        for orthant in (False, True):
            prob, U, _ = random_coeff_instance(3000 + seed, through_origin=True, orthant=orthant)
            out = ex.verify_bounds(prob, U)
            n += 1
            if not (out["canonical"] and out["passed"]):
                bad.append((seed, orthant, out["lines"]))
    ok = not bad
    record(6, f"coefficient family, {n} instances holding the origin", ok, str(bad[:2]))
    assert ok


def test_sandwich_intro_fixture():
    from coupledro.robust_model import problem_from_json

    out = ex.verify_bounds(problem_from_json(ex.load_fixture()))
    aprob, U, _ = ex.supply_chain_intro("b", adaptive=True)
    out_a = ex.verify_bounds(aprob, U)
    ok = out["passed"] and out_a["passed"]
    record(6, "intro fixture static and adaptive", ok, "; ".join(out_a["lines"]))
    assert ok


# ---------------------------------------------------------------- 7


def down_hull_spec(Ubar):
    """The down-hull written as scalar blocks [0, top_i] plus its halfspaces."""
    D = ph.down_hull(Ubar)
    m = Ubar.dim
    top = np.array([ph.support_function(Ubar, np.eye(m)[i])[0] for i in range(m)])
    return ph.box_spec(np.zeros(m), top, [ph.Halfspaces(D.A, D.b)])


def test_down_hull_equivalence():
    worst, n = 0.0, 0
    for seed in range(50):
        prob, _, Ubar = random_rhs_instance(4000 + seed, m=2 + seed % 3, adaptive=True)
        Ud = down_hull_spec(Ubar)
        pairs = [(sv.solve_projection(prob.with_uncertainty(Ubar)).objective,
                  sv.solve_projection(prob.with_uncertainty(Ud)).objective),
                 (sv.solve_full_adaptive_vertex(prob).objective,
                  sv.solve_full_adaptive_vertex(prob.with_uncertainty(Ud)).objective)]
        worst = max(worst, max(abs(a - b) for a, b in pairs))
        n += 1
    ok = worst <= 1e-7
    record(7, f"{n} instances, static and adaptive", ok, f"max gap {worst:.2e}")
    assert ok


# ---------------------------------------------------------------- 8


def test_constraint_wise_static_optimality():
    worst = 0.0
    probs = [random_rhs_instance(5000 + s, adaptive=True, coupled=False)[0] for s in range(40)]
    probs += [ex.supply_chain_intro("none", adaptive=True)[0]]
    probs += [ex.gen_lot_sizing(m, 9)[0].with_uncertainty(ex.gen_lot_sizing(m, 9)[1]) for m in (2, 3, 4)]
    for prob in probs:
        z_v = sv.solve_full_adaptive_vertex(prob).objective
        z_rc = sv.solve_rc(prob).objective
        worst = max(worst, abs(z_v - z_rc))
    ok = worst <= 1e-7
    record(8, f"{len(probs)} uncoupled instances", ok, f"max gap {worst:.2e}")
    assert ok


# ---------------------------------------------------------------- 9


def test_lp_core_oracle():
    rng = np.random.default_rng(99)
    mismatches, worst_gap, n_opt = 0, 0.0, 0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(0, 6))
        k = int(rng.integers(0, min(2, n) + 1))
        A, b = rng.normal(size=(m, n)), rng.normal(size=m) + rng.uniform(0, 2, m)
        E, e = rng.normal(size=(k, n)), rng.normal(size=k)
        lo = rng.uniform(-3, 0, n)
        hi = lo + rng.uniform(0.5, 4, n)
        c = rng.normal(size=n)
        sense = "minimize" if rng.random() < 0.5 else "maximize"
        lp = LinearProgram(c, A, b, E, e, lo, hi, sense)
        sol = solve_lp(lp)
        status, val = brute_force_lp(c, A, b, E, e, lo, hi, sense)
        if status == "infeasible":
            mismatches += sol.status is not Status.INFEASIBLE
            continue
        if sol.status is not Status.OPTIMAL or abs(sol.objective - val) > 1e-7 * (1 + abs(val)):
            mismatches += 1
            continue
        n_opt += 1
        worst_gap = max(worst_gap, abs(dual_objective(lp, sol) - sol.objective))
    ok = mismatches == 0 and worst_gap <= 1e-7
    record(9, "200 random LPs", ok, f"{mismatches} mismatches, {n_opt} optimal, max gap {worst_gap:.1e}")
    assert ok


# ---------------------------------------------------------------- 10


def test_trends():
    agg = {M: ex.aggregate(rows)[("projection", float(M))] for M, rows in supply_chain_rows().items()}
    stds = [agg[M][1] for M in (3, 6, 10)]
    ok_std = stds[0] >= stds[1] >= stds[2]
    record(10, "supply chain spread shrinks with size", ok_std, f"std {stds}")

    sweep = ex.aggregate(alpha_sweep_rows())
    alphas = (0.0, 0.25, 0.5, 0.75, 1.0)
    means = [sweep[("projection", a)][0] for a in alphas]
    ok_alpha = all(1 - a - 1e-9 <= mu <= 1 + 1e-9 for a, mu in zip(alphas, means)) and \
        all(x >= y for x, y in zip(means, means[1:]))
    record(10, "offset sweep is monotone inside [1 - alpha, 1]", ok_alpha, f"means {np.round(means, 4)}")

    lots = ex.aggregate([r for r in lot_sizing_rows() if r.method == "vertex"])
    ok_lot = all(1 / math.sqrt(x) - 1e-9 <= v[0] <= 1 + 1e-9 for (_, x), v in lots.items())
    record(10, "lot sizing means inside [1/sqrt(m), 1]", ok_lot,
           str({int(x): round(v[0], 4) for (_, x), v in lots.items()}))

    cfg = ex.ExperimentConfig("portfolio", 5, seed=4, instances=3, methods=["cutting-plane"], tol=1e-7)
    rows = ex.run_experiment(cfg)
    z = {}
    for r in rows:
        z.setdefault(r.seed, {})[r.method.split(":")[1]] = r.objective
    ok_port = all(v["cw"] <= v["coupled"] + 1e-6 * (1 + abs(v["coupled"])) <= v["further"] + 2e-6 * (1 + abs(v["further"]))
                  for v in z.values()) and not any(r.error for r in rows)
    record(10, "portfolio coupling never lowers the return", ok_port, str(z))
    assert ok_std and ok_alpha and ok_lot and ok_port

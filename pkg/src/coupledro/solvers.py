"""Static and two-stage solution methods over :class:`RobustLP` problems."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, List, Optional

import numpy as np

from . import polyhedra as ph
from .errors import (
    DimensionCapExceeded,
    EmptyInterior,
    IterationLimit,
    MalformedProgram,
    SolverFailure,
    UnboundedPolyhedron,
    VertexBudgetExceeded,
)
from .lp_core import LinearProgram, Status, dual_objective, solve_lp
from .robust_model import (
    AffineDecisionRule,
    RobustLP,
    _Builder,
    as_robust_lp,
    build_rc_ldr,
    build_rc_projection,
    build_rc_static,
)

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 1000
DEFAULT_STARTS = 100
VERTEX_BUDGET = 4096
EXACT_INNER_DIM = 10


@dataclass
class SolveResult:
    method: str
    status: str
    objective: float
    x: np.ndarray
    recourse: Any = None
    iterations: int = 0
    max_violation: float = 0.0
    wall_time: float = 0.0
    exact: bool = True
    info: dict = field(default_factory=dict)

    def to_json(self):
        rec = self.recourse
        if isinstance(rec, AffineDecisionRule):
            rec = {"z": rec.z.tolist(), "V": rec.V.tolist()}
        elif isinstance(rec, np.ndarray):
            rec = rec.tolist()
        return {
            "method": self.method, "status": self.status, "objective": self.objective,
            "x": np.asarray(self.x).tolist(), "recourse": rec, "iterations": self.iterations,
            "max_violation": self.max_violation, "wall_time": self.wall_time, "exact": self.exact,
            "info": {k: v for k, v in self.info.items() if isinstance(v, (int, float, str, bool, list))},
        }


@dataclass
class CutPool:
    points: List[np.ndarray] = field(default_factory=list)
    source_rows: List[int] = field(default_factory=list)

    def add(self, u, row):
        self.points.append(np.asarray(u, dtype=float).copy())
        self.source_rows.append(int(row))

    def __len__(self):
        return len(self.points)


def _lift_direction(R: RobustLP, k: int, w):
    row = R.rows[k]
    h = np.zeros(R.uncertainty.dim)
    h[R.block_idx(row)] = row.direction(w)
    return h


def worst_case_violations(R: RobustLP, w):
    """(violation per row, maximiser per row) of a static decision w."""
    viol = np.empty(len(R.rows))
    args = []
    for k, row in enumerate(R.rows):
        h = _lift_direction(R, k, w)
        if h.any():
            val, arg = ph.support_function(R.uncertainty, h)
        else:
            val, arg = 0.0, None
        viol[k] = float(row.a0 @ w) + val - row.rhs
        args.append(arg)
    return viol, args


def _solve_or_fail(lp, what):
    sol = solve_lp(lp)
    if sol.status is Status.INFEASIBLE:
        raise SolverFailure(f"{what}: infeasible")
    if sol.status is Status.UNBOUNDED:
        raise SolverFailure(f"{what}: unbounded")
    return sol


def _finish(method, R, sol_obj, w, t0, **kw):
    return SolveResult(method, kw.pop("status", "optimal"), R.sign * sol_obj, w[:R.n1].copy(),
                       wall_time=time.perf_counter() - t0, **kw)


# ---------------------------------------------------------------- static methods


def solve_projection(prob) -> SolveResult:
    t0 = time.perf_counter()
    R = as_robust_lp(prob)
    cp = build_rc_projection(R)
    sol = _solve_or_fail(cp.lp, "projection counterpart")
    w = cp.decision(sol)
    return _finish("projection", R, sol.objective, w, t0, recourse=w[R.n1:].copy(),
                   max_violation=float(max(worst_case_violations(R, w)[0].max(initial=0.0), 0.0)))


def solve_rc(prob) -> SolveResult:
    t0 = time.perf_counter()
    R = as_robust_lp(prob)
    cp = build_rc_static(R)
    sol = _solve_or_fail(cp.lp, "robust counterpart")
    w = cp.decision(sol)
    return _finish("rc", R, sol.objective, w, t0, recourse=w[R.n1:].copy(),
                   max_violation=float(max(worst_case_violations(R, w)[0].max(initial=0.0), 0.0)))


def _nominal_point(S):
    try:
        u0, r = ph.chebyshev_center(S)
        if r > 0:
            return u0
    except EmptyInterior:
        pass
    return ph.support_function(S, np.zeros(S.dim))[1]


def solve_cutting_plane(prob, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                        per_constraint: bool = False) -> SolveResult:
    """Alternate a master LP over a finite cut set with worst-case separation.

    The master starts from the nominal point (Chebyshev centre); each round
    adds the maximiser of the most violated row (lowest index on ties), or
    of every violated row with ``per_constraint``.
    """
    t0 = time.perf_counter()
    R = as_robust_lp(prob).as_static()
    S = R.uncertainty
    pool = CutPool()
    u0 = _nominal_point(S)
    cutA, cutb = [], []
    A0, b0 = R.scenario_rows(u0)
    for k in range(len(R.rows)):
        cutA.append(A0[k])
        cutb.append(b0[k])
        pool.add(u0, k)
    history = []
    w = None
    status = "iteration_limit"
    it = 0
    for it in range(1, max_iter + 1):
        A = np.vstack([R.det_A, np.array(cutA)]) if cutA else R.det_A
        b = np.concatenate([R.det_b, cutb])
        sol = solve_lp(LinearProgram(R.cost, A, b, None, None, R.lower, R.upper))
        if sol.status is Status.INFEASIBLE:
            raise SolverFailure("cutting-plane master infeasible")
        if sol.status is Status.UNBOUNDED:
            ray = sol.ray
            added = False
            for k, row in enumerate(R.rows):
                h = np.zeros(S.dim)
                h[R.block_idx(row)] = row.F @ ray
                val, arg = ph.support_function(S, h)
                if row.a0 @ ray + val > 1e-9:
                    Ak, bk = R.scenario_rows(arg)
                    cutA.append(Ak[k])
                    cutb.append(bk[k])
                    pool.add(arg, k)
                    added = True
            if not added:
                raise SolverFailure("robust problem is unbounded")
            continue
        w = sol.primal
        history.append(float(sol.objective))
        viol, args = worst_case_violations(R, w)
        worst = float(viol.max(initial=-np.inf))
        if worst <= tol:
            status = "optimal"
            break
        picks = [k for k in range(len(viol)) if viol[k] > tol] if per_constraint else [int(np.argmax(viol))]
        for k in picks:
            Ak, bk = R.scenario_rows(args[k])
            cutA.append(Ak[k])
            cutb.append(bk[k])
            pool.add(args[k], k)
    if w is None:
        raise IterationLimit("no bounded master within the iteration limit")
    viol = worst_case_violations(R, w)[0]
    return SolveResult("cutting-plane", status, R.sign * history[-1], w[:R.n1].copy(),
                       recourse=w[R.n1:].copy(), iterations=it,
                       max_violation=float(max(viol.max(initial=0.0), 0.0)),
                       wall_time=time.perf_counter() - t0,
                       info={"history": [R.sign * h for h in history], "cuts": len(pool), "pool": pool})


# ---------------------------------------------------------------- scenario programs


def _scenario_program(R: RobustLP, scenarios):
    """Minimise c_x.x + tau with one recourse vector per scenario."""
    n1, n2 = R.n1, R.n2
    B = _Builder()
    x = B.var(n1, R.lower[:n1], R.upper[:n1])
    tau = B.var(1, -np.inf, np.inf)
    B.add_cost(x, R.cost[:n1])
    B.add_cost(tau, [1.0])
    c_y = R.cost[n1:]
    ys = []
    for u in scenarios:
        y = B.var(n2, R.lower[n1:], R.upper[n1:])
        ys.append(y)
        A, b = R.scenario_rows(u)
        if A.shape[0]:
            B.add_ineq([(x, A[:, :n1]), (y, A[:, n1:])], b)
        if R.det_A.shape[0]:
            B.add_ineq([(x, R.det_A[:, :n1]), (y, R.det_A[:, n1:])], R.det_b)
        B.add_ineq([(y, c_y.reshape(1, -1)), (tau, [[-1.0]])], 0.0)
    return B.build(), x, ys


def _solve_scenarios(R, scenarios, method, t0, exact):
    lp, xs, ys = _scenario_program(R, scenarios)
    sol = _solve_or_fail(lp, f"{method} program")
    table = np.array([sol.primal[y] for y in ys]) if ys else np.zeros((0, R.n2))
    return SolveResult(method, "optimal", R.sign * float(sol.objective), sol.primal[xs].copy(),
                       recourse=table, iterations=sol.iterations,
                       wall_time=time.perf_counter() - t0, exact=exact,
                       info={"scenarios": np.asarray(scenarios)})


def uncertainty_vertices(S: ph.UncertaintySpec, budget: int = VERTEX_BUDGET):
    if not S.is_polyhedral():
        A, b, balls = ph._normalized_parts(S)
        if balls:
            raise MalformedProgram("vertex enumeration needs a polytope")
        P = ph.Polyhedron(A, b)
    else:
        P = S.to_polyhedron()
    V = ph.enumerate_vertices(P).points
    if len(V) > budget:
        raise VertexBudgetExceeded(f"{len(V)} vertices exceed the budget of {budget}")
    return V


def solve_full_adaptive_vertex(prob, budget: int = VERTEX_BUDGET) -> SolveResult:
    """One recourse vector per vertex of the uncertainty set."""
    t0 = time.perf_counter()
    R = as_robust_lp(prob)
    try:
        V = uncertainty_vertices(R.uncertainty, budget)
    except DimensionCapExceeded as exc:
        raise VertexBudgetExceeded(str(exc)) from exc
    return _solve_scenarios(R, V, "vertex", t0, True)


def solve_finite_scenarios(prob, count: int = 200, seed: int = 0, boundary: bool = True,
                           scenarios=None) -> SolveResult:
    """Recourse per sampled scenario; a lower bound for minimisation."""
    t0 = time.perf_counter()
    R = as_robust_lp(prob)
    if scenarios is None:
        scenarios = ph.hit_and_run_sample(R.uncertainty, count, seed, rescale_to_boundary=boundary)
    return _solve_scenarios(R, np.atleast_2d(scenarios), "scenarios", t0, False)


def solve_ldr(prob) -> SolveResult:
    t0 = time.perf_counter()
    R = as_robust_lp(prob)
    cp = build_rc_ldr(R)
    sol = _solve_or_fail(cp.lp, "affine-rule counterpart")
    w = cp.decision(sol)
    return SolveResult("ldr", "optimal", cp.objective(sol), w[:R.n1].copy(), recourse=cp.rule(sol),
                       iterations=sol.iterations, wall_time=time.perf_counter() - t0)


# ---------------------------------------------------------------- Benders


class _Recourse:
    """Second-stage LP  min c_y.y  s.t.  A_y y <= rhs(x, u),  bounds on y."""

    def __init__(self, R: RobustLP):
        if not R.fixed_recourse():
            raise MalformedProgram("Benders needs uncertainty that multiplies first-stage variables only")
        self.R = R
        n1 = R.n1
        # robust rows then deterministic rows; the y-part does not depend on u
        self.Ay = np.vstack([np.array([r.a0[n1:] for r in R.rows]).reshape(len(R.rows), R.n2),
                             R.det_A[:, n1:]])
        self.c = R.cost[n1:]
        self.lo = R.lower[n1:]
        self.hi = R.upper[n1:]

    def rhs_affine(self, u):
        """(r0, Rx) with rhs(x, u) = r0 - Rx x."""
        A, b = self.R.scenario_rows(u)
        n1 = self.R.n1
        r0 = np.concatenate([b, self.R.det_b])
        Rx = np.vstack([A[:, :n1], self.R.det_A[:, :n1]])
        return r0, Rx

    def solve(self, x, u):
        """(value, cut) where the cut (g, k) satisfies Q(x', u) >= g.x' + k for all x'.

        An infeasible recourse returns value inf and a feasibility cut
        0 >= g.x' + k.
        """
        r0, Rx = self.rhs_affine(u)
        rhs = r0 - Rx @ x
        lp = LinearProgram(self.c, self.Ay, rhs, None, None, self.lo, self.hi)
        sol = solve_lp(lp)
        if sol.status is Status.UNBOUNDED:
            raise SolverFailure("second-stage problem unbounded")
        if sol.status is Status.OPTIMAL:
            lam = sol.dual
            const = dual_objective(lp, sol) + lam @ rhs
            # Q(x', u) >= -lam.(r0 - Rx x') + const
            return float(sol.objective), (Rx.T @ lam, const - lam @ r0)
        # elastic copy: min 1.s  s.t.  A_y y - s <= rhs
        m = self.Ay.shape[0]
        n2 = self.Ay.shape[1]
        A = np.hstack([self.Ay, -np.eye(m)])
        lp2 = LinearProgram(np.concatenate([np.zeros(n2), np.ones(m)]), A, rhs, None, None,
                            np.concatenate([self.lo, np.zeros(m)]),
                            np.concatenate([self.hi, np.full(m, np.inf)]))
        sol2 = solve_lp(lp2)
        if sol2.status is not Status.OPTIMAL:
            raise SolverFailure("elastic second-stage problem failed")
        lam = sol2.dual
        const = dual_objective(lp2, sol2) + lam @ rhs
        return math.inf, (Rx.T @ lam, const - lam @ r0)


def _alternate(rec: _Recourse, x, u, S, max_rounds=50):
    """Local maximisation of Q(x, .) by alternating dual and primal steps."""
    best = -math.inf
    best_u, best_cut = u, None
    for _ in range(max_rounds):
        val, cut = rec.solve(x, u)
        if val <= best + 1e-9:
            break
        best, best_u, best_cut = val, u, cut
        if math.isinf(val):
            break
        # with the dual fixed, the value is -lam.(r0(u) - Rx(u) x) + const, linear in u
        lam = _last_dual(rec, x, u)
        u = _dual_argmax(rec, x, lam, S)
    return best, best_u, best_cut


def _last_dual(rec, x, u):
    r0, Rx = rec.rhs_affine(u)
    lp = LinearProgram(rec.c, rec.Ay, r0 - Rx @ x, None, None, rec.lo, rec.hi)
    return solve_lp(lp).dual


def _dual_argmax(rec: _Recourse, x, lam, S):
    """argmax over u of -lam.rhs(x, u); rhs is affine in u row by row."""
    R = rec.R
    h = np.zeros(S.dim)
    for k, row in enumerate(R.rows):
        # rhs_k(x, u) = rhs - u_b.(F x_ext + f) - a0_x.x
        idx = R.block_idx(row)
        w = np.concatenate([x, np.zeros(R.n2)])
        h[idx] += lam[k] * row.direction(w)
    return ph.support_function(S, h)[1]


def solve_benders(prob, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                  starts: int = DEFAULT_STARTS, seed: int = 0, x0=None, start_points=None,
                  exact_inner: Optional[bool] = None) -> SolveResult:
    """Outer cutting planes on the first stage, inner worst-case recourse.

    The inner maximisation of the recourse value over the uncertainty set is
    exact over the vertices when the set is a polytope of dimension at most
    ten; otherwise a multi-start alternating scheme is used and the result is
    flagged inexact.  The returned objective is the final master value, a
    lower bound for minimisation that is within ``tol`` of the upper bound.
    """
    t0 = time.perf_counter()
    R = as_robust_lp(prob)
    S = R.uncertainty
    rec = _Recourse(R)
    n1 = R.n1
    if exact_inner is None:
        exact_inner = S.dim <= EXACT_INNER_DIM and S.is_polyhedral()
    V = None
    if exact_inner:
        try:
            V = uncertainty_vertices(S)
        except (VertexBudgetExceeded, DimensionCapExceeded, UnboundedPolyhedron):
            exact_inner = False
    if x0 is None:
        x0 = solve_rc(R.as_static()).x if S.is_polyhedral() else solve_cutting_plane(R).x
    rng = ph.make_rng(seed)
    if start_points is None and not exact_inner:
        try:
            start_points = ph.hit_and_run_sample(S, starts, int(rng.integers(2 ** 62)))
        except EmptyInterior:
            start_points = np.array([_nominal_point(S)])
    cuts_A, cuts_b = [], []
    det_x = np.all(R.det_A[:, n1:] == 0, axis=1) if R.det_A.shape[0] else np.zeros(0, bool)

    def add_cut(cut, optimality):
        g, k = cut
        # optimality: tau >= g.x + k  ->  g.x - tau <= -k ; feasibility: g.x <= -k
        cuts_A.append(np.concatenate([g, [-1.0 if optimality else 0.0]]))
        cuts_b.append(-k)

    def inner(x):
        if exact_inner:
            best, arg, cut = -math.inf, None, None
            for v in V:
                val, c = rec.solve(x, v)
                if val > best + 1e-12:
                    best, arg, cut = val, v, c
                if math.isinf(val):
                    break
            return best, arg, cut
        best, arg, cut = -math.inf, None, None
        pts = list(start_points) + ([last_u[0]] if last_u[0] is not None else [])
        for u in pts:
            val, u_loc, c = _alternate(rec, x, u, S)
            if val > best:
                best, arg, cut = val, u_loc, c
        return best, arg, cut

    last_u = [None]
    # seed cuts at the static solution for every start point (or vertex)
    seeds = V if exact_inner else start_points
    for u in seeds:
        val, c = rec.solve(x0, u)
        add_cut(c, not math.isinf(val))
    lower, upper = -math.inf, math.inf
    x = np.asarray(x0, dtype=float)
    best_x = x
    status = "iteration_limit"
    it = 0
    for it in range(1, max_iter + 1):
        A = np.array(cuts_A)
        if det_x.any():
            A = np.vstack([A, np.hstack([R.det_A[det_x, :n1], np.zeros((int(det_x.sum()), 1))])])
            b = np.concatenate([cuts_b, R.det_b[det_x]])
        else:
            b = np.array(cuts_b)
        lo = np.concatenate([R.lower[:n1], [-np.inf]])
        hi = np.concatenate([R.upper[:n1], [np.inf]])
        sol = solve_lp(LinearProgram(np.concatenate([R.cost[:n1], [1.0]]), A, b, None, None, lo, hi))
        if sol.status is Status.UNBOUNDED:
            raise SolverFailure("Benders master unbounded; add bounds on the first stage")
        if sol.status is Status.INFEASIBLE:
            raise SolverFailure("Benders master infeasible")
        lower = float(sol.objective)
        x = sol.primal[:n1]
        val, u_star, cut = inner(x)
        last_u[0] = u_star
        if math.isinf(val):
            add_cut(cut, False)
            continue
        ub = float(R.cost[:n1] @ x) + val
        if ub < upper:
            upper, best_x = ub, x.copy()
        if upper - lower <= tol:
            status = "optimal"
            break
        add_cut(cut, True)
    return SolveResult("benders", status, R.sign * lower, best_x, iterations=it,
                       wall_time=time.perf_counter() - t0, exact=bool(exact_inner),
                       info={"lower": R.sign * lower, "upper": R.sign * upper,
                             "inner": "vertex" if exact_inner else "alternating"})


METHODS = {
    "projection": solve_projection,
    "rc": solve_rc,
    "cutting-plane": solve_cutting_plane,
    "ldr": solve_ldr,
    "benders": solve_benders,
    "scenarios": solve_finite_scenarios,
    "vertex": solve_full_adaptive_vertex,
}


def solve(prob, method: str, **kw) -> SolveResult:
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None
    return fn(prob, **kw)


# ---------------------------------------------------------------- closed-form instances


def _min_inverse_power(c, k, simplex):
    """min of sum c_i / u_i^k over [0,1]^2 (u = 1) or over {u >= 0, u1 + u2 <= 1}.

    On the simplex the minimiser has u_i proportional to c_i^(1/(k+1)).
    """
    c = np.asarray(c, dtype=float)
    if not simplex:
        return float(c.sum())
    return float(np.sum(c ** (1.0 / (k + 1))) ** (k + 1))


def verify_closed_form_instances() -> dict:
    """Two-variable instances whose adaptive values are known analytically.

    Both use U = [0,1]^2 and the coupled set U ∩ {u1 + u2 <= 1}.  With
    recourse y_i(u) = 1/u_i the adaptive value is min_u sum c_i/u_i; when the
    here-and-now part is also driven to 1/u_i the value is min_u sum c_i/u_i^2.
    The ratios are compared against the shrinkage factors of the sets.
    """
    from .shrinkage import compute_coeff_factors

    U = ph.box_spec([0, 0], [1, 1])
    Ubar = ph.box_spec([0, 0], [1, 1], [ph.BudgetRow([1, 1], 1.0)])
    rep = compute_coeff_factors(U, Ubar)
    out = {"factors": rep.as_dict(), "instances": []}

    def record(name, c, k, target, bound_name):
        z_aro = _min_inverse_power(c, k, simplex=False)
        z_acp = _min_inverse_power(c, k, simplex=True)
        ratio = z_acp / z_aro
        out["instances"].append({
            "name": name, "c": list(c), "z_aro": z_aro, "z_acp": z_acp, "ratio": ratio,
            "bound": bound_name, "bound_value": target, "tight": abs(ratio - target) <= 1e-9,
        })

    record("linear recourse", (1.0, 1.0), 1, 1.0 / rep.rho_aro, "1/rho_aro")
    record("linear recourse", (1.0, 0.0), 1, 1.0 / rep.gamma_aro, "1/gamma_aro")
    record("convex recourse", (1.0, 1.0), 2, 1.0 / rep.rho_aro ** 2, "1/rho_aro^2")
    record("convex recourse", (1.0, 1.0), 2, 1.0 / rep.rho_adapt ** 2, "1/rho_adapt^2")
    record("convex recourse", (1.0, 0.0), 2, 1.0 / rep.gamma_aro ** 2, "1/gamma_aro^2")
    out["all_tight"] = all(r["tight"] for r in out["instances"])
    return out

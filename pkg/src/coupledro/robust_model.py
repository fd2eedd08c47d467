"""Robust problem data and their deterministic counterparts.

Both problem families lower to :class:`RobustLP`, whose uncertain rows read

    a0 . w + u_bᵀ (F w + f) <= rhs     for every u in the uncertainty set,

with ``w = [x; y]`` and ``u_b`` the block of ``u`` the row listens to.  The
right-hand-side family has ``F = 0, f = 1``; the coefficient family puts the
uncertain coefficients in ``F``.  Deterministic rows and variable bounds
are carried along unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import polyhedra as ph
from .errors import MalformedProgram, NonPolyhedralAtomInRC, ParseError
from .lp_core import LinearProgram
from .shrinkage import projection_bounds, translate_by_symmetry_point, translate_spec


def _mat(a, rows, cols, name):
    if a is None:
        return np.zeros((rows, cols))
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((rows, cols))
    a = a.reshape(rows, cols) if a.ndim == 1 and rows == 1 else a
    if a.shape != (rows, cols):
        raise MalformedProgram(f"{name} must be {rows}x{cols}, got {a.shape}")
    return a


def _vec(v, n, fill=0.0):
    if v is None:
        return np.full(n, fill, dtype=float)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != n:
        raise MalformedProgram(f"expected length {n}, got {v.size}")
    return v


# ---------------------------------------------------------------- unified form


@dataclass(frozen=True)
class RobustRow:
    a0: np.ndarray
    block: int
    F: np.ndarray
    f: np.ndarray
    rhs: float

    def direction(self, w):
        """Coefficient of u_b in the row at decision w."""
        return self.F @ w + self.f

    def value(self, w, u_block) -> float:
        """Row slack violation a0.w + u_b.(F w + f) - rhs."""
        return float(self.a0 @ w + u_block @ (self.F @ w + self.f) - self.rhs)


@dataclass
class RobustLP:
    """Minimise cost.w (worst case over u for the adaptive part) under robust rows.

    ``sign`` is -1 when the source problem was a maximisation; reported
    objectives are ``sign * (internal minimum)``.
    """

    n1: int
    n2: int
    cost: np.ndarray
    rows: List[RobustRow]
    det_A: np.ndarray
    det_b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    uncertainty: ph.UncertaintySpec
    adaptive: bool = False
    sign: float = 1.0

    @property
    def n(self):
        return self.n1 + self.n2

    def with_uncertainty(self, S):
        return RobustLP(self.n1, self.n2, self.cost, self.rows, self.det_A, self.det_b,
                        self.lower, self.upper, S, self.adaptive, self.sign)

    def as_static(self):
        return RobustLP(self.n1, self.n2, self.cost, self.rows, self.det_A, self.det_b,
                        self.lower, self.upper, self.uncertainty, False, self.sign)

    def block_idx(self, row: RobustRow):
        return self.uncertainty.block_index(row.block)

    def fixed_recourse(self) -> bool:
        return all(not np.any(r.F[:, self.n1:]) for r in self.rows)

    def row_violation(self, k: int, w, u) -> float:
        r = self.rows[k]
        return r.value(w, u[self.block_idx(r)])

    def scenario_rows(self, u):
        """Rows (A, b) in w that enforce every robust row at the point u."""
        A = np.empty((len(self.rows), self.n))
        b = np.empty(len(self.rows))
        for k, r in enumerate(self.rows):
            ub = u[self.block_idx(r)]
            A[k] = r.a0 + ub @ r.F
            b[k] = r.rhs - ub @ r.f
        return A, b


# ---------------------------------------------------------------- problem families


@dataclass
class RhsRobustProblem:
    """minimise c.x + d.y  s.t.  A x + G y >= b + u  for all u, plus det rows."""

    c: np.ndarray
    d: np.ndarray
    A: np.ndarray
    G: np.ndarray
    uncertainty: ph.UncertaintySpec
    adaptive: bool = False
    b: Optional[np.ndarray] = None
    det_A: Optional[np.ndarray] = None
    det_b: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = _vec(self.c, len(np.atleast_1d(self.c)))
        self.d = _vec(self.d, len(np.atleast_1d(self.d)))
        n1, n2 = self.c.size, self.d.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n1)
        m = self.A.shape[0]
        self.G = _mat(self.G, m, n2, "G")
        self.b = _vec(self.b, m)
        n = n1 + n2
        k = 0 if self.det_A is None else np.asarray(self.det_A).reshape(-1, n).shape[0]
        self.det_A = _mat(self.det_A, k, n, "det_A")
        self.det_b = _vec(self.det_b, k)
        self.lower = _vec(self.lower, n, 0.0)
        self.upper = _vec(self.upper, n, np.inf)
        S = self.uncertainty
        if S.m != m or any(ln != 1 for _, ln in S.blocks):
            raise MalformedProgram("right-hand-side uncertainty needs one scalar block per row")

    @property
    def n1(self):
        return self.c.size

    @property
    def n2(self):
        return self.d.size

    @property
    def m(self):
        return self.A.shape[0]

    def with_uncertainty(self, S):
        return RhsRobustProblem(self.c, self.d, self.A, self.G, S, self.adaptive, self.b,
                                self.det_A, self.det_b, self.lower, self.upper)

    def to_robust_lp(self) -> RobustLP:
        n = self.n1 + self.n2
        rows = []
        for i in range(self.m):
            a0 = -np.concatenate([self.A[i], self.G[i]])
            rows.append(RobustRow(a0, i, np.zeros((1, n)), np.ones(1), -float(self.b[i])))
        return RobustLP(self.n1, self.n2, np.concatenate([self.c, self.d]), rows,
                        self.det_A, self.det_b, self.lower, self.upper,
                        self.uncertainty, self.adaptive, 1.0)


@dataclass
class CoeffRobustProblem:
    """maximise c.x + d.y  s.t.  a0_i.w + u_iᵀ(F_i w + f_i) <= b_i  for all u.

    By default ``F_i`` selects ``w = [x; y]`` (``p = n1 + n2``), giving the
    canonical rows ``u_iᵀ w <= b_i``.  With ``fixed_recourse`` the block
    multiplies ``x`` only (``p = n1``) and ``G`` holds the recourse row
    coefficients, ``u_iᵀ x + g_i.y <= b_i``.  ``row_blocks`` lets several
    rows share one block.
    """

    c: np.ndarray
    d: np.ndarray
    b: np.ndarray
    uncertainty: ph.UncertaintySpec
    adaptive: bool = False
    fixed_recourse: bool = False
    G: Optional[np.ndarray] = None
    a0: Optional[np.ndarray] = None
    F: Optional[Sequence[np.ndarray]] = None
    f: Optional[Sequence[np.ndarray]] = None
    row_blocks: Optional[Sequence[int]] = None
    det_A: Optional[np.ndarray] = None
    det_b: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        self.d = np.atleast_1d(np.asarray(self.d, dtype=float)).reshape(-1)
        n1, n2 = self.c.size, self.d.size
        n = n1 + n2
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        m = self.b.size
        self.row_blocks = list(range(m)) if self.row_blocks is None else [int(i) for i in self.row_blocks]
        if len(self.row_blocks) != m:
            raise MalformedProgram("row_blocks needs one entry per row")
        S = self.uncertainty
        widths = [S.blocks[i][1] for i in self.row_blocks]
        if self.F is None:
            p_need = n1 if self.fixed_recourse else n
            if any(wd != p_need for wd in widths):
                raise MalformedProgram(f"uncertainty blocks must have width {p_need}")
            sel = np.eye(n)[:p_need]
            self.F = [sel.copy() for _ in range(m)]
        else:
            self.F = [_mat(Fi, wd, n, "F") for Fi, wd in zip(self.F, widths)]
        self.f = [np.zeros(wd) for wd in widths] if self.f is None else [_vec(fi, wd) for fi, wd in zip(self.f, widths)]
        self.a0 = _mat(self.a0, m, n, "a0")
        if self.G is not None:
            self.G = _mat(self.G, m, n2, "G")
            self.a0 = self.a0.copy()
            self.a0[:, n1:] += self.G
        k = 0 if self.det_A is None else np.asarray(self.det_A).reshape(-1, n).shape[0]
        self.det_A = _mat(self.det_A, k, n, "det_A")
        self.det_b = _vec(self.det_b, k)
        self.lower = _vec(self.lower, n, 0.0)
        self.upper = _vec(self.upper, n, np.inf)

    @property
    def n1(self):
        return self.c.size

    @property
    def n2(self):
        return self.d.size

    @property
    def m(self):
        return self.b.size

    def with_uncertainty(self, S):
        return CoeffRobustProblem(self.c, self.d, self.b, S, self.adaptive, self.fixed_recourse,
                                  None, self.a0, self.F, self.f, self.row_blocks,
                                  self.det_A, self.det_b, self.lower, self.upper)

    def to_robust_lp(self) -> RobustLP:
        rows = [RobustRow(self.a0[k], self.row_blocks[k], self.F[k], self.f[k], float(self.b[k]))
                for k in range(self.m)]
        return RobustLP(self.n1, self.n2, -np.concatenate([self.c, self.d]), rows,
                        self.det_A, self.det_b, self.lower, self.upper,
                        self.uncertainty, self.adaptive, -1.0)


@dataclass
class AffineDecisionRule:
    z: np.ndarray
    V: np.ndarray

    def __call__(self, u):
        return self.z + self.V @ np.asarray(u, dtype=float)


def as_robust_lp(prob) -> RobustLP:
    return prob if isinstance(prob, RobustLP) else prob.to_robust_lp()


# ---------------------------------------------------------------- LP assembly


class _Builder:
    """Collects variables and rows, then emits a LinearProgram."""

    def __init__(self):
        self.lo: List[np.ndarray] = []
        self.hi: List[np.ndarray] = []
        self.n = 0
        self.ineq: List[tuple] = []
        self.eq: List[tuple] = []
        self.cost_terms: List[tuple] = []

    def var(self, count, lo=0.0, hi=np.inf):
        s = slice(self.n, self.n + count)
        self.lo.append(np.broadcast_to(np.asarray(lo, dtype=float), (count,)).copy())
        self.hi.append(np.broadcast_to(np.asarray(hi, dtype=float), (count,)).copy())
        self.n += count
        return s

    def add_ineq(self, terms, rhs):
        self.ineq.append((terms, np.atleast_1d(np.asarray(rhs, dtype=float))))

    def add_eq(self, terms, rhs):
        self.eq.append((terms, np.atleast_1d(np.asarray(rhs, dtype=float))))

    def add_cost(self, s, coef):
        self.cost_terms.append((s, np.asarray(coef, dtype=float)))

    def _stack(self, items):
        if not items:
            return np.zeros((0, self.n)), np.zeros(0)
        blocks, rhs = [], []
        for terms, r in items:
            M = np.zeros((r.size, self.n))
            for s, coef in terms:
                M[:, s] += np.asarray(coef, dtype=float).reshape(r.size, -1)
            blocks.append(M)
            rhs.append(r)
        return np.vstack(blocks), np.concatenate(rhs)

    def build(self) -> LinearProgram:
        cost = np.zeros(self.n)
        for s, coef in self.cost_terms:
            cost[s] += coef
        A, b = self._stack(self.ineq)
        E, e = self._stack(self.eq)
        lo = np.concatenate(self.lo) if self.lo else np.zeros(0)
        hi = np.concatenate(self.hi) if self.hi else np.zeros(0)
        return LinearProgram(cost, A, b, E, e, lo, hi)


@dataclass
class Counterpart:
    """A deterministic LP plus where the decisions live in its variables."""

    lp: LinearProgram
    w: slice
    sign: float
    V: Optional[slice] = None
    n2: int = 0
    dim: int = 0
    n1: int = 0
    extra: dict = field(default_factory=dict)

    def objective(self, sol) -> float:
        return self.sign * float(sol.objective)

    def decision(self, sol):
        return sol.primal[self.w]

    def rule(self, sol) -> Optional[AffineDecisionRule]:
        if self.V is None:
            return None
        z = sol.primal[self.w][self.n1:]
        V = sol.primal[self.V].reshape(self.n2, self.dim)
        return AffineDecisionRule(z, V)


def polyhedral_form(S: ph.UncertaintySpec):
    """(Q, q) with S = {Q u <= q}; refuses sets that keep a ball atom."""
    Q, q, balls = ph._normalized_parts(S)
    if balls:
        raise NonPolyhedralAtomInRC("ball atoms need the cutting-plane solver")
    return Q, q


def _support_le(B: _Builder, Q, q, lin_terms, h0, const_terms, rhs):
    """Add  const_terms + sup_{Qu<=q} (H vars + h0).u <= rhs  through LP duality.

    ``lin_terms`` is a list of (slice, matrix dim x width) giving H vars.
    """
    z = B.var(Q.shape[0])
    B.add_eq([(z, Q.T)] + [(s, -M) for s, M in lin_terms], h0)
    B.add_ineq(const_terms + [(z, q.reshape(1, -1))], rhs)
    return z


def _lift(row: RobustRow, idx, dim):
    """dim x n matrix and dim vector mapping w to the full-length u coefficient."""
    M = np.zeros((dim, row.F.shape[1]))
    M[idx] = row.F
    h = np.zeros(dim)
    h[idx] = row.f
    return M, h


def build_rc_static(prob) -> Counterpart:
    """Dual robust counterpart of a static problem over a polyhedral set."""
    R = as_robust_lp(prob)
    Q, q = polyhedral_form(R.uncertainty)
    dim = R.uncertainty.dim
    B = _Builder()
    w = B.var(R.n, R.lower, R.upper)
    B.add_cost(w, R.cost)
    if R.det_A.shape[0]:
        B.add_ineq([(w, R.det_A)], R.det_b)
    for row in R.rows:
        M, h = _lift(row, R.block_idx(row), dim)
        if not M.any() and not h.any():
            B.add_ineq([(w, row.a0.reshape(1, -1))], row.rhs)
            continue
        _support_le(B, Q, q, [(w, M)], h, [(w, row.a0.reshape(1, -1))], row.rhs)
    return Counterpart(B.build(), w, R.sign, n1=R.n1, n2=R.n2)


def build_rc_static_coeff(prob) -> Counterpart:
    return build_rc_static(prob)


def build_rc_projection(prob) -> Counterpart:
    """Static right-hand-side problem with each row at its own worst case.

    Each row's uncertain term is a constant vector f, so its worst case is
    the support value of the coupled set along f, taken row by row.
    """
    R = as_robust_lp(prob)
    if any(r.F.any() for r in R.rows):
        raise MalformedProgram("projection method applies to right-hand-side uncertainty only")
    S = R.uncertainty
    B = _Builder()
    w = B.var(R.n, R.lower, R.upper)
    B.add_cost(w, R.cost)
    if R.det_A.shape[0]:
        B.add_ineq([(w, R.det_A)], R.det_b)
    rows, rhs = [], []
    for row in R.rows:
        M, h = _lift(row, R.block_idx(row), S.dim)
        worst = ph.support_function(S, h)[0] if h.any() else 0.0
        rows.append(row.a0)
        rhs.append(row.rhs - worst)
    if rows:
        B.add_ineq([(w, np.array(rows))], rhs)
    return Counterpart(B.build(), w, R.sign, n1=R.n1, n2=R.n2)


def build_rc_ldr(prob) -> Counterpart:
    """Counterpart under affine recourse y(u) = z + V u (fixed recourse only).

    Variables are w = [x; z], V (row-major, n2 x dim) and an epigraph tau
    for the worst-case recourse cost.
    """
    R = as_robust_lp(prob)
    if not R.fixed_recourse():
        raise MalformedProgram("affine rules need rows whose uncertainty multiplies x only")
    S = R.uncertainty
    Q, q = polyhedral_form(S)
    dim, n1, n2 = S.dim, R.n1, R.n2
    B = _Builder()
    lo_w = R.lower.copy()
    hi_w = R.upper.copy()
    lo_w[n1:] = -np.inf  # bounds on y(u) become robust rows below
    hi_w[n1:] = np.inf
    w = B.var(R.n, lo_w, hi_w)
    V = B.var(n2 * dim, -np.inf, np.inf)
    tau = B.var(1, -np.inf, np.inf)
    B.add_cost(w, np.concatenate([R.cost[:n1], np.zeros(n2)]))
    B.add_cost(tau, [1.0])
    I = np.eye(dim)

    def v_times(a_y):
        # coefficient matrix of V^T a_y in the flattened V variables
        return np.kron(a_y.reshape(1, -1), I)

    def robust_le(a_w, M_x, h, rhs):
        """a_w.w + sup_u (M_x x + h + V^T a_w[y]).u <= rhs."""
        a_y = a_w[n1:]
        lin = []
        if M_x is not None and M_x.any():
            Mw = np.zeros((dim, R.n))
            Mw[:, :n1] = M_x
            lin.append((w, Mw))
        if a_y.any():
            lin.append((V, v_times(a_y)))
        if not lin and not h.any():
            B.add_ineq([(w, a_w.reshape(1, -1))], rhs)
            return
        _support_le(B, Q, q, lin, h, [(w, a_w.reshape(1, -1))], rhs)

    # worst-case recourse cost: c_y.z + sup_u (V^T c_y).u <= tau
    c_y = R.cost[n1:]
    a_obj = np.concatenate([np.zeros(n1), c_y])
    if c_y.any():
        _support_le(B, Q, q, [(V, v_times(c_y))], np.zeros(dim),
                    [(w, a_obj.reshape(1, -1)), (tau, [[-1.0]])], 0.0)
    else:
        B.add_ineq([(tau, [[-1.0]])], 0.0)
    for row in R.rows:
        M, h = _lift(row, R.block_idx(row), dim)
        robust_le(row.a0, M[:, :n1], h, row.rhs)
    for a, bb in zip(R.det_A, R.det_b):
        robust_le(a, None, np.zeros(dim), bb)
    for j in range(n2):
        e = np.zeros(R.n)
        if np.isfinite(R.lower[n1 + j]):
            e[n1 + j] = -1.0
            robust_le(e.copy(), None, np.zeros(dim), -R.lower[n1 + j])
        if np.isfinite(R.upper[n1 + j]):
            e[n1 + j] = 1.0
            robust_le(e.copy(), None, np.zeros(dim), R.upper[n1 + j])
    return Counterpart(B.build(), w, R.sign, V=V, n2=n2, dim=dim, n1=n1, extra={"tau": tau})


# ---------------------------------------------------------------- translation


def canonical_translate(prob: CoeffRobustProblem, point=None):
    """Shift the uncertainty so the coupled set holds the origin.

    Sets that already contain the origin are left alone.
    Writing u = u_s + u', each row a0.w + u_bᵀ(F w + f) <= b becomes
    (a0 + F^T u_s,b).w + u'_bᵀ(F w + f) <= b - u_s,b.f.
    Returns (translated problem, u_s).
    """
    S = prob.uncertainty
    if point is None and ph.membership(S, np.zeros(S.dim), 1e-12):
        # already holds the origin; a shift would only add affine terms
        return prob, np.zeros(S.dim)
    _, Sbar, u_s = translate_by_symmetry_point(S.uncoupled(), S, point)
    if not np.any(u_s):
        return prob, u_s
    a0 = prob.a0.copy()
    b = prob.b.copy()
    for k, blk in enumerate(prob.row_blocks):
        us = u_s[S.block_index(blk)]
        a0[k] += prob.F[k].T @ us
        b[k] -= us @ prob.f[k]
    out = CoeffRobustProblem(prob.c, prob.d, b, Sbar, prob.adaptive, prob.fixed_recourse,
                             None, a0, prob.F, prob.f, prob.row_blocks,
                             prob.det_A, prob.det_b, prob.lower, prob.upper)
    return out, u_s


def translate_problem_uncertainty(prob, shift):
    """Same translation applied to an arbitrary set of the problem (e.g. U)."""
    return translate_spec(prob.uncertainty, shift)


# ---------------------------------------------------------------- JSON


def _arr(v):
    return None if v is None else np.asarray(v, dtype=float).tolist()


def problem_to_json(prob) -> dict:
    if isinstance(prob, RhsRobustProblem):
        return {
            "family": "rhs", "adaptive": bool(prob.adaptive),
            "c": _arr(prob.c), "d": _arr(prob.d), "A": _arr(prob.A), "G": _arr(prob.G),
            "b": _arr(prob.b),
            "det_constraints": {"A": _arr(prob.det_A), "b": _arr(prob.det_b)},
            "bounds": {"lower": [_num(v) for v in prob.lower], "upper": [_num(v) for v in prob.upper]},
            "uncertainty": ph.spec_to_json(prob.uncertainty),
        }
    if isinstance(prob, CoeffRobustProblem):
        return {
            "family": "coeff", "adaptive": bool(prob.adaptive),
            "c": _arr(prob.c), "d": _arr(prob.d), "A": _arr(prob.a0), "b": _arr(prob.b),
            "F": [_arr(F) for F in prob.F], "f": [_arr(f) for f in prob.f],
            "row_blocks": list(prob.row_blocks),
            "det_constraints": {"A": _arr(prob.det_A), "b": _arr(prob.det_b)},
            "bounds": {"lower": [_num(v) for v in prob.lower], "upper": [_num(v) for v in prob.upper]},
            "uncertainty": ph.spec_to_json(prob.uncertainty),
        }
    raise TypeError(type(prob))


def _num(v):
    v = float(v)
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    return v


def _bound_list(v):
    if v is None:
        return None
    return [float(x) for x in v]


def problem_from_json(obj: dict):
    try:
        family = obj["family"]
        S = ph.spec_from_json(obj["uncertainty"])
        det = obj.get("det_constraints") or {}
        bounds = obj.get("bounds") or {}
        common = dict(det_A=det.get("A"), det_b=det.get("b"),
                      lower=_bound_list(bounds.get("lower")), upper=_bound_list(bounds.get("upper")))
        d = obj.get("d") or []
        if family == "rhs":
            return RhsRobustProblem(obj["c"], d, obj["A"], obj.get("G"), S, bool(obj.get("adaptive", False)),
                                    obj.get("b"), **common)
        if family == "coeff":
            return CoeffRobustProblem(obj["c"], d, obj["b"], S, bool(obj.get("adaptive", False)),
                                      bool(obj.get("fixed_recourse", False)), obj.get("G"),
                                      obj.get("A"), obj.get("F"), obj.get("f"), obj.get("row_blocks"),
                                      **common)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad problem JSON: {exc}") from exc
    raise ParseError(f"unknown family {obj.get('family')!r}")

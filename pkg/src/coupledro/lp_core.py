"""Dense linear programming by a two-phase bounded-variable primal simplex.

Every LP built elsewhere in the package goes through :func:`solve_lp`.
The solver works on the tableau ``B^-1 [A | b]`` of the equality form

    min c.x   s.t.  A x + s = b (inequality rows),  E x = e,  l <= x <= u,

with slacks ``s >= 0`` and variables that may sit nonbasic at either finite
bound (or at zero when free).  Pricing is Dantzig's rule until a run of
degenerate pivots is seen, after which Bland's rule takes over for the rest
of the solve so that cycling cannot occur.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg.blas import dger

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-10
HARRIS_TOL = 1e-9
GAP_TOL = 1e-7
OPT_TOL = 1e-9

# consecutive degenerate pivots tolerated before switching to Bland's rule
_DEGENERATE_RUN = 30
# pivots between refactorizations of the tableau
_REFACTOR_EVERY = 100


class MalformedProgram(ValueError):
    """Raised when LP data has inconsistent shapes or NaN entries."""


class IterationLimit(RuntimeError):
    pass


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


def _as_matrix(a, ncols: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, ncols))
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[1] != ncols:
        raise MalformedProgram(f"{name} must have {ncols} columns, got shape {a.shape}")
    return a


def _as_vector(v, length: int, name: str, fill: float = 0.0) -> np.ndarray:
    if v is None:
        return np.full(length, fill)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0 and length == 0:
        return np.zeros(0)
    if v.shape != (length,):
        raise MalformedProgram(f"{name} must have length {length}, got {v.shape}")
    return v


@dataclass(frozen=True)
class LinearProgram:
    """``sense`` cost.x subject to ineq rows (<=), eq rows and variable bounds."""

    cost: np.ndarray
    ineq_matrix: Optional[np.ndarray] = None
    ineq_rhs: Optional[np.ndarray] = None
    eq_matrix: Optional[np.ndarray] = None
    eq_rhs: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    sense: str = "minimize"

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=float).reshape(-1)
        n = cost.size
        if self.sense not in ("minimize", "maximize"):
            raise MalformedProgram(f"unknown sense {self.sense!r}")
        A = _as_matrix(self.ineq_matrix, n, "ineq_matrix")
        b = _as_vector(self.ineq_rhs, A.shape[0], "ineq_rhs")
        E = _as_matrix(self.eq_matrix, n, "eq_matrix")
        e = _as_vector(self.eq_rhs, E.shape[0], "eq_rhs")
        lo = _as_vector(self.lower, n, "lower", 0.0)
        hi = _as_vector(self.upper, n, "upper", np.inf)
        for name, arr in (("cost", cost), ("ineq_matrix", A), ("ineq_rhs", b),
                          ("eq_matrix", E), ("eq_rhs", e), ("lower", lo), ("upper", hi)):
            if np.isnan(arr).any():
                raise MalformedProgram(f"NaN entry in {name}")
        for name, arr in (("cost", cost), ("ineq_matrix", A), ("ineq_rhs", b),
                          ("eq_matrix", E), ("eq_rhs", e)):
            if not np.isfinite(arr).all():
                raise MalformedProgram(f"non-finite entry in {name}")
        if np.isposinf(lo).any() or np.isneginf(hi).any():
            raise MalformedProgram("lower bound +inf or upper bound -inf")
        for name, arr in (("cost", cost), ("ineq_matrix", A), ("ineq_rhs", b),
                          ("eq_matrix", E), ("eq_rhs", e), ("lower", lo), ("upper", hi)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.cost.size

    @property
    def m(self) -> int:
        return self.ineq_matrix.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: Status
    primal: np.ndarray
    objective: float
    dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eq_dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ray: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Tableau:
    """Bounded-variable simplex state on dense arrays."""

    def __init__(self, A, b, lo, hi, basis, x, Aorig=None, borig=None):
        self.Aorig = Aorig
        self.borig = borig
        self.T = np.array(A, dtype=float, order="F")
        self.rhs = b.copy()
        self.lo = lo
        self.hi = hi
        self.basis = np.array(basis, dtype=int)
        self.x = x
        self.iterations = 0
        self.bland = False
        self.degenerate_run = 0
        self.is_basic = np.zeros(A.shape[1], dtype=bool)
        self.is_basic[self.basis] = True

    def reduced(self, c):
        return c - c[self.basis] @ self.T

    def refactor(self):
        """Rebuild B^-1 A and the basic values from the original data."""
        if self.Aorig is None:
            return
        B = self.Aorig[:, self.basis]
        try:
            T = np.linalg.solve(B, self.Aorig)
        except np.linalg.LinAlgError:
            return
        nonbasic = ~self.is_basic
        xb = np.linalg.solve(B, self.borig - self.Aorig[:, nonbasic] @ self.x[nonbasic])
        self.T[...] = T
        self.x[self.basis] = xb

    def run(self, c, max_iter, stop_at=None):
        """Minimize c.x from the current basis; returns 'optimal' or ('unbounded', j, sigma).

        ``stop_at`` ends the run early once the objective reaches that level.
        """
        T, x, lo, hi = self.T, self.x, self.lo, self.hi
        d = self.reduced(c)
        since_refactor = 0
        verified = False
        while True:
            if self.iterations >= max_iter:
                raise IterationLimit(f"simplex exceeded {max_iter} pivots")
            if stop_at is not None and c @ x <= stop_at:
                return "optimal"
            if since_refactor >= _REFACTOR_EVERY:
                self.refactor()
                d = self.reduced(c)
                since_refactor = 0
            at_lo = np.isclose(x, lo, rtol=0.0, atol=FEAS_TOL) & np.isfinite(lo)
            at_hi = np.isclose(x, hi, rtol=0.0, atol=FEAS_TOL) & np.isfinite(hi)
            free = ~at_lo & ~at_hi
            can_up = (d < -OPT_TOL) & (~at_hi | free) & np.isfinite(d)
            can_dn = (d > OPT_TOL) & (~at_lo | free)
            can_up &= ~self.is_basic & (hi > lo)
            can_dn &= ~self.is_basic & (hi > lo)
            cand = np.flatnonzero(can_up | can_dn)
            if cand.size == 0:
                if verified or self.Aorig is None:
                    return "optimal"
                # confirm against freshly computed reduced costs
                self.refactor()
                d = self.reduced(c)
                since_refactor = 0
                verified = True
                continue
            if self.bland:
                j = int(cand[0])
            else:
                # steepest edge on the explicit tableau columns
                Tc = T[:, cand]
                norms = 1.0 + np.einsum("ij,ij->j", Tc, Tc)
                j = int(cand[np.argmax(d[cand] ** 2 / norms)])
            sigma = 1.0 if can_up[j] else -1.0
            col = T[:, j]
            # moving x_j by sigma*t changes x_B by -sigma*t*col
            step = np.inf
            leave = -1
            leave_to = 0.0
            xb = x[self.basis]
            lb = lo[self.basis]
            ub = hi[self.basis]
            rate = sigma * col
            piv_tol = PIVOT_TOL * max(1.0, float(np.abs(col).max(initial=0.0)))
            dec = rate > piv_tol
            inc = rate < -piv_tol
            ratios = np.full(col.size, np.inf)
            relaxed = np.full(col.size, np.inf)
            with np.errstate(invalid="ignore", divide="ignore"):
                r_dec = (xb - lb) / rate
                r_inc = (ub - xb) / (-rate)
                h_dec = (xb - lb + HARRIS_TOL) / rate
                h_inc = (ub - xb + HARRIS_TOL) / (-rate)
            ratios[dec] = r_dec[dec]
            ratios[inc] = r_inc[inc]
            relaxed[dec] = h_dec[dec]
            relaxed[inc] = h_inc[inc]
            ratios = np.maximum(ratios, 0.0)
            if ratios.size and np.isfinite(ratios).any():
                if self.bland:
                    best = ratios.min()
                    ties = np.flatnonzero(ratios <= best + 1e-12)
                    mags = np.abs(col[ties])
                    ties = ties[mags >= 1e-6 * mags.max()]
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    # Harris: largest pivot among rows blocking within the relaxed step
                    theta = relaxed.min()
                    ties = np.flatnonzero(ratios <= theta)
                    r = int(ties[np.argmax(np.abs(col[ties]))])
                step = ratios[r]
                leave = r
                leave_to = lb[r] if dec[r] else ub[r]
            flip = hi[j] - lo[j]
            if flip < step:
                # bound flip without basis change
                x[j] += sigma * flip
                x[self.basis] -= sigma * flip * col
                self.rhs = x[self.basis]
                self.iterations += 1
                self.degenerate_run = 0
                verified = False
                continue
            if not np.isfinite(step):
                if verified or self.Aorig is None:
                    return ("unbounded", j, sigma)
                self.refactor()
                d = self.reduced(c)
                since_refactor = 0
                verified = True
                continue
            verified = False
            since_refactor += 1
            if step <= FEAS_TOL:
                self.degenerate_run += 1
                if self.degenerate_run > _DEGENERATE_RUN:
                    self.bland = True
            else:
                self.degenerate_run = 0
                self.bland = False
            x[j] += sigma * step
            x[self.basis] -= sigma * step * col
            out = self.basis[leave]
            x[out] = leave_to
            # pivot
            piv = T[leave, j]
            T[leave] /= piv
            colj = T[:, j].copy()
            colj[leave] = 0.0
            T = dger(-1.0, colj, T[leave].copy(), a=T, overwrite_a=True)  # in-place rank-one update
            self.T = T
            d = d - d[j] * T[leave]
            self.basis[leave] = j
            self.is_basic[out] = False
            self.is_basic[j] = True
            self.iterations += 1


def _refine(Afull, bfull, basis, x, lo, hi):
    """Recompute basic values from the original columns to shed drift."""
    nonbasic = np.ones(Afull.shape[1], dtype=bool)
    nonbasic[basis] = False
    B = Afull[:, basis]
    rhs = bfull - Afull[:, nonbasic] @ x[nonbasic]
    try:
        xb = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        return x
    x = x.copy()
    x[basis] = xb
    return x


def solve_lp(lp: LinearProgram, max_iter: int = 200000) -> LpSolution:
    """Solve ``lp``; deterministic for fixed input."""
    n, m = lp.n, lp.m
    E, e = lp.eq_matrix, lp.eq_rhs
    k = E.shape[0]
    sign = 1.0 if lp.sense == "minimize" else -1.0
    c = sign * lp.cost

    lo0, hi0 = lp.lower, lp.upper
    if (lo0 > hi0 + FEAS_TOL).any():
        return LpSolution(Status.INFEASIBLE, np.full(n, np.nan), np.nan,
                          np.zeros(m), np.zeros(k), np.zeros(n))

    # equality form over [x | s | artificials]
    rows = m + k
    A = np.zeros((rows, n + m))
    A[:m, :n] = lp.ineq_matrix
    A[:m, n:] = np.eye(m)
    A[m:, :n] = E
    b = np.concatenate([lp.ineq_rhs, e])
    lo = np.concatenate([lo0, np.zeros(m)])
    hi = np.concatenate([np.minimum(hi0, np.inf), np.full(m, np.inf)])

    # nonbasic start: nearest finite bound to zero, zero if free
    x = np.zeros(n + m)
    start = np.where(np.isfinite(lo0), lo0, np.where(np.isfinite(hi0), hi0, 0.0))
    x[:n] = start
    resid = b - A[:, :n] @ x[:n]

    basis = []
    art_cols = []
    art_signs = []
    for i in range(rows):
        if i < m and resid[i] >= -FEAS_TOL:
            x[n + i] = max(resid[i], 0.0)
            basis.append(n + i)
        else:
            art_cols.append(i)
            art_signs.append(1.0 if resid[i] >= 0 else -1.0)
    na = len(art_cols)
    Aart = np.zeros((rows, na))
    for t, (i, s) in enumerate(zip(art_cols, art_signs)):
        Aart[i, t] = s
    Afull = np.hstack([A, Aart])
    lo_full = np.concatenate([lo, np.zeros(na)])
    hi_full = np.concatenate([hi, np.full(na, np.inf)])
    xfull = np.concatenate([x, np.abs(resid[art_cols]) if na else np.zeros(0)])
    for t in range(na):
        basis.append(n + m + t)
    order = np.argsort([_row_of(bj, n, m, art_cols) for bj in basis])
    basis = [basis[o] for o in order]

    # tableau B^-1 A with B the (signed) identity
    Binv_diag = np.ones(rows)
    for t, i in enumerate(art_cols):
        Binv_diag[i] = art_signs[t]
    T = Afull * Binv_diag[:, None]
    tab = _Tableau(T, xfull[basis], lo_full, hi_full, basis, xfull, Afull, b)

    ncol = Afull.shape[1]
    if na:
        c1 = np.zeros(ncol)
        c1[n + m:] = 1.0
        scale = max(1.0, np.abs(b).max(initial=0.0))
        res = tab.run(c1, max_iter, stop_at=FEAS_TOL * scale)
        infeas = xfull[n + m:].sum()
        if res != "optimal" or infeas > FEAS_TOL * scale * 10:
            return LpSolution(Status.INFEASIBLE, np.full(n, np.nan), np.nan,
                              np.zeros(m), np.zeros(k), np.zeros(n),
                              iterations=tab.iterations)
        # artificials are pinned at zero for phase two
        tab.hi = hi_full.copy()
        tab.hi[n + m:] = 0.0
        xfull[n + m:] = 0.0
        tab.x = xfull
        tab.bland = False
        tab.degenerate_run = 0
    c2 = np.concatenate([c, np.zeros(m + na)])
    res = tab.run(c2, max_iter)
    if res != "optimal":
        _, j, sigma = res
        dirn = np.zeros(ncol)
        dirn[j] = sigma
        dirn[tab.basis] = -sigma * tab.T[:, j]
        ray = dirn[:n]
        return LpSolution(Status.UNBOUNDED, xfull[:n].copy(), -np.inf * sign,
                          np.zeros(m), np.zeros(k), np.zeros(n), ray=ray,
                          iterations=tab.iterations)

    xfull = _refine(Afull, b, tab.basis, tab.x, tab.lo, tab.hi)
    B = Afull[:, tab.basis]
    try:
        y = np.linalg.solve(B.T, c2[tab.basis])
    except np.linalg.LinAlgError:
        y = c2[tab.basis] @ np.linalg.pinv(B)
    primal = xfull[:n].copy()
    # clip round-off onto bounds
    primal = np.minimum(np.maximum(primal, lo0), hi0)
    dual = -y[:m]
    eq_dual = -y[m:]
    red = c - A[:, :n].T @ y
    if lp.sense == "maximize":
        red = -red
    obj = float(lp.cost @ primal)
    return LpSolution(Status.OPTIMAL, primal, obj, dual, eq_dual, red,
                      iterations=tab.iterations)


def _row_of(col, n, m, art_cols):
    if col < n + m:
        return col - n
    return art_cols[col - n - m]


def dual_objective(lp: LinearProgram, sol: LpSolution) -> float:
    """Objective of the dual certificate in ``sol``, in the sense of ``lp``.

    With multipliers ``lam >= 0`` on inequality rows and ``mu`` on equalities,
    the reduced costs ``r = c' + A^T lam + E^T mu`` (``c'`` the minimization
    cost) are paid at the bound each variable rests on.
    """
    sign = 1.0 if lp.sense == "minimize" else -1.0
    c = sign * lp.cost
    lam, mu = sol.dual, sol.eq_dual
    r = c + lp.ineq_matrix.T @ lam + lp.eq_matrix.T @ mu
    val = -lp.ineq_rhs @ lam - lp.eq_rhs @ mu
    tiny = OPT_TOL * (1.0 + np.abs(c))
    pos = r > tiny
    neg = r < -tiny
    with np.errstate(invalid="ignore"):
        val += np.sum(r[pos] * lp.lower[pos]) + np.sum(r[neg] * lp.upper[neg])
    return sign * float(val)

"""Uncertainty-set geometry.

Sets are intersections of atoms: halfspace systems, boxes, budget rows and
origin-centred Euclidean balls.  A coupled set lists per-block atoms (the
constraint-wise part) plus atoms over the full vector (the coupling part).

Linear maximisation over a polyhedron is an LP.  When a single origin-centred
ball covers every coordinate, the ball constraint is priced by a scalar
multiplier ``lam`` and the inner problem ``max y.u - lam |u|^2`` over the
polyhedron is a Euclidean projection of ``y / (2 lam)``; ``|u(lam)|`` is
monotone, so ``lam`` is found by bisection.  Boxes project by clamping; other
polyhedra project through a least-distance program solved by NNLS.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import nnls

from .errors import (
    DimensionCapExceeded,
    DimensionMismatch,
    EmptyCoupledSet,
    EmptyInterior,
    NotInNonnegativeOrthant,
    OriginNotContained,
    ProjectionBlowup,
    UnboundedDirection,
    UnboundedPolyhedron,
    UnsupportedSet,
)
from .lp_core import LinearProgram, Status, solve_lp

log = logging.getLogger(__name__)

VERTEX_TOL = 1e-8
BISECT_TOL = 1e-9
MAX_FM_ROWS = 20000
VERTEX_DIM_CAP = 12


# ---------------------------------------------------------------- atoms


@dataclass(frozen=True)
class Halfspaces:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise DimensionMismatch(f"Halfspaces: A has {A.shape[0]} rows, b has {b.size}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.A.shape[1]

    def rows(self, d):
        return self.A, self.b


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatch("Box bounds differ in length")
        if (lo > hi).any():
            raise ValueError("Box requires lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    def rows(self, d):
        eye = np.eye(self.dim)
        fin_hi = np.isfinite(self.upper)
        fin_lo = np.isfinite(self.lower)
        A = np.vstack([eye[fin_hi], -eye[fin_lo]])
        b = np.concatenate([self.upper[fin_hi], -self.lower[fin_lo]])
        return A, b


@dataclass(frozen=True)
class BudgetRow:
    weights: np.ndarray
    limit: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if (w < 0).any():
            raise ValueError("BudgetRow weights must be nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "limit", float(self.limit))

    @property
    def dim(self):
        return self.weights.size

    def rows(self, d):
        return self.weights.reshape(1, -1), np.array([self.limit])


@dataclass(frozen=True)
class L2Ball:
    radius: float
    dim: Optional[int] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("L2Ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def rows(self, d):
        return np.zeros((0, d)), np.zeros(0)


SetAtom = Union[Halfspaces, Box, BudgetRow, L2Ball]


# ---------------------------------------------------------------- polyhedron


@dataclass(frozen=True)
class Polyhedron:
    """{u : A u <= b}."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(1, -1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise DimensionMismatch("Polyhedron: row count mismatch")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("Polyhedron entries must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.A.shape[1]

    @classmethod
    def from_box(cls, lower, upper):
        A, b = Box(lower, upper).rows(len(lower))
        return cls(A, b)

    @classmethod
    def empty(cls, d):
        return cls(np.zeros((1, d)), np.array([-1.0]))

    def canonicalize(self) -> "Polyhedron":
        A, b = _remove_redundant(*_normalize_rows(self.A, self.b))
        return Polyhedron(A, b)


@dataclass
class VertexList:
    points: np.ndarray
    tol: float = VERTEX_TOL

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


# ---------------------------------------------------------------- uncertainty spec


@dataclass(frozen=True)
class UncertaintySpec:
    """Constraint-wise blocks intersected with coupling atoms."""

    dim: int
    blocks: tuple
    cw_atoms: tuple
    coupling_atoms: tuple = ()

    def __post_init__(self):
        blocks = tuple((int(o), int(n)) for o, n in self.blocks)
        cw = tuple(tuple(a) for a in self.cw_atoms)
        cp = tuple(self.coupling_atoms)
        if len(cw) != len(blocks):
            raise DimensionMismatch("one atom list per block is required")
        pos = 0
        for off, ln in sorted(blocks):
            if off != pos or ln <= 0:
                raise DimensionMismatch("blocks must partition [0, dim)")
            pos += ln
        if pos != self.dim:
            raise DimensionMismatch("blocks must partition [0, dim)")
        for (off, ln), atoms in zip(blocks, cw):
            for a in atoms:
                if a.dim is not None and a.dim != ln:
                    raise DimensionMismatch(f"atom of dim {a.dim} in block of length {ln}")
        for a in cp:
            if a.dim is not None and a.dim != self.dim:
                raise DimensionMismatch(f"coupling atom of dim {a.dim} in space of dim {self.dim}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "cw_atoms", cw)
        object.__setattr__(self, "coupling_atoms", cp)

    @property
    def m(self):
        return len(self.blocks)

    def block_index(self, i) -> np.ndarray:
        off, ln = self.blocks[i]
        return np.arange(off, off + ln)

    def scoped_atoms(self):
        out = []
        for i, atoms in enumerate(self.cw_atoms):
            idx = self.block_index(i)
            out.extend((a, idx) for a in atoms)
        full = np.arange(self.dim)
        out.extend((a, full) for a in self.coupling_atoms)
        return out

    def uncoupled(self) -> "UncertaintySpec":
        return UncertaintySpec(self.dim, self.blocks, self.cw_atoms, ())

    def block_set(self, i) -> "UncertaintySpec":
        """U_i as a one-block set in its own coordinates."""
        ln = self.blocks[i][1]
        return UncertaintySpec(ln, ((0, ln),), (self.cw_atoms[i],), ())

    def is_polyhedral(self) -> bool:
        return not any(isinstance(a, L2Ball) for a, _ in self.scoped_atoms())

    def to_polyhedron(self) -> Polyhedron:
        A, b, balls = _parts(self)
        if balls:
            raise UnsupportedSet("set has ball atoms; no halfspace form")
        return Polyhedron(A, b)


AnySet = Union[Polyhedron, UncertaintySpec, "DownHullSet"]


def _parts(S):
    """(A, b, balls) with balls a list of (index array, radius)."""
    if isinstance(S, Polyhedron):
        return S.A, S.b, []
    if isinstance(S, DownHullSet):
        raise TypeError("down-hull sets have no direct atom form")
    d = S.dim
    rows_A, rows_b, balls = [], [], []
    for atom, idx in S.scoped_atoms():
        if isinstance(atom, L2Ball):
            balls.append((idx, atom.radius))
            continue
        a, bb = atom.rows(idx.size)
        if a.shape[1] != idx.size:
            raise DimensionMismatch("atom width does not match its scope")
        full = np.zeros((a.shape[0], d))
        full[:, idx] = a
        rows_A.append(full)
        rows_b.append(bb)
    A = np.vstack(rows_A) if rows_A else np.zeros((0, d))
    b = np.concatenate(rows_b) if rows_b else np.zeros(0)
    return A, b, balls


def set_dim(S) -> int:
    return S.dim


def intersect(U: UncertaintySpec, C: Sequence[SetAtom]) -> UncertaintySpec:
    """Append coupling atoms; raises EmptyCoupledSet if the result is empty."""
    out = UncertaintySpec(U.dim, U.blocks, U.cw_atoms, tuple(U.coupling_atoms) + tuple(C))
    if not is_nonempty(out):
        raise EmptyCoupledSet("coupled set is empty")
    return out


# ---------------------------------------------------------------- LP helpers


def _lp_maximize(A, b, y, Aeq=None, beq=None):
    d = y.size
    lp = LinearProgram(y, A, b, Aeq, beq, np.full(d, -np.inf), np.full(d, np.inf), "maximize")
    return solve_lp(lp)


def _lp_feasible(A, b):
    d = A.shape[1]
    lp = LinearProgram(np.zeros(d), A, b, None, None, np.full(d, -np.inf), np.full(d, np.inf))
    return solve_lp(lp)


def _is_box_rows(A):
    """True if every row has exactly one nonzero coefficient."""
    if A.shape[0] == 0:
        return True
    return bool(((np.abs(A) > 0).sum(axis=1) == 1).all())


def _box_from_rows(A, b, d):
    lo = np.full(d, -np.inf)
    hi = np.full(d, np.inf)
    for a, bb in zip(A, b):
        j = int(np.flatnonzero(a)[0])
        v = bb / a[j]
        if a[j] > 0:
            hi[j] = min(hi[j], v)
        else:
            lo[j] = max(lo[j], v)
    return lo, hi


def _project_polyhedron(A, b, a, box=None):
    """Euclidean projection of ``a`` onto {u : A u <= b}; None if empty."""
    if box is not None:
        lo, hi = box
        if (lo > hi + 1e-12).any():
            return None
        return np.clip(a, lo, hi)
    d = a.size
    if A.shape[0] == 0:
        return a.copy()
    # least distance program: min |w| s.t. -A w >= -(b - A a)
    h = b - A @ a
    if (h >= 0).all():
        return a.copy()
    G = -A
    g = -h
    E = np.vstack([G.T, g.reshape(1, -1)])
    f = np.zeros(d + 1)
    f[-1] = 1.0
    mu, _ = nnls(E, f, maxiter=50 * (E.shape[1] + 1))
    r = E @ mu - f
    if np.linalg.norm(r) < 1e-12:
        return None
    w = -r[:d] / r[d]
    return a + w


def _min_norm_point(A, b, box=None):
    return _project_polyhedron(A, b, np.zeros(A.shape[1]), box)


# ---------------------------------------------------------------- ball handling


def _merge_balls(balls, d):
    """Keep the smallest full-scope ball; return (radius or None, scoped list)."""
    full_r = None
    scoped = []
    for idx, r in balls:
        if idx.size == d:
            full_r = r if full_r is None else min(full_r, r)
        else:
            scoped.append((idx, r))
    return full_r, scoped


def _drop_redundant_balls(A, b, balls, d, budget=300000):
    """Remove balls that every vertex of the polyhedral part already satisfies."""
    if not balls:
        return balls
    if d > VERTEX_DIM_CAP or A.shape[0] < d or math.comb(A.shape[0], d) > budget:
        return balls
    P = Polyhedron(A, b)
    try:
        V = enumerate_vertices(P).points
    except (UnboundedPolyhedron, DimensionCapExceeded):
        return balls
    if len(V) == 0:
        return balls
    keep = []
    for idx, r in balls:
        if np.linalg.norm(V[:, idx], axis=1).max() > r * (1 + 1e-12):
            keep.append((idx, r))
    return keep


def _normalized_parts(S):
    A, b, balls = _parts(S)
    d = S.dim
    full_r, scoped = _merge_balls(balls, d)
    balls2 = ([(np.arange(d), full_r)] if full_r is not None else []) + scoped
    if len(balls2) > 1 or scoped:
        balls2 = _drop_redundant_balls(A, b, balls2, d)
    return A, b, balls2


def _max_with_full_ball(A, b, radius, y):
    """max y.u over {A u <= b, |u| <= radius}; returns (value, argmax) or raises."""
    d = y.size
    box = _box_from_rows(A, b, d) if _is_box_rows(A) else None
    u0 = _min_norm_point(A, b, box)
    if u0 is None or np.linalg.norm(u0) > radius * (1 + 1e-12):
        raise EmptyCoupledSet("set is empty")
    ny = np.linalg.norm(y)
    if ny == 0:
        return 0.0, u0
    if A.shape[0] == 0:
        u = radius * y / ny
        return float(radius * ny), u
    # polyhedral optimum already inside the ball?
    sol = _lp_maximize(A, b, y)
    if sol.status is Status.OPTIMAL:
        if np.linalg.norm(sol.primal) <= radius:
            return float(y @ sol.primal), sol.primal
        # shortest point of the optimal face decides whether the ball binds
        val = float(sol.objective)
        face = _project_polyhedron(np.vstack([A, -y]), np.append(b, -val + 1e-12 * (1 + abs(val))),
                                   np.zeros(d))
        if face is not None and np.linalg.norm(face) <= radius:
            return float(y @ face), face

    def u_of(lam):
        return _project_polyhedron(A, b, y / (2.0 * lam), box)

    lam_hi = ny / radius
    u_hi = u_of(lam_hi)
    for _ in range(200):
        if np.linalg.norm(u_hi) <= radius:
            break
        lam_hi *= 2.0
        u_hi = u_of(lam_hi)
    lam_lo = lam_hi / 2.0
    u_lo = u_of(lam_lo)
    k = 0
    while np.linalg.norm(u_lo) <= radius and k < 200:
        lam_hi, u_hi = lam_lo, u_lo
        lam_lo /= 2.0
        u_lo = u_of(lam_lo)
        k += 1
    if np.linalg.norm(u_lo) <= radius:
        # ball never binds: the LP solution set reaches inside the ball
        return float(y @ u_lo), u_lo
    for _ in range(200):
        if lam_hi - lam_lo <= BISECT_TOL * 1e-4 * lam_hi:
            break
        mid = 0.5 * (lam_lo + lam_hi)
        u = u_of(mid)
        if np.linalg.norm(u) > radius:
            lam_lo = mid
        else:
            lam_hi, u_hi = mid, u
    return float(y @ u_hi), u_hi


def _max_kelley(A, b, balls, y, tol=1e-10, max_iter=2000):
    """Outer approximation of balls by tangent cuts; returns (value, point)."""
    d = y.size
    cuts_A = [A]
    cuts_b = [b]
    box_rows = np.vstack([np.eye(d), -np.eye(d)])
    # every coordinate lies in some ball or the polyhedron must bound it
    big = sum(r for _, r in balls) * 10 + 1.0
    bound_b = np.full(2 * d, big * 1e3)
    u = None
    for _ in range(max_iter):
        AA = np.vstack(cuts_A + [box_rows])
        bb = np.concatenate(cuts_b + [bound_b])
        sol = _lp_maximize(AA, bb, y)
        if sol.status is Status.INFEASIBLE:
            raise EmptyCoupledSet("set is empty")
        u = sol.primal
        worst = 0.0
        for idx, r in balls:
            nu = np.linalg.norm(u[idx])
            if nu > r * (1 + tol):
                row = np.zeros(d)
                row[idx] = u[idx] / nu
                cuts_A.append(row.reshape(1, -1))
                cuts_b.append(np.array([r]))
                worst = max(worst, nu / r - 1)
        if worst == 0.0:
            if np.abs(u).max() >= big * 1e3 * (1 - 1e-9):
                raise UnboundedDirection("set unbounded in the requested direction")
            return float(y @ u), u
    log.warning("tangent-cut maximisation stopped at iteration cap")
    return float(y @ u), u


def support_function(S: AnySet, y) -> tuple:
    """(sup_{u in S} y.u, argmax)."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != S.dim:
        raise DimensionMismatch(f"direction has length {y.size}, set has dim {S.dim}")
    if isinstance(S, DownHullSet):
        return S.support(y)
    if isinstance(S, UncertaintySpec) and not S.coupling_atoms and S.m > 1:
        # product set: blocks separate
        total = 0.0
        arg = np.zeros(S.dim)
        for i in range(S.m):
            idx = S.block_index(i)
            v, a = support_function(S.block_set(i), y[idx])
            total += v
            arg[idx] = a
        return total, arg
    A, b, balls = _normalized_parts(S)
    if not balls:
        sol = _lp_maximize(A, b, y)
        if sol.status is Status.UNBOUNDED:
            raise UnboundedDirection("set unbounded in the requested direction")
        if sol.status is Status.INFEASIBLE:
            raise EmptyCoupledSet("set is empty")
        return float(sol.objective), sol.primal
    if len(balls) == 1 and balls[0][0].size == S.dim:
        return _max_with_full_ball(A, b, balls[0][1], y)
    return _max_kelley(A, b, balls, y)


def is_nonempty(S: AnySet) -> bool:
    if isinstance(S, DownHullSet):
        return is_nonempty(S.base)
    A, b, balls = _normalized_parts(S)
    if not balls:
        return _lp_feasible(A, b).status is not Status.INFEASIBLE
    if len(balls) == 1 and balls[0][0].size == S.dim:
        box = _box_from_rows(A, b, S.dim) if _is_box_rows(A) else None
        u0 = _min_norm_point(A, b, box)
        return u0 is not None and np.linalg.norm(u0) <= balls[0][1] * (1 + 1e-12)
    try:
        _max_kelley(A, b, balls, np.zeros(S.dim))
        return True
    except EmptyCoupledSet:
        return False


# ---------------------------------------------------------------- membership / gauge


def membership(S: AnySet, u, tol: float = 1e-9) -> bool:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != S.dim:
        raise DimensionMismatch(f"point has length {u.size}, set has dim {S.dim}")
    if isinstance(S, DownHullSet):
        return S.contains(u, tol)
    A, b, balls = _parts(S)
    if A.shape[0] and (A @ u - b > tol).any():
        return False
    for idx, r in balls:
        if np.linalg.norm(u[idx]) > r + tol:
            return False
    return True


def _row_gauge(A, b, w, tol=1e-12):
    if A.shape[0] == 0:
        return 0.0
    if (b < -tol).any():
        raise OriginNotContained("origin violates a halfspace row")
    aw = A @ w
    g = 0.0
    pos_b = b > tol
    if pos_b.any():
        g = max(g, float(np.max(aw[pos_b] / b[pos_b])))
    zero_b = ~pos_b
    if zero_b.any() and (aw[zero_b] > tol * max(1.0, np.abs(w).max())).any():
        return math.inf
    return max(g, 0.0)


def gauge(S: AnySet, w) -> float:
    """min{g >= 0 : w in g S}; requires 0 in S."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != S.dim:
        raise DimensionMismatch(f"point has length {w.size}, set has dim {S.dim}")
    if isinstance(S, DownHullSet):
        return S.gauge(w)
    A, b, balls = _parts(S)
    g = _row_gauge(A, b, w)
    for idx, r in balls:
        g = max(g, float(np.linalg.norm(w[idx]) / r))
    return g


def max_scaling_of_point_into(v, S: AnySet) -> float:
    g = gauge(S, v)
    if g == 0:
        return math.inf
    return 1.0 / g


# ---------------------------------------------------------------- Fourier-Motzkin


def _normalize_rows(A, b, tol=1e-12):
    """Scale rows to unit max-coefficient, drop trivial rows, dedupe."""
    d = A.shape[1]
    if A.shape[0] == 0:
        return A.reshape(0, d), b.reshape(0)
    scale = np.abs(A).max(axis=1)
    zero = scale <= tol
    if (b[zero] < -1e-9).any():
        return Polyhedron.empty(d).A, Polyhedron.empty(d).b
    A = A[~zero] / scale[~zero, None]
    b = b[~zero] / scale[~zero]
    if A.shape[0] == 0:
        return A, b
    # dedupe: keep the tightest rhs for identical normals
    key = np.round(A, 10)
    order = np.lexsort(np.vstack([b, key.T[::-1]]))
    A, b, key = A[order], b[order], key[order]
    keep = np.ones(A.shape[0], dtype=bool)
    for i in range(1, A.shape[0]):
        if np.array_equal(key[i], key[i - 1]):
            keep[i] = False
    # lexsort puts the smallest b first within equal keys
    return A[keep], b[keep]


def _remove_redundant(A, b):
    """Drop rows implied by the others (one LP per row)."""
    if A.shape[0] <= 1:
        return A, b
    keep = np.ones(A.shape[0], dtype=bool)
    if _lp_feasible(A, b).status is Status.INFEASIBLE:
        return Polyhedron.empty(A.shape[1]).A, Polyhedron.empty(A.shape[1]).b
    for i in range(A.shape[0]):
        keep[i] = False
        others_A = np.vstack([A[keep], A[i]])
        others_b = np.concatenate([b[keep], [b[i] + 1.0]])
        sol = _lp_maximize(others_A, others_b, A[i])
        if not (sol.status is Status.OPTIMAL and sol.objective <= b[i] + 1e-9 * (1 + abs(b[i]))):
            keep[i] = True
    return A[keep], b[keep]


def project(P: Polyhedron, keep_dims: Iterable[int], prune: bool = True) -> Polyhedron:
    """Exact projection onto ``keep_dims`` (in the order given) by Fourier-Motzkin."""
    keep = [int(k) for k in keep_dims]
    d = P.dim
    A, b = _normalize_rows(P.A.copy(), P.b.copy())
    if prune:
        A, b = _remove_redundant(A, b)
    elim = [j for j in range(d) if j not in keep]
    cols = list(range(d))
    while elim:
        # eliminate the variable creating the fewest rows
        best, best_cost = None, None
        for j in elim:
            c = A[:, cols.index(j)]
            npos, nneg = int((c > 1e-12).sum()), int((c < -1e-12).sum())
            cost = npos * nneg - npos - nneg
            if best is None or cost < best_cost:
                best, best_cost = j, cost
        jc = cols.index(best)
        c = A[:, jc]
        pos = np.flatnonzero(c > 1e-12)
        neg = np.flatnonzero(c < -1e-12)
        zer = np.flatnonzero(np.abs(c) <= 1e-12)
        newA = [A[zer]]
        newb = [b[zer]]
        if pos.size and neg.size:
            Ap = A[pos] / c[pos, None]
            bp = b[pos] / c[pos]
            An = A[neg] / (-c[neg, None])
            bn = b[neg] / (-c[neg])
            comb_A = (Ap[:, None, :] + An[None, :, :]).reshape(-1, A.shape[1])
            comb_b = (bp[:, None] + bn[None, :]).reshape(-1)
            newA.append(comb_A)
            newb.append(comb_b)
        A = np.vstack(newA)
        b = np.concatenate(newb)
        A = np.delete(A, jc, axis=1)
        cols.pop(jc)
        elim.remove(best)
        if A.shape[0] > MAX_FM_ROWS:
            raise ProjectionBlowup(f"{A.shape[0]} rows after eliminating a variable")
        A, b = _normalize_rows(A, b)
        if prune:
            A, b = _remove_redundant(A, b)
    order = [cols.index(k) for k in keep]
    return Polyhedron(A[:, order], b)


# ---------------------------------------------------------------- down-hull


def _monotone_rows(A, b, tol=1e-12):
    """Rows kept by the monotone fast path, or None if some row is not monotone.

    A row is monotone if its coefficients are nonnegative.  A row
    ``-u_j <= c`` with ``c >= 0`` is implied by ``u >= 0`` and dropped.
    """
    keep = []
    for i, a in enumerate(A):
        if (a >= -tol).all():
            keep.append(i)
            continue
        nz = np.flatnonzero(np.abs(a) > tol)
        if nz.size == 1 and a[nz[0]] < 0 and b[i] >= -tol:
            continue
        return None
    return np.array(keep, dtype=int)


def _check_orthant(S):
    d = S.dim
    for j in range(d):
        v, _ = support_function(S, -np.eye(d)[j])
        if v > 1e-9:
            raise NotInNonnegativeOrthant(f"coordinate {j} can be negative")


@dataclass(frozen=True)
class DownHullSet:
    """Down-hull of a set that has no finite halfspace form (ball atoms present)."""

    base: UncertaintySpec

    @property
    def dim(self):
        return self.base.dim

    def _ball_parts(self):
        A, b, balls = _normalized_parts(self.base)
        if len(balls) != 1 or balls[0][0].size != self.dim:
            raise UnsupportedSet("down-hull needs at most one ball covering all coordinates")
        return A, b, balls[0][1]

    def support(self, y):
        return support_function(self.base, np.maximum(y, 0.0))

    def contains(self, t, tol=1e-9):
        if (t < -tol).any():
            return False
        A, b, radius = self._ball_parts()
        d = self.dim
        AA = np.vstack([A, -np.eye(d)])
        bb = np.concatenate([b, -t])
        box = _box_from_rows(AA, bb, d) if _is_box_rows(AA) else None
        s = _min_norm_point(AA, bb, box)
        return s is not None and np.linalg.norm(s) <= radius + tol

    def gauge(self, w):
        w = np.asarray(w, dtype=float)
        if (w < 0).any():
            return math.inf
        if not w.any():
            return 0.0
        A, b, radius = self._ball_parts()
        d = self.dim
        box_rows = _is_box_rows(np.vstack([A, -np.eye(d)]))

        def feasible(t):
            AA = np.vstack([A, -np.eye(d)])
            bb = np.concatenate([b, -t * w])
            box = _box_from_rows(AA, bb, d) if box_rows else None
            s = _min_norm_point(AA, bb, box)
            return s is not None and np.linalg.norm(s) <= radius * (1 + 1e-13)

        # largest t with t w in the down-hull; bracket then bisect
        hi = 1.0
        while feasible(hi):
            hi *= 2.0
            if hi > 1e12:
                return 0.0
        lo = 0.0
        for _ in range(200):
            if hi - lo <= 1e-13 * hi:
                break
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        t = lo
        return math.inf if t == 0 else 1.0 / t


def down_hull(P: Union[Polyhedron, UncertaintySpec], prune: bool = True):
    """{t >= 0 : t <= s for some s in P}.

    Returns a Polyhedron when P has a halfspace form, else a DownHullSet.
    """
    _check_orthant(P)
    d = P.dim
    if isinstance(P, UncertaintySpec) and not P.is_polyhedral():
        A, b, balls = _normalized_parts(P)
        if not balls:
            P = Polyhedron(A, b)
        else:
            keep = _monotone_rows(A, b)
            if keep is not None:
                # down-closed already; keep only the monotone atoms plus t >= 0
                atoms = [Halfspaces(np.vstack([A[keep], -np.eye(d)]),
                                    np.concatenate([b[keep], np.zeros(d)]))]
                atoms += [L2Ball(r) if idx.size == d else None for idx, r in balls]
                if any(a is None for a in atoms):
                    return DownHullSet(P)
                return UncertaintySpec(d, ((0, d),), (tuple(atoms),), ())
            return DownHullSet(P)
    if isinstance(P, UncertaintySpec):
        P = P.to_polyhedron()
    keep = _monotone_rows(P.A, P.b)
    if keep is not None:
        A = np.vstack([P.A[keep], -np.eye(d)])
        b = np.concatenate([P.b[keep], np.zeros(d)])
        return Polyhedron(A, b)
    # lifted system over (t, s): t - s <= 0, -t <= 0, A s <= b
    r = P.A.shape[0]
    A = np.zeros((2 * d + r, 2 * d))
    A[:d, :d] = np.eye(d)
    A[:d, d:] = -np.eye(d)
    A[d:2 * d, :d] = -np.eye(d)
    A[2 * d:, d:] = P.A
    b = np.concatenate([np.zeros(2 * d), P.b])
    return project(Polyhedron(A, b), range(d), prune=prune)


# ---------------------------------------------------------------- vertices


def _combinations_chunks(r, d, chunk=20000):
    it = itertools.combinations(range(r), d)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=int)


def enumerate_vertices(P: Polyhedron, tol: float = VERTEX_TOL, cap: int = VERTEX_DIM_CAP) -> VertexList:
    """All vertices by brute force over d-subsets of rows."""
    if isinstance(P, UncertaintySpec):
        P = P.to_polyhedron()
    d = P.dim
    if d > cap:
        raise DimensionCapExceeded(f"dimension {d} exceeds vertex cap {cap}")
    A, b = P.A, P.b
    if _lp_feasible(A, b).status is Status.INFEASIBLE:
        return VertexList(np.zeros((0, d)), tol)
    for j in range(d):
        for s in (1.0, -1.0):
            e = np.zeros(d)
            e[j] = s
            sol = _lp_maximize(A, b, e)
            if sol.status is Status.UNBOUNDED:
                raise UnboundedPolyhedron("polyhedron is unbounded")
    if d == 0:
        return VertexList(np.zeros((1, 0)), tol)
    r = A.shape[0]
    scale = np.maximum(1.0, np.abs(b))
    found = []
    for combo in _combinations_chunks(r, d):
        M = A[combo]  # (k, d, d)
        rhs = b[combo]
        det = np.linalg.det(M)
        ok = np.abs(det) > 1e-12
        if not ok.any():
            continue
        M, rhs = M[ok], rhs[ok]
        try:
            x = np.linalg.solve(M, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            x = np.array([np.linalg.lstsq(Mi, ri, rcond=None)[0] for Mi, ri in zip(M, rhs)])
        viol = (x @ A.T - b) / scale
        feas = (viol <= tol).all(axis=1)
        if feas.any():
            found.append(x[feas])
    if not found:
        return VertexList(np.zeros((0, d)), tol)
    pts = np.vstack(found)
    return VertexList(_dedupe(pts, max(tol, 1e-9)), tol)


def _dedupe(pts, tol):
    if len(pts) == 0:
        return pts
    q = np.round(pts / (tol * 10))
    _, first = np.unique(q, axis=0, return_index=True)
    pts = pts[np.sort(first)]
    out = []
    for p in pts:
        if not any(np.abs(p - o).max() <= tol * 10 for o in out):
            out.append(p)
    out = np.array(out)
    order = np.lexsort(out.T[::-1])
    return out[order]


# ---------------------------------------------------------------- symmetry point


def symmetry_point(P: Polyhedron) -> tuple:
    """(argmax_u sym(u, P), sym value), capped at 1.

    u has symmetry t when u + t (u - v) stays in P for every v in P, i.e.
    (1 + t) A_i u - t min_P A_i <= b_i for every row.  With z = (1 + t) u
    this is one LP in (z, t).
    """
    if isinstance(P, UncertaintySpec):
        P = P.to_polyhedron()
    A, b = P.A, P.b
    d = A.shape[1]
    lows = np.empty(A.shape[0])
    for i, a in enumerate(A):
        sol = _lp_maximize(A, b, -a)
        if sol.status is Status.INFEASIBLE:
            raise EmptyCoupledSet("polyhedron is empty")
        if sol.status is Status.UNBOUNDED:
            raise UnboundedPolyhedron("symmetry point needs a bounded set")
        lows[i] = -sol.objective
    cost = np.zeros(d + 1)
    cost[-1] = 1.0
    lo = np.full(d + 1, -np.inf)
    hi = np.full(d + 1, np.inf)
    lo[-1], hi[-1] = 0.0, 1.0
    sol = solve_lp(LinearProgram(cost, np.hstack([A, -lows[:, None]]), b, None, None, lo, hi, "maximize"))
    if not sol.optimal:
        raise EmptyCoupledSet("polyhedron is empty")
    t = float(sol.primal[-1])
    return sol.primal[:d] / (1.0 + t), t


# ---------------------------------------------------------------- sampling


def chebyshev_center(S: AnySet):
    """(center, radius) of the largest ball inside S."""
    A, b, balls = _normalized_parts(S) if not isinstance(S, Polyhedron) else (S.A, S.b, [])
    d = S.dim
    norms = np.linalg.norm(A, axis=1)
    cutsA = [np.hstack([A, norms[:, None]])]
    cutsb = [b]
    # radius bounded to keep the LP finite
    cap_row = np.zeros((1, d + 1))
    cap_row[0, -1] = 1.0
    big = 1e6
    c = np.zeros(d + 1)
    c[-1] = 1.0
    for _ in range(500):
        AA = np.vstack(cutsA + [cap_row])
        bb = np.concatenate(cutsb + [[big]])
        lo = np.full(d + 1, -np.inf)
        lo[-1] = 0.0
        sol = solve_lp(LinearProgram(c, AA, bb, None, None, lo, np.full(d + 1, np.inf), "maximize"))
        if sol.status is not Status.OPTIMAL:
            raise EmptyInterior("no interior point found")
        x, r = sol.primal[:d], sol.primal[-1]
        added = False
        for idx, rad in balls:
            nx = np.linalg.norm(x[idx])
            if nx + r > rad * (1 + 1e-9) and nx > 0:
                row = np.zeros(d + 1)
                row[idx] = x[idx] / nx
                row[-1] = 1.0
                cutsA.append(row.reshape(1, -1))
                cutsb.append([rad])
                added = True
            elif nx == 0 and r > rad:
                r = rad
        if not added:
            return x, float(r)
    # take what is certainly inside
    for idx, rad in balls:
        r = min(r, rad - np.linalg.norm(x[idx]))
    return x, float(r)


def _chord(A, b, balls, x, direction):
    """Interval of t with x + t*direction inside."""
    t_lo, t_hi = -math.inf, math.inf
    if A.shape[0]:
        ad = A @ direction
        slack = b - A @ x
        pos = ad > 1e-14
        neg = ad < -1e-14
        if pos.any():
            t_hi = min(t_hi, float(np.min(slack[pos] / ad[pos])))
        if neg.any():
            t_lo = max(t_lo, float(np.max(slack[neg] / ad[neg])))
    for idx, r in balls:
        xs, ds = x[idx], direction[idx]
        qa = ds @ ds
        if qa <= 1e-300:
            continue
        qb = 2 * xs @ ds
        qc = xs @ xs - r * r
        disc = max(qb * qb - 4 * qa * qc, 0.0)
        sq = math.sqrt(disc)
        t_lo = max(t_lo, (-qb - sq) / (2 * qa))
        t_hi = min(t_hi, (-qb + sq) / (2 * qa))
    return t_lo, t_hi


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based 64-bit generator used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def hit_and_run_sample(S: AnySet, count: int, seed: int, rescale_to_boundary: bool = False,
                       burn_in: Optional[int] = None, thinning: Optional[int] = None) -> np.ndarray:
    """``count`` points of S by hit-and-run from the Chebyshev centre."""
    if isinstance(S, Polyhedron):
        A, b, balls = S.A, S.b, []
    else:
        A, b, balls = _normalized_parts(S)
    d = S.dim
    x, r = chebyshev_center(S)
    if r <= 1e-9:
        raise EmptyInterior("set has empty interior")
    rng = make_rng(seed)
    burn = 100 * d if burn_in is None else burn_in
    thin = d if thinning is None else max(1, thinning)
    out = np.empty((count, d))

    def step(x):
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        lo, hi = _chord(A, b, balls, x, direction)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise UnboundedPolyhedron("hit-and-run needs a bounded set")
        return x + rng.uniform(lo, hi) * direction

    for _ in range(burn):
        x = step(x)
    for k in range(count):
        for _ in range(thin):
            x = step(x)
        out[k] = x
    if rescale_to_boundary:
        # push each point outward along the ray from the origin (or the centre)
        c0 = np.zeros(d) if membership(S, np.zeros(d)) else chebyshev_center(S)[0]
        for k in range(count):
            direction = out[k] - c0
            if np.linalg.norm(direction) <= 1e-14:
                continue
            _, hi = _chord(A, b, balls, c0, direction)
            if math.isfinite(hi) and hi > 0:
                out[k] = c0 + hi * direction
    return out


# ---------------------------------------------------------------- JSON


def atom_from_json(obj: dict) -> SetAtom:
    kind = obj.get("type")
    if kind == "halfspaces":
        return Halfspaces(np.array(obj["A"], dtype=float), np.array(obj["b"], dtype=float))
    if kind == "box":
        return Box(np.array(obj["lower"], dtype=float), np.array(obj["upper"], dtype=float))
    if kind == "budget":
        return BudgetRow(np.array(obj["weights"], dtype=float), float(obj["limit"]))
    if kind == "l2ball":
        return L2Ball(float(obj["radius"]), obj.get("dim"))
    raise ValueError(f"unknown atom type {kind!r}")


def atom_to_json(a: SetAtom) -> dict:
    if isinstance(a, Halfspaces):
        return {"type": "halfspaces", "A": a.A.tolist(), "b": a.b.tolist()}
    if isinstance(a, Box):
        return {"type": "box", "lower": a.lower.tolist(), "upper": a.upper.tolist()}
    if isinstance(a, BudgetRow):
        return {"type": "budget", "weights": a.weights.tolist(), "limit": a.limit}
    out = {"type": "l2ball", "radius": a.radius}
    if a.dim is not None:
        out["dim"] = a.dim
    return out


def spec_from_json(obj: dict) -> UncertaintySpec:
    return UncertaintySpec(
        int(obj["dim"]),
        tuple(tuple(bl) for bl in obj["blocks"]),
        tuple(tuple(atom_from_json(a) for a in atoms) for atoms in obj["cw_atoms"]),
        tuple(atom_from_json(a) for a in obj.get("coupling_atoms", [])),
    )


def spec_to_json(S: UncertaintySpec) -> dict:
    return {
        "dim": S.dim,
        "blocks": [list(bl) for bl in S.blocks],
        "cw_atoms": [[atom_to_json(a) for a in atoms] for atoms in S.cw_atoms],
        "coupling_atoms": [atom_to_json(a) for a in S.coupling_atoms],
    }


def box_spec(lower, upper, coupling: Sequence[SetAtom] = ()) -> UncertaintySpec:
    """Scalar-block set with per-coordinate intervals and optional coupling."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m = lower.size
    blocks = tuple((i, 1) for i in range(m))
    cw = tuple((Box(lower[i:i + 1], upper[i:i + 1]),) for i in range(m))
    return UncertaintySpec(m, blocks, cw, tuple(coupling))

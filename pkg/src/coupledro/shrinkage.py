"""Shrinkage factors between a constraint-wise set and its coupled version.

``rho(S1, S2)`` is the largest ``r`` with ``r S1`` inside ``S2`` and
``gamma(S1, S2)`` the smallest ``g`` with ``S2`` inside ``g S1``.  Both reduce
to maximising a gauge over a set:

    rho(S1, S2) = 1 / max_{v in S1} gauge_{S2}(v)
    gamma(S1, S2) = max_{w in S2} gauge_{S1}(w)

With ``S2`` written as atoms, ``gauge_{S2}`` is a max of row terms ``a.v / b``
and ball terms ``|v_S| / radius``; the row terms maximise to support values
of ``S1`` and the ball terms to the largest partial norm over ``S1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import polyhedra as ph
from .errors import (
    AssumptionViolated,
    DimensionCapExceeded,
    NotNested,
    OriginNotContained,
    ParameterOutOfRange,
    UnboundedPolyhedron,
    UnsupportedSet,
)

TOL = 1e-9


@dataclass
class ShrinkageReport:
    rho_ro: float
    gamma_ro: float
    rho_aro: float
    gamma_aro: float
    rho_adapt: float
    per_dim: List[tuple]
    methods: Dict[str, str] = field(default_factory=dict)
    family: str = "rhs"

    def as_dict(self):
        return {
            "family": self.family,
            "rho_ro": self.rho_ro,
            "gamma_ro": self.gamma_ro,
            "rho_aro": self.rho_aro,
            "gamma_aro": self.gamma_aro,
            "rho_adapt": self.rho_adapt,
            "per_dim": [list(map(float, p)) for p in self.per_dim],
            "methods": dict(self.methods),
        }


# ---------------------------------------------------------------- set oracles


class _Oracle:
    """Support values and largest partial norms of a set."""

    dim: int

    def support(self, y) -> float:
        raise NotImplementedError

    def max_norm(self, idx) -> float:
        raise NotImplementedError


class _SetOracle(_Oracle):
    def __init__(self, S):
        self.S = S
        self.dim = S.dim
        self._form = None

    def support(self, y):
        return ph.support_function(self.S, y)[0]

    def form(self):
        if self._form is None:
            self._form = _atom_form(self.S)
        return self._form

    def max_norm(self, idx):
        idx = np.asarray(idx)
        S = self.S
        if isinstance(S, ph.UncertaintySpec) and not S.coupling_atoms and S.m > 1:
            total = 0.0
            for i in range(S.m):
                bidx = S.block_index(i)
                sub = np.flatnonzero(np.isin(bidx, idx))
                if sub.size:
                    total += _SetOracle(S.block_set(i)).max_norm(sub) ** 2
            return math.sqrt(total)
        return _max_norm_atoms(*self.form(), idx)


def _splits_with_zero(A, b, idx):
    """True if every row touches only idx or only the rest, and 0 fits the rest."""
    inside = np.zeros(A.shape[1], dtype=bool)
    inside[idx] = True
    nz = np.abs(A) > 0
    touch_in = nz[:, inside].any(axis=1)
    touch_out = nz[:, ~inside].any(axis=1)
    if np.any(touch_in & touch_out):
        return False
    return bool(np.all(b[~touch_in] >= -TOL))


def _max_norm_atoms(A, b, balls, idx):
    """max of |v_idx| over {A v <= b} intersected with origin-centred balls.

    Without balls this is a vertex maximum.  With balls it is exact when the
    rows split into idx / rest with 0 feasible for the rest, and a single ball
    meets idx and covers it: setting the rest to 0 leaves a connected slice
    that meets the ball, so the answer is min(radius, polyhedral maximum).
    """
    idx = np.asarray(idx)
    vmax = _vertex_max_norm(A, b, idx)
    if not balls:
        if not math.isfinite(vmax):
            raise UnboundedPolyhedron("norm is unbounded over this set")
        return vmax
    if A.shape[1] == idx.size:
        meet = balls
    else:
        if not _splits_with_zero(A, b, idx):
            raise UnsupportedSet("partial norm over a coupled ball-intersected set")
        meet = [(bi, r) for bi, r in balls if np.isin(bi, idx).any()]
    if not meet:
        return vmax
    if len(meet) == 1 and np.isin(idx, meet[0][0]).all():
        return min(meet[0][1], vmax)
    raise UnsupportedSet("partial norm with overlapping ball scopes")


def _vertex_max_norm(A, b, idx):
    try:
        V = ph.enumerate_vertices(ph.Polyhedron(A, b)).points
    except UnboundedPolyhedron:
        return math.inf
    if len(V) == 0:
        return 0.0
    return float(np.linalg.norm(V[:, idx], axis=1).max())


class _ProductOracle(_Oracle):
    """Product of per-block oracles, each acting on its block coordinates."""

    def __init__(self, blocks, parts: Sequence[_Oracle]):
        self.blocks = blocks
        self.parts = parts
        self.dim = sum(ln for _, ln in blocks)

    def support(self, y):
        y = np.asarray(y, dtype=float)
        return sum(p.support(y[off:off + ln]) for (off, ln), p in zip(self.blocks, self.parts))

    def max_norm(self, idx):
        idx = np.asarray(idx)
        total = 0.0
        for (off, ln), p in zip(self.blocks, self.parts):
            sub = idx[(idx >= off) & (idx < off + ln)] - off
            if sub.size:
                total += p.max_norm(sub) ** 2
        return math.sqrt(total)


class _BlockShadowOracle(_Oracle):
    """Projection of a set onto one block, queried through the full set."""

    def __init__(self, S, idx):
        self.S = S
        self.idx = np.asarray(idx)
        self.dim = self.idx.size
        self._full = _SetOracle(S)

    def support(self, y):
        full = np.zeros(self.S.dim)
        full[self.idx] = y
        return ph.support_function(self.S, full)[0]

    def max_norm(self, sub):
        return self._full.max_norm(self.idx[np.asarray(sub)])


def _atom_form(S):
    """(rows A, rhs b, balls) describing S for gauge evaluation."""
    if isinstance(S, ph.Polyhedron):
        return S.A, S.b, []
    return ph._normalized_parts(S)


def max_gauge(S1: _Oracle, S2_form) -> float:
    """max over v in S1 of gauge_{S2}(v), S2 given as (A, b, balls)."""
    A, b, balls = S2_form
    g = 0.0
    for a, bb in zip(A, b):
        if not np.any(np.abs(a) > 0):
            if bb < -TOL:
                raise OriginNotContained("empty row violated at the origin")
            continue
        val = S1.support(a)
        if bb > TOL:
            g = max(g, val / bb)
        elif bb < -TOL:
            raise OriginNotContained("origin violates a halfspace row")
        elif val > 1e-9:
            return math.inf
    for idx, r in balls:
        g = max(g, S1.max_norm(idx) / r)
    return g


def _inv(g):
    if g == 0:
        return math.inf
    if math.isinf(g):
        return 0.0
    return 1.0 / g


def rho_of(S1: _Oracle, S2_form) -> float:
    return _inv(max_gauge(S1, S2_form))


def gamma_of(S1_form, S2: _Oracle) -> float:
    return max_gauge(S2, S1_form)


# ---------------------------------------------------------------- projections


def projection_bounds(S, use_down_hull: bool = True) -> np.ndarray:
    """Per-coordinate maxima of S (identical for S and its down-hull)."""
    d = S.dim
    out = np.empty(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        out[j] = ph.support_function(S, e)[0]
    if use_down_hull:
        out = np.maximum(out, 0.0)
    return out


def _equality_links(Ubar: ph.UncertaintySpec):
    """Coordinate pairs tied by u_k = u_l rows, or None if other coupling exists."""
    pairs = set()
    for atom in Ubar.coupling_atoms:
        if isinstance(atom, ph.L2Ball):
            return None
        A, b = atom.rows(Ubar.dim)
        for a, bb in zip(A, b):
            nz = np.flatnonzero(np.abs(a) > 0)
            if abs(bb) > TOL or nz.size != 2 or abs(a[nz[0]] + a[nz[1]]) > TOL:
                return None
            k, l = (nz[0], nz[1]) if a[nz[0]] > 0 else (nz[1], nz[0])
            pairs.add((int(k), int(l)))
    links = {(k, l) for k, l in pairs if (l, k) in pairs}
    if len(links) != len(pairs):
        return None
    return links


def _identified_shadow(Ubar: ph.UncertaintySpec, i: int):
    """Shadow of block i when the coupling only equates whole blocks offset-wise."""
    links = _equality_links(Ubar)
    if links is None:
        return None
    offsets = [off for off, _ in Ubar.blocks]
    owner = np.repeat(np.arange(Ubar.m), [ln for _, ln in Ubar.blocks])
    parent = list(range(Ubar.m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k, l in links:
        bk, bl = owner[k], owner[l]
        if k - offsets[bk] != l - offsets[bl] or Ubar.blocks[bk][1] != Ubar.blocks[bl][1]:
            return None
        parent[find(bk)] = find(bl)
    group = [j for j in range(Ubar.m) if find(j) == find(i)]
    p = Ubar.blocks[i][1]
    # every coordinate of each linked block must be tied, otherwise the shadow is larger
    for j in group:
        if j == i:
            continue
        tied = {k - offsets[owner[k]] for k, l in links if owner[k] == j}
        if len(tied) != p:
            return None
    rows_A, rows_b, balls = [], [], []
    for j in group:
        A, b, bl = ph._parts(Ubar.block_set(j))
        rows_A.append(A)
        rows_b.append(b)
        balls.extend(bl)
    A = np.vstack(rows_A)
    b = np.concatenate(rows_b)
    full_r, scoped = ph._merge_balls(balls, p)
    balls = ([(np.arange(p), full_r)] if full_r is not None else []) + scoped
    return A, b, balls


def block_shadow(Ubar: ph.UncertaintySpec, i: int):
    """Halfspace/ball form of the projection of Ubar onto block i."""
    idx = Ubar.block_index(i)
    A, b, balls = ph._normalized_parts(Ubar)
    if not balls:
        P = ph.project(ph.Polyhedron(A, b), idx)
        return P.A, P.b, []
    ident = _identified_shadow(Ubar, i)
    if ident is not None:
        return ident
    # exact when there is no polyhedral coupling and every block contains 0
    poly_coupling = [a for a in Ubar.coupling_atoms if not isinstance(a, ph.L2Ball)]
    full_balls = [(bi, r) for bi, r in balls if bi.size == Ubar.dim]
    if poly_coupling or len(full_balls) != len(balls):
        raise UnsupportedSet("projection of a set with ball atoms and polyhedral coupling")
    for j in range(Ubar.m):
        if not ph.membership(Ubar.block_set(j), np.zeros(Ubar.blocks[j][1]), 1e-12):
            raise UnsupportedSet("projection with a ball needs 0 in every block")
    Ai, bi, balls_i = ph._normalized_parts(Ubar.block_set(i))
    r = min(r for _, r in full_balls)
    return Ai, bi, balls_i + [(np.arange(idx.size), r)]


# ---------------------------------------------------------------- nesting


def check_nested(U, Ubar, samples: int = 10000, seed: int = 0):
    """Raise NotNested unless Ubar lies inside U.

    Rows of U are checked through support values of Ubar, balls of U through
    the largest partial norm over Ubar; vertices or samples are the fallback.
    """
    A, b, balls = ph._normalized_parts(U)
    for a, bb in zip(A, b):
        v = ph.support_function(Ubar, a)[0]
        if v > bb + 1e-7 * (1 + abs(bb)):
            raise NotNested(f"coupled set leaves U along a row: {v} > {bb}")
    if not balls:
        return
    oracle = _SetOracle(Ubar)
    try:
        for idx, r in balls:
            v = oracle.max_norm(idx)
            if v > r * (1 + 1e-7):
                raise NotNested(f"coupled set leaves a ball of U: {v} > {r}")
        return
    except (UnsupportedSet, UnboundedPolyhedron, DimensionCapExceeded):
        pass
    if Ubar.is_polyhedral() and Ubar.dim <= ph.VERTEX_DIM_CAP:
        V = ph.enumerate_vertices(Ubar.to_polyhedron()).points
        for v in V:
            if not ph.membership(U, v, 1e-7):
                raise NotNested(f"vertex {v} of the coupled set is outside U")
        return
    pts = ph.hit_and_run_sample(Ubar, samples, seed)
    for p in pts:
        if not ph.membership(U, p, 1e-7):
            raise NotNested(f"sample {p} of the coupled set is outside U")


# ---------------------------------------------------------------- RHS family


def _box_gauge_max(Sdown, upper) -> float:
    """max over the box [0, upper] of gauge_{Sdown}."""
    if isinstance(Sdown, ph.DownHullSet):
        m = upper.size
        if m > ph.VERTEX_DIM_CAP:
            raise DimensionCapExceeded(f"{2 ** m} box vertices")
        g = 0.0
        for bits in range(1, 2 ** m):
            v = np.array([(bits >> j) & 1 for j in range(m)], dtype=float) * upper
            g = max(g, ph.gauge(Sdown, v))
        return g
    A, b, balls = _atom_form(Sdown)
    g = 0.0
    for a, bb in zip(A, b):
        val = float(np.maximum(a, 0.0) @ upper)
        if bb > TOL:
            g = max(g, val / bb)
        elif val > 1e-12:
            return math.inf
    for idx, r in balls:
        g = max(g, float(np.linalg.norm(upper[idx])) / r)
    return g


def box_vertex_rho(Sdown, upper) -> float:
    """min over vertices v of [0, upper] of max_scaling_of_point_into(v, Sdown)."""
    m = upper.size
    if m > ph.VERTEX_DIM_CAP:
        raise DimensionCapExceeded(f"{2 ** m} box vertices")
    best = math.inf
    for bits in range(1, 2 ** m):
        v = np.array([(bits >> j) & 1 for j in range(m)], dtype=float) * upper
        if not v.any():
            continue
        best = min(best, ph.max_scaling_of_point_into(v, Sdown))
    return best


def compute_rhs_factors(U: ph.UncertaintySpec, Ubar: ph.UncertaintySpec,
                        check: bool = True, static_only: bool = False) -> ShrinkageReport:
    """All five factors for right-hand-side uncertainty, on down-hulls.

    ``static_only`` skips the box-gauge maxima and leaves the adaptive
    factors as nan.
    """
    if U.dim != Ubar.dim:
        raise ValueError("U and Ubar differ in dimension")
    if U.coupling_atoms:
        raise ValueError("U must be constraint-wise (no coupling atoms)")
    if check:
        check_nested(U, Ubar)
    Ud = ph.down_hull(U)
    Ubd = ph.down_hull(Ubar)
    d = projection_bounds(U)
    dbar = projection_bounds(Ubar)
    ratios = [db / dd for dd, db in zip(d, dbar) if dd > TOL]
    rho_ro = min(ratios) if ratios else 1.0
    gamma_ro = max(ratios) if ratios else 1.0
    del Ud  # U's down-hull is the box [0, d] for scalar blocks
    if static_only:
        return ShrinkageReport(rho_ro, gamma_ro, math.nan, gamma_ro, math.nan,
                               [(float(a), float(c)) for a, c in zip(d, dbar)],
                               {"rho_ro": "lp_computed", "gamma_ro": "lp_computed"}, "rhs")
    g_aro = _box_gauge_max(Ubd, d)
    g_adapt = _box_gauge_max(Ubd, dbar)
    return ShrinkageReport(
        rho_ro=rho_ro,
        gamma_ro=gamma_ro,
        rho_aro=_inv(g_aro) if d.any() else 1.0,
        gamma_aro=gamma_ro,
        rho_adapt=_inv(g_adapt) if dbar.any() else 1.0,
        per_dim=[(float(a), float(c)) for a, c in zip(d, dbar)],
        methods={k: "lp_computed" for k in ("rho_ro", "gamma_ro", "rho_aro", "gamma_aro", "rho_adapt")},
        family="rhs",
    )


# ---------------------------------------------------------------- coefficient family


def compute_coeff_factors(U: ph.UncertaintySpec, Ubar: ph.UncertaintySpec,
                          check: bool = True) -> ShrinkageReport:
    """Factors for coefficient uncertainty; requires 0 in Ubar."""
    if U.blocks != Ubar.blocks:
        raise ValueError("U and Ubar must share the block layout")
    if not ph.membership(Ubar, np.zeros(Ubar.dim), 1e-9):
        raise OriginNotContained("translate the sets so that 0 lies in the coupled set")
    if check:
        check_nested(U, Ubar)
    m = U.m
    r, s = [], []
    for i in range(m):
        Ui = U.block_set(i)
        shadow_form = block_shadow(Ubar, i)
        r.append(rho_of(_SetOracle(Ui), shadow_form))
        s.append(gamma_of(_atom_form(Ui), _BlockShadowOracle(Ubar, Ubar.block_index(i))))
    U_or = _ProductOracle(U.blocks, [_SetOracle(U.block_set(i)) for i in range(m)])
    Ubar_form = _atom_form(Ubar)
    rho_aro = rho_of(U_or, Ubar_form)
    gamma_aro = gamma_of(_atom_form(U), _SetOracle(Ubar))
    shadows = _ProductOracle(Ubar.blocks, [_BlockShadowOracle(Ubar, Ubar.block_index(i)) for i in range(m)])
    rho_adapt = rho_of(shadows, Ubar_form)
    return ShrinkageReport(
        rho_ro=min(r),
        gamma_ro=max(s),
        rho_aro=rho_aro,
        gamma_aro=gamma_aro,
        rho_adapt=rho_adapt,
        per_dim=list(zip(r, s)),
        methods={k: "lp_computed" for k in ("rho_ro", "gamma_ro", "rho_aro", "gamma_aro", "rho_adapt")},
        family="coeff",
    )


# ---------------------------------------------------------------- translation


def translate_atom(atom, shift):
    """Atom describing {u - shift : u in atom}."""
    if isinstance(atom, ph.Halfspaces):
        return ph.Halfspaces(atom.A, atom.b - atom.A @ shift)
    if isinstance(atom, ph.Box):
        return ph.Box(atom.lower - shift, atom.upper - shift)
    if isinstance(atom, ph.BudgetRow):
        return ph.BudgetRow(atom.weights, atom.limit - atom.weights @ shift)
    if isinstance(atom, ph.L2Ball):
        if np.any(shift != 0):
            raise UnsupportedSet("origin-centred balls cannot be translated")
        return atom
    raise TypeError(atom)


def translate_spec(S: ph.UncertaintySpec, shift) -> ph.UncertaintySpec:
    shift = np.asarray(shift, dtype=float)
    cw = tuple(tuple(translate_atom(a, shift[S.block_index(i)]) for a in atoms)
               for i, atoms in enumerate(S.cw_atoms))
    cp = tuple(translate_atom(a, shift) for a in S.coupling_atoms)
    return ph.UncertaintySpec(S.dim, S.blocks, cw, cp)


def translate_by_symmetry_point(U: ph.UncertaintySpec, Ubar: ph.UncertaintySpec, point=None):
    """Shift both sets so the coupled set contains the origin.

    A user-supplied ``point`` is used as-is.  If the coupled set misses the
    origin but contains the lower corner of its bounding box, that corner is
    used: the shifted set then sits in the nonnegative orthant with 0 in it.
    Otherwise the symmetry point of the coupled set is used.
    """
    if point is not None:
        u_s = np.asarray(point, dtype=float)
    else:
        u_s = None
        if not ph.membership(Ubar, np.zeros(Ubar.dim), 1e-12):
            lo = -projection_bounds(_negate(Ubar), use_down_hull=False)
            if ph.membership(Ubar, lo, 1e-9):
                u_s = lo
        if u_s is None:
            u_s, _ = ph.symmetry_point(Ubar.to_polyhedron())
    return translate_spec(U, u_s), translate_spec(Ubar, u_s), u_s


def _negate(S: ph.UncertaintySpec):
    """{-u : u in S} (only used for support queries)."""
    def neg(a):
        if isinstance(a, ph.Halfspaces):
            return ph.Halfspaces(-a.A, a.b)
        if isinstance(a, ph.Box):
            return ph.Box(-a.upper, -a.lower)
        if isinstance(a, ph.BudgetRow):
            return ph.Halfspaces(-a.weights.reshape(1, -1), [a.limit])
        return a
    return ph.UncertaintySpec(S.dim, S.blocks, tuple(tuple(neg(a) for a in atoms) for atoms in S.cw_atoms),
                              tuple(neg(a) for a in S.coupling_atoms))


# ---------------------------------------------------------------- closed forms


def closed_form_q_norm(alpha: float, beta: float, m: int, q: float) -> float:
    """rho_adapt of {0 <= u <= alpha, |u|_q <= beta} in R^m."""
    top = alpha * m ** (1.0 / q)
    if not (alpha > 0 and alpha * (1 - 1e-12) <= beta <= top * (1 + 1e-12)):
        raise ParameterOutOfRange(f"need alpha <= beta <= alpha m^(1/q); got {alpha}, {beta}, {top}")
    return beta / top


# ---------------------------------------------------------------- bound checks


@dataclass
class SandwichCheck:
    name: str
    lower: float
    value: float
    upper: float
    passed: bool

    @property
    def slack(self):
        return min(self.value - self.lower, self.upper - self.value)


@dataclass
class BoundVerdict:
    checks: List[SandwichCheck]

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def lines(self):
        out = []
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            out.append(f"{flag} {c.name}: {c.lower:.6g} <= {c.value:.6g} <= {c.upper:.6g}")
        return out


def _positive(name, z):
    if z is None:
        return None
    if not (math.isfinite(z) and z > 0):
        raise AssumptionViolated(f"{name} = {z} must be positive and finite")
    return z


def bound_check(report: ShrinkageReport, z: Dict[str, float], tol: float = 1e-6,
                orthant: bool = True) -> BoundVerdict:
    """Check the objective ratios in ``z`` against the factor sandwiches.

    ``z`` may hold any of ``z_ro, z_cp, z_aro, z_acp``.  The right-hand-side
    family is a minimisation, the coefficient family a maximisation.
    """
    z_ro = _positive("z_ro", z.get("z_ro"))
    z_cp = _positive("z_cp", z.get("z_cp"))
    z_aro = _positive("z_aro", z.get("z_aro"))
    z_acp = _positive("z_acp", z.get("z_acp"))
    rp = report
    checks = []

    def add(name, lo, val, hi):
        checks.append(SandwichCheck(name, lo, val, hi, lo - tol <= val <= hi + tol))

    if rp.family == "rhs":
        if z_ro and z_cp:
            add("static coupled/constraint-wise", rp.rho_ro, z_cp / z_ro, rp.gamma_ro)
        if z_aro and z_acp:
            add("adaptive coupled/constraint-wise", rp.rho_aro, z_acp / z_aro, rp.gamma_aro)
        if z_cp and z_acp:
            add("adaptive/static coupled", rp.rho_adapt, z_acp / z_cp, math.inf)
        add("rho_adapt >= rho_aro/gamma_ro", rp.rho_aro / rp.gamma_ro if rp.gamma_ro > 0 else 0.0,
            rp.rho_adapt, math.inf)
        m = len(rp.per_dim)
        add("rho_adapt >= 1/m", 1.0 / m, rp.rho_adapt, math.inf)
        add("factor order", 0.0, rp.rho_ro, rp.gamma_ro)
        add("factor order (adaptive)", 0.0, rp.rho_aro, rp.gamma_aro)
    else:
        if z_ro and z_cp:
            add("static coupled/constraint-wise", _inv(rp.gamma_ro), z_cp / z_ro, _inv(rp.rho_ro))
        if z_aro and z_acp:
            add("adaptive coupled/constraint-wise", _inv(rp.gamma_aro), z_acp / z_aro, _inv(rp.rho_aro))
        if z_cp and z_acp:
            add("adaptive/static coupled", 0.0, z_acp / z_cp, _inv(rp.rho_adapt))
        if rp.rho_aro > 0:
            add("1/rho_adapt <= gamma_ro/rho_aro", 0.0, _inv(rp.rho_adapt), rp.gamma_ro / rp.rho_aro)
        if orthant:
            mp = z.get("mp")
            if mp:
                add("1/rho_adapt <= mp", 0.0, _inv(rp.rho_adapt), float(mp))
    return BoundVerdict(checks)

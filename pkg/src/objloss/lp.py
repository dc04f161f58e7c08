"""Dense primal simplex kernel.

Solves small and medium dense LPs (up to NETLIB sizes of a few hundred
rows/columns) with a two-phase tableau simplex.  The pivot rule starts as
Dantzig and falls back to Bland's rule after ``2 * (rows + cols)``
iterations so that degenerate instances cannot cycle.  Everything is
deterministic: identical inputs produce bit-identical solutions.

The module also provides a lexicographic two-stage solve (minimize a
secondary objective over the optimal face of a primary one) and a
brute-force vertex enumerator used as an independent test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

try:
    from numba import njit as _njit

    def _jit(fn):
        return _njit(cache=True, nogil=True)(fn)
except ImportError:  # pragma: no cover - numba is a hard dep, but degrade gracefully
    def _jit(fn):
        return fn

LE = "<="
GE = ">="
EQ = "="
_SENSES = (LE, GE, EQ)

#: absolute row-violation tolerance, applied after rows are scaled by their
#: max-abs coefficient (i.e. effectively relative to the row norm)
FEAS_TOL = 1e-8
#: reduced-cost threshold below which a column is not worth entering
COST_TOL = 1e-9
#: smallest pivot magnitude accepted in the ratio test
PIVOT_TOL = 1e-9

_OPTIMAL, _UNBOUNDED, _ITER_LIMIT = 0, 2, 3


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class NumericalFailureError(RuntimeError):
    """Solver gave up (iteration cap hit or tolerances inconsistent)."""

    def __init__(self, message, iterations=None):
        if iterations is not None:
            message = f"{message} (after {iterations} iterations)"
        super().__init__(message)
        self.iterations = iterations


@dataclass(eq=False)
class LpModel:
    """Dense LP feasible set: ``row_coeffs @ x  (<=|>=|=)  rhs``, ``lb <= x <= ub``.

    Instances are immutable by convention once constructed; the solver caches
    the standard-form tableau skeleton on first use, so concurrent solves over
    one model are safe.
    """

    row_coeffs: np.ndarray  # (num_rows, num_vars)
    row_senses: tuple
    rhs: np.ndarray
    lower_bounds: np.ndarray  # -inf allowed
    upper_bounds: np.ndarray  # +inf allowed
    _std: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.row_coeffs = np.atleast_2d(np.asarray(self.row_coeffs, dtype=float))
        if self.row_coeffs.size == 0:
            self.row_coeffs = self.row_coeffs.reshape(0, len(np.atleast_1d(self.lower_bounds)))
        self.rhs = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        self.lower_bounds = np.atleast_1d(np.asarray(self.lower_bounds, dtype=float))
        self.upper_bounds = np.atleast_1d(np.asarray(self.upper_bounds, dtype=float))
        self.row_senses = tuple(self.row_senses)
        m, n = self.row_coeffs.shape
        if n == 0 or n != len(self.lower_bounds) or n != len(self.upper_bounds):
            raise ValueError(
                f"bound arrays must match {n} variables "
                f"(got {len(self.lower_bounds)} lower / {len(self.upper_bounds)} upper)"
            )
        if m != len(self.rhs) or m != len(self.row_senses):
            raise ValueError(
                f"need one sense and one rhs per row: {m} rows, "
                f"{len(self.row_senses)} senses, {len(self.rhs)} rhs values"
            )
        for s in self.row_senses:
            if s not in _SENSES:
                raise ValueError(f"unknown row sense {s!r}; expected one of {_SENSES}")
        if not np.all(np.isfinite(self.row_coeffs)):
            raise ValueError("row coefficients must be finite")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("rhs must be finite")
        if np.any(np.isnan(self.lower_bounds)) or np.any(np.isnan(self.upper_bounds)):
            raise ValueError("bounds may be infinite but not NaN")
        if np.any(self.lower_bounds > self.upper_bounds):
            j = int(np.argmax(self.lower_bounds > self.upper_bounds))
            raise ValueError(
                f"variable {j}: lower bound {self.lower_bounds[j]} exceeds "
                f"upper bound {self.upper_bounds[j]}"
            )

    @property
    def num_vars(self):
        return self.row_coeffs.shape[1]

    @property
    def num_rows(self):
        return self.row_coeffs.shape[0]

    def _standard_form(self):
        if self._std is None:
            self._std = _build_standard_form(self)
        return self._std


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Outcome of a solve; ``point``/``value`` are present iff status is OPTIMAL."""

    status: LpStatus
    point: np.ndarray | None = None
    value: float | None = None


def box(lower, upper):
    """LpModel for a pure box ``lower <= x <= upper`` (no general rows)."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    n = len(lower)
    return LpModel(np.zeros((0, n)), (), np.zeros(0), lower, upper)


@dataclass(eq=False)
class _StandardForm:
    """min-form skeleton: ``A y = b`` with ``y >= 0``, ``b >= 0``, rows scaled."""

    tableau: np.ndarray      # (m+1, ncols+1): rows, zero objective row, rhs col
    basis0: np.ndarray       # initial basis (slacks / artificials)
    art_start: int           # first artificial column
    ncols: int               # columns excluding rhs
    num_art: int
    # original-variable reconstruction: x_j = shift_j + sign_j*y[pos_j] - y[neg_j]
    shift: np.ndarray
    sign: np.ndarray
    pos_col: np.ndarray
    neg_col: np.ndarray      # -1 when the variable has no negative part
    bland_after: int
    max_iter: int
    phase1_tol: float


def _build_standard_form(model):
    n = model.num_vars
    shift = np.zeros(n)
    sign = np.ones(n)
    pos_col = np.zeros(n, dtype=np.int64)
    neg_col = np.full(n, -1, dtype=np.int64)

    col = 0
    upper_rows = []  # (column, rhs) pairs for finite-width bound rows
    for j in range(n):
        lo, hi = model.lower_bounds[j], model.upper_bounds[j]
        if np.isfinite(lo):
            # x = lo + y, y >= 0; finite width adds the row y <= hi - lo
            shift[j], sign[j], pos_col[j] = lo, 1.0, col
            if np.isfinite(hi):
                upper_rows.append((col, hi - lo))
            col += 1
        elif np.isfinite(hi):
            # x = hi - y, y >= 0
            shift[j], sign[j], pos_col[j] = hi, -1.0, col
            col += 1
        else:
            # free: x = y+ - y-
            pos_col[j] = col
            neg_col[j] = col + 1
            col += 2
    n_struct = col

    m = model.num_rows + len(upper_rows)
    A = np.zeros((m, n_struct))
    b = np.zeros(m)
    senses = []
    m0 = model.num_rows
    if m0:
        A[:m0, pos_col] = model.row_coeffs * sign[None, :]
        free = np.flatnonzero(neg_col >= 0)
        if free.size:
            A[:m0, neg_col[free]] = -model.row_coeffs[:, free]
        b[:m0] = model.rhs - model.row_coeffs @ shift
        senses.extend(model.row_senses)
    for k, (c_idx, ub) in enumerate(upper_rows):
        i = m0 + k
        A[i, c_idx] = 1.0
        b[i] = ub
        senses.append(LE)

    # scale rows to unit max-abs coefficient so FEAS_TOL acts per row norm
    if m:
        s = np.max(np.abs(A), axis=1)
        nz = s > 0.0
        A[nz] /= s[nz, None]
        b[nz] /= s[nz]
        neg = b < 0.0
        A[neg] *= -1.0
        b[neg] *= -1.0
        flip = {LE: GE, GE: LE, EQ: EQ}
        senses = [flip[t] if f else t for t, f in zip(senses, neg)]

    n_slack = sum(1 for s in senses if s != EQ)
    art_rows = [i for i, s in enumerate(senses) if s != LE]
    num_art = len(art_rows)
    ncols = n_struct + n_slack + num_art
    art_start = n_struct + n_slack

    T = np.zeros((m + 1, ncols + 1))
    T[:m, :n_struct] = A
    T[:m, ncols] = b
    basis0 = np.empty(m, dtype=np.int64)
    s_col = n_struct
    a_col = art_start
    for i in range(m):
        if senses[i] == LE:
            T[i, s_col] = 1.0
            basis0[i] = s_col
            s_col += 1
        elif senses[i] == GE:
            T[i, s_col] = -1.0
            s_col += 1
            T[i, a_col] = 1.0
            basis0[i] = a_col
            a_col += 1
        else:
            T[i, a_col] = 1.0
            basis0[i] = a_col
            a_col += 1

    size = m + ncols
    b_max = float(np.max(b)) if m else 0.0
    return _StandardForm(
        tableau=T,
        basis0=basis0,
        art_start=art_start,
        ncols=ncols,
        num_art=num_art,
        shift=shift,
        sign=sign,
        pos_col=pos_col,
        neg_col=neg_col,
        bland_after=2 * size,
        max_iter=50 * max(size, 1),
        phase1_tol=FEAS_TOL * (1.0 + b_max) * max(1.0, np.sqrt(m)),
    )


def _simplex_body(T, basis, limit_col, art_start, kick_art, bland_after, max_iter):
    """Pivot loop shared by both phases.  Returns (status, iterations).

    Minimizes; ``T`` holds reduced costs in its last row and rhs in its last
    column.  Columns at or beyond ``limit_col`` never enter the basis.  With
    ``kick_art`` set, any basic artificial with a nonzero entry in the
    entering column leaves first (zero-length step), which keeps artificials
    pinned at zero during phase two.
    """
    m = T.shape[0] - 1
    ncol = T.shape[1]
    rhs = ncol - 1
    for it in range(max_iter):
        # entering column: Dantzig first, Bland once degeneracy is likely
        jin = -1
        if it < bland_after:
            best = -COST_TOL
            for j in range(limit_col):
                c = T[m, j]
                if c < best:
                    best = c
                    jin = j
        else:
            for j in range(limit_col):
                if T[m, j] < -COST_TOL:
                    jin = j
                    break
        if jin < 0:
            return _OPTIMAL, it

        # leaving row
        rout = -1
        if kick_art:
            for r in range(m):
                if basis[r] >= art_start and abs(T[r, jin]) > PIVOT_TOL:
                    rout = r
                    break
        if rout < 0:
            best_ratio = np.inf
            for r in range(m):
                a = T[r, jin]
                if a > PIVOT_TOL:
                    ratio = T[r, rhs] / a
                    if ratio < best_ratio - 1e-12 or (
                        ratio < best_ratio + 1e-12
                        and rout >= 0
                        and basis[r] < basis[rout]
                    ):
                        best_ratio = ratio
                        rout = r
            if rout < 0:
                return _UNBOUNDED, it

        piv = T[rout, jin]
        for k in range(ncol):
            T[rout, k] /= piv
        for r in range(m + 1):
            if r != rout:
                f = T[r, jin]
                if f != 0.0:
                    for k in range(ncol):
                        T[r, k] -= f * T[rout, k]
                    T[r, jin] = 0.0
        basis[rout] = jin
    return _ITER_LIMIT, max_iter


_simplex = _jit(_simplex_body)


def _price_out(T, basis, cost):
    """Install ``cost`` as the objective row and zero its basic components."""
    m = T.shape[0] - 1
    T[m, :-1] = cost
    T[m, -1] = 0.0
    for r in range(m):
        cb = cost[basis[r]]
        if cb != 0.0:
            T[m, :] -= cb * T[r, :]


def _struct_cost(std, c_min):
    """Map a minimization objective over original x to standard-form columns."""
    cost = np.zeros(std.ncols)
    cost[std.pos_col] = std.sign * c_min
    neg = np.flatnonzero(std.neg_col >= 0)
    if neg.size:
        cost[std.neg_col[neg]] = -c_min[neg]
    return cost


def _run_two_phase(std, c_min):
    """Run both phases on a prepared skeleton; returns (status, point, iterations)."""
    T = std.tableau.copy()
    basis = std.basis0.copy()
    iters = 0

    if std.num_art > 0:
        cost1 = np.zeros(std.ncols)
        cost1[std.art_start:] = 1.0
        _price_out(T, basis, cost1)
        status, it = _simplex(
            T, basis, std.art_start, std.art_start, False, std.bland_after, std.max_iter
        )
        iters += it
        if status == _ITER_LIMIT:
            raise NumericalFailureError("phase-1 iteration cap exceeded", iters)
        if -T[-1, -1] > std.phase1_tol:
            return LpStatus.INFEASIBLE, None, iters

    _price_out(T, basis, _struct_cost(std, c_min))
    status, it = _simplex(
        T, basis, std.art_start, std.art_start, True, std.bland_after, std.max_iter
    )
    iters += it
    if status == _ITER_LIMIT:
        raise NumericalFailureError("phase-2 iteration cap exceeded", iters)
    if status == _UNBOUNDED:
        return LpStatus.UNBOUNDED, None, iters

    y = np.zeros(std.ncols)
    y[basis] = T[: len(basis), -1]
    x = std.shift + std.sign * y[std.pos_col]
    neg = std.neg_col >= 0
    if np.any(neg):
        x[neg] -= y[std.neg_col[neg]]
    return LpStatus.OPTIMAL, x, iters


def _solve_standard(model, objective, sense):
    c = np.asarray(objective, dtype=float)
    return _run_two_phase(model._standard_form(), -c if sense == "max" else c)


def solve_lp(model, objective, sense="max"):
    """Optimize ``objective @ x`` over the model's feasible set.

    Args:
        model: the feasible set.
        objective: length ``num_vars`` cost vector.
        sense: ``"max"`` or ``"min"``.

    Returns:
        LpSolution.  When OPTIMAL, ``point`` is a basic optimal point and
        ``value`` equals ``objective @ point`` exactly as recomputed.
    """
    objective = np.asarray(objective, dtype=float)
    if objective.shape != (model.num_vars,):
        raise ValueError(
            f"objective has shape {objective.shape}, expected ({model.num_vars},)"
        )
    if not np.all(np.isfinite(objective)):
        raise ValueError("objective must be finite")
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")

    status, x, _ = _solve_standard(model, objective, sense)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status=status)
    return LpSolution(status=LpStatus.OPTIMAL, point=x, value=float(objective @ x))


def _augment_with_face(std, primary, value):
    """Skeleton for ``std`` plus the equality row ``primary @ x = value``.

    Built directly from the cached parent skeleton (no model rebuild); the new
    row gets its own artificial column appended after the parent's.
    """
    g = np.zeros(std.ncols + 1)
    g[std.pos_col] = std.sign * primary
    neg = np.flatnonzero(std.neg_col >= 0)
    if neg.size:
        g[std.neg_col[neg]] = -primary[neg]
    rhs = value - primary @ std.shift
    s = np.max(np.abs(g))
    if s > 0.0:
        g /= s
        rhs /= s
    if rhs < 0.0:
        g = -g
        rhs = -rhs

    m = std.tableau.shape[0] - 1
    ncols = std.ncols + 1
    T = np.zeros((m + 2, ncols + 1))
    T[:m, : std.ncols] = std.tableau[:m, : std.ncols]
    T[:m, ncols] = std.tableau[:m, std.ncols]
    T[m, : std.ncols] = g[: std.ncols]
    T[m, ncols - 1] = 1.0  # artificial for the face row
    T[m, ncols] = rhs
    basis0 = np.append(std.basis0, ncols - 1)

    size = (m + 1) + ncols
    return _StandardForm(
        tableau=T,
        basis0=basis0,
        art_start=std.art_start,
        ncols=ncols,
        num_art=std.num_art + 1,
        shift=std.shift,
        sign=std.sign,
        pos_col=std.pos_col,
        neg_col=std.neg_col,
        bland_after=2 * size,
        max_iter=50 * size,
        phase1_tol=max(std.phase1_tol, FEAS_TOL * (1.0 + rhs) * np.sqrt(m + 1.0)),
    )


def solve_second_stage(model, primary_obj, secondary_obj):
    """Minimize ``secondary_obj`` over the set of maximizers of ``primary_obj``.

    The stage-one optimal value is imposed as an equality row (the solver's
    per-row feasibility tolerance absorbs stage-one roundoff), then the
    secondary objective is minimized.  Stage-one INFEASIBLE/UNBOUNDED statuses
    propagate unchanged.
    """
    stage1 = solve_lp(model, primary_obj, "max")
    if stage1.status is not LpStatus.OPTIMAL:
        return stage1
    return _second_stage_from(model, primary_obj, stage1, secondary_obj)


def _second_stage_from(model, primary_obj, stage1, secondary_obj):
    secondary_obj = np.asarray(secondary_obj, dtype=float)
    if secondary_obj.shape != (model.num_vars,):
        raise ValueError(
            f"secondary objective has shape {secondary_obj.shape}, "
            f"expected ({model.num_vars},)"
        )
    std = _augment_with_face(
        model._standard_form(), np.asarray(primary_obj, dtype=float), stage1.value
    )
    status, x, _ = _run_two_phase(std, secondary_obj)
    if status is LpStatus.INFEASIBLE:
        # the stage-one point satisfies the face row, so this can only be
        # a tolerance breakdown
        raise NumericalFailureError(
            "second stage reported infeasible although stage one was optimal"
        )
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status=status)
    return LpSolution(status=LpStatus.OPTIMAL, point=x, value=float(secondary_obj @ x))


def enumerate_vertices(model, *, _guard=True):
    """All basic feasible points of a small model, for cross-checking.

    Brute force over every ``num_vars``-subset of constraint hyperplanes, so
    it is guarded to ``num_vars <= 6`` and ``num_rows + finite bounds <= 24``.
    Points are deduplicated within 1e-9 and returned in lexicographic order.
    """
    n = model.num_vars
    fin_lo = np.isfinite(model.lower_bounds)
    fin_hi = np.isfinite(model.upper_bounds)
    n_bound = int(fin_lo.sum() + fin_hi.sum())
    if _guard and (n > 6 or model.num_rows + n_bound > 24):
        raise ValueError(
            f"enumerate_vertices is limited to <=6 vars and <=24 hyperplanes "
            f"(got {n} vars, {model.num_rows + n_bound} hyperplanes)"
        )

    normals = [model.row_coeffs]
    offsets = [model.rhs]
    for j in np.flatnonzero(fin_lo):
        e = np.zeros(n)
        e[j] = 1.0
        normals.append(e[None, :])
        offsets.append(np.array([model.lower_bounds[j]]))
    for j in np.flatnonzero(fin_hi):
        e = np.zeros(n)
        e[j] = 1.0
        normals.append(e[None, :])
        offsets.append(np.array([model.upper_bounds[j]]))
    P = np.vstack(normals)
    q = np.concatenate(offsets)
    norms = np.linalg.norm(P, axis=1)
    keep = norms > 0.0
    P, q = P[keep] / norms[keep, None], q[keep] / norms[keep]

    K = len(P)
    if K < n:
        return []
    combos = np.array(list(combinations(range(K), n)), dtype=np.int64)
    mats = P[combos]  # (C, n, n)
    dets = np.abs(np.linalg.det(mats))
    ok = dets > 1e-10
    if not np.any(ok):
        return []
    pts = np.linalg.solve(mats[ok], q[combos[ok]][:, :, None])[:, :, 0]

    # feasibility within the solver's row tolerance
    tol_rows = FEAS_TOL * (1.0 + np.linalg.norm(model.row_coeffs, axis=1))
    feas = np.ones(len(pts), dtype=bool)
    if model.num_rows:
        vals = pts @ model.row_coeffs.T
        for i, s in enumerate(model.row_senses):
            if s == LE:
                feas &= vals[:, i] <= model.rhs[i] + tol_rows[i]
            elif s == GE:
                feas &= vals[:, i] >= model.rhs[i] - tol_rows[i]
            else:
                feas &= np.abs(vals[:, i] - model.rhs[i]) <= tol_rows[i]
    feas &= np.all(pts >= model.lower_bounds - FEAS_TOL, axis=1)
    feas &= np.all(pts <= model.upper_bounds + FEAS_TOL, axis=1)
    pts = pts[feas]
    if len(pts) == 0:
        return []

    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    unique = [pts[0]]
    for p in pts[1:]:
        if np.max(np.abs(p - unique[-1])) > 1e-9:
            unique.append(p)
    return unique

"""Dense linear programming and a central/deep-cut ellipsoid method.

The simplex solver is a two-phase tableau method with Bland's rule.  It runs
either in floating point or, for small test oracles, in exact rational
arithmetic (``method="exact"``) using :class:`fractions.Fraction` entries in
object arrays.  Large problems can be routed to HiGHS through
:func:`scipy.optimize.linprog` (``method="highs"``), which ``"auto"`` does
above a size threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolation, DimensionError

SENSES = ("<=", "=", ">=")

FEAS_TOL = 1e-9
DUALITY_TOL = 1e-7
# rows * columns above which "auto" hands the problem to HiGHS
AUTO_SIMPLEX_LIMIT = 60_000


def _as_matrix(x, exact):
    if exact:
        arr = np.array(x, dtype=object)
    else:
        arr = np.asarray(x, dtype=float)
    return arr


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``sense`` objective·x subject to per-row ``row_senses`` and x >= lower bounds.

    A lower bound of ``-inf`` makes the variable free.
    """

    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    row_senses: tuple
    variable_lower_bounds: np.ndarray | None = None
    sense: str = "max"

    def __post_init__(self):
        exact = any(
            isinstance(v, np.ndarray) and v.dtype == object
            for v in (self.objective, self.constraint_matrix, self.rhs)
        )
        c = _as_matrix(self.objective, exact).reshape(-1)
        A = _as_matrix(self.constraint_matrix, exact)
        b = _as_matrix(self.rhs, exact).reshape(-1)
        if A.size == 0:
            A = A.reshape(b.shape[0], c.shape[0])
        if A.ndim != 2:
            raise DimensionError("constraint_matrix must be two-dimensional")
        senses = tuple(self.row_senses)
        if A.shape != (b.shape[0], c.shape[0]) or len(senses) != b.shape[0]:
            raise DimensionError(
                f"inconsistent LP shapes: A{A.shape}, b{b.shape}, c{c.shape}, {len(senses)} senses"
            )
        bad = [s for s in senses if s not in SENSES]
        if bad:
            raise DimensionError(f"unknown row sense {bad[0]!r}")
        if self.sense not in ("max", "min"):
            raise DimensionError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if self.variable_lower_bounds is None:
            lb = np.zeros(c.shape[0])
        else:
            lb = np.asarray(self.variable_lower_bounds, dtype=float).reshape(-1)
            if lb.shape != c.shape:
                raise DimensionError("variable_lower_bounds length must match objective")
        if not exact:
            for name, arr in (("objective", c), ("constraint_matrix", A), ("rhs", b)):
                if not np.all(np.isfinite(arr)):
                    raise DimensionError(f"{name} has non-finite entries")
        if np.any(np.isnan(lb)) or np.any(lb == np.inf):
            raise DimensionError("lower bounds must be finite or -inf")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "row_senses", senses)
        object.__setattr__(self, "variable_lower_bounds", lb)

    @property
    def shape(self):
        return self.constraint_matrix.shape


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str  # optimal | infeasible | unbounded | numerical_failure
    primal: np.ndarray | None = None
    dual: np.ndarray | None = None
    value: float | None = None
    dual_value: float | None = None
    iterations: int = 0
    method: str = "simplex"

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def primal_residual(lp: LinearProgram, x) -> float:
    """Largest constraint or bound violation of ``x``."""
    x = np.asarray(x, dtype=float)
    A = lp.constraint_matrix.astype(float)
    ax = A @ x
    b = lp.rhs.astype(float)
    worst = 0.0
    for i, s in enumerate(lp.row_senses):
        if s == "<=":
            worst = max(worst, ax[i] - b[i])
        elif s == ">=":
            worst = max(worst, b[i] - ax[i])
        else:
            worst = max(worst, abs(ax[i] - b[i]))
    lb = lp.variable_lower_bounds
    fin = np.isfinite(lb)
    if fin.any():
        worst = max(worst, float(np.max(lb[fin] - x[fin], initial=0.0)))
    return float(worst)


def complementary_slackness_residual(lp: LinearProgram, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = lp.constraint_matrix.astype(float)
    slack = lp.rhs.astype(float) - A @ x
    worst = float(np.max(np.abs(slack * y), initial=0.0))
    reduced = lp.objective.astype(float) - A.T @ y
    lb = lp.variable_lower_bounds
    fin = np.isfinite(lb)
    worst = max(worst, float(np.max(np.abs(reduced[fin] * (x[fin] - lb[fin])), initial=0.0)))
    if (~fin).any():
        worst = max(worst, float(np.max(np.abs(reduced[~fin]), initial=0.0)))
    return worst


# ---------------------------------------------------------------------------
# tableau simplex


def _tableau_simplex(A, b, c, exact, max_iter, unit_cols=None):
    """Maximize c·x s.t. A x = b, x >= 0, with b >= 0.

    ``unit_cols`` names zero-cost columns forming an identity block; when
    given, phase 1 is skipped and they start as the basis.
    Returns (status, x, y, iterations) where y are the equality-row duals.
    """
    m, n = A.shape
    zero = Fraction(0) if exact else 0.0
    piv_tol = 0 if exact else 1e-11
    opt_tol = 0 if exact else 1e-11
    dtype = object if exact else float

    n_art = 0 if unit_cols is not None else m
    T = np.empty((m + 1, n + n_art + 1), dtype=dtype)
    T[...] = zero
    T[:m, :n] = A
    for i in range(n_art):
        T[i, n + i] = Fraction(1) if exact else 1.0
    T[:m, -1] = b
    basis = list(unit_cols) if unit_cols is not None else list(range(n, n + m))
    dual_cols = list(basis)

    def pivot(r, col):
        row = T[r] / T[r, col]
        colv = T[:, col].copy()
        T[...] = T - np.outer(colv, row)
        T[r] = row
        basis[r] = col
        if not exact:
            T[np.abs(T) < 1e-14] = 0.0

    def run(eligible, iters):
        while True:
            if iters >= max_iter:
                return "numerical_failure", iters
            obj = T[m, :eligible]
            cand = np.nonzero(obj < -opt_tol)[0]
            if cand.size == 0:
                return "optimal", iters
            col = int(cand[0])  # Bland: lowest index
            colv = T[:m, col]
            rows = np.nonzero(colv > piv_tol)[0]
            if rows.size == 0:
                return "unbounded", iters
            ratios = [T[i, -1] / colv[i] for i in rows]
            best = min(ratios)
            if not exact:
                tie = best + 1e-12 * (1 + abs(best))
                ties = [int(rows[k]) for k, v in enumerate(ratios) if v <= tie]
            else:
                ties = [int(rows[k]) for k, v in enumerate(ratios) if v == best]
            r = min(ties, key=lambda i: basis[i])
            pivot(r, col)
            iters += 1

    iters = 0
    if n_art:
        # phase 1: maximize -sum(artificials)
        T[m, :] = zero
        T[m, :n] = -T[:m, :n].sum(axis=0)
        T[m, -1] = -T[:m, -1].sum()
        status, iters = run(n, 0)
        if status == "numerical_failure":
            return status, None, None, iters
        scale = 1.0 if exact else max(1.0, float(np.max(np.abs(b), initial=0.0)))
        infeas = -T[m, -1]
        if (exact and infeas > 0) or (not exact and infeas > FEAS_TOL * scale):
            return "infeasible", None, None, iters
        # drive zero-level artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= n:
                nz = np.nonzero(np.abs(T[i, :n]) > (0 if exact else 1e-9))[0]
                if nz.size:
                    pivot(i, int(nz[0]))
    # phase 2
    cost = np.empty(n + n_art, dtype=dtype)
    cost[...] = zero
    cost[:n] = c
    cb = np.array([cost[j] for j in basis], dtype=dtype)
    T[m, :-1] = cb @ T[:m, :-1] - cost
    T[m, -1] = cb @ T[:m, -1]
    status, iters = run(n, iters)
    if status != "optimal":
        return status, None, None, iters
    x = np.empty(n, dtype=dtype)
    x[...] = zero
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i, -1]
    y = T[m, dual_cols].copy()
    return "optimal", x, y, iters


def _standardize(lp: LinearProgram, exact: bool):
    """Map to max c'x', A'x' = b', x' >= 0, b' >= 0 and record the back-map."""
    one = Fraction(1) if exact else 1.0
    s = 1 if lp.sense == "max" else -1
    A = lp.constraint_matrix
    b = lp.rhs
    c = lp.objective
    lb = lp.variable_lower_bounds
    m, n = A.shape
    cols = []  # (original var, sign)
    for j in range(n):
        if np.isfinite(lb[j]):
            cols.append((j, 1))
        else:
            cols.append((j, 1))
            cols.append((j, -1))
    shift = np.where(np.isfinite(lb), lb, 0.0)
    if exact:
        shift_e = np.array([Fraction(v) for v in shift], dtype=object)
        b_shift = b - A.dot(shift_e)
    else:
        shift_e = shift
        b_shift = b - A @ shift
    n_slack = sum(1 for sn in lp.row_senses if sn != "=")
    N = len(cols) + n_slack
    dtype = object if exact else float
    As = np.empty((m, N), dtype=dtype)
    As[...] = Fraction(0) if exact else 0.0
    for k, (j, sg) in enumerate(cols):
        As[:, k] = A[:, j] * sg
    cs = np.empty(N, dtype=dtype)
    cs[...] = Fraction(0) if exact else 0.0
    for k, (j, sg) in enumerate(cols):
        cs[k] = c[j] * sg * s
    bs = b_shift.copy()
    row_mult = np.ones(m, dtype=int)
    k = len(cols)
    for i, sn in enumerate(lp.row_senses):
        if sn == ">=":
            As[i] = -As[i]
            bs[i] = -bs[i]
            row_mult[i] = -1
        if sn != "=":
            As[i, k] = one
            k += 1
        if bs[i] < 0:
            As[i] = -As[i]
            bs[i] = -bs[i]
            row_mult[i] = -row_mult[i]
    return As, bs, cs, cols, shift_e, row_mult, s


def _solve_simplex(lp: LinearProgram, exact: bool, max_iter):
    if exact:
        lp = _to_exact(lp)
    As, bs, cs, cols, shift, row_mult, s = _standardize(lp, exact)
    m, N = As.shape
    if max_iter is None:
        max_iter = max(5_000, 50 * (m + N))
    unit_cols = None
    if all(sn == "<=" for sn in lp.row_senses) and np.all(row_mult == 1):
        unit_cols = list(range(N - m, N))
    status, xs, ys, iters = _tableau_simplex(As, bs, cs, exact, max_iter, unit_cols)
    method = "exact" if exact else "simplex"
    if status != "optimal":
        return LpSolution(status=status, iterations=iters, method=method)
    x = np.array(shift, dtype=object if exact else float).copy()
    for k, (j, sg) in enumerate(cols):
        x[j] = x[j] + sg * xs[k]
    y = np.array([row_mult[i] * ys[i] * s for i in range(m)], dtype=object if exact else float)
    value = lp.objective.dot(x)
    dual_value = _dual_value(lp, y)
    if exact:
        return LpSolution("optimal", x, y, value, dual_value, iters, method)
    sol = LpSolution("optimal", x, y, float(value), float(dual_value), iters, method)
    return _verify(lp, sol)


def _dual_value(lp, y):
    val = lp.rhs.dot(y)
    lb = lp.variable_lower_bounds
    fin = np.isfinite(lb)
    if fin.any():
        red = lp.objective - lp.constraint_matrix.T.dot(y)
        for j in np.nonzero(fin)[0]:
            if lb[j] != 0:
                val = val + (Fraction(lb[j]) if isinstance(red[j], Fraction) else lb[j]) * red[j]
    return val


def _verify(lp, sol):
    scale = 1.0 + float(np.max(np.abs(lp.rhs), initial=0.0)) + float(np.max(np.abs(lp.objective), initial=0.0))
    res = primal_residual(lp, sol.primal)
    gap = abs(sol.value - sol.dual_value)
    if res > 1e3 * FEAS_TOL * scale or gap > DUALITY_TOL * scale:
        return LpSolution("numerical_failure", sol.primal, sol.dual, sol.value, sol.dual_value, sol.iterations, sol.method)
    return sol


def _to_exact(lp: LinearProgram) -> LinearProgram:
    def conv(a):
        a = np.asarray(a)
        out = np.empty(a.shape, dtype=object)
        for idx, v in np.ndenumerate(a):
            out[idx] = v if isinstance(v, Fraction) else Fraction(v)
        return out

    return LinearProgram(
        conv(lp.objective), conv(lp.constraint_matrix), conv(lp.rhs),
        lp.row_senses, lp.variable_lower_bounds, lp.sense,
    )


def _solve_highs(lp: LinearProgram):
    from scipy.optimize import linprog

    A = lp.constraint_matrix.astype(float)
    b = lp.rhs.astype(float)
    s = 1.0 if lp.sense == "max" else -1.0
    f = -s * lp.objective.astype(float)
    senses = np.array(lp.row_senses)
    ub = senses != "="
    sign = np.where(senses == ">=", -1.0, 1.0)
    A_ub = (A[ub] * sign[ub, None]) if ub.any() else None
    b_ub = (b[ub] * sign[ub]) if ub.any() else None
    eq = ~ub
    A_eq = A[eq] if eq.any() else None
    b_eq = b[eq] if eq.any() else None
    lb = lp.variable_lower_bounds
    bounds = [(None if not np.isfinite(v) else float(v), None) for v in lb]
    res = linprog(f, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution("infeasible", method="highs")
    if res.status == 3:
        return LpSolution("unbounded", method="highs")
    if res.status != 0:
        return LpSolution("numerical_failure", method="highs")
    x = np.asarray(res.x, dtype=float)
    y = np.zeros(A.shape[0])
    # marginals are d(min f)/d(b); value = -s * min f
    if ub.any():
        y[ub] = -s * sign[ub] * res.ineqlin.marginals
    if eq.any():
        y[eq] = -s * res.eqlin.marginals
    value = float(lp.objective @ x)
    sol = LpSolution("optimal", x, y, value, float(_dual_value(lp, y)), int(res.nit), "highs")
    return _verify(lp, sol)


def solve_lp(lp: LinearProgram, method: str = "auto", max_iter: int | None = None) -> LpSolution:
    """Solve ``lp``.

    ``method`` is ``"simplex"`` (dense Bland-rule tableau), ``"exact"``
    (same algorithm in rational arithmetic), ``"highs"`` or ``"auto"``.
    An optimal status is only reported after the primal residual and the
    primal/dual gap have been re-checked; otherwise the status is
    ``"numerical_failure"``.
    """
    if method == "auto":
        m, n = lp.shape
        method = "simplex" if m * n <= AUTO_SIMPLEX_LIMIT else "highs"
    if method == "simplex":
        return _solve_simplex(lp, False, max_iter)
    if method == "exact":
        return _solve_simplex(lp, True, max_iter)
    if method == "highs":
        return _solve_highs(lp)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------------------
# ellipsoid method


@dataclass(frozen=True, eq=False)
class SeparationAnswer:
    kind: str  # "inside" | "cut"
    cut_normal: np.ndarray | None = None
    cut_offset: float = 0.0
    payload: object = None

    @classmethod
    def inside(cls, payload=None):
        return cls("inside", payload=payload)

    @classmethod
    def cut(cls, normal, offset, payload=None):
        return cls("cut", np.asarray(normal, dtype=float), float(offset), payload)


@dataclass(eq=False)
class EllipsoidResult:
    feasible: bool
    point: np.ndarray | None
    cuts: list = field(default_factory=list)
    iterations: int = 0
    box_cuts: int = 0


def ellipsoid_iteration_cap(dimension: int, radius: float, volume_tol: float) -> int:
    d = dimension
    base_cap = math.ceil(2 * d * d * math.log(radius / volume_tol)) + d
    volume_cap = math.ceil(2 * d * (d + 1) * math.log(math.sqrt(d) * radius / volume_tol)) + d
    return max(base_cap, volume_cap)


def ellipsoid_feasibility(
    oracle: Callable[[np.ndarray], SeparationAnswer],
    dimension: int,
    radius: float,
    volume_tol: float,
    center: Sequence[float] | None = None,
    max_iter: int | None = None,
) -> EllipsoidResult:
    """Find a point accepted by ``oracle`` inside the infinity-ball of ``radius``.

    Points outside the box are cut by the box itself and never shown to the
    oracle.  Every oracle cut is returned, also on success, so callers can
    rebuild the compact LP spanned by the cuts.
    """
    d = int(dimension)
    if d < 1:
        raise DimensionError("dimension must be >= 1")
    if max_iter is None:
        max_iter = ellipsoid_iteration_cap(d, radius, volume_tol)
    c = np.zeros(d) if center is None else np.array(center, dtype=float)
    cuts: list[SeparationAnswer] = []
    box_cuts = 0

    if d == 1:
        lo, hi = -radius, radius
        for it in range(max_iter):
            x = np.array([(lo + hi) / 2])
            ans = oracle(x)
            if ans.kind == "inside":
                return EllipsoidResult(True, x, cuts, it + 1, 0)
            _check_cut(ans, x)
            cuts.append(ans)
            a, b = float(ans.cut_normal[0]), ans.cut_offset
            if a > 0:
                hi = min(hi, b / a)
            elif a < 0:
                lo = max(lo, b / a)
            else:
                return EllipsoidResult(False, None, cuts, it + 1, 0)
            if hi - lo < volume_tol:
                return EllipsoidResult(False, None, cuts, it + 1, 0)
        return EllipsoidResult(False, None, cuts, max_iter, 0)

    P = np.eye(d) * (radius * radius * d)
    for it in range(max_iter):
        out = np.abs(c) > radius
        if out.any():
            i = int(np.argmax(np.abs(c)))
            a = np.zeros(d)
            a[i] = np.sign(c[i])
            b = radius
            box_cuts += 1
        else:
            ans = oracle(c.copy())
            if ans.kind == "inside":
                return EllipsoidResult(True, c.copy(), cuts, it + 1, box_cuts)
            _check_cut(ans, c)
            cuts.append(ans)
            a, b = ans.cut_normal, ans.cut_offset
        Pa = P @ a
        aPa = float(a @ Pa)
        if aPa <= 0 or not np.isfinite(aPa):
            return EllipsoidResult(False, None, cuts, it + 1, box_cuts)
        root = math.sqrt(aPa)
        alpha = max(0.0, (float(a @ c) - b) / root)
        if alpha >= 1.0:
            return EllipsoidResult(False, None, cuts, it + 1, box_cuts)
        g = Pa / root
        c = c - (1 + d * alpha) / (d + 1) * g
        P = (d * d / (d * d - 1.0)) * (1 - alpha * alpha) * (
            P - (2 * (1 + d * alpha) / ((d + 1) * (1 + alpha))) * np.outer(g, g)
        )
        P = (P + P.T) / 2
    return EllipsoidResult(False, None, cuts, max_iter, box_cuts)


def _check_cut(ans: SeparationAnswer, x):
    if ans.kind != "cut" or ans.cut_normal is None:
        raise ContractViolation(f"separation oracle returned kind={ans.kind!r} without a cut")
    lhs = float(np.dot(ans.cut_normal, x))
    if lhs < ans.cut_offset - 1e-9 * (1 + abs(ans.cut_offset)):
        raise ContractViolation(
            f"cut does not separate the query point: a.x={lhs:.6g} < b={ans.cut_offset:.6g}"
        )


def solve_packing(P, max_iter: int = 10_000):
    """max 1ᵀy s.t. P y <= 1, y >= 0 for a strictly positive matrix P.

    A lean Bland-rule tableau for the matrix-game LP: the slack basis is
    feasible, so there is no phase 1.  Returns (status, y, u) with u the row
    duals; both optima share the value 1ᵀy = 1ᵀu.
    """
    P = np.asarray(P, dtype=float)
    m, n = P.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = P
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = -1.0
    basis = np.arange(n, n + m)
    for _ in range(max_iter):
        neg = np.flatnonzero(T[m, : n + m] < -1e-12)
        if neg.size == 0:
            y = np.zeros(n + m)
            y[basis] = T[:m, -1]
            return "optimal", y[:n], T[m, n : n + m].copy()
        col = neg[0]
        colv = T[:m, col]
        rows = np.flatnonzero(colv > 1e-12)
        if rows.size == 0:
            return "unbounded", None, None
        ratios = T[rows, -1] / colv[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1 + abs(best))]
        r = ties[np.argmin(basis[ties])]
        row = T[r] / T[r, col]
        T -= np.outer(T[:, col], row)
        T[r] = row
        basis[r] = col
    return "numerical_failure", None, None

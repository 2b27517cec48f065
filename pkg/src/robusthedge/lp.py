"""Two-phase simplex with primal/dual certificates.

Exact mode pivots over GMP rationals with Bland's rule, so it terminates and
every reported number is exact.  Float mode uses Dantzig pricing with a
``1e-9`` tolerance and falls back to Bland when it stalls.

Every result carries evidence that can be checked by substitution:

* optimal: a primal point ``x`` and row duals ``dual`` with reduced costs
  ``c - A^T dual`` whose signs match the variable bounds;
* infeasible: a Farkas vector ``farkas`` over the rows;
* unbounded: a feasible ``x`` and an improving recession direction ``ray``.

The ``verify_*`` helpers check those claims independently of the solver.
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import gmpy2
import numpy as np

from .exceptions import DimensionError
from .numeric import FLOAT_TOL

LE, GE, EQ = "<=", ">=", "="
MIN, MAX = "min", "max"


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """``sense c.x`` subject to ``A x (rel) b`` and ``lo <= x <= hi``.

    ``bounds`` holds one ``(lo, hi)`` pair per variable, ``None`` meaning
    infinite; it defaults to ``(0, None)`` everywhere.
    """

    c: list
    A: list = field(default_factory=list)
    b: list = field(default_factory=list)
    relations: list = field(default_factory=list)
    bounds: list = None
    sense: str = MIN

    def __post_init__(self):
        self.c = list(self.c)
        n = len(self.c)
        self.A = [list(row) for row in self.A]
        self.b = list(self.b)
        self.relations = list(self.relations)
        if self.bounds is None:
            self.bounds = [(0, None)] * n
        self.bounds = [tuple(bd) for bd in self.bounds]
        if self.sense not in (MIN, MAX):
            raise DimensionError(f"unknown sense {self.sense!r}")
        m = len(self.A)
        if len(self.b) != m or len(self.relations) != m:
            raise DimensionError(
                f"{m} constraint rows but {len(self.b)} right-hand sides "
                f"and {len(self.relations)} relations")
        for i, row in enumerate(self.A):
            if len(row) != n:
                raise DimensionError(f"row {i} has {len(row)} entries, expected {n}")
        if len(self.bounds) != n or any(len(bd) != 2 for bd in self.bounds):
            raise DimensionError("bounds must be one (lo, hi) pair per variable")
        for rel in self.relations:
            if rel not in (LE, GE, EQ):
                raise DimensionError(f"unknown relation {rel!r}")

    @property
    def shape(self):
        return len(self.A), len(self.c)


@dataclass
class LPResult:
    status: Status
    mode: str
    x: list = None
    objective: object = None
    dual: list = None
    reduced_costs: list = None
    farkas: list = None
    ray: list = None

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


def _to_mpq(v):
    if isinstance(v, Fraction):
        return gmpy2.mpq(v.numerator, v.denominator)
    if isinstance(v, float):
        return gmpy2.mpq(Fraction(v))
    return gmpy2.mpq(v)


def _to_fraction(v):
    return Fraction(int(v.numerator), int(v.denominator))


class _Tableau:
    """Dense tableau ``[B^-1 A | B^-1 b]`` with the basis header."""

    def __init__(self, T, basis, exact):
        self.T = T
        self.basis = basis
        self.exact = exact
        self.eps = 0 if exact else FLOAT_TOL

    def pivot(self, i, e):
        T = self.T
        T[i] = T[i] / T[i, e]
        col = T[:, e].copy()
        col[i] = 0
        if self.exact:
            rows = np.nonzero(col)[0]
        else:
            rows = np.nonzero(np.abs(col) > 1e-15)[0]
        if len(rows):
            T[rows] -= np.outer(col[rows], T[i])
        if not self.exact:
            T[np.abs(T) < 1e-13] = 0.0
        self.basis[i] = e

    def run(self, cost, allowed, bland):
        """Minimise ``cost`` over the current basis.  Returns ``None`` when
        optimal, or the entering column of an unbounded edge."""
        T, eps = self.T, self.eps
        m, width = T.shape
        ncol = width - 1
        r = cost - cost[self.basis] @ T[:, :ncol]
        dantzig = not bland
        stall = 0
        limit = 50 * (m + ncol) + 1000
        for _ in range(100 * limit):
            cand = np.nonzero(allowed & (r < -eps))[0]
            if len(cand) == 0:
                return None
            if dantzig:
                e = int(cand[np.argmin(r[cand])])
            else:
                e = int(cand[0])
            col = T[:, e]
            rows = np.nonzero(col > eps)[0]
            if len(rows) == 0:
                return e
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            if self.exact:
                ties = rows[ratios == best]
            else:
                ties = rows[ratios <= best + eps]
            if dantzig:
                i = int(ties[np.argmax(col[ties])])
            else:
                i = int(min(ties, key=lambda k: self.basis[k]))
            stall = stall + 1 if (best == 0 if self.exact else best <= eps) else 0
            if dantzig and stall > limit // 10 + 50:
                dantzig = False
            self.pivot(i, e)
            r = r - r[e] * T[i, :ncol]
            if not self.exact:
                r[np.abs(r) < 1e-13] = 0.0
        raise RuntimeError("simplex iteration limit reached")


def solve(lp, mode="exact"):
    """Solve ``lp`` and return an :class:`LPResult` with certificates."""
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    if not isinstance(lp, LinearProgram):
        raise DimensionError("solve expects a LinearProgram")
    exact = mode == "exact"
    conv = _to_mpq if exact else float
    dtype = object if exact else float
    zero = conv(0)
    m, n = lp.shape

    A = [[conv(v) for v in row] for row in lp.A]
    b = [conv(v) for v in lp.b]
    c = [conv(v) for v in lp.c]
    bounds = [(None if lo is None else conv(lo), None if hi is None else conv(hi))
              for lo, hi in lp.bounds]
    sgn = -1 if lp.sense == MAX else 1

    if any(lo is not None and hi is not None and lo > hi for lo, hi in bounds):
        return _finish_infeasible(lp, mode, [zero] * m)

    # x_j = offset_j + sum(sign * y_k) with y >= 0
    var_map, offset, ub_rows = [], [], []
    k = 0
    for lo, hi in bounds:
        if lo is not None:
            var_map.append(((k, 1),))
            offset.append(lo)
            if hi is not None:
                ub_rows.append((k, hi - lo))
            k += 1
        elif hi is not None:
            var_map.append(((k, -1),))
            offset.append(hi)
            k += 1
        else:
            var_map.append(((k, 1), (k + 1, -1)))
            offset.append(zero)
            k += 2
    nstd = k

    rows, rhs, rels = [], [], []
    for i in range(m):
        row = [zero] * nstd
        shift = zero
        for j in range(n):
            a = A[i][j]
            if a:
                shift += a * offset[j]
                for kk, s in var_map[j]:
                    row[kk] += a * s
        rows.append(row)
        rhs.append(b[i] - shift)
        rels.append(lp.relations[i])
    for kk, ub in ub_rows:
        row = [zero] * nstd
        row[kk] = conv(1)
        rows.append(row)
        rhs.append(ub)
        rels.append(LE)
    mm = len(rows)

    flip = []
    for i in range(mm):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
            rels[i] = {LE: GE, GE: LE, EQ: EQ}[rels[i]]
            flip.append(-1)
        else:
            flip.append(1)

    slack_rows = [i for i in range(mm) if rels[i] != EQ]
    art_rows = [i for i in range(mm) if rels[i] != LE]
    nslack, nart = len(slack_rows), len(art_rows)
    ncol = nstd + nslack + nart
    T = np.empty((mm, ncol + 1), dtype=dtype)
    T[:, :] = zero
    if mm:
        T[:, :nstd] = np.array(rows, dtype=dtype).reshape(mm, nstd)
        T[:, -1] = np.array(rhs, dtype=dtype)
    basis = [0] * mm
    init_cols = [0] * mm
    for s, i in enumerate(slack_rows):
        T[i, nstd + s] = conv(1) if rels[i] == LE else conv(-1)
        if rels[i] == LE:
            basis[i] = init_cols[i] = nstd + s
    for a, i in enumerate(art_rows):
        T[i, nstd + nslack + a] = conv(1)
        basis[i] = init_cols[i] = nstd + nslack + a

    tab = _Tableau(T, basis, exact)
    real = np.zeros(ncol, dtype=bool)
    real[: nstd + nslack] = True

    if nart:
        cost1 = np.empty(ncol, dtype=dtype)
        cost1[:] = zero
        cost1[nstd + nslack:] = conv(1)
        tab.run(cost1, np.ones(ncol, dtype=bool), bland=exact)
        w = cost1[tab.basis] @ T[:, -1]
        scale = max([1.0] + [abs(float(v)) for v in rhs])
        if (w > 0) if exact else (w > FLOAT_TOL * scale):
            z = cost1[tab.basis] @ T[:, init_cols]
            farkas = [flip[i] * z[i] for i in range(m)]
            return _finish_infeasible(lp, mode, farkas)
        for i in range(mm):
            if tab.basis[i] >= nstd + nslack:
                cand = np.nonzero(real & (np.abs(T[i, :ncol]) > tab.eps))[0]
                if len(cand):
                    tab.pivot(i, int(cand[0]))

    cost2 = np.empty(ncol, dtype=dtype)
    cost2[:] = zero
    for j in range(n):
        for kk, s in var_map[j]:
            cost2[kk] = sgn * c[j] * s
    unbounded_col = tab.run(cost2, real, bland=exact)

    xs = [zero] * ncol
    for i in range(mm):
        xs[tab.basis[i]] = T[i, -1]
    x = [offset[j] + sum((s * xs[kk] for kk, s in var_map[j]), zero) for j in range(n)]

    out = _to_fraction if exact else float
    if unbounded_col is not None:
        d = [zero] * ncol
        d[unbounded_col] = conv(1)
        for i in range(mm):
            d[tab.basis[i]] = -T[i, unbounded_col]
        ray = [sum((s * d[kk] for kk, s in var_map[j]), zero) for j in range(n)]
        return LPResult(Status.UNBOUNDED, mode, x=[out(v) for v in x],
                        ray=[out(v) for v in ray])

    z = cost2[tab.basis] @ T[:, init_cols] if mm else []
    dual = [sgn * flip[i] * z[i] for i in range(m)]
    reduced = [c[j] - sum((A[i][j] * dual[i] for i in range(m)), zero) for j in range(n)]
    objective = sum((c[j] * x[j] for j in range(n)), zero)
    return LPResult(Status.OPTIMAL, mode,
                    x=[out(v) for v in x],
                    objective=out(objective),
                    dual=[out(v) for v in dual],
                    reduced_costs=[out(v) for v in reduced])


def _finish_infeasible(lp, mode, farkas):
    out = _to_fraction if mode == "exact" else float
    return LPResult(Status.INFEASIBLE, mode, farkas=[out(v) for v in farkas])


# -- independent certificate checks ------------------------------------------

def _row_values(lp, x):
    return [sum(a * v for a, v in zip(row, x)) for row in lp.A]


def verify_feasible(lp, x, tol=0):
    if len(x) != len(lp.c):
        return False
    for (lo, hi), v in zip(lp.bounds, x):
        if lo is not None and v < lo - tol:
            return False
        if hi is not None and v > hi + tol:
            return False
    for val, rel, rhs in zip(_row_values(lp, x), lp.relations, lp.b):
        if rel == LE and val > rhs + tol:
            return False
        if rel == GE and val < rhs - tol:
            return False
        if rel == EQ and abs(val - rhs) > tol:
            return False
    return True


def _dual_signs_ok(lp, y, tol, maximize):
    for rel, v in zip(lp.relations, y):
        # min: >= rows carry y >= 0, <= rows y <= 0; max flips both
        if rel == GE and (v > tol if maximize else v < -tol):
            return False
        if rel == LE and (v < -tol if maximize else v > tol):
            return False
    return True


def dual_bound(lp, y):
    """Lagrangian bound ``b.y + sup/inf over the box of (c - A^T y).x``.

    Returns ``None`` when the bound is infinite (the dual is infeasible).
    """
    maximize = lp.sense == MAX
    total = sum(bi * yi for bi, yi in zip(lp.b, y))
    for j, (lo, hi) in enumerate(lp.bounds):
        r = lp.c[j] - sum(lp.A[i][j] * y[i] for i in range(len(y)))
        if r == 0:
            continue
        # max pushes x_j up when r > 0; min pushes it down
        use_hi = (r > 0) == maximize
        bound = hi if use_hi else lo
        if bound is None:
            return None
        total += r * bound
    return total


def verify_optimal(lp, res, tol=0):
    """Primal feasibility, dual sign pattern and zero duality gap."""
    if res.status is not Status.OPTIMAL:
        return False
    if not verify_feasible(lp, res.x, tol):
        return False
    maximize = lp.sense == MAX
    if not _dual_signs_ok(lp, res.dual, tol, maximize):
        return False
    if tol:
        # tiny reduced costs against an infinite bound are rounding noise
        y = res.dual
        for j, (lo, hi) in enumerate(lp.bounds):
            r = lp.c[j] - sum(lp.A[i][j] * y[i] for i in range(len(y)))
            if abs(r) <= tol:
                continue
            use_hi = (r > 0) == maximize
            if (hi if use_hi else lo) is None:
                return False
        bound = _dual_bound_tol(lp, y, tol)
    else:
        bound = dual_bound(lp, res.dual)
        if bound is None:
            return False
    primal = sum(cj * xj for cj, xj in zip(lp.c, res.x))
    scale = 1 + abs(primal)
    return abs(primal - bound) <= tol * scale


def _dual_bound_tol(lp, y, tol):
    maximize = lp.sense == MAX
    total = sum(bi * yi for bi, yi in zip(lp.b, y))
    for j, (lo, hi) in enumerate(lp.bounds):
        r = lp.c[j] - sum(lp.A[i][j] * y[i] for i in range(len(y)))
        if abs(r) <= tol:
            continue
        use_hi = (r > 0) == maximize
        total += r * (hi if use_hi else lo)
    return total


def verify_farkas(lp, y, tol=0):
    """``y`` proves infeasibility: every feasible x would satisfy
    ``(A^T y).x >= b.y``, yet the box maximum of the left side is smaller."""
    if len(y) != len(lp.A):
        return False
    for lo, hi in lp.bounds:
        if lo is not None and hi is not None and lo > hi:
            return True
    if not _dual_signs_ok(lp, y, tol, maximize=False):
        return False
    n = len(lp.c)
    r = [sum(lp.A[i][j] * y[i] for i in range(len(y))) for j in range(n)]
    box_max = 0
    for rj, (lo, hi) in zip(r, lp.bounds):
        if abs(rj) <= tol:
            continue
        bound = hi if rj > 0 else lo
        if bound is None:
            return False
        box_max += rj * bound
    by = sum(bi * yi for bi, yi in zip(lp.b, y))
    return box_max < by - tol


def verify_unbounded(lp, res, tol=0):
    """Feasible point plus a recession direction that strictly improves."""
    if res.status is not Status.UNBOUNDED:
        return False
    x, d = res.x, res.ray
    if not verify_feasible(lp, x, tol):
        return False
    for (lo, hi), dj in zip(lp.bounds, d):
        if lo is not None and dj < -tol:
            return False
        if hi is not None and dj > tol:
            return False
    for val, rel in zip(_row_values(lp, d), lp.relations):
        if rel == LE and val > tol:
            return False
        if rel == GE and val < -tol:
            return False
        if rel == EQ and abs(val) > tol:
            return False
    gain = sum(cj * dj for cj, dj in zip(lp.c, d))
    return gain > tol if lp.sense == MAX else gain < -tol


def verify(lp, res, tol=0):
    if res.status is Status.OPTIMAL:
        return verify_optimal(lp, res, tol)
    if res.status is Status.INFEASIBLE:
        return verify_farkas(lp, res.farkas, tol)
    return verify_unbounded(lp, res, tol)

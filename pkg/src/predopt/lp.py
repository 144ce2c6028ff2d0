"""LP relaxations: bounded-variable primal simplex on a dense tableau.

Each row ``a.x`` gets a bounded activity variable ``s`` (``a.x - s = 0``), so
every variable in the working problem has finite bounds and the simplex only
ever moves variables between their bounds.  Phase 1 adds one artificial per
row whose starting activity is outside its bounds.

Dantzig pricing is used until a run of degenerate pivots exceeds the stall
threshold; Bland's rule then takes over until the objective moves again.

For large relaxations the same interface can route to the HiGHS dual simplex
shipped with SciPy (``backend="highs"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .milp import Milp

__all__ = ["LpResult", "LpData", "solve_lp", "prepare_lp", "solve_prepared", "FEAS_TOL"]

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
STALL_THRESHOLD = 50
REFACTOR_EVERY = 200
# dense tableau entries above which backend="auto" hands the LP to HiGHS
AUTO_DENSE_LIMIT = 5_000


@dataclass
class LpResult:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    x: np.ndarray | None
    objective: float
    iterations: int = 0
    backend: str = "simplex"

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass
class LpData:
    """Row-scaled LP in maximization form."""

    c: np.ndarray  # maximize c.x
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    sign: float = 1.0  # +1 for maximize, -1 if the source minimized
    dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self):
        return self.A.shape


def prepare_lp(milp: Milp) -> LpData:
    """Scale each row to unit max-abs coefficient and convert to maximization."""
    A = milp.matrix().tocsr().astype(float)
    rlo, rhi = milp.row_bounds()
    if A.shape[0]:
        scale = np.asarray(abs(A).max(axis=1).todense()).ravel()
        scale[scale == 0.0] = 1.0
        inv = 1.0 / scale
        A = sp.diags(inv) @ A
        rlo = rlo * inv
        rhi = rhi * inv
    sign = 1.0 if milp.sense == "maximize" else -1.0
    lo, hi = milp.bounds()
    return LpData(sign * milp.objective_vector(), A.tocsr(), rlo, rhi, lo, hi, sign)


def solve_lp(milp: Milp, backend: str = "auto", lower=None, upper=None) -> LpResult:
    """Solve the continuous relaxation of ``milp``.

    ``lower``/``upper`` override the column bounds (used by branch-and-bound).
    The reported objective is in the MILP's own sense.
    """
    data = prepare_lp(milp)
    return solve_prepared(data, data.lower if lower is None else lower,
                          data.upper if upper is None else upper, backend)


def choose_backend(data: LpData, backend: str, lower, upper) -> str:
    if backend != "auto":
        return backend
    m, n = data.shape
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        return "highs"
    return "simplex" if m * (n + m) <= AUTO_DENSE_LIMIT else "highs"


def solve_prepared(data: LpData, lower, upper, backend: str = "auto") -> LpResult:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    backend = choose_backend(data, backend, lower, upper)
    if np.any(lower > upper + FEAS_TOL):
        return LpResult("infeasible", None, math.nan, 0, backend)
    upper = np.maximum(upper, lower)
    if backend == "simplex":
        res = _simplex(data, lower, upper)
    elif backend == "highs":
        res = _highs(data, lower, upper)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    if res.status == "optimal":
        res.objective = data.sign * float(data.c @ res.x)
    return res


# -- HiGHS ------------------------------------------------------------------------


def _highs(data: LpData, lower, upper) -> LpResult:
    A, rlo, rhi = data.A, data.row_lo, data.row_hi
    eq = np.isfinite(rlo) & np.isfinite(rhi) & (rlo == rhi)
    up = ~eq & np.isfinite(rhi)
    dn = ~eq & np.isfinite(rlo)
    A_ub = sp.vstack([A[up], -A[dn]]).tocsr() if (up.any() or dn.any()) else None
    b_ub = np.concatenate([rhi[up], -rlo[dn]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = rlo[eq] if eq.any() else None
    bounds = np.column_stack([np.where(np.isfinite(lower), lower, -np.inf),
                              np.where(np.isfinite(upper), upper, np.inf)])
    r = linprog(-data.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                method="highs-ds", options={"primal_feasibility_tolerance": FEAS_TOL,
                                            "dual_feasibility_tolerance": OPT_TOL})
    if r.status == 0:
        return LpResult("optimal", np.asarray(r.x, dtype=float), math.nan, int(r.nit), "highs")
    if r.status == 2:
        return LpResult("infeasible", None, math.nan, int(r.nit or 0), "highs")
    if r.status == 3:
        return LpResult("unbounded", None, math.nan, int(r.nit or 0), "highs")
    raise RuntimeError(f"HiGHS failed: {r.message}")


# -- dense bounded simplex ------------------------------------------------------


class _Tableau:
    """State of the bounded primal simplex on ``[A, -I, D] (x, s, r) = 0``."""

    def __init__(self, A: np.ndarray, lo: np.ndarray, hi: np.ndarray, basis: list, x: np.ndarray, n_struct: int):
        self.A = A  # full constraint matrix, kept for refactorization
        self.lo = lo
        self.hi = hi
        self.basis = basis
        self.x = x
        self.n_struct = n_struct
        self.blocked = np.zeros(A.shape[1], dtype=bool)  # columns never allowed to enter
        self.iterations = 0
        self.refactor()

    def refactor(self):
        m = self.A.shape[0]
        if m == 0:
            self.T = np.zeros((0, self.A.shape[1]))
            return
        B = self.A[:, self.basis]
        self.T = np.linalg.solve(B, self.A)
        nonbasic = np.ones(self.A.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        rhs = -self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = np.linalg.solve(B, rhs)

    def run(self, c: np.ndarray, max_iter: int) -> str:
        """Maximize ``c.x``; returns 'optimal' or 'unbounded'."""
        basis = self.basis
        d = c - c[basis] @ self.T if len(basis) else c.copy()
        stall = 0
        since_refactor = 0
        is_basic = np.zeros(len(c), dtype=bool)
        is_basic[basis] = True
        while True:
            if self.iterations >= max_iter:
                raise RuntimeError("simplex iteration limit reached")
            x, lo, hi = self.x, self.lo, self.hi
            at_lo = x <= lo + FEAS_TOL
            at_hi = x >= hi - FEAS_TOL
            free_move = ~is_basic & ~self.blocked & (hi > lo)
            up_ok = free_move & ~at_hi & (d > OPT_TOL)
            dn_ok = free_move & ~at_lo & (d < -OPT_TOL)
            cand = up_ok | dn_ok
            if not cand.any():
                return "optimal"
            bland = stall >= STALL_THRESHOLD
            if bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0 if up_ok[j] else -1.0

            col = self.T[:, j] * direction  # basic vars move by -t * col
            xb = x[basis]
            lb, ub = lo[basis], hi[basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.full(len(basis), np.inf)
                pos = col > PIVOT_TOL
                neg = col < -PIVOT_TOL
                ratios[pos] = (xb[pos] - lb[pos]) / col[pos]
                ratios[neg] = (ub[neg] - xb[neg]) / (-col[neg])
            ratios = np.maximum(ratios, 0.0)
            t_own = hi[j] - lo[j]
            t_row = ratios.min() if len(ratios) else np.inf
            if not math.isfinite(t_own) and not math.isfinite(t_row):
                return "unbounded"
            self.iterations += 1
            if t_own <= t_row:
                t = t_own
                x[basis] = xb - t * col
                x[j] = hi[j] if direction > 0 else lo[j]
                stall = 0 if t > 1e-12 else stall + 1
                continue

            t = t_row
            ties = np.flatnonzero(ratios <= t + 1e-12)
            if bland:
                r = int(ties[np.argmin(np.asarray(basis)[ties])])
            else:
                r = int(ties[np.argmax(np.abs(col[ties]))])
            leaving = basis[r]
            x[basis] = xb - t * col
            x[j] = x[j] + direction * t
            x[leaving] = lo[leaving] if col[r] > 0 else hi[leaving]

            piv = self.T[r, j]
            self.T[r] /= piv
            colj = self.T[:, j].copy()
            colj[r] = 0.0
            self.T -= np.outer(colj, self.T[r])
            d = d - d[j] * self.T[r]
            basis[r] = j
            is_basic[j] = True
            is_basic[leaving] = False
            stall = 0 if t > 1e-12 else stall + 1
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self.refactor()
                d = c - c[basis] @ self.T
                since_refactor = 0


def _simplex(data: LpData, lower, upper) -> LpResult:
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("the built-in simplex needs finite column bounds")
    if data.dense is None:
        data.dense = data.A.toarray()
    A = data.dense
    m, n = A.shape

    # row activity bounds, tightened by what the column bounds allow
    ap, an = np.maximum(A, 0.0), np.minimum(A, 0.0)
    amin = ap @ lower + an @ upper
    amax = ap @ upper + an @ lower
    slo = np.maximum(data.row_lo, amin)
    shi = np.minimum(data.row_hi, amax)
    if np.any(slo > shi + FEAS_TOL):
        return LpResult("infeasible", None, math.nan, 0, "simplex")
    shi = np.maximum(shi, slo)

    x0 = np.where(np.abs(lower) <= np.abs(upper), lower, upper)
    act = A @ x0
    s0 = np.clip(act, slo, shi)
    gap = s0 - act  # r = gap / D with D = sign(gap)
    art_rows = np.flatnonzero(np.abs(gap) > FEAS_TOL)
    k = len(art_rows)

    full = np.zeros((m, n + m + k))
    full[:, :n] = A
    full[:, n:n + m] = -np.eye(m)
    basis = list(range(n, n + m))
    for a, i in enumerate(art_rows):
        full[i, n + m + a] = math.copysign(1.0, gap[i])
        basis[i] = n + m + a
    lo = np.concatenate([lower, slo, np.zeros(k)])
    hi = np.concatenate([upper, shi, np.abs(gap[art_rows]) + 1.0])
    x = np.concatenate([x0, s0, np.abs(gap[art_rows])])
    tab = _Tableau(full, lo, hi, basis, x, n)
    max_iter = 50 * (n + m + k) + 1000

    if k:
        c1 = np.zeros(n + m + k)
        c1[n + m:] = -1.0
        tab.run(c1, max_iter)
        infeas = float(np.sum(tab.x[n + m:]))
        if infeas > FEAS_TOL * max(1, k):
            return LpResult("infeasible", None, math.nan, tab.iterations, "simplex")
        tab.hi[n + m:] = 0.0
        tab.x[n + m:] = 0.0
        tab.blocked[n + m:] = True

    c2 = np.zeros(n + m + k)
    c2[:n] = data.c
    status = tab.run(c2, max_iter)
    if status != "optimal":
        return LpResult(status, None, math.nan, tab.iterations, "simplex")
    tab.refactor()
    xs = np.clip(tab.x[:n], lower, upper)
    return LpResult("optimal", xs, math.nan, tab.iterations, "simplex")

"""Best-bound branch-and-bound over LP relaxations."""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .lp import prepare_lp, solve_prepared
from .milp import Milp

__all__ = ["Solution", "SolveOptions", "Node", "solve_milp", "INT_TOL"]

INT_TOL = 1e-6
ABS_GAP = 1e-9


@dataclass(frozen=True)
class SolveOptions:
    gap: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None
    lp_backend: str = "auto"


@dataclass
class Solution:
    """Result of :func:`solve_milp`.

    ``status`` is one of ``optimal``, ``infeasible``, ``unbounded``,
    ``feasible-gap-limit`` (a node or time limit stopped the search after an
    incumbent was found), ``node-limit`` or ``time-limit`` (stopped with no
    incumbent).
    """

    status: str
    x: np.ndarray | None
    objective: float
    bound: float
    gap: float
    nodes: int
    wall_time: float
    limit: str | None = None
    bound_trace: list = field(default_factory=list, repr=False)
    milp: Milp | None = field(default=None, repr=False)

    @property
    def has_solution(self) -> bool:
        return self.x is not None

    def value(self, name: str) -> float:
        return float(self.x[self.milp.column_index(name)])

    def values(self) -> dict[str, float]:
        return {c.name: float(v) for c, v in zip(self.milp.columns, self.x)}


@dataclass(order=True)
class Node:
    key: tuple
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    parent_bound: float = field(compare=False)
    depth: int = field(compare=False, default=0)


def _gap(bound: float, incumbent: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    diff = max(bound - incumbent, 0.0)
    if diff <= ABS_GAP:
        return 0.0
    return diff / max(abs(incumbent), 1e-10)


def _branch_column(x, mask) -> int | None:
    """Most fractional discrete column, lowest index on ties."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return None
    frac = np.abs(x[idx] - np.round(x[idx]))
    best = frac.max()
    if best <= INT_TOL:
        return None
    dist = np.abs((x[idx] - np.floor(x[idx])) - 0.5)
    cands = idx[dist <= dist.min() + 1e-12]
    return int(cands[0])


def solve_milp(milp: Milp, options: SolveOptions | None = None, **kw) -> Solution:
    """Solve ``milp`` to within the relative gap, or until a limit is hit.

    Works in maximization form internally; bounds and objectives are reported
    in the model's own sense.
    """
    opts = options or SolveOptions(**kw)
    t0 = time.perf_counter()
    data = prepare_lp(milp)
    sign = data.sign
    mask = milp.discrete_mask()
    lo0, hi0 = data.lower.copy(), data.upper.copy()
    # integer columns: round bounds inward
    lo0[mask] = np.ceil(lo0[mask] - INT_TOL)
    hi0[mask] = np.floor(hi0[mask] + INT_TOL)

    def finish(status, x, inc, bound, nodes, limit=None, trace=()):
        obj = sign * inc if x is not None else math.nan
        b = sign * bound if math.isfinite(bound) else sign * bound
        gap = 0.0 if status == "optimal" else _gap(bound, inc)
        return Solution(status, x, obj, b, gap, nodes, time.perf_counter() - t0, limit, list(trace), milp)

    if milp.n_columns == 0:
        return finish("optimal", np.zeros(0), 0.0, 0.0, 0)

    incumbent = -math.inf
    best_x = None
    seq = 0
    heap: list[Node] = []
    heapq.heappush(heap, Node((-math.inf, seq), lo0, hi0, math.inf, 0))
    nodes = 0
    global_bound = math.inf
    trace = []

    while heap:
        # global bound: best open parent bound (the incumbent if nothing better remains)
        top = heap[0].parent_bound
        global_bound = min(global_bound, max(top, incumbent))
        trace.append(global_bound)
        if best_x is not None and global_bound - incumbent <= max(opts.gap * abs(incumbent), ABS_GAP):
            break
        limit = None
        if opts.node_limit is not None and nodes >= opts.node_limit:
            limit = "node-limit"
        elif opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit:
            limit = "time-limit"
        if limit:
            status = "feasible-gap-limit" if best_x is not None else limit
            return finish(status, best_x, incumbent, global_bound, nodes, limit, trace)

        node = heapq.heappop(heap)
        if node.parent_bound <= incumbent + max(opts.gap * abs(incumbent), ABS_GAP) and best_x is not None:
            continue
        nodes += 1
        res = solve_prepared(data, node.lower, node.upper, opts.lp_backend)
        if res.status == "unbounded":
            if nodes == 1:
                return finish("unbounded", None, incumbent, math.inf, nodes, trace=trace)
            raise RuntimeError("unbounded LP below the root node")
        if res.status != "optimal":
            continue
        val = float(data.c @ res.x)
        if best_x is not None and val <= incumbent + max(opts.gap * abs(incumbent), ABS_GAP):
            continue
        j = _branch_column(res.x, mask)
        if j is None:
            if val > incumbent:
                incumbent, best_x = val, res.x.copy()
            continue
        xj = res.x[j]
        down_hi = node.upper.copy()
        down_hi[j] = math.floor(xj)
        up_lo = node.lower.copy()
        up_lo[j] = math.ceil(xj)
        seq += 1
        heapq.heappush(heap, Node((-val, seq), node.lower, down_hi, val, node.depth + 1))
        seq += 1
        heapq.heappush(heap, Node((-val, seq), up_lo, node.upper, val, node.depth + 1))

    if best_x is None:
        return finish("infeasible", None, incumbent, -math.inf, nodes, trace=trace)
    global_bound = min(global_bound, max(heap[0].parent_bound if heap else incumbent, incumbent))
    trace.append(global_bound)
    return finish("optimal", best_x, incumbent, global_bound, nodes, trace=trace)

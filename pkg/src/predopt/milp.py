"""Flat mixed-integer linear program produced by transcription."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

__all__ = ["Column", "Row", "Milp", "KINDS"]

KINDS = ("continuous", "binary", "integer")

# column provenance tags
USER = "user"
NEURON_PRE = "neuron-pre"
NEURON_POST = "neuron-post"
RELU_INDICATOR = "relu-indicator"
INTERVAL_INDICATOR = "interval-indicator"
PREDICTED_OUTPUT = "predicted-output"


@dataclass(frozen=True)
class Column:
    name: str
    lower: float
    upper: float
    kind: str = "continuous"
    tag: str = USER
    owner: int | None = None  # index of the predicted variable whose block this column belongs to

    @property
    def is_discrete(self) -> bool:
        return self.kind != "continuous"


@dataclass(frozen=True)
class Row:
    name: str
    terms: tuple  # ((column index, coefficient), ...)
    sense: str  # '<=', '==', '>='
    rhs: float
    range: float | None = None  # MPS RANGES semantics
    tag: str = USER
    owner: int | None = None

    def activity_bounds(self) -> tuple[float, float]:
        """Interval the row activity must lie in."""
        r, b = self.range, self.rhs
        if r is None:
            if self.sense == "<=":
                return -math.inf, b
            if self.sense == ">=":
                return b, math.inf
            return b, b
        if self.sense == "<=":
            return b - abs(r), b
        if self.sense == ">=":
            return b, b + abs(r)
        return (b, b + r) if r >= 0 else (b + r, b)


class Milp:
    def __init__(self, name: str = "milp"):
        self.name = name
        self.columns: list[Column] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self.sense = "maximize"
        self._col_index: dict[str, int] = {}

    # -- building ----------------------------------------------------------

    def add_column(self, name, lower, upper, kind="continuous", tag=USER, owner=None) -> int:
        if kind not in KINDS:
            raise ValueError(f"unknown column kind {kind!r}")
        if name in self._col_index:
            raise ValueError(f"duplicate column name {name!r}")
        lower, upper = float(lower), float(upper)
        if kind == "binary":
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        if lower > upper:
            raise ValueError(f"column {name!r}: reversed bounds [{lower}, {upper}]")
        j = len(self.columns)
        self.columns.append(Column(name, lower, upper, kind, tag, owner))
        self._col_index[name] = j
        return j

    def add_row(self, terms: Iterable, sense: str, rhs: float, name: str | None = None, *,
                range: float | None = None, tag: str = USER, owner: int | None = None) -> int:
        if sense not in ("<=", "==", ">="):
            raise ValueError(f"unknown row sense {sense!r}")
        merged: dict[int, float] = {}
        for j, a in terms:
            j = int(j)
            if not 0 <= j < len(self.columns):
                raise ValueError(f"row references unknown column {j}")
            merged[j] = merged.get(j, 0.0) + float(a)
        clean = tuple((j, a) for j, a in merged.items() if a != 0.0)
        i = len(self.rows)
        self.rows.append(Row(name or f"r{i}", clean, sense, float(rhs), range, tag, owner))
        return i

    def set_objective(self, terms: Iterable, sense: str = "maximize"):
        if sense not in ("maximize", "minimize"):
            raise ValueError(f"unknown objective sense {sense!r}")
        obj: dict[int, float] = {}
        for j, a in terms:
            obj[int(j)] = obj.get(int(j), 0.0) + float(a)
        self.objective = {j: a for j, a in obj.items() if a != 0.0}
        self.sense = sense

    # -- queries -----------------------------------------------------------

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column_index(self, name: str) -> int:
        return self._col_index[name]

    def discrete_mask(self) -> np.ndarray:
        return np.array([c.is_discrete for c in self.columns], dtype=bool)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([c.lower for c in self.columns], dtype=float)
        hi = np.array([c.upper for c in self.columns], dtype=float)
        return lo, hi

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_columns)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def matrix(self) -> sp.csr_matrix:
        data, ri, ci = [], [], []
        for i, row in enumerate(self.rows):
            for j, a in row.terms:
                ri.append(i)
                ci.append(j)
                data.append(a)
        return sp.csr_matrix((data, (ri, ci)), shape=(self.n_rows, self.n_columns))

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        b = np.array([r.activity_bounds() for r in self.rows], dtype=float).reshape(-1, 2)
        return b[:, 0], b[:, 1]

    def objective_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(a * x[j] for j, a in self.objective.items()))

    def violation(self, x) -> float:
        """Largest bound or row violation of ``x`` (integrality not included)."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.bounds()
        worst = float(np.max(np.maximum(lo - x, x - hi), initial=0.0))
        if self.rows:
            act = self.matrix() @ x
            rlo, rhi = self.row_bounds()
            worst = max(worst, float(np.max(np.maximum(rlo - act, act - rhi), initial=0.0)))
        return max(worst, 0.0)

    def integrality_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        mask = self.discrete_mask()
        if not mask.any():
            return 0.0
        xi = x[mask]
        return float(np.max(np.abs(xi - np.round(xi))))

    def relaxed(self) -> "Milp":
        """Copy with every column continuous."""
        out = self.copy()
        out.columns = [Column(c.name, c.lower, c.upper, "continuous", c.tag, c.owner) for c in self.columns]
        return out

    def copy(self) -> "Milp":
        out = Milp(self.name)
        out.columns = list(self.columns)
        out.rows = list(self.rows)
        out.objective = dict(self.objective)
        out.sense = self.sense
        out._col_index = dict(self._col_index)
        return out

    def block(self, owner: int) -> tuple[list[int], list[int]]:
        """Column and row indices of one predicted variable's auxiliary block."""
        cols = [j for j, c in enumerate(self.columns) if c.owner == owner]
        rows = [i for i, r in enumerate(self.rows) if r.owner == owner]
        return cols, rows

    def summary(self) -> str:
        kinds = {k: sum(c.kind == k for c in self.columns) for k in KINDS}
        return (
            f"{self.name}: {self.n_columns} columns ({kinds['continuous']} continuous, "
            f"{kinds['binary']} binary, {kinds['integer']} integer), {self.n_rows} rows"
        )

    def __repr__(self):
        return f"<Milp {self.summary()}>"

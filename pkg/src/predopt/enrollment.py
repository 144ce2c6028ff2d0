"""Scholarship allocation study.

N admitted students, each with standardized SAT and GPA, share a scholarship
budget of ``0.2 * N * 1e4`` dollars; each offer lies in ``[0, 25000]``.  The
goal is to maximize expected enrollment, where a pre-trained predictor maps
``(sat, gpa, scholarship)`` to an enrollment probability.

Synthetic data
--------------
SAT and GPA z-scores are drawn i.i.d. standard normal.  The ground-truth
enrollment log-odds are::

    1.4 - 0.7 * sat - 0.5 * gpa + 8e-5 * scholarship

so stronger students are less likely to enroll and a full $25,000 offer adds
2.0 to the log-odds.  Because students sit at different points of the
sigmoid, their sensitivity to aid differs.  Training records receive no
offer with probability 0.5 and a uniform offer on ``[0, 25000]`` otherwise;
the matriculation label is a Bernoulli draw from the ground truth.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .bnb import SolveOptions, solve_milp
from .fitting import fit_linear_regression, fit_logistic_regression, fit_neural_network
from .model import Fixed, OptimizationModel, VarRef
from .predictors import LogisticRegressionModel, Predictor, predict
from .transcription import Interval, TranscriptionOptions, logit_error_bound, transcribe_model

__all__ = [
    "MAX_AWARD",
    "FEATURES",
    "GROUND_TRUTH",
    "StudentRecord",
    "BenchmarkConfig",
    "BenchmarkResult",
    "budget_for",
    "ground_truth_predictor",
    "generate_students",
    "generate_training_records",
    "train_predictor",
    "build_enrollment_model",
    "heuristic_allocate",
    "evaluate_allocation",
    "solve_enrollment",
    "logit_error_budget",
    "pct_reduction",
    "run_benchmark",
    "summarize",
    "write_csv",
]

MAX_AWARD = 25_000.0
FEATURES = ("sat", "gpa", "scholarship")
GROUND_TRUTH = {"intercept": 1.4, "sat": -0.7, "gpa": -0.5, "scholarship": 8e-5}
TRAINING_SIZE = 20_000


@dataclass
class StudentRecord:
    sat: float
    gpa: float
    scholarship: float = 0.0
    enroll_prob: float = math.nan


def budget_for(n: int) -> float:
    # 0.2 * N * 1e4, written so the product is exact
    return 2000.0 * n


def ground_truth_predictor() -> Predictor:
    g = GROUND_TRUTH
    return Predictor(
        "ground_truth",
        LogisticRegressionModel([g["sat"], g["gpa"], g["scholarship"]], g["intercept"]),
        FEATURES,
    )


def generate_students(n: int, seed: int) -> tuple[list[StudentRecord], Predictor]:
    """Admitted pool with zero scholarship and ground-truth probabilities at $0."""
    if n < 1:
        raise ValueError("need at least one student")
    rng = np.random.default_rng(seed)
    sat = rng.standard_normal(n)
    gpa = rng.standard_normal(n)
    truth = ground_truth_predictor()
    students = [StudentRecord(float(s), float(g)) for s, g in zip(sat, gpa)]
    for st in students:
        st.enroll_prob = predict(truth, [st.sat, st.gpa, 0.0])
    return students, truth


def generate_training_records(n: int = TRAINING_SIZE, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Historical records ``X = [sat, gpa, scholarship]`` and 0/1 matriculation labels."""
    rng = np.random.default_rng(seed)
    sat = rng.standard_normal(n)
    gpa = rng.standard_normal(n)
    offered = rng.random(n) < 0.5
    aid = np.where(offered, rng.uniform(0.0, MAX_AWARD, n), 0.0)
    g = GROUND_TRUTH
    logit = g["intercept"] + g["sat"] * sat + g["gpa"] * gpa + g["scholarship"] * aid
    p = 1.0 / (1.0 + np.exp(-logit))
    labels = (rng.random(n) < p).astype(float)
    return np.column_stack([sat, gpa, aid]), labels


def train_predictor(family: str, param: int | None = None, seed: int = 0,
                    n_records: int = TRAINING_SIZE, nn_epochs: int = 60) -> Predictor:
    """Fit ``linreg``, ``logreg`` or ``nn`` (``param`` = hidden layers of 10) on synthetic records."""
    X, y = generate_training_records(n_records, seed)
    if family == "linreg":
        return fit_linear_regression(X, y, FEATURES, id="linreg")
    if family == "logreg":
        return fit_logistic_regression(X, y, FEATURES, id="logreg")
    if family == "nn":
        h = int(param or 1)
        return fit_neural_network(X, y, hidden=(10,) * h, feature_names=FEATURES, id=f"nn{h}",
                                  seed=seed, epochs=nn_epochs)
    raise ValueError(f"unknown family {family!r}")


def build_enrollment_model(students: Sequence[StudentRecord], predictor: Predictor,
                           budget: float | None = None) -> OptimizationModel:
    if tuple(predictor.feature_names) != FEATURES:
        raise ValueError(f"predictor features {predictor.feature_names} do not match {FEATURES}")
    n = len(students)
    budget = budget_for(n) if budget is None else float(budget)
    m = OptimizationModel(f"enroll_{n}")
    xs = [m.add_regular_variable(f"x{i}", 0.0, MAX_AWARD) for i in range(n)]
    ys = [
        m.add_predicted_variable(f"y{i}", predictor, [Fixed(s.sat), Fixed(s.gpa), VarRef(x)])
        for i, (s, x) in enumerate(zip(students, xs))
    ]
    m.add_constraint([(x, 1.0) for x in xs], "<=", budget, name="budget")
    m.set_objective([(y, 1.0) for y in ys], "maximize")
    return m


def heuristic_allocate(students: Sequence[StudentRecord], predictor: Predictor, budget: float,
                       cap: float = MAX_AWARD) -> np.ndarray:
    """Full awards to the most aid-sensitive students until the budget runs out.

    Sensitivity is ``g(s, g, cap) - g(s, g, 0)``; ties keep input order.  The
    student after the last full award receives the remainder.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    gain = np.array([predict(predictor, [s.sat, s.gpa, cap]) - predict(predictor, [s.sat, s.gpa, 0.0])
                     for s in students])
    order = np.argsort(-gain, kind="stable")
    alloc = np.zeros(len(students))
    left = float(budget)
    for i in order:
        if left <= 0:
            break
        give = min(cap, left)
        alloc[i] = give
        left -= give
    return alloc


def evaluate_allocation(students: Sequence[StudentRecord], allocation, predictor: Predictor) -> float:
    """Expected enrollment under the exact predictor."""
    return float(sum(predict(predictor, [s.sat, s.gpa, float(x)]) for s, x in zip(students, allocation)))


@dataclass
class EnrollmentSolve:
    status: str
    allocation: np.ndarray
    predicted: np.ndarray  # y_i values at the MILP solution
    milp_objective: float
    time_s: float
    nodes: int
    gap: float


def solve_enrollment(students, predictor, delta: int = 10, budget: float | None = None,
                     options: SolveOptions | None = None, strengthen: bool = True) -> EnrollmentSolve:
    t0 = time.perf_counter()
    model = build_enrollment_model(students, predictor, budget)
    milp = transcribe_model(model, TranscriptionOptions(delta=delta, strengthen_logit=strengthen))
    sol = solve_milp(milp, options or SolveOptions())
    n = len(students)
    if sol.x is None:
        return EnrollmentSolve(sol.status, np.full(n, math.nan), np.full(n, math.nan), math.nan,
                               time.perf_counter() - t0, sol.nodes, sol.gap)
    alloc = np.array([sol.value(f"x{i}") for i in range(n)])
    alloc = np.clip(alloc, 0.0, MAX_AWARD)
    ys = np.array([sol.value(f"y{i}") for i in range(n)])
    return EnrollmentSolve(sol.status, alloc, ys, sol.objective, time.perf_counter() - t0, sol.nodes, sol.gap)


def logit_error_budget(students, predictor: Predictor, delta: int) -> float:
    """Sum over students of the worst-case interval approximation error."""
    m = predictor.model
    if not isinstance(m, LogisticRegressionModel):
        return 0.0
    total = 0.0
    for s in students:
        base = m.intercept + m.coefficients[0] * s.sat + m.coefficients[1] * s.gpa
        top = base + m.coefficients[2] * MAX_AWARD
        if top != base:
            total += logit_error_bound(Interval(min(base, top), max(base, top)), delta)
    return total


# -- benchmark harness -----------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkConfig:
    families: tuple = ("linreg", "logreg:5", "logreg:10", "nn:1")
    sizes: tuple = (50, 100, 500, 1000)
    trials: int = 5
    seed: int = 0
    training_size: int = TRAINING_SIZE
    nn_epochs: int = 60
    gap: float = 1e-6
    time_limit: float | None = 600.0
    node_limit: int | None = None


@dataclass
class BenchmarkResult:
    family: str
    params: str
    N: int
    trial: int
    seed: int
    status: str
    time_s: float
    milp_objective: float
    exact_objective: float
    heuristic_objective: float
    pct_reduction_declination: float
    rmse_probability: float


CSV_COLUMNS = [f for f in BenchmarkResult.__dataclass_fields__]


def parse_family(label: str) -> tuple[str, int | None]:
    name, _, arg = label.partition(":")
    if name not in ("linreg", "logreg", "nn"):
        raise ValueError(f"unknown family {label!r}")
    if name == "linreg":
        return name, None
    default = 10 if name == "logreg" else 1
    return name, int(arg) if arg else default


def pct_reduction(n: int, optimized: float, heuristic: float) -> float:
    decl_h = n - heuristic
    decl_o = n - optimized
    return 100.0 * (decl_h - decl_o) / decl_h if decl_h > 0 else 0.0


def run_trial(family: str, param, predictor: Predictor, n: int, trial: int, seed: int,
              options: SolveOptions) -> BenchmarkResult:
    students, _ = generate_students(n, seed)
    delta = param if family == "logreg" else 10
    res = solve_enrollment(students, predictor, delta=delta, options=options)
    budget = budget_for(n)
    heur = evaluate_allocation(students, heuristic_allocate(students, predictor, budget), predictor)
    if np.all(np.isfinite(res.allocation)):
        exact = evaluate_allocation(students, res.allocation, predictor)
        truth = np.array([predict(predictor, [s.sat, s.gpa, x]) for s, x in zip(students, res.allocation)])
        rmse = float(np.sqrt(np.mean((res.predicted - truth) ** 2)))
        red = pct_reduction(n, exact, heur)
    else:
        exact = rmse = red = math.nan
    params = "" if family == "linreg" else (f"delta={param}" if family == "logreg" else f"hidden={param}")
    return BenchmarkResult(family, params, n, trial, seed, res.status, res.time_s, res.milp_objective,
                           exact, heur, red, rmse)


def run_benchmark(config: BenchmarkConfig, progress=None) -> list[BenchmarkResult]:
    """Sweep families x sizes x trials; trial ``t`` uses student seed ``config.seed + t``."""
    options = SolveOptions(gap=config.gap, time_limit=config.time_limit, node_limit=config.node_limit)
    rows = []
    for label in config.families:
        family, param = parse_family(label)
        predictor = train_predictor(family, param, seed=config.seed, n_records=config.training_size,
                                    nn_epochs=config.nn_epochs)
        for n in config.sizes:
            for t in range(config.trials):
                row = run_trial(family, param, predictor, n, t, config.seed + t, options)
                rows.append(row)
                if progress:
                    progress(row)
    rows.sort(key=lambda r: (config.families.index(_label_of(r, config.families)), r.N, r.trial))
    return rows


def _label_of(row: BenchmarkResult, labels) -> str:
    for s in labels:
        fam, param = parse_family(s)
        if fam == row.family and (fam == "linreg" or row.params.endswith(f"={param}")):
            return s
    return labels[0]


def summarize(rows: Iterable[BenchmarkResult]) -> list[dict]:
    """Mean of each numeric column per (family, params, N)."""
    groups: dict[tuple, list[BenchmarkResult]] = {}
    for r in rows:
        groups.setdefault((r.family, r.params, r.N), []).append(r)
    out = []
    numeric = ["time_s", "milp_objective", "exact_objective", "heuristic_objective",
               "pct_reduction_declination", "rmse_probability"]
    for (fam, params, n), rs in groups.items():
        rec = {"family": fam, "params": params, "N": n, "trials": len(rs),
               "optimal": sum(r.status == "optimal" for r in rs)}
        for k in numeric:
            rec[k] = float(np.mean([getattr(r, k) for r in rs]))
        out.append(rec)
    return out


def write_csv(rows, path, columns=None):
    rows = list(rows)
    dicts = [asdict(r) if hasattr(r, "__dataclass_fields__") else r for r in rows]
    columns = columns or (list(dicts[0]) if dicts else CSV_COLUMNS)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for d in dicts:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in d.items()})

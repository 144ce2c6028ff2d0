import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from predopt.milp import Milp  # noqa: E402


def random_milp(rng, n_cols, n_rows, discrete, integer_data=False, int_range=(0, 1), cont_range=(-5.0, 5.0),
                sense=None, planted=0.8):
    """Random bounded program; ``discrete`` marks which columns are integral.

    Rows mix the three senses and sometimes carry a range.  With
    ``integer_data`` every coefficient, bound and right-hand side is an integer.
    With probability ``planted`` the rows are built around a random point of
    the domain so the instance is feasible; otherwise right-hand sides are
    drawn freely and the instance may be infeasible.
    """
    plant = rng.random() < planted
    milp = Milp("rand")
    for j in range(n_cols):
        if discrete[j]:
            lo, hi = int_range
            kind = "binary" if (lo, hi) == (0, 1) else "integer"
            milp.add_column(f"c{j}", lo, hi, kind)
        else:
            lo = float(rng.integers(-5, 1)) if integer_data else float(rng.uniform(cont_range[0], 0))
            hi = lo + (float(rng.integers(1, 6)) if integer_data else float(rng.uniform(0.5, cont_range[1])))
            milp.add_column(f"c{j}", lo, hi)
    for i in range(n_rows):
        if integer_data:
            coefs = rng.integers(-6, 7, size=n_cols).astype(float)
        else:
            coefs = np.round(rng.normal(size=n_cols), 3)
            coefs[rng.random(n_cols) < 0.3] = 0.0
        lo, hi = milp.bounds()
        spread = float(np.abs(coefs) @ (hi - lo)) / 2
        s = ("<=", ">=", "==", "<=")[rng.integers(0, 4)]
        if plant:
            if i == 0:
                x0 = np.where(discrete, [float(rng.integers(lo[j], hi[j] + 1)) if discrete[j] else 0.0
                                         for j in range(n_cols)], rng.uniform(lo, hi))
            slack = 0.0 if s == "==" else rng.uniform(0.0, 0.5) * spread
            if integer_data:
                slack = float(math.floor(slack))
            act = float(coefs @ x0)
            rhs = act + slack if s == "<=" else act - slack
        else:
            if s == "==" and not integer_data and any(discrete):
                s = "<="  # free equality rows on mixed instances are almost never feasible
            mid = float(coefs @ ((lo + hi) / 2))
            shift = rng.uniform(-0.4, 0.6) * spread
            rhs = mid + shift if s == "<=" else mid - shift
            if integer_data:
                rhs = float(math.floor(rhs)) if s != ">=" else float(math.ceil(rhs))
        rng_width = None
        if s != "==" and rng.random() < 0.25:
            rng_width = float(rng.integers(1, 6)) if integer_data else float(rng.uniform(0.5, 3.0))
        milp.add_row([(j, a) for j, a in enumerate(coefs)], s, rhs, f"r{i}", range=rng_width)
    c = rng.integers(-9, 10, size=n_cols).astype(float) if integer_data else np.round(rng.normal(size=n_cols), 3)
    milp.set_objective(list(enumerate(c)), sense or ("maximize" if rng.random() < 0.5 else "minimize"))
    return milp


def milp_arrays(milp):
    A = milp.matrix().toarray()
    rlo, rhi = milp.row_bounds()
    lo, hi = milp.bounds()
    return milp.objective_vector(), A, rlo, rhi, lo, hi


def export_corpus():
    """Named MILPs covering every column kind, row sense and block type."""
    from predopt.enrollment import budget_for, build_enrollment_model, generate_students
    from predopt.model import Fixed, OptimizationModel
    from predopt.predictors import LinearRegressionModel, Predictor, random_network
    from predopt.transcription import TranscriptionOptions, transcribe_model

    out = []
    rng = np.random.default_rng(404)
    for k in range(6):
        n = int(rng.integers(3, 8))
        disc = [bool(b) for b in rng.random(n) < 0.5]
        out.append((f"random{k}", random_milp(rng, n, int(rng.integers(1, 5)), disc)))
    for k in range(3):
        n = int(rng.integers(2, 5))
        out.append((f"integer{k}", random_milp(rng, n, 3, [True] * n, integer_data=True, int_range=(-3, 4))))

    free = Milp("free_bounds")
    a = free.add_column("a", -math.inf, math.inf)
    b = free.add_column("b", -math.inf, 4.0)
    c = free.add_column("c", 1.0, math.inf)
    free.add_row([(a, 1.0), (b, 1.0)], "==", 2.0, "sum")
    free.add_row([(a, 1.0), (c, -1.0)], "<=", 0.0, "order", range=5.0)
    free.add_row([(c, 1.0)], ">=", 1.5, "floor", range=2.0)
    free.set_objective([(a, 1.0), (c, -2.0)], "minimize")
    out.append(("free_bounds", free))

    empty = Milp("no_objective")
    e = empty.add_column("e", 0, 5, "integer")
    empty.add_row([(e, 2.0)], ">=", 3.0, "need")
    out.append(("no_objective", empty))

    students, truth = generate_students(5, seed=3)
    out.append(("enroll_logit", transcribe_model(build_enrollment_model(students, truth, budget_for(5)),
                                                 TranscriptionOptions(delta=5))))
    lin = Predictor("lin", LinearRegressionModel([0.01, -0.02, 1e-5], 0.6), ("sat", "gpa", "scholarship"))
    out.append(("enroll_linear", transcribe_model(build_enrollment_model(students[:4], lin, budget_for(4)))))

    net = random_network(np.random.default_rng(1), [2, 6, 1])
    m = OptimizationModel("nn_free")
    x = m.add_regular_variable("x", -2.0, 2.0)
    y = m.add_predicted_variable("y", Predictor("net", net), [Fixed(0.4), x])
    m.set_objective([(y, 1.0), (x, 0.1)], "maximize")
    out.append(("nn_free", transcribe_model(m)))
    return out

import math

import numpy as np
import pytest
from scipy.integrate import quad

from oracles import nn_loop
from predopt.bnb import solve_milp
from predopt.export import export_mps
from predopt.milp import INTERVAL_INDICATOR, RELU_INDICATOR
from predopt.model import Fixed, OptimizationModel, VarRef
from predopt.predictors import (
    LinearRegressionModel,
    LogisticRegressionModel,
    NeuralNetworkModel,
    Predictor,
    linreg_predict,
    random_network,
    sigmoid,
)
from predopt.transcription import (
    Interval,
    TranscriptionError,
    TranscriptionOptions,
    logit_error_bound,
    logit_partition,
    logodds_range,
    propagate_bounds_nn,
    transcribe_model,
    v_delta,
)

# mpmath, 40 digits: mean of the sigmoid over [0, 1] and over [0, 0.5]
V_0_1 = 0.6201145069582775246317633735096790738398
V_0_HALF = 0.5618596072403227429115304672459883633602


def _single(predictor, bindings, regular=(), objective=1.0, sense="maximize", delta=10, **opts):
    m = OptimizationModel()
    handles = [m.add_regular_variable(n, lo, hi) for n, lo, hi in regular]
    bs = [VarRef(handles[b]) if isinstance(b, int) and not isinstance(b, bool) else Fixed(b[0]) for b in bindings]
    y = m.add_predicted_variable("y", predictor, bs)
    m.set_objective([(y, objective)], sense)
    return m, transcribe_model(m, TranscriptionOptions(delta=delta, **opts))


# -- bound propagation ----------------------------------------------------------


def test_single_neuron_intervals():
    net = NeuralNetworkModel(([[2.0]], [[1.0]]), ([1.0], [0.0]))
    b = propagate_bounds_nn(net, [(-1.0, 1.0)])
    assert (b[1].g_lo[0], b[1].g_hi[0]) == (-1.0, 3.0)
    assert (b[1].f_lo[0], b[1].f_hi[0]) == (0.0, 3.0)


def test_zero_network_intervals():
    net = NeuralNetworkModel((np.zeros((3, 2)), np.zeros((1, 3))), (np.zeros(3), np.array([0.7])))
    b = propagate_bounds_nn(net, [(-5, 5), (0, 2)])
    assert np.all(b[1].g_lo == 0) and np.all(b[1].g_hi == 0)
    assert b[2].g_lo[0] == b[2].g_hi[0] == 0.7


def test_monte_carlo_containment():
    rng = np.random.default_rng(3)
    for sizes in ([2, 3, 1], [3, 10, 10, 1]):
        net = random_network(rng, sizes)
        box = [(-1.0, 2.0), (-3.0, 0.5), (0.0, 1.0)][: sizes[0]]
        bounds = propagate_bounds_nn(net, box)
        lo = np.array([a for a, _ in box])
        hi = np.array([b for _, b in box])
        for x in rng.uniform(lo, hi, size=(1000, len(box))):
            h = x
            for k, (w, b) in enumerate(zip(net.weights, net.biases)):
                g = w @ h + b
                h = np.maximum(g, 0) if k < len(net.weights) - 1 else g
                lb = bounds[k + 1]
                assert np.all(g >= lb.g_lo - 1e-12) and np.all(g <= lb.g_hi + 1e-12)
                assert np.all(h >= lb.f_lo - 1e-12) and np.all(h <= lb.f_hi + 1e-12)


# -- logistic pieces -------------------------------------------------------------


def test_logodds_range_examples():
    m = OptimizationModel()
    x = m.add_regular_variable("x", 0, 1)
    assert tuple(logodds_range(LogisticRegressionModel([1.0], 0.0), [VarRef(x)])) == (0.0, 1.0)
    x3 = m.add_regular_variable("x3", 0, 3)
    assert tuple(logodds_range(LogisticRegressionModel([-2.0], 1.0), [VarRef(x3)])) == (-5.0, 1.0)


def test_logodds_range_matches_corners():
    rng = np.random.default_rng(8)
    m = OptimizationModel()
    x = m.add_regular_variable("x", 0, 25000)
    w = m.add_regular_variable("w", -2, 3)
    for _ in range(20):
        beta = rng.normal(size=3) * np.array([1.0, 1.0, 1e-4])
        model = LogisticRegressionModel(beta, float(rng.normal()))
        s, g = rng.normal(size=2)
        iv = logodds_range(model, [Fixed(s), VarRef(w), VarRef(x)])
        corners = [model.intercept + beta @ np.array([s, a, b]) for a in (-2, 3) for b in (0, 25000)]
        assert iv.lo == pytest.approx(min(corners), abs=1e-12)
        assert iv.hi == pytest.approx(max(corners), abs=1e-12)


def test_v_delta_against_integration():
    assert v_delta(0.0, 1.0) == pytest.approx(V_0_1, abs=1e-15)
    num, _ = quad(sigmoid, 0.0, 1.0, epsabs=1e-14)
    assert abs(v_delta(0.0, 1.0) - num) <= 1e-10
    for a, b in [(-3.0, 2.5), (10.0, 10.001), (-0.4, -0.39999)]:
        num, _ = quad(sigmoid, a, b, epsabs=1e-14, epsrel=1e-13)
        assert v_delta(a, b) == pytest.approx(num / (b - a), rel=1e-9)


@pytest.mark.parametrize("a", [1e-6, 0.5, 3.0, 40.0, 700.0])
def test_v_delta_symmetric_interval(a):
    assert v_delta(-a, a) == pytest.approx(0.5, abs=1e-12)


def test_v_delta_deep_negative_tail():
    v = v_delta(-50.0, -40.0)
    assert sigmoid(-50.0) < v < sigmoid(-40.0)
    assert v > 0


def test_v_delta_rejects_empty_interval():
    with pytest.raises(TranscriptionError):
        v_delta(1.0, 1.0)


def test_error_bound_shrinks_under_refinement():
    rng = Interval(-4.0, 3.0)
    bounds = [logit_error_bound(rng, d) for d in (1, 2, 4, 8, 16, 32)]
    assert all(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:]))
    assert bounds[0] == pytest.approx(sigmoid(3.0) - sigmoid(-4.0))


def test_partition_is_nested():
    rng = Interval(-1.3, 7.1)
    coarse = logit_partition(rng, 5)
    fine = logit_partition(rng, 10)
    np.testing.assert_allclose(fine[::2], coarse, atol=1e-14)


# -- logistic block ----------------------------------------------------------------


def _logit_at(fbeta_point, delta, lo=0.0, hi=1.0, strengthen=True):
    # x in [lo, hi] feeds the log-odds directly; x is pinned by a constraint
    pred = Predictor("p", LogisticRegressionModel([1.0], 0.0))
    m = OptimizationModel()
    x = m.add_regular_variable("x", lo, hi)
    y = m.add_predicted_variable("y", pred, [x])
    m.add_constraint([(x, 1.0)], "==", fbeta_point)
    m.set_objective([(y, 1.0)], "maximize")
    milp = transcribe_model(m, TranscriptionOptions(delta=delta, strengthen_logit=strengthen))
    return milp, solve_milp(milp)


@pytest.mark.parametrize("strengthen", [True, False])
def test_interval_membership_delta_two(strengthen):
    milp, sol = _logit_at(0.3, 2, strengthen=strengthen)
    assert sol.status == "optimal"
    assert round(sol.value("y__z1")) == 1 and round(sol.value("y__z2")) == 0
    assert sol.value("y") == pytest.approx(V_0_HALF, abs=1e-9)


@pytest.mark.parametrize("point", [0.0, 0.2, 0.77, 1.0])
def test_single_interval_ignores_log_odds(point):
    _, sol = _logit_at(point, 1)
    assert sol.value("y") == pytest.approx(V_0_1, abs=1e-9)


def test_logit_block_shape():
    milp, _ = _logit_at(0.3, 7)
    cols, rows = milp.block(0)
    assert sum(milp.columns[j].tag == INTERVAL_INDICATOR for j in cols) == 7
    assert all(milp.columns[j].kind == "binary" for j in cols if milp.columns[j].tag == INTERVAL_INDICATOR)


@pytest.mark.parametrize("delta", [1, 3, 10])
@pytest.mark.parametrize("strengthen", [True, False])
def test_approximation_within_error_bound(delta, strengthen):
    rng = np.random.default_rng(delta)
    bound = logit_error_bound(Interval(-2.0, 3.0), delta)
    for point in rng.uniform(-2.0, 3.0, size=8):
        for sense in ("maximize", "minimize"):
            pred = Predictor("p", LogisticRegressionModel([1.0], 0.0))
            m = OptimizationModel()
            x = m.add_regular_variable("x", -2.0, 3.0)
            y = m.add_predicted_variable("y", pred, [x])
            m.add_constraint([(x, 1.0)], "==", float(point))
            m.set_objective([(y, 1.0)], sense)
            sol = solve_milp(transcribe_model(m, TranscriptionOptions(delta=delta, strengthen_logit=strengthen)))
            assert abs(sol.value("y") - sigmoid(point)) <= bound + 1e-9


def test_fixed_logistic_is_constant_column():
    pred = Predictor("p", LogisticRegressionModel([0.5, -1.0], 0.2))
    _, milp = _single(pred, [(1.0,), (2.0,)])
    j = milp.column_index("y")
    assert milp.columns[j].lower == milp.columns[j].upper == pytest.approx(sigmoid(0.2 + 0.5 - 2.0), abs=1e-15)


# -- linear block -------------------------------------------------------------


def test_linear_identity_row():
    pred = Predictor("p", LinearRegressionModel([1.0], 0.0))
    _, milp = _single(pred, [0], regular=[("x", -4, 9)])
    cols, rows = milp.block(0)
    assert len(rows) == 1
    row = milp.rows[rows[0]]
    terms = dict(row.terms)
    assert row.sense == "==" and row.rhs == 0.0
    assert terms == {milp.column_index("y"): 1.0, milp.column_index("x"): -1.0}


def test_linear_fixed_bindings_fix_output():
    pred = Predictor("p", LinearRegressionModel([2.0, -1.0], 1.0))
    _, milp = _single(pred, [(3.0,), (4.0,)])
    j = milp.column_index("y")
    assert milp.columns[j].lower == milp.columns[j].upper == 3.0


def test_linear_random_models_match_oracle():
    rng = np.random.default_rng(21)
    for _ in range(20):
        beta = rng.normal(size=3)
        c = float(rng.normal())
        xv = rng.uniform(-2, 2, size=3)
        pred = Predictor("p", LinearRegressionModel(beta, c))
        m = OptimizationModel()
        xs = [m.add_regular_variable(f"x{i}", -2, 2) for i in range(3)]
        y = m.add_predicted_variable("y", pred, xs)
        for h, v in zip(xs, xv):
            m.add_constraint([(h, 1.0)], "==", float(v))
        m.set_objective([(y, 1.0)], "minimize")
        sol = solve_milp(transcribe_model(m))
        assert sol.value("y") == pytest.approx(linreg_predict(pred.model, xv), abs=1e-9)


# -- network block ----------------------------------------------------------------


def test_fixed_input_network_pins_output():
    rng = np.random.default_rng(13)
    for trial in range(10):
        net = random_network(rng, [3, 10, 10, 1])
        x = rng.uniform(-2, 2, size=3)
        pred = Predictor("n", net)
        ref = nn_loop(net.weights, net.biases, x)
        for sense in ("maximize", "minimize"):
            _, milp = _single(pred, [(float(v),) for v in x], sense=sense, fix_stable_relus=trial % 2 == 0)
            sol = solve_milp(milp)
            assert sol.status == "optimal"
            assert sol.value("y") == pytest.approx(ref, abs=1e-6)


def test_zero_network_forces_zero():
    net = NeuralNetworkModel((np.zeros((4, 2)), np.zeros((1, 4))), (np.zeros(4), np.zeros(1)))
    m = OptimizationModel()
    a = m.add_regular_variable("a", -3, 3)
    b = m.add_regular_variable("b", 0, 8)
    y = m.add_predicted_variable("y", Predictor("z", net), [a, b])
    for sense in ("maximize", "minimize"):
        m.set_objective([(y, 1.0)], sense)
        assert abs(solve_milp(transcribe_model(m)).value("y")) <= 1e-9


def test_network_counts_for_ten_hidden_neurons():
    rng = np.random.default_rng(0)
    net = random_network(rng, [3, 10, 1])
    m = OptimizationModel()
    xs = [m.add_regular_variable(f"x{i}", -1, 1) for i in range(3)]
    y = m.add_predicted_variable("y", Predictor("n", net), xs)
    m.set_objective([(y, 1.0)])
    milp = transcribe_model(m)
    cols, rows = milp.block(0)
    relu_cols = [j for j in cols if milp.columns[j].tag == RELU_INDICATOR]
    assert len(relu_cols) == 10
    assert all(milp.columns[j].kind == "binary" for j in relu_cols)
    big_m = [milp.rows[i] for i in rows if milp.rows[i].tag in ("nn-relu-pre", "nn-relu-link", "nn-relu-post")]
    # three chained big-M inequalities per hidden neuron, split into five one-sided rows
    families = {(r.tag, r.name.rsplit("_", 1)[-1]) for r in big_m}
    assert len(families) == 30
    assert len(big_m) == 50


def test_big_m_from_propagated_bounds():
    net = NeuralNetworkModel(([[2.0]], [[1.0]]), ([1.0], [0.0]))
    m = OptimizationModel()
    x = m.add_regular_variable("x", -1, 1)
    y = m.add_predicted_variable("y", Predictor("n", net), [x])
    m.set_objective([(y, 1.0)])
    milp = transcribe_model(m, TranscriptionOptions(big_m_margin=1e-4))
    row = milp.rows[next(i for i, r in enumerate(milp.rows) if r.name == "y__gup1_0")]
    z = milp.column_index("y__z1_0")
    assert dict(row.terms)[z] == pytest.approx(-(3.0 + 1e-4))


def test_stable_neurons_fixed():
    # pre-activation 2x + 5 with x in [-1, 1] is always positive
    net = NeuralNetworkModel(([[2.0], [-1.0]], [[1.0, 1.0]]), ([5.0, -4.0], [0.0]))
    m = OptimizationModel()
    x = m.add_regular_variable("x", -1, 1)
    m.set_objective([(m.add_predicted_variable("y", Predictor("n", net), [x]), 1.0)])
    milp = transcribe_model(m)
    on = milp.columns[milp.column_index("y__z1_0")]
    off = milp.columns[milp.column_index("y__z1_1")]
    assert (on.lower, on.upper) == (1.0, 1.0)
    assert (off.lower, off.upper) == (0.0, 0.0)
    loose = transcribe_model(m, TranscriptionOptions(fix_stable_relus=False))
    assert loose.columns[loose.column_index("y__z1_0")].lower == 0.0


def test_unbounded_feeding_variable_rejected():
    m = OptimizationModel()
    x = m.add_regular_variable("x", -1, 1)
    # bypass the builder check to simulate a malformed handle
    object.__setattr__(x, "upper", math.inf)
    m.add_predicted_variable("y", Predictor("n", random_network(np.random.default_rng(0), [1, 2, 1])), [x])
    with pytest.raises(TranscriptionError):
        transcribe_model(m)


# -- whole model ----------------------------------------------------------------------


def test_no_predicted_variables_gives_user_program():
    m = OptimizationModel("plain")
    x = m.add_regular_variable("x", 0, 10)
    k = m.add_regular_variable("k", 0, 5, "integer")
    m.add_constraint([(x, 1.0), (k, 2.0)], "<=", 7, name="c")
    m.set_objective([(x, 1.0), (k, 1.5)], "maximize")
    milp = transcribe_model(m)
    assert [c.name for c in milp.columns] == ["x", "k"]
    assert [c.kind for c in milp.columns] == ["continuous", "integer"]
    assert len(milp.rows) == 1 and dict(milp.rows[0].terms) == {0: 1.0, 1: 2.0}
    assert milp.objective == {0: 1.0, 1: 1.5}


def _enrollment_like(n, predictor, delta=10):
    m = OptimizationModel()
    xs = [m.add_regular_variable(f"x{i}", 0, 25000) for i in range(n)]
    rng = np.random.default_rng(n)
    ys = [m.add_predicted_variable(f"y{i}", predictor, [Fixed(float(s)), Fixed(float(g)), x])
          for i, (x, (s, g)) in enumerate(zip(xs, rng.normal(size=(n, 2))))]
    m.add_constraint([(x, 1.0) for x in xs], "<=", 2000.0 * n, name="budget")
    m.set_objective([(y, 1.0) for y in ys])
    return m


def test_fifty_disjoint_logit_blocks():
    pred = Predictor("e", LogisticRegressionModel([-0.7, -0.5, 8e-5], 1.4))
    milp = transcribe_model(_enrollment_like(50, pred), TranscriptionOptions(delta=10))
    user_rows = [r for r in milp.rows if r.owner is None]
    assert len(user_rows) == 1 and user_rows[0].name == "budget"
    seen_cols, seen_rows = set(), set()
    for k in range(50):
        cols, rows = milp.block(k)
        assert sum(milp.columns[j].tag == INTERVAL_INDICATOR for j in cols) == 10
        assert seen_cols.isdisjoint(cols) and seen_rows.isdisjoint(rows)
        seen_cols.update(cols)
        seen_rows.update(rows)
        # a block only touches its own columns and the user column it is bound to
        allowed = set(cols) | {milp.column_index(f"x{k}")}
        for i in rows:
            assert {j for j, _ in milp.rows[i].terms} <= allowed


def test_network_blocks_disjoint():
    pred = Predictor("n", random_network(np.random.default_rng(4), [3, 5, 5, 1]))
    milp = transcribe_model(_enrollment_like(4, pred))
    owners = {}
    for j, c in enumerate(milp.columns):
        if c.owner is not None:
            owners.setdefault(c.owner, set()).add(j)
    assert len(owners) == 4
    assert sum(len(s) for s in owners.values()) == len(set().union(*owners.values()))


def test_transcription_is_deterministic():
    pred = Predictor("e", LogisticRegressionModel([-0.7, -0.5, 8e-5], 1.4))
    a = export_mps(transcribe_model(_enrollment_like(6, pred)))
    b = export_mps(transcribe_model(_enrollment_like(6, pred)))
    assert a == b
    net = Predictor("n", random_network(np.random.default_rng(4), [3, 5, 1]))
    assert export_mps(transcribe_model(_enrollment_like(3, net))) == export_mps(transcribe_model(_enrollment_like(3, net)))

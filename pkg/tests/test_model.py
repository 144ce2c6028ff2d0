import json

import pytest

from predopt.model import (
    Fixed,
    ModelError,
    OptimizationModel,
    VarRef,
    check_solution,
    model_from_document,
    model_to_document,
    predictors_to_document,
)
from predopt.predictors import LinearRegressionModel, LogisticRegressionModel, Predictor, sigmoid

LOGIT3 = Predictor("enroll", LogisticRegressionModel([-0.7, -0.5, 8e-5], 1.4), ("sat", "gpa", "scholarship"))


def test_add_regular_variable():
    m = OptimizationModel()
    h = m.add_regular_variable("x1", 0, 25000, "continuous")
    assert len(m.regular) == 1 and m["x1"] is h
    assert (h.lower, h.upper) == (0.0, 25000.0)


def test_binary_bounds_forced():
    m = OptimizationModel()
    b = m.add_regular_variable("b", -3, 7, "binary")
    assert (b.lower, b.upper) == (0.0, 1.0)


@pytest.mark.parametrize("lo,hi", [(5, 2), (0, float("inf")), (float("-inf"), 0), (float("nan"), 1)])
def test_bad_bounds_rejected(lo, hi):
    with pytest.raises(ModelError):
        OptimizationModel().add_regular_variable("x", lo, hi)


def test_integer_variable_needs_an_integer_point():
    with pytest.raises(ModelError):
        OptimizationModel().add_regular_variable("k", 0.2, 0.8, "integer")


def test_duplicate_names_rejected():
    m = OptimizationModel()
    m.add_regular_variable("x", 0, 1)
    with pytest.raises(ModelError, match="duplicate"):
        m.add_regular_variable("x", 0, 1)


def test_predicted_variable_with_mixed_bindings():
    m = OptimizationModel()
    h1 = m.add_regular_variable("x1", 0, 25000)
    y = m.add_predicted_variable("y1", LOGIT3, [Fixed(1.2), Fixed(-0.3), VarRef(h1)])
    assert y.n_fixed == 2
    assert isinstance(y.bindings[2], VarRef) and y.bindings[2].var is h1


def test_arity_mismatch():
    p2 = Predictor("two", LinearRegressionModel([1.0, 1.0], 0.0))
    m = OptimizationModel()
    x = m.add_regular_variable("x", 0, 1)
    with pytest.raises(ModelError):
        m.add_predicted_variable("y", p2, [Fixed(1.0), Fixed(2.0), VarRef(x)])


def test_one_predictor_shared_by_fifty_variables():
    m = OptimizationModel()
    for i in range(50):
        x = m.add_regular_variable(f"x{i}", 0, 25000)
        m.add_predicted_variable(f"y{i}", LOGIT3, [Fixed(0.0), Fixed(0.0), x])
    assert len(m.predicted) == 50
    assert len(m.predictors()) == 1
    assert all(pv.predictor is LOGIT3 for pv in m.predicted)


def test_foreign_handle_rejected():
    other = OptimizationModel().add_regular_variable("x", 0, 1)
    m = OptimizationModel()
    m.add_regular_variable("x", 0, 1)
    with pytest.raises(ModelError):
        m.add_constraint([(other, 1.0)], "<=", 1)
    with pytest.raises(ModelError):
        m.add_predicted_variable("y", LOGIT3, [0.0, 0.0, other])


def test_non_finite_fixed_value_rejected():
    m = OptimizationModel()
    with pytest.raises(ModelError):
        m.add_predicted_variable("y", LOGIT3, [Fixed(float("nan")), 0.0, 0.0])


def test_budget_constraint_for_500_students():
    m = OptimizationModel()
    xs = [m.add_regular_variable(f"x{i}", 0, 25000) for i in range(500)]
    cid = m.add_constraint([(x, 1.0) for x in xs], "<=", 0.2 * 500 * 1e4)
    assert cid == 0
    assert m.constraints[0].rhs == 1_000_000.0
    assert len(m.constraints[0].terms) == 500


def test_empty_constraint_allowed():
    m = OptimizationModel()
    assert m.add_constraint([], "<=", 0) == 0


def test_predicted_variable_not_allowed_in_constraint():
    m = OptimizationModel()
    x = m.add_regular_variable("x", 0, 1)
    y = m.add_predicted_variable("y", LOGIT3, [0.0, 0.0, x])
    with pytest.raises(ModelError, match="predicted"):
        m.add_constraint([(x, 1.0), (y, 1.0)], "<=", 1)


def test_unknown_sense_rejected():
    m = OptimizationModel()
    x = m.add_regular_variable("x", 0, 1)
    with pytest.raises(ModelError):
        m.add_constraint([(x, 1.0)], "<>", 1)
    with pytest.raises(ModelError):
        m.set_objective([(x, 1.0)], "maximise")


def test_objective_forms():
    m = OptimizationModel()
    x = m.add_regular_variable("x", 0, 10)
    y = m.add_predicted_variable("y", LOGIT3, [0.0, 0.0, x])
    m.set_objective([(y, 1.0)], "maximize")
    assert m.objective == ((y, 1.0),)
    m.set_objective([], "maximize")
    assert m.objective == ()
    m.set_objective([(x, 2.0), (y, -3.0)], "minimize")
    assert {type(v).__name__ for v, _ in m.objective} == {"RegularVariable", "PredictedVariable"}
    assert m.sense == "minimize"


def _sample_model():
    m = OptimizationModel("sample")
    x = m.add_regular_variable("x", 0, 25000)
    k = m.add_regular_variable("k", 0, 4, "integer")
    y = m.add_predicted_variable("y", LOGIT3, [Fixed(0.3), Fixed(-1.0), x])
    m.add_constraint([(x, 1.0), (k, 1000.0)], "<=", 20000, name="cap")
    m.add_constraint([(k, 1.0)], ">=", 1)
    m.set_objective([(y, 1.0), (k, 0.01)], "maximize")
    return m


def test_document_round_trip():
    m = _sample_model()
    doc = json.loads(json.dumps(model_to_document(m)))
    preds = json.loads(json.dumps(predictors_to_document(m)))
    m2 = model_from_document(doc, preds)
    assert model_to_document(m2) == doc


def test_document_unknown_predictor():
    doc = model_to_document(_sample_model())
    with pytest.raises(ModelError, match="unknown predictor"):
        model_from_document(doc, {})


def test_check_solution_uses_exact_predictions():
    m = _sample_model()
    rep = check_solution(m, {"x": 10000.0, "k": 2.0, "y": 0.9})
    truth = sigmoid(1.4 - 0.7 * 0.3 + 0.5 + 0.8)
    assert rep["feasible"]
    assert rep["exact_predictions"]["y"] == pytest.approx(truth, abs=1e-15)
    assert rep["exact_objective"] == pytest.approx(truth + 0.02, abs=1e-15)
    assert rep["max_prediction_gap"] == pytest.approx(abs(0.9 - truth), abs=1e-15)


def test_check_solution_flags_violations():
    m = _sample_model()
    assert not check_solution(m, {"x": 19000.0, "k": 2.0})["feasible"]
    assert not check_solution(m, {"x": 0.0, "k": 1.5})["feasible"]
    assert not check_solution(m, {"x": -5.0, "k": 1.0})["feasible"]
    with pytest.raises(ModelError):
        check_solution(m, {"x": 0.0})

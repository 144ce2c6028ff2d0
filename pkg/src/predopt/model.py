"""Optimization model with regular and predicted variables.

A model holds bounded regular decision variables, linear constraints over
them, predicted variables whose value is a pre-trained predictor evaluated on
a mix of fixed constants and regular variables, and a linear objective over
both kinds of variable.  Nothing is compiled until the model is handed to
:func:`predopt.transcription.transcribe_model`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .predictors import Predictor, load_predictors, predict, save_predictor

__all__ = [
    "ModelError",
    "RegularVariable",
    "PredictedVariable",
    "Fixed",
    "VarRef",
    "LinearConstraint",
    "OptimizationModel",
    "model_to_document",
    "model_from_document",
    "check_solution",
    "predictors_to_document",
]

DOMAINS = ("continuous", "integer", "binary")
SENSES = ("<=", "==", ">=")
_SENSE_ALIASES = {"<=": "<=", "=<": "<=", "L": "<=", "==": "==", "=": "==", "E": "==", ">=": ">=", "=>": ">=", "G": ">="}


class ModelError(ValueError):
    """Invalid model construction (bad bounds, dangling handles, arity...)."""


@dataclass(frozen=True, eq=False)
class RegularVariable:
    name: str
    lower: float
    upper: float
    domain: str
    index: int

    def __repr__(self):
        return f"RegularVariable({self.name!r}, [{self.lower}, {self.upper}], {self.domain})"


@dataclass(frozen=True)
class Fixed:
    """Feature bound to a constant."""

    value: float


@dataclass(frozen=True, eq=False)
class VarRef:
    """Feature bound to a regular variable."""

    var: RegularVariable


@dataclass(frozen=True, eq=False)
class PredictedVariable:
    name: str
    predictor: Predictor
    bindings: tuple
    index: int

    @property
    def n_fixed(self) -> int:
        return sum(isinstance(b, Fixed) for b in self.bindings)

    def __repr__(self):
        return f"PredictedVariable({self.name!r}, predictor={self.predictor.id!r})"


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple  # ((RegularVariable, coef), ...)
    sense: str
    rhs: float
    name: str


def _normalize_sense(sense: str) -> str:
    try:
        return _SENSE_ALIASES[sense]
    except KeyError:
        raise ModelError(f"unknown constraint sense {sense!r}") from None


class OptimizationModel:
    """Builder for a predictive-prescriptive optimization model.

    >>> m = OptimizationModel()
    >>> x = m.add_regular_variable("x", 0, 10)
    >>> m.add_constraint([(x, 1.0)], "<=", 3)
    0
    >>> m.set_objective([(x, 1.0)], "maximize")
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.regular: list[RegularVariable] = []
        self.predicted: list[PredictedVariable] = []
        self.constraints: list[LinearConstraint] = []
        self.objective: tuple = ()
        self.sense = "maximize"
        self._names: dict[str, object] = {}

    # -- variables ---------------------------------------------------------

    def add_regular_variable(self, name: str, lower: float, upper: float, domain: str = "continuous") -> RegularVariable:
        if domain not in DOMAINS:
            raise ModelError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
        self._claim(name)
        if domain == "binary":
            lower, upper = 0.0, 1.0
        lower, upper = float(lower), float(upper)
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise ModelError(f"variable {name!r}: bounds must be finite")
        if lower > upper:
            raise ModelError(f"variable {name!r}: reversed bounds [{lower}, {upper}]")
        if domain == "integer" and math.ceil(lower) > math.floor(upper):
            raise ModelError(f"variable {name!r}: no integer in [{lower}, {upper}]")
        v = RegularVariable(name, lower, upper, domain, len(self.regular))
        self.regular.append(v)
        self._names[name] = v
        return v

    def add_predicted_variable(self, name: str, predictor: Predictor, bindings: Sequence) -> PredictedVariable:
        bindings = tuple(self._binding(b) for b in bindings)
        if len(bindings) != predictor.n_features:
            raise ModelError(
                f"predicted variable {name!r}: {len(bindings)} bindings for a predictor "
                f"with {predictor.n_features} features"
            )
        self._claim(name)
        pv = PredictedVariable(name, predictor, bindings, len(self.predicted))
        self.predicted.append(pv)
        self._names[name] = pv
        return pv

    def _binding(self, b):
        if isinstance(b, Fixed):
            if not math.isfinite(b.value):
                raise ModelError("fixed feature value must be finite")
            return Fixed(float(b.value))
        if isinstance(b, VarRef):
            self._check_regular(b.var)
            return b
        if isinstance(b, RegularVariable):
            self._check_regular(b)
            return VarRef(b)
        if isinstance(b, (int, float)):
            return self._binding(Fixed(float(b)))
        raise ModelError(f"cannot interpret feature binding {b!r}")

    def _claim(self, name: str):
        if not isinstance(name, str) or not name:
            raise ModelError("variable names must be non-empty strings")
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")

    def _check_regular(self, v):
        if not isinstance(v, RegularVariable):
            raise ModelError(f"{v!r} is not a regular variable")
        if v.index >= len(self.regular) or self.regular[v.index] is not v:
            raise ModelError(f"variable {v.name!r} does not belong to this model")

    def _check_any(self, v):
        if isinstance(v, PredictedVariable):
            if v.index >= len(self.predicted) or self.predicted[v.index] is not v:
                raise ModelError(f"variable {v.name!r} does not belong to this model")
        else:
            self._check_regular(v)

    # -- constraints / objective ---------------------------------------------

    def add_constraint(self, terms: Iterable, sense: str, rhs: float, name: str | None = None) -> int:
        sense = _normalize_sense(sense)
        checked = []
        for v, c in terms:
            if isinstance(v, PredictedVariable):
                raise ModelError(f"predicted variable {v.name!r} cannot appear in a linear constraint")
            self._check_regular(v)
            checked.append((v, float(c)))
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ModelError("constraint right-hand side must be finite")
        cid = len(self.constraints)
        self.constraints.append(LinearConstraint(tuple(checked), sense, rhs, name or f"c{cid}"))
        return cid

    def set_objective(self, terms: Iterable, sense: str = "maximize"):
        if sense not in ("maximize", "minimize"):
            raise ModelError(f"objective sense must be 'maximize' or 'minimize', got {sense!r}")
        checked = []
        for v, c in terms:
            self._check_any(v)
            checked.append((v, float(c)))
        self.objective = tuple(checked)
        self.sense = sense

    # -- lookup --------------------------------------------------------------

    def __getitem__(self, name: str):
        return self._names[name]

    def predictors(self) -> dict[str, Predictor]:
        out: dict[str, Predictor] = {}
        for pv in self.predicted:
            out.setdefault(pv.predictor.id, pv.predictor)
        return out

    def __repr__(self):
        return (
            f"OptimizationModel({self.name!r}, {len(self.regular)} regular, "
            f"{len(self.predicted)} predicted, {len(self.constraints)} constraints)"
        )


# -- model description documents ----------------------------------------------


def model_to_document(model: OptimizationModel) -> dict:
    """Serialize the optimization side of a model (predictors referenced by id)."""
    return {
        "name": model.name,
        "regular_variables": [
            {"name": v.name, "lower": v.lower, "upper": v.upper, "domain": v.domain} for v in model.regular
        ],
        "constraints": [
            {
                "name": c.name,
                "terms": [{"var": v.name, "coef": a} for v, a in c.terms],
                "sense": c.sense,
                "rhs": c.rhs,
            }
            for c in model.constraints
        ],
        "objective": {
            "sense": model.sense,
            "terms": [{"var": v.name, "coef": a} for v, a in model.objective],
        },
        "predicted_variables": [
            {
                "name": pv.name,
                "predictor": pv.predictor.id,
                "bindings": [
                    {"fixed": b.value} if isinstance(b, Fixed) else {"var": b.var.name} for b in pv.bindings
                ],
            }
            for pv in model.predicted
        ],
    }


def model_from_document(doc: dict, predictors) -> OptimizationModel:
    """Rebuild a model; ``predictors`` maps id -> Predictor (or is a predictor document collection)."""
    if not isinstance(predictors, dict) or not all(isinstance(p, Predictor) for p in predictors.values()):
        predictors = load_predictors(predictors)
    m = OptimizationModel(doc.get("name", "model"))
    for v in doc.get("regular_variables", []):
        m.add_regular_variable(v["name"], v["lower"], v["upper"], v.get("domain", "continuous"))

    def var(name):
        try:
            return m[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    for pv in doc.get("predicted_variables", []):
        try:
            pred = predictors[pv["predictor"]]
        except KeyError:
            raise ModelError(f"unknown predictor id {pv['predictor']!r}") from None
        bindings = []
        for b in pv["bindings"]:
            if "fixed" in b:
                bindings.append(Fixed(float(b["fixed"])))
            elif "var" in b:
                bindings.append(VarRef(var(b["var"])))
            else:
                raise ModelError(f"binding {b!r} needs 'fixed' or 'var'")
        m.add_predicted_variable(pv["name"], pred, bindings)
    for c in doc.get("constraints", []):
        m.add_constraint([(var(t["var"]), t["coef"]) for t in c["terms"]], c["sense"], c["rhs"], c.get("name"))
    obj = doc.get("objective") or {}
    m.set_objective([(var(t["var"]), t["coef"]) for t in obj.get("terms", [])], obj.get("sense", "maximize"))
    return m


def check_solution(model: OptimizationModel, values: dict, tol: float = 1e-6) -> dict:
    """Re-verify a solution against the model using exact predictor outputs.

    ``values`` maps regular (and optionally predicted) variable names to
    numbers.  Returns the worst bound, constraint and integrality violations,
    the largest gap between reported and exact predicted values, and the
    objective recomputed with exact predictions.
    """

    x = {}
    bound_viol = int_viol = 0.0
    for v in model.regular:
        if v.name not in values:
            raise ModelError(f"solution has no value for {v.name!r}")
        val = float(values[v.name])
        x[v.name] = val
        bound_viol = max(bound_viol, v.lower - val, val - v.upper)
        if v.domain != "continuous":
            int_viol = max(int_viol, abs(val - round(val)))
    row_viol = 0.0
    for c in model.constraints:
        act = sum(a * x[v.name] for v, a in c.terms)
        if c.sense == "<=":
            row_viol = max(row_viol, act - c.rhs)
        elif c.sense == ">=":
            row_viol = max(row_viol, c.rhs - act)
        else:
            row_viol = max(row_viol, abs(act - c.rhs))
    exact = {}
    pred_gap = 0.0
    for pv in model.predicted:
        feats = [b.value if isinstance(b, Fixed) else x[b.var.name] for b in pv.bindings]
        exact[pv.name] = predict(pv.predictor, feats)
        if pv.name in values:
            pred_gap = max(pred_gap, abs(float(values[pv.name]) - exact[pv.name]))
    objective = sum(a * (exact[v.name] if isinstance(v, PredictedVariable) else x[v.name]) for v, a in model.objective)
    worst = max(bound_viol, row_viol, int_viol, 0.0)
    return {
        "feasible": worst <= tol,
        "bound_violation": max(bound_viol, 0.0),
        "constraint_violation": max(row_viol, 0.0),
        "integrality_violation": int_viol,
        "max_prediction_gap": pred_gap,
        "exact_objective": objective,
        "exact_predictions": exact,
    }


def predictors_to_document(model: OptimizationModel) -> dict:
    return {"predictors": [save_predictor(p) for p in model.predictors().values()]}

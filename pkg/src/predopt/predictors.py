"""Pre-trained predictor families and their exact forward evaluation.

Three families are supported: linear regression, logistic regression and
feed-forward ReLU networks with a single affine output node.  All objects are
immutable once built; the document helpers convert to and from the JSON
predictor schema::

    {"id": "enroll", "type": "logistic_regression",
     "feature_names": ["sat", "gpa", "scholarship"],
     "coefficients": [...], "intercept": 0.3}

    {"id": "nn", "type": "neural_network", "feature_names": [...],
     "layers": [{"weights": [[...], ...], "biases": [...]}, ...]}

``weights[i][j]`` is the weight into output neuron ``i`` of a layer from input
neuron ``j``; the last layer has exactly one row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "PredictorError",
    "LinearRegressionModel",
    "LogisticRegressionModel",
    "NeuralNetworkModel",
    "Predictor",
    "sigmoid",
    "log1pexp",
    "linreg_predict",
    "logreg_predict",
    "nn_forward",
    "predict",
    "load_predictor",
    "save_predictor",
    "load_predictors",
    "random_network",
]


class PredictorError(ValueError):
    """Raised for malformed predictor documents or mismatched feature arity."""


def _finite_vector(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise PredictorError(f"{what} must be a vector")
    if not np.all(np.isfinite(arr)):
        raise PredictorError(f"{what} contains non-finite numbers")
    arr.setflags(write=False)
    return arr


def _finite_scalar(value, what: str) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise PredictorError(f"{what} is not finite")
    return v


@dataclass(frozen=True, eq=False)
class LinearRegressionModel:
    coefficients: np.ndarray
    intercept: float

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _finite_vector(self.coefficients, "coefficients"))
        object.__setattr__(self, "intercept", _finite_scalar(self.intercept, "intercept"))

    @property
    def n_features(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True, eq=False)
class LogisticRegressionModel:
    coefficients: np.ndarray
    intercept: float

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _finite_vector(self.coefficients, "coefficients"))
        object.__setattr__(self, "intercept", _finite_scalar(self.intercept, "intercept"))

    @property
    def n_features(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True, eq=False)
class NeuralNetworkModel:
    """ReLU network; ``weights[k]`` has shape (out, in) for layer ``k``.

    Every layer but the last applies ReLU. The last layer is affine and has a
    single output neuron.
    """

    weights: tuple
    biases: tuple

    def __post_init__(self):
        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise PredictorError("network needs at least one layer and one bias vector per layer")
        ws, bs = [], []
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.array(w, dtype=float)
            b = _finite_vector(b, f"layer {k} biases")
            if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
                raise PredictorError(f"layer {k} weights must be a non-empty matrix")
            if not np.all(np.isfinite(w)):
                raise PredictorError(f"layer {k} weights contain non-finite numbers")
            if w.shape[0] != b.shape[0]:
                raise PredictorError(f"layer {k}: {w.shape[0]} weight rows but {b.shape[0]} biases")
            if ws and w.shape[1] != ws[-1].shape[0]:
                raise PredictorError(
                    f"dimension inconsistency: layer {k} expects {w.shape[1]} inputs, "
                    f"previous layer has {ws[-1].shape[0]} outputs"
                )
            w.setflags(write=False)
            ws.append(w)
            bs.append(b)
        if ws[-1].shape[0] != 1:
            raise PredictorError("output layer must have exactly one neuron")
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[1]

    @property
    def layer_sizes(self) -> list[int]:
        """Neuron counts per layer, input layer first."""
        return [self.n_features] + [w.shape[0] for w in self.weights]

    @property
    def hidden_sizes(self) -> list[int]:
        return [w.shape[0] for w in self.weights[:-1]]


Family = Union[LinearRegressionModel, LogisticRegressionModel, NeuralNetworkModel]

_TYPE_TAGS = {
    LinearRegressionModel: "linear_regression",
    LogisticRegressionModel: "logistic_regression",
    NeuralNetworkModel: "neural_network",
}


@dataclass(frozen=True, eq=False)
class Predictor:
    id: str
    model: Family
    feature_names: tuple = field(default=())

    def __post_init__(self):
        names = tuple(str(n) for n in self.feature_names)
        if not names:
            names = tuple(f"f{i}" for i in range(self.model.n_features))
        if len(names) != self.model.n_features:
            raise PredictorError(
                f"predictor {self.id!r}: {len(names)} feature names for {self.model.n_features} features"
            )
        object.__setattr__(self, "feature_names", names)

    @property
    def n_features(self) -> int:
        return self.model.n_features

    @property
    def family(self) -> str:
        return _TYPE_TAGS[type(self.model)]

    def __call__(self, features) -> float:
        return predict(self, features)


# -- forward oracles -------------------------------------------------------


def sigmoid(a: float) -> float:
    """Logistic function, stable for large ``|a|``."""
    if a >= 0:
        return 1.0 / (1.0 + math.exp(-a))
    e = math.exp(a)
    return e / (1.0 + e)


def log1pexp(a: float) -> float:
    """``log(1 + exp(a))`` without overflow or cancellation."""
    if a > 0:
        return a + math.log1p(math.exp(-a))
    return math.log1p(math.exp(a))


def _features(m, features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.shape != (m.n_features,):
        raise PredictorError(f"expected {m.n_features} features, got shape {x.shape}")
    return x


def linreg_predict(m: LinearRegressionModel, features) -> float:
    x = _features(m, features)
    return float(m.intercept + m.coefficients @ x)


def logreg_predict(m: LogisticRegressionModel, features) -> float:
    x = _features(m, features)
    return sigmoid(float(m.intercept + m.coefficients @ x))


def nn_forward(m: NeuralNetworkModel, features) -> float:
    h = _features(m, features)
    last = len(m.weights) - 1
    for k, (w, b) in enumerate(zip(m.weights, m.biases)):
        h = w @ h + b
        if k < last:
            h = np.maximum(h, 0.0)
    return float(h[0])


def predict(predictor: Predictor | Family, features) -> float:
    m = predictor.model if isinstance(predictor, Predictor) else predictor
    if isinstance(m, LinearRegressionModel):
        return linreg_predict(m, features)
    if isinstance(m, LogisticRegressionModel):
        return logreg_predict(m, features)
    if isinstance(m, NeuralNetworkModel):
        return nn_forward(m, features)
    raise TypeError(f"unsupported predictor family {type(m).__name__}")


# -- documents -------------------------------------------------------------


def load_predictor(doc: dict) -> Predictor:
    try:
        tag = doc["type"]
    except KeyError:
        raise PredictorError("predictor document has no 'type'") from None
    pid = str(doc.get("id", tag))
    names = doc.get("feature_names", ())
    if tag in ("linear_regression", "logistic_regression"):
        cls = LinearRegressionModel if tag == "linear_regression" else LogisticRegressionModel
        model = cls(doc["coefficients"], doc.get("intercept", 0.0))
    elif tag == "neural_network":
        layers = doc["layers"]
        model = NeuralNetworkModel(
            tuple(layer["weights"] for layer in layers),
            tuple(layer["biases"] for layer in layers),
        )
    else:
        raise PredictorError(f"unknown predictor type {tag!r}")
    return Predictor(pid, model, tuple(names))


def save_predictor(p: Predictor) -> dict:
    doc = {"id": p.id, "type": p.family, "feature_names": list(p.feature_names)}
    m = p.model
    if isinstance(m, NeuralNetworkModel):
        doc["layers"] = [
            {"weights": w.tolist(), "biases": b.tolist()} for w, b in zip(m.weights, m.biases)
        ]
    else:
        doc["coefficients"] = m.coefficients.tolist()
        doc["intercept"] = m.intercept
    return doc


def load_predictors(doc) -> dict[str, Predictor]:
    """Load a predictor collection: a single document, a list, or ``{"predictors": [...]}``."""
    if isinstance(doc, dict) and "predictors" in doc:
        doc = doc["predictors"]
    if isinstance(doc, dict):
        doc = [doc]
    out: dict[str, Predictor] = {}
    for d in doc:
        p = load_predictor(d)
        if p.id in out:
            raise PredictorError(f"duplicate predictor id {p.id!r}")
        out[p.id] = p
    return out


def random_network(
    rng: np.random.Generator, sizes: Sequence[int], scale: float = 1.0
) -> NeuralNetworkModel:
    """Network with Gaussian weights for the given layer sizes (input first, 1 last)."""
    ws, bs = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        ws.append(rng.normal(0.0, scale, size=(n_out, n_in)))
        bs.append(rng.normal(0.0, scale, size=n_out))
    return NeuralNetworkModel(tuple(ws), tuple(bs))

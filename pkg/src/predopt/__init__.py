"""Optimization models whose objective includes outputs of trained predictors.

Build a model with :class:`OptimizationModel`, compile it to a mixed-integer
linear program with :func:`transcribe_model`, and solve it with
:func:`solve_milp`.
"""

from .bnb import Solution, SolveOptions, solve_milp
from .export import export_lp_format, export_mps, read_lp_format, read_mps, read_solution, write_solution
from .milp import Milp
from .model import (
    Fixed,
    ModelError,
    OptimizationModel,
    VarRef,
    check_solution,
    model_from_document,
    model_to_document,
)
from .predictors import (
    LinearRegressionModel,
    LogisticRegressionModel,
    NeuralNetworkModel,
    Predictor,
    PredictorError,
    load_predictor,
    load_predictors,
    predict,
    save_predictor,
)
from .transcription import TranscriptionOptions, transcribe_model

__version__ = "0.1.0"

__all__ = [
    "Solution", "SolveOptions", "solve_milp",
    "export_lp_format", "export_mps", "read_lp_format", "read_mps", "read_solution", "write_solution",
    "Milp",
    "Fixed", "ModelError", "OptimizationModel", "VarRef", "check_solution", "model_from_document", "model_to_document",
    "LinearRegressionModel", "LogisticRegressionModel", "NeuralNetworkModel", "Predictor", "PredictorError",
    "load_predictor", "load_predictors", "predict", "save_predictor",
    "TranscriptionOptions", "transcribe_model",
]

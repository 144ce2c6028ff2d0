"""Compile an :class:`OptimizationModel` into a flat :class:`Milp`.

Linear regressions become a single equality row.  Logistic regressions use a
uniform partition of the log-odds range into intervals, each pinned to the
mean sigmoid value over the interval.  ReLU networks use the big-M
pre/post-activation encoding with one indicator binary per hidden neuron and
per-neuron constants derived from interval bound propagation.

Every predicted variable gets its own block of auxiliary columns and rows; the
blocks only touch each other through user columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import milp as M
from .milp import Milp
from .model import Fixed, OptimizationModel, PredictedVariable, VarRef
from .predictors import (
    LinearRegressionModel,
    LogisticRegressionModel,
    NeuralNetworkModel,
    log1pexp,
    sigmoid,
)

__all__ = [
    "Interval",
    "LayerBounds",
    "TranscriptionOptions",
    "TranscriptionError",
    "propagate_bounds_nn",
    "logodds_range",
    "logit_partition",
    "v_delta",
    "logit_error_bound",
    "transcribe_linreg",
    "transcribe_logreg",
    "transcribe_nn",
    "transcribe_model",
]


class TranscriptionError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise TranscriptionError(f"interval [{self.lo}, {self.hi}] is not finite")
        if self.lo > self.hi:
            raise TranscriptionError(f"interval [{self.lo}, {self.hi}] is reversed")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi

    def __iter__(self):
        yield self.lo
        yield self.hi


@dataclass(frozen=True)
class TranscriptionOptions:
    """Knobs for :func:`transcribe_model`.

    ``strengthen_logit`` adds three aggregated rows per logistic block
    (``y = sum V_d z_d`` and ``sum L_d z_d <= F.beta <= sum U_d z_d``).  They are
    implied by the interval encoding for integral ``z`` and leave the integer
    feasible set unchanged, but they make the LP relaxation of a block equal to
    its convex hull when a single regular variable feeds the log-odds, which is
    what lets branch-and-bound close the gap on allocation models.

    ``fix_stable_relus`` fixes the indicator of a hidden neuron whose propagated
    pre-activation interval does not straddle zero.
    """

    delta: int = 10
    big_m_margin: float = 1e-4
    strengthen_logit: bool = True
    fix_stable_relus: bool = True


# -- bound propagation ----------------------------------------------------------


@dataclass(frozen=True)
class LayerBounds:
    """Pre-activation (G) and post-activation (F) bounds for one layer."""

    g_lo: np.ndarray
    g_hi: np.ndarray
    f_lo: np.ndarray
    f_hi: np.ndarray


def propagate_bounds_nn(m: NeuralNetworkModel, input_intervals: Sequence) -> list[LayerBounds]:
    """Interval arithmetic through the network, input layer first.

    Returns one :class:`LayerBounds` per layer (``len(m.weights) + 1`` entries).
    For the input layer G and F coincide with the given intervals; hidden F is
    the ReLU image of G; the output layer has F equal to G.
    """
    ivs = [tuple(iv) for iv in input_intervals]
    if len(ivs) != m.n_features:
        raise TranscriptionError(f"expected {m.n_features} input intervals, got {len(ivs)}")
    lo = np.array([a for a, _ in ivs], dtype=float)
    hi = np.array([b for _, b in ivs], dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise TranscriptionError("input intervals must be finite")
    if np.any(lo > hi):
        raise TranscriptionError("reversed input interval")
    out = [LayerBounds(lo, hi, lo, hi)]
    last = len(m.weights) - 1
    for k, (w, b) in enumerate(zip(m.weights, m.biases)):
        wp, wn = np.maximum(w, 0.0), np.minimum(w, 0.0)
        g_lo = wp @ lo + wn @ hi + b
        g_hi = wp @ hi + wn @ lo + b
        if k < last:
            lo, hi = np.maximum(g_lo, 0.0), np.maximum(g_hi, 0.0)
        else:
            lo, hi = g_lo, g_hi
        out.append(LayerBounds(g_lo, g_hi, lo, hi))
    return out


def _binding_interval(b) -> tuple[float, float]:
    if isinstance(b, Fixed):
        return b.value, b.value
    v = b.var
    if not (math.isfinite(v.lower) and math.isfinite(v.upper)):
        raise TranscriptionError(f"variable {v.name!r} feeds a predictor and needs finite bounds")
    return v.lower, v.upper


def _affine_parts(coefficients, intercept, bindings):
    """Split ``intercept + coef . features`` into a constant and (var, coef) terms."""
    const = float(intercept)
    terms = []
    for beta, b in zip(coefficients, bindings):
        if isinstance(b, Fixed):
            const += beta * b.value
        elif beta != 0.0:
            terms.append((b.var, float(beta)))
    return const, terms


def _affine_range(coefficients, intercept, bindings) -> tuple[float, float]:
    const, terms = _affine_parts(coefficients, intercept, bindings)
    lo = hi = const
    for v, beta in terms:
        a, c = beta * v.lower, beta * v.upper
        lo += min(a, c)
        hi += max(a, c)
    return lo, hi


def logodds_range(m: LogisticRegressionModel, bindings, widen: float = 1e-6) -> Interval:
    """Range of the log-odds over the box of feature bounds.

    A zero-width range is widened by ``widen`` on each side.
    """
    if len(bindings) != m.n_features:
        raise TranscriptionError(f"expected {m.n_features} bindings, got {len(bindings)}")
    lo, hi = _affine_range(m.coefficients, m.intercept, [_check_binding(b) for b in bindings])
    if hi - lo <= 0.0:
        lo, hi = lo - widen, hi + widen
    return Interval(lo, hi)


def _check_binding(b):
    if isinstance(b, VarRef):
        _binding_interval(b)
    return b


# -- logistic pieces -------------------------------------------------------------


def v_delta(lo: float, hi: float) -> float:
    """Mean of the sigmoid over ``[lo, hi]``."""
    if not lo < hi:
        raise TranscriptionError(f"v_delta needs lo < hi, got [{lo}, {hi}]")
    d = hi - lo
    if d < 1.0:
        # log((1+e^hi)/(1+e^lo)) = log1p(sigmoid(lo) * expm1(d)); no cancellation for narrow intervals
        return math.log1p(sigmoid(lo) * math.expm1(d)) / d
    return (log1pexp(hi) - log1pexp(lo)) / d


def logit_partition(rng: Interval, delta: int) -> np.ndarray:
    """``delta + 1`` uniform breakpoints; interval ``d`` is ``[p[d], p[d+1]]``."""
    if delta < 1:
        raise TranscriptionError(f"interval count must be >= 1, got {delta}")
    p = np.linspace(rng.lo, rng.hi, delta + 1)
    p[0], p[-1] = rng.lo, rng.hi
    return p


def logit_error_bound(rng: Interval, delta: int) -> float:
    """Largest sigmoid rise over one interval of the partition."""
    p = logit_partition(rng, delta)
    return max(sigmoid(b) - sigmoid(a) for a, b in zip(p[:-1], p[1:]))


# -- block transcribers ---------------------------------------------------------


def transcribe_linreg(milp: Milp, pv: PredictedVariable, m: LinearRegressionModel, bindings, user_cols) -> int:
    if len(bindings) != m.n_features:
        raise TranscriptionError(f"{pv.name}: expected {m.n_features} bindings, got {len(bindings)}")
    const, terms = _affine_parts(m.coefficients, m.intercept, bindings)
    lo, hi = _affine_range(m.coefficients, m.intercept, bindings)
    y = milp.add_column(pv.name, lo, hi, tag=M.PREDICTED_OUTPUT, owner=pv.index)
    row = [(y, 1.0)] + [(user_cols[v.index], -beta) for v, beta in terms]
    milp.add_row(row, "==", const, f"{pv.name}__lin", tag="linreg", owner=pv.index)
    return y


def transcribe_logreg(milp: Milp, pv: PredictedVariable, m: LogisticRegressionModel, bindings, user_cols,
                      delta: int = 10, strengthen: bool = True) -> int:
    if delta < 1:
        raise TranscriptionError(f"interval count must be >= 1, got {delta}")
    if len(bindings) != m.n_features:
        raise TranscriptionError(f"{pv.name}: expected {m.n_features} bindings, got {len(bindings)}")
    for b in bindings:
        _check_binding(b)
    const, terms = _affine_parts(m.coefficients, m.intercept, bindings)
    lo, hi = _affine_range(m.coefficients, m.intercept, bindings)
    owner = pv.index
    if hi - lo <= 0.0:
        # log-odds cannot move: the prediction is a constant
        s = sigmoid(lo)
        return milp.add_column(pv.name, s, s, tag=M.PREDICTED_OUTPUT, owner=owner)

    rng = Interval(lo, hi)
    p = logit_partition(rng, delta)
    L, U = p[:-1], p[1:]
    L1, UD = float(p[0]), float(p[-1])
    sL1, sUD = sigmoid(L1), sigmoid(UD)
    V = [v_delta(a, b) for a, b in zip(L, U)]

    y = milp.add_column(pv.name, sL1, sUD, tag=M.PREDICTED_OUTPUT, owner=owner)
    z = [milp.add_column(f"{pv.name}__z{d + 1}", 0, 1, "binary", tag=M.INTERVAL_INDICATOR, owner=owner)
         for d in range(delta)]
    fb = [(user_cols[v.index], beta) for v, beta in terms]  # F.beta = const + sum(fb)
    neg_fb = [(j, -a) for j, a in fb]

    milp.add_row([(zd, 1.0) for zd in z], "==", 1.0, f"{pv.name}__one", tag="logit-one", owner=owner)
    for d in range(delta):
        # (L_d - L_1) z_d + L_1 <= F.beta
        milp.add_row([(z[d], L[d] - L1)] + neg_fb, "<=", const - L1, f"{pv.name}__lo{d + 1}",
                     tag="logit-select", owner=owner)
    for d in range(delta):
        # (U_d - U_D) z_d + U_D >= F.beta
        milp.add_row([(z[d], U[d] - UD)] + neg_fb, ">=", const - UD, f"{pv.name}__up{d + 1}",
                     tag="logit-select", owner=owner)
    for d in range(delta):
        # sigmoid(L_1) + (V_d - sigmoid(L_1)) z_d <= y
        milp.add_row([(z[d], V[d] - sL1), (y, -1.0)], "<=", -sL1, f"{pv.name}__vlo{d + 1}",
                     tag="logit-pin", owner=owner)
    for d in range(delta):
        # sigmoid(U_D) + (V_d - sigmoid(U_D)) z_d >= y
        milp.add_row([(z[d], V[d] - sUD), (y, -1.0)], ">=", -sUD, f"{pv.name}__vup{d + 1}",
                     tag="logit-pin", owner=owner)
    if strengthen:
        milp.add_row([(y, 1.0)] + [(z[d], -V[d]) for d in range(delta)], "==", 0.0,
                     f"{pv.name}__hy", tag="logit-hull", owner=owner)
        milp.add_row(fb + [(z[d], -L[d]) for d in range(delta)], ">=", -const,
                     f"{pv.name}__hlo", tag="logit-hull", owner=owner)
        milp.add_row(fb + [(z[d], -U[d]) for d in range(delta)], "<=", -const,
                     f"{pv.name}__hup", tag="logit-hull", owner=owner)
    return y


def transcribe_nn(milp: Milp, pv: PredictedVariable, m: NeuralNetworkModel, bindings, user_cols,
                  margin: float = 1e-4, fix_stable: bool = True) -> int:
    if len(bindings) != m.n_features:
        raise TranscriptionError(f"{pv.name}: expected {m.n_features} bindings, got {len(bindings)}")
    owner = pv.index
    name = pv.name
    bounds = propagate_bounds_nn(m, [_binding_interval(b) for b in bindings])

    def col(label, lo, hi, kind="continuous", tag=M.NEURON_POST):
        return milp.add_column(f"{name}__{label}", lo, hi, kind, tag=tag, owner=owner)

    def row(terms, sense, rhs, label, tag):
        milp.add_row(terms, sense, rhs, f"{name}__{label}", tag=tag, owner=owner)

    prev_f = []
    for i, b in enumerate(bindings):
        lo, hi = _binding_interval(b)
        g = col(f"G0_{i}", lo, hi, tag=M.NEURON_PRE)
        f = col(f"F0_{i}", lo, hi)
        if isinstance(b, Fixed):
            row([(g, 1.0)], "==", b.value, f"in0_{i}", "nn-input")
        else:
            row([(g, 1.0), (user_cols[b.var.index], -1.0)], "==", 0.0, f"in0_{i}", "nn-input")
        row([(f, 1.0), (g, -1.0)], "==", 0.0, f"id0_{i}", "nn-identity")
        prev_f.append(f)

    last = len(m.weights) - 1
    for k, (w, bias) in enumerate(zip(m.weights, m.biases)):
        layer = k + 1
        lb = bounds[layer]
        cur_f = []
        for v in range(w.shape[0]):
            g_lo, g_hi = float(lb.g_lo[v]), float(lb.g_hi[v])
            g = col(f"G{layer}_{v}", g_lo - margin, g_hi + margin, tag=M.NEURON_PRE)
            affine = [(g, 1.0)] + [(prev_f[u], -float(w[v, u])) for u in range(w.shape[1])]
            if k < last:
                big = max(abs(g_lo), abs(g_hi)) + margin
                f = col(f"F{layer}_{v}", 0.0, max(0.0, g_hi) + margin)
                zlo, zhi = 0.0, 1.0
                if fix_stable and g_lo >= 0.0:
                    zlo = 1.0
                elif fix_stable and g_hi <= 0.0:
                    zhi = 0.0
                z = col(f"z{layer}_{v}", zlo, zhi, "binary", tag=M.RELU_INDICATOR)
                row(affine, "==", float(bias[v]), f"aff{layer}_{v}", "nn-affine")
                # -M(1 - z) <= G <= M z
                row([(g, 1.0), (z, -big)], "<=", 0.0, f"gup{layer}_{v}", "nn-relu-pre")
                row([(g, 1.0), (z, -big)], ">=", -big, f"glo{layer}_{v}", "nn-relu-pre")
                # G - M(1 - z) <= F <= G + M(1 - z)
                row([(f, 1.0), (g, -1.0), (z, -big)], ">=", -big, f"flo{layer}_{v}", "nn-relu-link")
                row([(f, 1.0), (g, -1.0), (z, big)], "<=", big, f"fup{layer}_{v}", "nn-relu-link")
                # 0 <= F <= M z  (lower side is the column bound)
                row([(f, 1.0), (z, -big)], "<=", 0.0, f"fz{layer}_{v}", "nn-relu-post")
            else:
                f = col(f"F{layer}_{v}", g_lo - margin, g_hi + margin)
                row(affine, "==", float(bias[v]), f"aff{layer}_{v}", "nn-affine")
                row([(f, 1.0), (g, -1.0)], "==", 0.0, f"id{layer}_{v}", "nn-identity")
            cur_f.append(f)
        prev_f = cur_f

    out = bounds[-1]
    y = milp.add_column(name, float(out.g_lo[0]) - margin, float(out.g_hi[0]) + margin,
                        tag=M.PREDICTED_OUTPUT, owner=owner)
    milp.add_row([(y, 1.0), (prev_f[0], -1.0)], "==", 0.0, f"{name}__out", tag="nn-output", owner=owner)
    return y


# -- whole model ---------------------------------------------------------------------

_KIND = {"continuous": "continuous", "integer": "integer", "binary": "binary"}


def transcribe_model(model: OptimizationModel, options: TranscriptionOptions | None = None) -> Milp:
    """User columns and rows first (verbatim), then one block per predicted variable."""
    opts = options or TranscriptionOptions()
    milp = Milp(model.name)
    user_cols = [milp.add_column(v.name, v.lower, v.upper, _KIND[v.domain]) for v in model.regular]
    for c in model.constraints:
        milp.add_row([(user_cols[v.index], a) for v, a in c.terms], c.sense, c.rhs, c.name)
    pred_cols = []
    for pv in model.predicted:
        fam = pv.predictor.model
        if isinstance(fam, LinearRegressionModel):
            y = transcribe_linreg(milp, pv, fam, pv.bindings, user_cols)
        elif isinstance(fam, LogisticRegressionModel):
            y = transcribe_logreg(milp, pv, fam, pv.bindings, user_cols, opts.delta, opts.strengthen_logit)
        elif isinstance(fam, NeuralNetworkModel):
            y = transcribe_nn(milp, pv, fam, pv.bindings, user_cols, opts.big_m_margin, opts.fix_stable_relus)
        else:
            raise TranscriptionError(f"unsupported predictor family {type(fam).__name__}")
        pred_cols.append(y)
    terms = []
    for v, a in model.objective:
        j = pred_cols[v.index] if isinstance(v, PredictedVariable) else user_cols[v.index]
        terms.append((j, a))
    milp.set_objective(terms, model.sense)
    return milp

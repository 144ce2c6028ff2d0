"""Small in-repo fitters used to produce benchmark predictors.

Inputs are standardized internally and the scaling is folded back into the
returned coefficients/first-layer weights, so the predictors consume raw
feature values (e.g. scholarship in dollars).
"""

from __future__ import annotations

import numpy as np

from .predictors import (
    LinearRegressionModel,
    LogisticRegressionModel,
    NeuralNetworkModel,
    Predictor,
)

__all__ = ["fit_linear_regression", "fit_logistic_regression", "fit_neural_network"]


def _standardize(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - mu) / sd, mu, sd


def _fold(w, b, mu, sd):
    """Rewrite ``w.((x - mu)/sd) + b`` as ``w'.x + b'``."""
    w2 = w / sd
    return w2, b - w2 @ mu


def fit_linear_regression(X, y, feature_names=(), id="linreg") -> Predictor:
    X = np.asarray(X, dtype=float)
    Z, mu, sd = _standardize(X)
    A = np.column_stack([Z, np.ones(len(Z))])
    sol, *_ = np.linalg.lstsq(A, np.asarray(y, dtype=float), rcond=None)
    w, b = _fold(sol[:-1], sol[-1], mu, sd)
    return Predictor(id, LinearRegressionModel(w, float(b)), tuple(feature_names))


def fit_logistic_regression(X, y, feature_names=(), id="logreg", ridge=1e-6, max_iter=50, tol=1e-10) -> Predictor:
    """Newton / IRLS on the log-likelihood."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Z, mu, sd = _standardize(X)
    A = np.column_stack([Z, np.ones(len(Z))])
    theta = np.zeros(A.shape[1])
    reg = ridge * np.eye(A.shape[1])
    reg[-1, -1] = 0.0
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-(A @ theta)))
        grad = A.T @ (y - p) - reg @ theta
        H = (A * (p * (1 - p))[:, None]).T @ A + reg
        step = np.linalg.solve(H, grad)
        theta += step
        if np.max(np.abs(step)) < tol:
            break
    w, b = _fold(theta[:-1], theta[-1], mu, sd)
    return Predictor(id, LogisticRegressionModel(w, float(b)), tuple(feature_names))


def fit_neural_network(X, y, hidden=(10,), feature_names=(), id="nn", seed=0,
                       epochs=400, lr=0.01, batch_size=512) -> Predictor:
    """Mean-squared-error regression with Adam on mini-batches."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Z, mu, sd = _standardize(X)
    rng = np.random.default_rng(seed)
    sizes = [Z.shape[1], *hidden, 1]
    Ws = [rng.normal(0, np.sqrt(2.0 / a), size=(b, a)) for a, b in zip(sizes[:-1], sizes[1:])]
    bs = [np.zeros(b) for b in sizes[1:]]
    params = Ws + bs
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    n = len(Z)
    L = len(Ws)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            acts = [Z[idx]]
            pre = []
            for k in range(L):
                h = acts[-1] @ Ws[k].T + bs[k]
                pre.append(h)
                acts.append(np.maximum(h, 0.0) if k < L - 1 else h)
            delta = 2.0 * (acts[-1][:, 0] - y[idx])[:, None] / len(idx)
            gW, gb = [None] * L, [None] * L
            for k in range(L - 1, -1, -1):
                gW[k] = delta.T @ acts[k]
                gb[k] = delta.sum(axis=0)
                if k:
                    delta = (delta @ Ws[k]) * (pre[k - 1] > 0)
            step += 1
            grads = gW + gb
            for i, (p, g) in enumerate(zip(params, grads)):
                m1[i] = beta1 * m1[i] + (1 - beta1) * g
                m2[i] = beta2 * m2[i] + (1 - beta2) * g * g
                mh = m1[i] / (1 - beta1 ** step)
                vh = m2[i] / (1 - beta2 ** step)
                p -= lr * mh / (np.sqrt(vh) + eps)
    W0, b0 = _fold(Ws[0], bs[0], mu, sd)
    weights = (W0, *Ws[1:])
    biases = (b0, *bs[1:])
    return Predictor(id, NeuralNetworkModel(weights, biases), tuple(feature_names))

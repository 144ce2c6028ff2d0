"""Maximize the output of a small ReLU network over a box of inputs.

A hand-written 2-4-1 network stands in for a trained model.  We ask which
point of [-2, 2] x [-2, 2] with x0 + x1 <= 1 drives the output highest, then
check the answer with a plain forward pass and a coarse grid search.
"""

import numpy as np

from predopt import NeuralNetworkModel, OptimizationModel, Predictor, predict, solve_milp, transcribe_model

net = NeuralNetworkModel(
    weights=(
        [[1.0, -1.0], [-0.5, 2.0], [1.5, 0.5], [-1.0, -1.0]],
        [[1.0, -2.0, 0.7, 1.2]],
    ),
    biases=([0.2, -0.4, -1.0, 0.5], [0.1]),
)
score = Predictor("score", net, ("x0", "x1"))

m = OptimizationModel("network_demo")
x0 = m.add_regular_variable("x0", -2, 2)
x1 = m.add_regular_variable("x1", -2, 2)
y = m.add_predicted_variable("y", score, [x0, x1])
m.add_constraint([(x0, 1.0), (x1, 1.0)], "<=", 1.0)
m.set_objective([(y, 1.0)], "maximize")

milp = transcribe_model(m)
print(milp.summary())

sol = solve_milp(milp)
best = (sol.value("x0"), sol.value("x1"))
print(f"status {sol.status}, {sol.nodes} nodes")
print(f"argmax x = ({best[0]:.4f}, {best[1]:.4f}), y = {sol.value('y'):.6f}")
print(f"forward pass at that point: {predict(score, best):.6f}")

# a 401 x 401 grid can only do as well as the exact optimum
g = np.linspace(-2, 2, 401)
grid_best = max(predict(score, (a, b)) for a in g for b in g if a + b <= 1 + 1e-12)
print(f"grid search best: {grid_best:.6f}")

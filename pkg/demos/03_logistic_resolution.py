"""How finely to cut the log-odds axis.

A logistic output is modelled by splitting its log-odds range into equal
intervals and using one binary per interval.  More intervals give a closer
match to the true sigmoid at the cost of a bigger MILP.  This prints, for one
instance, the RMSE between the MILP's probabilities and the exact ones.
"""

import numpy as np

from predopt import predict
from predopt.enrollment import generate_students, logit_error_budget, solve_enrollment

students, truth = generate_students(50, seed=0)

print("intervals  rmse      worst-case sum  time(s)")
for delta in (2, 5, 10, 20, 50):
    res = solve_enrollment(students, truth, delta=delta)
    exact = np.array([predict(truth, [s.sat, s.gpa, x]) for s, x in zip(students, res.allocation)])
    rmse = np.sqrt(np.mean((res.predicted - exact) ** 2))
    print(f"{delta:9d}  {rmse:.6f}  {logit_error_budget(students, truth, delta):14.4f}  {res.time_s:7.2f}")

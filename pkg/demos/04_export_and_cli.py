"""Hand a model to another solver, or drive everything from files.

The MILP is written as MPS text, read back and solved again.  Then the same
model is saved as JSON documents and run through the ``predopt`` command.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from predopt import export_mps, model_to_document, read_mps, save_predictor, solve_milp, transcribe_model
from predopt.enrollment import build_enrollment_model, generate_students, train_predictor

students, _ = generate_students(8, seed=1)
pred = train_predictor("logreg", seed=0, n_records=5000)
model = build_enrollment_model(students, pred)
milp = transcribe_model(model)

text = export_mps(milp)
print(text.splitlines()[0], "...", f"{len(text.splitlines())} lines")
again = read_mps(text)
print("re-export identical:", export_mps(again) == text)
print("objectives:", solve_milp(milp).objective, solve_milp(again).objective)

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    (tmp / "model.json").write_text(json.dumps(model_to_document(model)))
    (tmp / "pred.json").write_text(json.dumps(save_predictor(pred)))
    base = [sys.executable, "-m", "predopt.cli"]
    files = ["--model", str(tmp / "model.json"), "--predictors", str(tmp / "pred.json")]
    subprocess.run(base + ["solve", *files, "--out", str(tmp / "sol.json")], check=True)
    sol = json.loads((tmp / "sol.json").read_text())
    print("cli status", sol["status"], "objective", sol["objective"])
    out = subprocess.run(base + ["evaluate", "--solution", str(tmp / "sol.json"), *files],
                         capture_output=True, text=True)
    print(out.stdout)

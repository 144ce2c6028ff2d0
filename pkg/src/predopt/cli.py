"""Command-line entry point: ``predopt {solve,export,benchmark,evaluate}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .bnb import SolveOptions, solve_milp
from .enrollment import BenchmarkConfig, run_benchmark, summarize, write_csv
from .export import export_lp_format, export_mps, read_solution, write_solution
from .model import check_solution, model_from_document
from .predictors import load_predictors
from .transcription import TranscriptionOptions, transcribe_model

log = logging.getLogger("predopt")


def _load(path):
    with open(path) as fh:
        return json.load(fh)


def _model(args):
    predictors = load_predictors(_load(args.predictors))
    return model_from_document(_load(args.model), predictors)


def _transcribe(args):
    opts = TranscriptionOptions(delta=args.delta, strengthen_logit=not args.literal_logit_rows)
    return transcribe_model(_model(args), opts)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_solve(args):
    milp = _transcribe(args)
    log.info("%s", milp.summary())
    sol = solve_milp(milp, SolveOptions(gap=args.gap, node_limit=args.node_limit, time_limit=args.time_limit))
    log.info("status=%s objective=%s nodes=%d time=%.2fs", sol.status, sol.objective, sol.nodes, sol.wall_time)
    _write(json.dumps(write_solution(sol, include_aux=args.include_aux), indent=2) + "\n", args.out)
    return 0 if sol.status in ("optimal", "feasible-gap-limit") else 1


def cmd_export(args):
    milp = _transcribe(args)
    text = export_mps(milp) if args.format == "mps" else export_lp_format(milp)
    _write(text, args.out)
    return 0


def cmd_evaluate(args):
    model = _model(args)
    rec = read_solution(_load(args.solution))
    if not rec.values:
        print(json.dumps({"status": rec.status, "feasible": None}))
        return 1
    report = check_solution(model, rec.values, tol=args.tol)
    report["status"] = rec.status
    report["reported_objective"] = rec.objective
    report.pop("exact_predictions")
    print(json.dumps(report, indent=2))
    return 0 if report["feasible"] else 1


def _csv_list(text, cast=str):
    return tuple(cast(t) for t in text.split(",") if t)


def cmd_benchmark(args):
    cfg = BenchmarkConfig(
        families=_csv_list(args.families),
        sizes=_csv_list(args.sizes, int),
        trials=args.trials,
        seed=args.seed,
        time_limit=args.time_limit,
        training_size=args.training_size,
    )

    def progress(row):
        log.info("%s %s N=%d trial=%d status=%s time=%.2fs", row.family, row.params, row.N, row.trial,
                 row.status, row.time_s)

    rows = run_benchmark(cfg, progress)
    write_csv(rows, args.out)
    summary_path = args.summary or args.out.rsplit(".", 1)[0] + "_summary.csv"
    write_csv(summarize(rows), summary_path)
    log.info("wrote %s and %s", args.out, summary_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="predopt", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def model_args(sp):
        sp.add_argument("--model", required=True, help="model description (JSON)")
        sp.add_argument("--predictors", required=True, help="predictor document(s) (JSON)")
        sp.add_argument("--delta", type=int, default=10, help="log-odds intervals per logistic block")
        sp.add_argument("--literal-logit-rows", action="store_true",
                        help="omit the aggregated rows added to logistic blocks")

    s = sub.add_parser("solve", help="transcribe and solve a model")
    model_args(s)
    s.add_argument("--gap", type=float, default=1e-6)
    s.add_argument("--node-limit", type=int)
    s.add_argument("--time-limit", type=float)
    s.add_argument("--include-aux", action="store_true", help="also write auxiliary column values")
    s.add_argument("--out", help="solution document (default: stdout)")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("export", help="write the transcribed MILP as MPS or LP text")
    model_args(e)
    e.add_argument("--format", choices=("mps", "lp"), default="mps")
    e.add_argument("--out")
    e.set_defaults(func=cmd_export)

    b = sub.add_parser("benchmark", help="scholarship-allocation sweep")
    b.add_argument("--families", default="linreg,logreg:5,logreg:10,nn:1",
                   help="comma list of linreg, logreg:<delta>, nn:<hidden layers>")
    b.add_argument("--sizes", default="50,100,500,1000")
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--time-limit", type=float, default=600.0, help="per-trial solver limit (s)")
    b.add_argument("--training-size", type=int, default=20_000)
    b.add_argument("--out", default="results.csv")
    b.add_argument("--summary", help="aggregate CSV (default: <out>_summary.csv)")
    b.set_defaults(func=cmd_benchmark)

    v = sub.add_parser("evaluate", help="re-check a solution document against the model")
    v.add_argument("--solution", required=True)
    v.add_argument("--model", required=True)
    v.add_argument("--predictors", required=True)
    v.add_argument("--tol", type=float, default=1e-6)
    v.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

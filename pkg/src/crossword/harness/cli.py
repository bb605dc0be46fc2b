"""Command-line entry points.

  run <scenario-file> [--seed S] [--out metrics.jsonl]   simulate, emit metrics, check safety
  explore --n 3,5,7,9                                    closed-form vs brute-force config regions
  linearize <history-file>                               check a recorded history
  staleness <scenario-file>                              follower-read staleness probe

Exit codes: 0 = all checks passed; 2 = property violation (witness path is
printed); 3 = linearizability search inconclusive (budget exhausted — not a
violation).
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import sys
from dataclasses import replace

from . import linearize as lin
from .explore import explore_rows, format_rows
from .runner import (
    check_conservation,
    check_prefix_digests,
    check_slot_agreement,
    run_scenario,
)
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_INCONCLUSIVE = 3


def _check_run(result, budget: int):
    """Returns (verdict, problems, witness) for one finished run."""
    problems = (
        check_conservation(result) + check_slot_agreement(result) + check_prefix_digests(result)
    )
    witness = None
    verdict = "ok"
    if problems:
        verdict = "violation"
    ops = lin.from_history(result.history)
    lverdict, lwitness = lin.check_linearizable(ops, budget=budget)
    if lverdict == "violation":
        verdict = "violation"
        witness = lwitness
        problems = problems + ["history is not linearizable"]
    elif lverdict == "inconclusive" and verdict == "ok":
        verdict = "inconclusive"
        problems = problems + [str(lwitness)]
    return verdict, problems, witness


def _write_witness(witness, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        lin.write_history(witness, fh)


def _cmd_run(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error at {exc.path}: {exc.reason}", file=sys.stderr)
        return EXIT_VIOLATION
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)

    if args.matrix:
        seeds = [int(s) for s in args.matrix.split(",") if s]
        cells = [(args.scenario, seed, args.budget) for seed in seeds]
        with multiprocessing.Pool(min(len(cells), args.workers)) as pool:
            outcomes = pool.map(_matrix_cell, cells)
        worst = EXIT_OK
        for seed, verdict, problems in outcomes:
            print(f"seed={seed} verdict={verdict}" + (f" problems={problems}" if problems else ""))
            if verdict == "violation":
                worst = EXIT_VIOLATION
            elif verdict == "inconclusive" and worst == EXIT_OK:
                worst = EXIT_INCONCLUSIVE
        return worst

    result = run_scenario(sc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            result.report.write_jsonl(fh)
    else:
        result.report.write_jsonl(sys.stdout)
    if args.history:
        ops = lin.from_history(result.history)
        with open(args.history, "w", encoding="utf-8") as fh:
            lin.write_history(ops, fh)

    verdict, problems, witness = _check_run(result, args.budget)
    for p in problems:
        print(f"check: {p}", file=sys.stderr)
    if verdict == "violation":
        if witness:
            path = (args.out or "metrics") + ".witness.jsonl"
            _write_witness(witness, path)
            print(f"violation witness: {path}", file=sys.stderr)
            for op in witness:
                print(f"  {lin.describe(op)}", file=sys.stderr)
        return EXIT_VIOLATION
    if verdict == "inconclusive":
        return EXIT_INCONCLUSIVE
    print(
        f"ok: {result.report.summary['ops_completed']} ops, "
        f"mean {result.report.summary['mean_ms']:.2f} ms, "
        f"p95 {result.report.summary['p95_ms']:.2f} ms",
        file=sys.stderr,
    )
    return EXIT_OK


def _matrix_cell(cell):
    path, seed, budget = cell
    sc = replace(load_scenario(path), seed=seed)
    result = run_scenario(sc)
    verdict, problems, _witness = _check_run(result, budget)
    return seed, verdict, problems


def _cmd_explore(args) -> int:
    n_list = [int(s) for s in args.n.split(",") if s]
    for n in n_list:
        if n < 3 or n % 2 == 0:
            print(f"explore: n={n} must be odd and >= 3", file=sys.stderr)
            return EXIT_VIOLATION
    rows = explore_rows(n_list)
    for line in format_rows(rows):
        print(line)
    mismatches = [r for r in rows if r["valid_c4"] != r["valid_oracle"]]
    if mismatches:
        print(f"explore: {len(mismatches)} grid points disagree", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _cmd_linearize(args) -> int:
    with open(args.history, "r", encoding="utf-8") as fh:
        ops = lin.read_history(fh)
    verdict, witness = lin.check_linearizable(ops, budget=args.budget)
    if verdict == "ok":
        print(f"ok: {len(ops)} ops linearizable")
        return EXIT_OK
    if verdict == "inconclusive":
        print(f"inconclusive: {witness}")
        return EXIT_INCONCLUSIVE
    path = args.history + ".witness.jsonl"
    _write_witness(witness, path)
    print(f"violation witness: {path}")
    for op in witness:
        print(f"  {lin.describe(op)}")
    return EXIT_VIOLATION


def _cmd_staleness(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error at {exc.path}: {exc.reason}", file=sys.stderr)
        return EXIT_VIOLATION
    if not sc.follower_reads.enabled:
        print("staleness: scenario has follower_reads disabled; enabling", file=sys.stderr)
        sc.follower_reads.enabled = True
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    result = run_scenario(sc)
    for t_ms, key, behind in result.staleness:
        print(json.dumps({"type": "staleness", "t_ms": t_ms, "key": key, "versions_behind": behind}))
    mean = result.report.summary["mean_staleness"]
    print(json.dumps({"type": "summary", "samples": len(result.staleness), "mean_staleness": mean}))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crossword", description="replicated-KV consensus simulator harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file and check safety properties")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None, help="metrics JSONL path (default stdout)")
    p_run.add_argument("--history", default=None, help="also write the op history as JSONL")
    p_run.add_argument("--matrix", default=None, help="comma-separated seeds to run in parallel")
    p_run.add_argument("--workers", type=int, default=4)
    p_run.add_argument("--budget", type=int, default=2_000_000)
    p_run.set_defaults(fn=_cmd_run)

    p_exp = sub.add_parser("explore", help="compare config validity: closed form vs oracle")
    p_exp.add_argument("--n", default="3,5,7,9", help="comma-separated odd cluster sizes")
    p_exp.set_defaults(fn=_cmd_explore)

    p_lin = sub.add_parser("linearize", help="check a recorded history file")
    p_lin.add_argument("history")
    p_lin.add_argument("--budget", type=int, default=2_000_000)
    p_lin.set_defaults(fn=_cmd_linearize)

    p_st = sub.add_parser("staleness", help="follower-read staleness probe")
    p_st.add_argument("scenario")
    p_st.add_argument("--seed", type=int, default=None)
    p_st.set_defaults(fn=_cmd_staleness)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``slbsr FILE [options]``."""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional, Sequence

from .cegqi import ALEPH0, FINITE, SolveOptions, SolveResourceOut, SolveSat, solve
from .formula import ContractViolation, FragmentError, desugar, functional_form
from .oracle import OracleConfig, OracleSat, OracleUnsat, oracle_solve, oracle_solve_aleph0
from .parser import ParseError, parse

EXIT_DECIDED, EXIT_INPUT, EXIT_RESOURCE = 0, 2, 3


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slbsr", description="Decide ∃*∀* separation-logic problems.")
    p.add_argument("file", help="input file, or - for standard input")
    p.add_argument("--mode", choices=[FINITE, ALEPH0], default=FINITE)
    p.add_argument("--trace", action="store_true", help="print instantiations and ground checks")
    p.add_argument("--dump-model", action="store_true", help="print the model on sat")
    p.add_argument("--oracle", action="store_true", help="also run the brute-force oracle")
    p.add_argument("--forbid-nil-alloc", action="store_true")
    p.add_argument("--budget", type=int, default=10**8, help="step budget per ground check")
    p.add_argument("--max-universe", type=int, default=None, help="universe cap for the oracle")
    return p


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_arg_parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.file == "-" else open(args.file, encoding="utf-8").read()
    except OSError as e:
        print(f"error: {e}", file=err)
        return EXIT_INPUT
    try:
        problem = parse(text)
        pi = functional_form(desugar(problem.assertion), problem.constants, problem.k)
    except ParseError as e:
        print(f"parse error: {e}", file=err)
        return EXIT_INPUT
    except (FragmentError, ContractViolation) as e:
        print(f"unsupported input: {e}", file=err)
        return EXIT_INPUT
    result = solve(pi, args.mode, SolveOptions(budget=args.budget, forbid_nil_alloc=args.forbid_nil_alloc))
    if isinstance(result, SolveResourceOut):
        print("unknown", file=out)
        print("resource limit reached", file=err)
        return EXIT_RESOURCE
    lines: List[str] = [result.verdict]
    if args.dump_model and isinstance(result, SolveSat):
        lines.append(result.model.dump())
    if args.trace:
        lines.extend(result.trace.lines(result.verdict))
    if args.oracle:
        run_oracle = oracle_solve_aleph0 if args.mode == ALEPH0 else oracle_solve
        o = run_oracle(pi, OracleConfig(max_universe=args.max_universe))
        verdict = "sat" if isinstance(o, OracleSat) else "unsat" if isinstance(o, OracleUnsat) else "unknown"
        lines.append(f"oracle: {verdict}")
        if verdict != "unknown":
            lines.append(f"agreement: {'yes' if verdict == result.verdict else 'no'}")
    print("\n".join(lines), file=out)
    return EXIT_DECIDED


def main() -> None:
    sys.exit(run())


def bench_main(argv: Optional[Sequence[str]] = None) -> int:
    """``slbsr-bench``: write the unfolding corpus and a tab-separated summary."""
    from .bench import run_case, table1_corpus, write_corpus, write_tsv

    p = argparse.ArgumentParser(prog="slbsr-bench")
    p.add_argument("--depths", type=int, nargs="+", default=[1, 2])
    p.add_argument("--out", default="bench-out")
    p.add_argument("--families", nargs="*", default=None)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--budget", type=int, default=10**8)
    args = p.parse_args(argv)
    cases = [c for c in table1_corpus(args.depths) if not args.families or c.family in args.families]
    write_corpus(cases, args.out)
    rows = []
    for c in cases:
        row = run_case(c, budget=args.budget, oracle=args.oracle)
        print(f"{row.case_id}\t{row.expected}\t{row.solver}\t{row.seconds:.2f}s", flush=True)
        rows.append(row)
    write_tsv(rows, f"{args.out}/summary.tsv")
    return 0 if all(r.solver == r.expected for r in rows) else 1

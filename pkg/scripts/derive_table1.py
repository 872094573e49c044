"""Brute-force oracle verdicts for the unfolding benchmarks at a given depth.

Usage: python3 scripts/derive_table1.py FAMILY DEPTH [MAX_CASES]
Prints one tab-separated line: family, depth, oracle verdict, cases, seconds.
"""
import sys
import time

from slbsr.bench import INVALID, UNKNOWN, VALID, encode_entailment, table1_corpus
from slbsr.oracle import OracleConfig, OracleSat, OracleUnsat, oracle_solve


def main() -> None:
    family, depth = sys.argv[1], int(sys.argv[2])
    max_cases = int(sys.argv[3]) if len(sys.argv) > 3 else 10**9
    case = next(c for c in table1_corpus([depth]) if c.family == family)
    t = time.perf_counter()
    r = oracle_solve(encode_entailment(case), OracleConfig(max_cases=max_cases))
    verdict = INVALID if isinstance(r, OracleSat) else VALID if isinstance(r, OracleUnsat) else UNKNOWN
    print(f"{family}\t{depth}\t{verdict}\t{r.cases}\t{time.perf_counter() - t:.1f}", flush=True)


if __name__ == "__main__":
    main()

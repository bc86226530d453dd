"""Run the acceptance criteria and write a JSON summary.

    python scripts/run_acceptance.py --seed 0 --out results/acceptance.json
"""
import argparse
import sys
from pathlib import Path

from hardylab.acceptance import CRITERIA, run_suite, summary_json


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--criteria", type=int, nargs="*", choices=sorted(CRITERIA))
    parser.add_argument("--out", type=Path)
    args = parser.parse_args()
    results = run_suite(args.criteria, seed=args.seed, threads=args.threads)
    for r in results:
        print(f"{r.line()}  ({r.runtime:.2f}s)")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(summary_json(results))
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())

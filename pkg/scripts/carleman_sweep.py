"""Seeded Carleman sweep for one or both operators, written as CSV, with
the smallest margin/rhs per (mu, eps, R) printed to stdout."""
import argparse
from collections import defaultdict
from pathlib import Path

from hardylab.carleman import OPERATORS, carleman_sweep, write_sweep_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--operator", choices=OPERATORS + ("both",), default="both")
    parser.add_argument("--bumps", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=4)
    parser.add_argument("--out", type=Path, default=Path("results"))
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for op in OPERATORS if args.operator == "both" else (args.operator,):
        rows = carleman_sweep(op, n_bumps=args.bumps, seed=args.seed, threads=args.threads)
        write_sweep_csv(rows, args.out / f"carleman_{op}.csv")
        worst = defaultdict(lambda: float("inf"))
        for r in rows:
            worst[(r.mu, r.eps, r.R)] = min(worst[(r.mu, r.eps, r.R)], r.margin / r.rhs)
        print(f"{op}: {len(rows)} checks, {sum(not r.passed for r in rows)} failures")
        for (mu, eps, R), m in sorted(worst.items()):
            print(f"  mu={mu:<4} eps={eps:<4} R={R:<5} min margin/rhs = {m:.4f}")


if __name__ == "__main__":
    main()

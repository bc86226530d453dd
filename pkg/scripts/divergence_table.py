"""Truncated weighted norms of the explicit free solution under the
rescaled counterexample weights, for several R and box half widths."""
import argparse
from pathlib import Path

from hardylab.counterexample import divergence_demonstration, scaled_weight, solve_weight_ode


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--R", type=float, nargs="+", default=[0.1, 0.2, 0.3, 1.0, 5.0])
    parser.add_argument("--L", type=float, nargs="+", default=[5.0, 10.0, 20.0, 40.0, 80.0])
    parser.add_argument("--out", type=Path)
    args = parser.parse_args()
    traj = solve_weight_ode(max(max(args.R), 1.0))
    for R in args.R:
        table = divergence_demonstration(R, args.L, traj)
        print(f"R={R}: a_R(0)={R:g}, a_R(1)={float(scaled_weight(traj, R, 1.0)):.6g}, regime at t=0: {table.regime}")
        print(f"  {'L':>6} {'log H(0)':>14} {'H(+-1)':>14}  converged(0, 1)")
        for row in table.rows:
            print(f"  {row.L:6g} {row.log_H0:14.6g} {row.H_plus1:14.6g}  {row.H0_converged}, {row.H1_converged}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            table.write_csv(args.out / f"divergence_R{R:g}.csv")


if __name__ == "__main__":
    main()

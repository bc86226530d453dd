"""Normalized Hardy products for a grid of Gaussian data and times, and the
heat-flow finiteness boundary against its closed form."""
import argparse

import numpy as np

from hardylab.analytic import GaussianState
from hardylab.grid import Grid
from hardylab.hardy import hardy_product, heat_boundary_closed_form, heat_boundary_scan
from hardylab.propagator import free_flow


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--half-width", type=float, default=60.0)
    parser.add_argument("--points", type=int, default=2048)
    args = parser.parse_args()
    grid = Grid(args.half_width, args.points)
    print("Re c   Im c    T     alpha*beta/(4T)")
    lowest = np.inf
    for re in (0.25, 1.0, 4.0):
        for im in (-1.0, 0.0, 1.0):
            for T in (0.5, 1.0, 2.0):
                u0 = GaussianState(complex(re, im)).sample(grid)
                value = hardy_product(u0, free_flow(u0, 0.0, 1.0, T), T).normalized
                lowest = min(lowest, value)
                print(f"{re:5.2f} {im:5.1f} {T:5.1f}   {value:.8f}")
    print(f"lowest product: {lowest:.8f}")
    print("\nc        scanned delta*   closed form")
    for c in (0.1, 0.25, 1.0, 4.0, 100.0, 1e6):
        print(f"{c:<8g} {heat_boundary_scan(GaussianState(c)):.12f}   {heat_boundary_closed_form(c):.12f}")


if __name__ == "__main__":
    main()

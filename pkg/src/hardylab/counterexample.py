"""A weight a(t) with a positive commutator that still cannot be entered by a
free solution.

a solves 32 a^3 + a'' - 2 a'^2 / a = 0 with a(0) = 1, a'(0) = 0.  With
b = 1/a this becomes b'' = 32 / b, b(0) = 1, b'(0) = 0, which is regular and
has the first integral b'^2 = 64 log b.  The rescaled weights
a_R(t) = R a(R t) solve the same equation, and R a(R) -> 0, so for large R
the weight exp(a_R x^2) is far too strong at t = 0 for the free solution
(t - i)^(-1/2) exp(i x^2 / (4 (t - i))) while remaining mild at t = +-1.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import BPoly

from .analytic import explicit_solution, explicit_solution_log_density
from .errors import ParameterOutOfRange, StepTooLarge, TrajectoryTooShort
from .grid import ComplexField, Grid, l2_norm, spectral_laplacian

MAX_STEP = 1e-3


@dataclass(frozen=True, eq=False)
class OdeTrajectory:
    times: np.ndarray
    b_values: np.ndarray
    b_slopes: np.ndarray
    step: float
    order: int = 4

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def a_values(self) -> np.ndarray:
        return 1.0 / self.b_values

    @cached_property
    def _dense(self) -> BPoly:
        # Quintic Hermite: value, slope and the exact curvature 32/b at each node.
        data = np.stack([self.b_values, self.b_slopes, 32.0 / self.b_values], axis=1)
        return BPoly.from_derivatives(self.times, data)

    def b(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max * (1 + 1e-12)):
            raise TrajectoryTooShort(f"t outside [0, {self.t_max}]")
        return self._dense(t, order)

    def a(self, t, order: int = 0):
        """a = 1/b and its first two derivatives."""
        b0 = self.b(t)
        if order == 0:
            return 1.0 / b0
        b1 = self.b(t, 1)
        if order == 1:
            return -b1 / b0**2
        if order == 2:
            return -self.b(t, 2) / b0**2 + 2.0 * b1**2 / b0**3
        raise ValueError("order <= 2")

    def residual(self, t) -> np.ndarray:
        """32 a^3 + a'' - 2 a'^2 / a from the dense output."""
        a0, a1, a2 = self.a(t), self.a(t, 1), self.a(t, 2)
        return 32.0 * a0**3 + a2 - 2.0 * a1**2 / a0

    def energy_residual(self) -> np.ndarray:
        """b'^2 - 64 log b at the nodes."""
        return self.b_slopes**2 - 64.0 * np.log(self.b_values)


def solve_weight_ode(t_max: float, step: float = MAX_STEP) -> OdeTrajectory:
    """Classical RK4 for b'' = 32 / b from b(0) = 1, b'(0) = 0."""
    if step > MAX_STEP:
        raise StepTooLarge(f"step {step} exceeds {MAX_STEP}")
    if not t_max > 0:
        raise ParameterOutOfRange("counterexample.t_max", "must be positive")
    n = math.ceil(t_max / step - 1e-9)
    h = t_max / n
    b = np.empty(n + 1)
    v = np.empty(n + 1)
    b[0], v[0] = 1.0, 0.0
    for i in range(n):
        y, p = b[i], v[i]
        k1b, k1v = p, 32.0 / y
        k2b, k2v = p + 0.5 * h * k1v, 32.0 / (y + 0.5 * h * k1b)
        k3b, k3v = p + 0.5 * h * k2v, 32.0 / (y + 0.5 * h * k2b)
        k4b, k4v = p + h * k3v, 32.0 / (y + h * k3b)
        b[i + 1] = y + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        v[i + 1] = p + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return OdeTrajectory(np.linspace(0.0, t_max, n + 1), b, v, h)


def scaled_weight(traj: OdeTrajectory, R: float, t, order: int = 0):
    """a_R(t) = R a(R |t|) (even extension) or its derivatives."""
    if not R > 0:
        raise ParameterOutOfRange("counterexample.R", "must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(R * np.abs(t) > traj.t_max * (1 + 1e-12)):
        raise TrajectoryTooShort(f"R |t| exceeds the trajectory length {traj.t_max}")
    sign = np.sign(t) if order % 2 else 1.0
    return R ** (order + 1) * traj.a(R * np.abs(t), order) * sign


def scaled_residual(traj: OdeTrajectory, R: float, t) -> np.ndarray:
    a0, a1, a2 = (scaled_weight(traj, R, t, k) for k in range(3))
    return 32.0 * a0**3 + a2 - 2.0 * a1**2 / a0


def explicit_solution_residual(grid: Grid, t: float) -> float:
    """Relative L2 size of u_t - i u_xx with analytic u_t and spectral u_xx."""
    z = t - 1j
    u = explicit_solution(grid.x, t)
    ut = u * (-0.5 / z - 1j * grid.x**2 / (4.0 * z * z))
    field = ComplexField(grid, u)
    r = ut - 1j * spectral_laplacian(field).values
    return l2_norm(field.with_values(r)) / l2_norm(field.with_values(ut))


def _log_even_integral(log_density, L: float) -> float:
    """log of int_{-L}^{L} exp(log_density(x)) dx for an even integrand,
    shifted by the sampled maximum so that huge values do not overflow."""
    xs = np.linspace(0.0, L, 4001)
    top = float(np.max(log_density(xs)))
    val = quad(lambda x: math.exp(float(log_density(np.array(x))) - top), 0.0, L,
               epsabs=0.0, epsrel=1e-12, limit=400)[0]
    return math.log(2.0 * val) + top


@dataclass(frozen=True)
class DivergenceRow:
    R: float
    L: float
    log_H0: float
    H_minus1: float
    H_plus1: float
    H0_converged: bool
    H1_converged: bool


@dataclass(frozen=True)
class DivergenceTable:
    R: float
    rate_at_one: float
    rows: list

    @property
    def regime(self) -> str:
        return "convergent" if 2 * self.R < 0.5 else "divergent"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["R", "L", "log_H0_truncated", "H_minus1", "H_plus1", "H0_converged", "H1_converged"])
            for r in self.rows:
                w.writerow([repr(r.R), repr(r.L), repr(r.log_H0), repr(r.H_minus1), repr(r.H_plus1),
                            str(r.H0_converged).lower(), str(r.H1_converged).lower()])


def divergence_demonstration(R: float, halfwidths, traj: OdeTrajectory | None = None, tol: float = 1e-6) -> DivergenceTable:
    """Truncated H_{a_R}(t) = int_{-L}^{L} exp(2 a_R(t) x^2) |u(x, t)|^2 dx at
    t = 0 and t = +-1 for each half width L.

    H(0) is reported as a logarithm since it overflows for R >= 1/4.  A
    column is marked converged once its relative change from the previous
    L drops below ``tol``.
    """
    halfwidths = [float(L) for L in halfwidths]
    if any(b <= a for a, b in zip(halfwidths, halfwidths[1:])):
        raise ParameterOutOfRange("counterexample.halfwidths", "must be increasing")
    if traj is None:
        traj = solve_weight_ode(max(R, 1.0))
    rate0 = float(scaled_weight(traj, R, 0.0))
    rate1 = float(scaled_weight(traj, R, 1.0))
    rows, prev = [], None
    for L in halfwidths:
        log_h0 = _log_even_integral(lambda x: 2 * rate0 * x**2 + explicit_solution_log_density(x, 0.0), L)
        hm = math.exp(_log_even_integral(lambda x: 2 * rate1 * x**2 + explicit_solution_log_density(x, -1.0), L))
        hp = math.exp(_log_even_integral(lambda x: 2 * rate1 * x**2 + explicit_solution_log_density(x, 1.0), L))
        if prev is None:
            c0 = c1 = False
        else:
            c0 = abs(log_h0 - prev.log_H0) < tol  # log change, so no overflow
            c1 = max(abs(hm - prev.H_minus1) / hm, abs(hp - prev.H_plus1) / hp) < tol
        prev = DivergenceRow(R, L, log_h0, hm, hp, c0, c1)
        rows.append(prev)
    return DivergenceTable(R, rate1, rows)

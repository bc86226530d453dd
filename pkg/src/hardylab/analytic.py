"""Closed-form Gaussian solutions of du/dt = (A + iB) u_xx.

A Gaussian ``amplitude * exp(-c x^2)`` with Re c > 0 stays Gaussian under
any flow with A >= 0:

    c(t) = c / (1 + 4 (A + iB) c t),   amplitude(t) = amplitude * (1 + 4 (A + iB) c t)^(-1/2).

These formulas are the ground truth for the spectral propagators, the
weighted-norm quadrature and the Hardy threshold experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchOrDecayLoss, ParameterOutOfRange
from .grid import ComplexField, Grid, SpaceTimeField


@dataclass(frozen=True)
class GaussianState:
    c: complex
    amplitude: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if not self.c.real > 0:
            raise BranchOrDecayLoss(f"Re c must be positive, got {self.c}")

    def __call__(self, x):
        return self.amplitude * np.exp(-self.c * np.asarray(x) ** 2)

    def sample(self, grid: Grid) -> ComplexField:
        return ComplexField(grid, self(grid.x))

    @property
    def decay_rate(self) -> float:
        """Rate r in |u| = |amplitude| exp(-r x^2)."""
        return self.c.real


def _spreading_factor(state: GaussianState, A: float, B: float, t):
    return 1.0 + 4.0 * complex(A, B) * state.c * np.asarray(t, dtype=float)


def evolve_gaussian(state: GaussianState, A: float, B: float, t: float) -> GaussianState:
    if A < 0:
        raise ParameterOutOfRange("flow.A", "must be nonnegative")
    z = complex(_spreading_factor(state, A, B, t))
    c_new = state.c / z
    if not c_new.real > 0:
        raise BranchOrDecayLoss(f"Re c(t) = {c_new.real:g} <= 0 at t={t}")
    return GaussianState(c_new, state.amplitude / np.sqrt(z))


def evolve_gaussian_path(state: GaussianState, A: float, B: float, times) -> list[GaussianState]:
    """Evolve to each of ``times`` keeping the amplitude continuous in t.

    The square root is taken on the unwrapped argument of the spreading
    factor, so the branch never jumps along the trajectory.
    """
    times = np.asarray(times, dtype=float)
    z = _spreading_factor(state, A, B, times)
    arg = np.unwrap(np.angle(np.concatenate([[1.0 + 0j], z])))[1:]
    root = np.sqrt(np.abs(z)) * np.exp(0.5j * arg)
    out = []
    for zi, ri, t in zip(z, root, times):
        c_new = state.c / zi
        if not c_new.real > 0:
            raise BranchOrDecayLoss(f"Re c(t) = {c_new.real:g} <= 0 at t={t}")
        out.append(GaussianState(c_new, state.amplitude / ri))
    return out


def gaussian_weighted_norm(state: GaussianState, gamma: float) -> float:
    """||exp(gamma x^2) u||; ``math.inf`` when the integral diverges."""
    gap = 2.0 * state.c.real - 2.0 * gamma
    if gap <= 0:
        return math.inf
    return abs(state.amplitude) * (math.pi / gap) ** 0.25


def gaussian_weighted_norm_sq_series(states, gamma: float) -> np.ndarray:
    return np.array([gaussian_weighted_norm(s, gamma) ** 2 for s in states])


def sample_evolution(state: GaussianState, A: float, B: float, grid: Grid, times) -> SpaceTimeField:
    """Closed-form evolution sampled pointwise on the grid.

    Unlike a spectral evolution this has no FFT round-off floor in the tails,
    which matters once the samples are multiplied by exp(gamma x^2).
    """
    states = evolve_gaussian_path(state, A, B, times)
    return SpaceTimeField(grid, np.asarray(times, dtype=float), np.stack([s(grid.x) for s in states]))


@dataclass(frozen=True)
class ExtremalPair:
    initial: GaussianState
    beta: float
    T: float
    alpha: float
    terminal_rate: float


def hardy_extremal_pair(beta: float, T: float) -> ExtremalPair:
    """Initial datum exp(-(1/beta^2 + i/(4T)) x^2) of the equality case.

    The terminal decay rate is measured by evolving the datum with the free
    Schrodinger flow and reading off Re c(T); alpha = 1/sqrt(rate).
    """
    if beta <= 0 or T <= 0:
        raise ParameterOutOfRange("hardy.beta" if beta <= 0 else "hardy.T", "must be positive")
    initial = GaussianState(complex(1.0 / beta**2, 1.0 / (4.0 * T)))
    rate = evolve_gaussian(initial, 0.0, 1.0, T).decay_rate
    return ExtremalPair(initial, beta, T, 1.0 / math.sqrt(rate), rate)


def explicit_solution(x, t):
    """(t - i)^(-1/2) exp(i x^2 / (4 (t - i))), a free solution on all of R x R."""
    z = np.asarray(t, dtype=float) - 1j
    return z ** -0.5 * np.exp(1j * np.asarray(x, dtype=float) ** 2 / (4.0 * z))


def explicit_solution_log_density(x, t):
    """log |u(x, t)|^2 for :func:`explicit_solution`, without underflow."""
    z = np.asarray(t, dtype=float) - 1j
    log_u = -0.5 * np.log(z) + 1j * np.asarray(x, dtype=float) ** 2 / (4.0 * z)
    return 2.0 * log_u.real

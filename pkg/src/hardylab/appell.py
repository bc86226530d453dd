"""Appell (conformal) change of variables for du/ds = (A + iB)(u_yy + V u).

With D(t) = alpha (1 - t) + beta t, s(t) = beta t / D and
sigma(t) = sqrt(alpha beta) / D,

    u~(x, t) = sigma^(1/2) u(sigma x, s) exp((alpha - beta) x^2 / (4 (A + iB) D))

solves the same kind of equation with V~(x, t) = sigma^2 V(sigma x, s).
Since sigma x runs over a uniform grid, the band-limited interpolant of each
slice is evaluated there exactly by a chirp-z transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import czt

from .errors import GridOverflow, InterpolationUnderresolved, ParameterOutOfRange
from .grid import ComplexField, Grid, SpaceTimeField, spectral_laplacian
from .propagator import FlowSpec
from .weight import TAIL_TOLERANCE, quadratic_weighted_norm

TIME_INTERPOLATION_TOL = 1e-6
SPECTRAL_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class AppellParams:
    alpha: float
    beta: float
    A: float = 0.0
    B: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterOutOfRange("appell.alpha", "must be positive")
        if not self.beta > 0:
            raise ParameterOutOfRange("appell.beta", "must be positive")
        if self.A < 0:
            raise ParameterOutOfRange("appell.A", "must be nonnegative")
        if self.A == 0 and self.B == 0:
            raise ParameterOutOfRange("appell.B", "A + iB must be nonzero")

    @property
    def coefficient(self) -> complex:
        return complex(self.A, self.B)

    def inverse(self) -> "AppellParams":
        return AppellParams(self.beta, self.alpha, self.A, self.B)

    def denominator(self, t):
        t = np.asarray(t, dtype=float)
        return self.alpha * (1.0 - t) + self.beta * t

    def scale(self, t):
        return math.sqrt(self.alpha * self.beta) / self.denominator(t)

    def weight_rate(self, gamma: float, s):
        """Rate of the y-weight matched to exp(gamma x^2) on the transformed side."""
        E = self.alpha * np.asarray(s, dtype=float) + self.beta * (1.0 - np.asarray(s, dtype=float))
        A, B = self.A, self.B
        return gamma * self.alpha * self.beta / E**2 + (self.alpha - self.beta) * A / (4.0 * (A * A + B * B) * E)


def s_map(params: AppellParams, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > 1):
        raise ParameterOutOfRange("appell.t", "t must lie in [0, 1]")
    out = params.beta * t / params.denominator(t)
    return float(out) if out.ndim == 0 else out


def evaluate_on_scaled_grid(values: np.ndarray, grid: Grid, sigma: float, strict: bool = True) -> np.ndarray:
    """Trigonometric interpolant of ``values`` at the points sigma * x_j.

    Points with |sigma x| >= L fall outside the periodic box and are set to
    zero, which requires the field to be negligible at the boundary.
    """
    n, L = grid.points, grid.half_width
    coeffs = np.fft.fft(values) / n
    top = np.max(np.abs(coeffs))
    if top == 0:
        return np.zeros(n, dtype=complex)
    band = np.abs(np.fft.fftshift(coeffs))
    if strict and max(band[: n // 16].max(), band[-n // 16:].max()) > SPECTRAL_TAIL_TOL * top:
        raise InterpolationUnderresolved("field has energy near the Nyquist band")
    if sigma == 1.0:
        return np.asarray(values, dtype=complex).copy()
    coeffs = coeffs * np.exp(1j * grid.k * L * (1.0 - sigma))
    coeffs[n // 2] = 0.0
    shifted = np.fft.fftshift(coeffs)
    w = np.exp(2j * np.pi * sigma / n)
    j = np.arange(n)
    out = np.exp(-1j * np.pi * sigma * j) * czt(shifted, m=n, w=w, a=1.0)
    outside = np.abs(sigma * grid.x) >= L
    if np.any(outside):
        edge = max(abs(values[0]), abs(values[-1])) ** 2
        if strict and edge >= TAIL_TOLERANCE * np.max(np.abs(values)) ** 2:
            raise GridOverflow("rescaled coordinates leave the box where the field is not negligible")
        out[outside] = 0.0
    return out


def _time_interpolant(u: SpaceTimeField):
    return CubicSpline(u.times, u.values, axis=0)


def _time_resolution_error(u: SpaceTimeField, s: np.ndarray) -> float:
    """Estimated relative error of the cubic spline at the query times,
    from the gap to a spline through every other slice (fourth order => /15)."""
    idx = np.arange(0, len(u), 2)
    if idx[-1] != len(u) - 1:
        idx = np.append(idx, len(u) - 1)
    if idx.size < 4:
        return math.inf
    fine = _time_interpolant(u)(s)
    coarse = CubicSpline(u.times[idx], u.values[idx], axis=0)(s)
    scale = np.max(np.linalg.norm(u.values, axis=1))
    return float(np.max(np.linalg.norm(fine - coarse, axis=1)) / scale / 15.0) if scale else 0.0


@dataclass(frozen=True)
class AppellResult:
    params: AppellParams
    transformed: SpaceTimeField
    s_of_t: np.ndarray
    gamma: float
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def norm_identity_residual(self) -> float:
        """max_t | ||exp(gamma x^2) u~(t)|| - ||exp(k(s) y^2) u(s)|| | / ||exp(k(s) y^2) u(s)||."""
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.abs(self.lhs - self.rhs) / np.where(self.rhs > 0, self.rhs, 1.0)
        return float(np.max(rel))


def appell_transform(
    u: SpaceTimeField,
    params: AppellParams,
    gamma: float = 0.0,
    times=None,
    strict: bool = True,
) -> AppellResult:
    """u~ on ``times`` (default: the slice times of ``u``), which must lie in [0, 1].

    ``u`` must be sampled on a time grid covering [0, 1].  ``gamma`` selects
    the weight used for the recorded norm identity.
    """
    t = u.times if times is None else np.asarray(times, dtype=float)
    if u.times[0] > 1e-12 or u.times[-1] < 1 - 1e-12:
        raise ParameterOutOfRange("appell.times", "input must be sampled on all of [0, 1]")
    s = np.clip(s_map(params, t), u.times[0], u.times[-1])
    grid, x = u.grid, u.grid.x
    if params.alpha == params.beta and np.array_equal(t, u.times):
        src = u.values
    else:
        if strict and _time_resolution_error(u, s) > TIME_INTERPOLATION_TOL:
            raise InterpolationUnderresolved("time grid too coarse for the s-resampling")
        src = _time_interpolant(u)(s)
        # Nodes hit exactly keep their samples bit-for-bit.
        hit = np.isclose(s[:, None], u.times[None, :], rtol=0, atol=1e-14)
        for i, j in zip(*np.nonzero(hit)):
            src[i] = u.values[j]
    z = params.coefficient
    rows = []
    for i, ti in enumerate(t):
        sigma = float(params.scale(ti))
        D = float(params.denominator(ti))
        moved = evaluate_on_scaled_grid(src[i], grid, sigma, strict)
        phase = (params.alpha - params.beta) * x**2 / (4.0 * z * D)
        with np.errstate(over="ignore", invalid="ignore"):
            row = np.where(moved == 0, 0.0, math.sqrt(sigma) * moved * np.exp(phase))
        if not np.all(np.isfinite(row)):
            raise GridOverflow("transformed field overflows on the grid")
        if strict and np.any(row):
            dens = np.abs(row) ** 2
            if max(dens[0], dens[-1]) >= TAIL_TOLERANCE * dens.max():
                raise GridOverflow(f"transformed slice at t={ti:g} is not negligible at the boundary")
        rows.append(row)
    transformed = SpaceTimeField(grid, t, np.stack(rows))

    lhs, rhs = [], []
    for i, si in enumerate(s):
        lhs.append(quadratic_weighted_norm(transformed.slice(i), gamma, strict).value)
        rhs.append(quadratic_weighted_norm(ComplexField(grid, src[i]), float(params.weight_rate(gamma, si)), strict).value)
    return AppellResult(params, transformed, s, gamma, np.array(lhs), np.array(rhs))


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def pde_residual(u: SpaceTimeField, flow: FlowSpec, potential=None) -> float:
    """Relative space-time L2 residual of du/dt = (A+iB)(u_xx + V u) at the
    interior nodes (fourth-order time differences, spectral Laplacian).

    ``potential`` is a callable V(x, t) overriding ``flow.potential``.
    """
    h = u.time_step()
    n = len(u)
    if n < 5:
        raise ParameterOutOfRange("appell.times", "need at least 5 time slices")
    ut = sum(c * u.values[j:n - 4 + j] for j, c in enumerate(_D1)) / h
    V = potential if potential is not None else flow.potential
    res_sq, scale_sq = 0.0, 0.0
    for i in range(2, n - 2):
        sl = u.slice(i)
        rhs = spectral_laplacian(sl).values
        if V is not None:
            rhs = rhs + np.asarray(V(u.grid.x, u.times[i])) * sl.values
        r = ut[i - 2] - flow.coefficient * rhs
        res_sq += np.sum(np.abs(r) ** 2)
        scale_sq += np.sum(np.abs(ut[i - 2]) ** 2)
    return math.sqrt(res_sq / scale_sq) if scale_sq else math.sqrt(res_sq)


def transformed_potential(params: AppellParams, flow: FlowSpec):
    if flow.potential is None:
        return None

    def V_tilde(x, t):
        sigma = params.scale(t)
        return sigma**2 * np.asarray(flow.potential(sigma * x, s_map(params, t)))

    return V_tilde


def appell_equation_residual(
    u: SpaceTimeField, params: AppellParams, flow: FlowSpec, result: Optional[AppellResult] = None
) -> float:
    """PDE residual of u~ against du~/dt = (A+iB)(u~_xx + V~ u~)."""
    if (flow.A, flow.B) != (params.A, params.B):
        raise ParameterOutOfRange("appell.A", "flow coefficients must match the transform's A + iB")
    if result is None:
        result = appell_transform(u, params)
    return pde_residual(result.transformed, flow, transformed_potential(params, flow))

"""Gaussian decay-rate fits and the Hardy threshold experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .analytic import GaussianState, evolve_gaussian, gaussian_weighted_norm
from .errors import InsufficientSamples, ParameterOutOfRange
from .grid import ComplexField

FLOOR = 1e-12
INTERIOR_FRACTION = 0.9
GAUSSIAN_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class DecayFit:
    rate: float
    log_amplitude: float
    residual: float
    window: float
    samples: int

    @property
    def gaussian(self) -> bool:
        """True when log|u| is quadratic in x to within the residual tolerance."""
        return self.residual < GAUSSIAN_RESIDUAL_TOL

    @property
    def length_scale(self) -> float:
        """beta in |u| = O(exp(-x^2 / beta^2))."""
        return 1.0 / math.sqrt(self.rate)


def fit_decay(field: ComplexField) -> DecayFit:
    """Least-squares fit of log|u| against x^2.

    Samples below 1e-12 of the peak or in the outer tenth of the box are
    dropped so round-off and wrap-around do not enter the fit.  ``residual``
    is the RMS misfit in log|u|.
    """
    x = field.grid.x
    mag = np.abs(field.values)
    window = INTERIOR_FRACTION * field.grid.half_width
    keep = (mag > FLOOR * mag.max()) & (np.abs(x) <= window) if mag.max() > 0 else np.zeros_like(mag, bool)
    if keep.sum() < 8:
        raise InsufficientSamples(f"only {int(keep.sum())} usable samples")
    X = x[keep] ** 2
    Y = np.log(mag[keep])
    slope, intercept = np.polyfit(X, Y, 1)
    misfit = Y - (slope * X + intercept)
    return DecayFit(float(-slope), float(intercept), float(np.sqrt(np.mean(misfit**2))), float(window), int(keep.sum()))


@dataclass(frozen=True)
class HardyProduct:
    alpha: float
    beta: float
    T: float

    @property
    def normalized(self) -> float:
        """alpha beta / (4 T); below 1 is out of reach for nonzero solutions."""
        return self.alpha * self.beta / (4.0 * self.T)

    @property
    def forbidden(self) -> bool:
        return self.normalized < 1.0


def hardy_product(u0: ComplexField, uT: ComplexField, T: float) -> HardyProduct:
    if not T > 0:
        raise ParameterOutOfRange("hardy.T", "must be positive")
    fit0, fitT = fit_decay(u0), fit_decay(uT)
    if fit0.rate <= 0 or fitT.rate <= 0:
        raise InsufficientSamples("fitted rate is not positive; the field does not decay")
    return HardyProduct(fitT.length_scale, fit0.length_scale, T)


@dataclass(frozen=True)
class HeatVerdict:
    delta: float
    rate_at_one: float
    finite: bool

    @property
    def boundary(self) -> float:
        """delta* with ||exp(x^2 / delta^2) u(1)|| finite exactly for delta > delta*."""
        return 1.0 / math.sqrt(self.rate_at_one)


def heat_threshold_experiment(c0: GaussianState, delta: float) -> HeatVerdict:
    """One unit of heat flow, then finiteness of ||exp(x^2 / delta^2) u(1)||."""
    if not delta > 0:
        raise ParameterOutOfRange("hardy.delta", "must be positive")
    final = evolve_gaussian(c0, 1.0, 0.0, 1.0)
    finite = math.isfinite(gaussian_weighted_norm(final, 1.0 / delta**2))
    return HeatVerdict(delta, final.decay_rate, finite)


def heat_boundary_scan(c0: GaussianState, lo: float = 0.1, hi: float = 100.0, xtol: float = 1e-12) -> float:
    """Locate the finiteness boundary in delta by bisection on the verdict."""
    if heat_threshold_experiment(c0, lo).finite or not heat_threshold_experiment(c0, hi).finite:
        raise ParameterOutOfRange("hardy.delta", "scan bracket does not straddle the boundary")
    while hi - lo > xtol * hi:
        mid = 0.5 * (lo + hi)
        if heat_threshold_experiment(c0, mid).finite:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def heat_boundary_closed_form(c: float) -> float:
    return 1.0 / math.sqrt(c / (1.0 + 4.0 * c))


def terminal_rate_threshold(state: GaussianState, T: float) -> float:
    """Largest gamma' with ||exp(gamma' x^2) u(T)|| finite, found by root
    bracketing on the free Schrodinger closed form (a threshold scan)."""
    final = evolve_gaussian(state, 0.0, 1.0, T)

    def gap(g):
        return 1.0 if math.isfinite(gaussian_weighted_norm(final, g)) else -1.0

    hi = 1.0
    while gap(hi) > 0:
        hi *= 2.0
    return brentq(gap, 0.0, hi, xtol=1e-14)

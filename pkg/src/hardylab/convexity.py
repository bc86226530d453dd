"""Weighted L2 traces H(t) = ||exp(gamma phi) u(t)||^2 and their convexity.

For the quadratic weight phi = x^2 the conjugated generator of
du/dt = (A + iB) u_xx splits into a symmetric part S and a skew part Asym
acting on f = exp(gamma x^2) u:

    S    = A (d^2 + 4 gamma^2 x^2) - i B gamma (4 x d + 2)
    Asym = i B (d^2 + 4 gamma^2 x^2) - A gamma (4 x d + 2)

and (S_t f + [S, Asym] f, f) = gamma (A^2 + B^2) int 8 |f'|^2 + 32 gamma^2 x^2 |f|^2.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidField, NonUniformTimeGrid, WeightedNormDivergent
from .grid import (ComplexField, SpaceTimeField, inner_product, l2_norm, spectral_derivative,
                   spectral_laplacian, time_quadrature_weights)
from .weight import TAIL_TOLERANCE, StaticGaussian, WeightProfile, weighted_l2_norm, weighted_values


@dataclass(frozen=True, eq=False)
class ConvexityTrace:
    times: np.ndarray
    H: np.ndarray
    D: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        H = np.asarray(self.H, dtype=float)
        if t.shape != H.shape or t.ndim != 1:
            raise InvalidField("times and H must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise InvalidField("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "H", H)
        if self.D is not None:
            object.__setattr__(self, "D", np.asarray(self.D, dtype=float))

    @classmethod
    def from_H(cls, times, H) -> "ConvexityTrace":
        return cls(np.asarray(times), np.asarray(H))

    @property
    def N(self) -> Optional[np.ndarray]:
        return None if self.D is None else self.D / self.H

    @property
    def logH(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.H)

    @property
    def dt(self) -> float:
        steps = np.diff(self.times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise NonUniformTimeGrid("second differences need a uniform time grid")
        return float(steps[0])

    @property
    def second_diff_logH(self) -> np.ndarray:
        """Undivided centred second differences at the interior nodes."""
        self.dt
        lg = self.logH
        return lg[2:] - 2.0 * lg[1:-1] + lg[:-2]

    def to_csv(self, path) -> None:
        d2 = np.full(self.times.shape, np.nan)
        if self.times.size >= 3:
            d2[1:-1] = self.second_diff_logH / self.dt**2
        N, D = self.N, self.D
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "H", "logH", "D", "N", "d2logH"])
            for i, t in enumerate(self.times):
                w.writerow([repr(float(t)), repr(float(self.H[i])), repr(float(self.logH[i])),
                            "" if D is None else repr(float(D[i])), "" if N is None else repr(float(N[i])),
                            "" if np.isnan(d2[i]) else repr(float(d2[i]))])


def _weighted_slices(u: SpaceTimeField, gamma: float) -> list[ComplexField]:
    profile = StaticGaussian(gamma)
    return [ComplexField(u.grid, weighted_values(s, profile)) for s in u.slices()]


def symmetric_part(f: ComplexField, gamma: float, A: float, B: float) -> ComplexField:
    x = f.grid.x
    lap = spectral_laplacian(f).values
    drift = 4.0 * x * spectral_derivative(f).values + 2.0 * f.values
    return f.with_values(A * (lap + 4 * gamma**2 * x**2 * f.values) - 1j * B * gamma * drift)


def skew_part(f: ComplexField, gamma: float, A: float, B: float) -> ComplexField:
    x = f.grid.x
    lap = spectral_laplacian(f).values
    drift = 4.0 * x * spectral_derivative(f).values + 2.0 * f.values
    return f.with_values(1j * B * (lap + 4 * gamma**2 * x**2 * f.values) - A * gamma * drift)


def build_trace(
    u: SpaceTimeField,
    profile: WeightProfile,
    strict: bool = True,
    operator_coefficients: Optional[tuple[float, float]] = None,
) -> ConvexityTrace:
    """H(t) at every slice; D(t) = (S f, f) too when ``operator_coefficients``
    = (A, B) is given and the weight is the static quadratic one."""
    H = np.array([weighted_l2_norm(s, profile, t, strict=strict).value ** 2 for s, t in zip(u.slices(), u.times)])
    D = None
    if operator_coefficients is not None:
        if not isinstance(profile, StaticGaussian):
            raise InvalidField("D(t) is only assembled for the static quadratic weight")
        A, B = operator_coefficients
        fs = _weighted_slices(u, profile.gamma)
        D = np.array([inner_product(symmetric_part(f, profile.gamma, A, B), f).real for f in fs])
    return ConvexityTrace(u.times, H, D)


@dataclass(frozen=True)
class ConvexityVerdict:
    curvature_margin: float
    interpolation_margin: float

    def passed(self, curvature_tol: float, interpolation_tol: float) -> bool:
        return self.curvature_margin >= -curvature_tol and self.interpolation_margin >= -interpolation_tol


def log_convexity_check(trace: ConvexityTrace, slack: float = 0.0) -> ConvexityVerdict:
    """Discrete convexity of log H on the trace's own interval.

    ``curvature_margin`` is min (d^2 log H / dt^2) + slack over interior nodes.
    ``interpolation_margin`` is the smallest value of
    slack + (1-s) log H(t0) + s log H(t1) - log H(t), s the normalised time;
    it is negative where H(t) <= e^slack H(t0)^(1-s) H(t1)^s fails.
    """
    curvature = float(np.min(trace.second_diff_logH) / trace.dt**2) + slack if trace.times.size >= 3 else math.inf
    t0, t1 = trace.times[0], trace.times[-1]
    s = (trace.times - t0) / (t1 - t0)
    lg = trace.logH
    chord = (1 - s) * lg[0] + s * lg[-1]
    return ConvexityVerdict(curvature, float(np.min(slack + chord - lg)))


@dataclass(frozen=True)
class CommutatorForm:
    gamma: float
    A: float
    B: float
    gradient_part: float
    moment_part: float

    @property
    def value_of_form(self) -> float:
        return self.gamma * (self.A**2 + self.B**2) * (8.0 * self.gradient_part + 32.0 * self.gamma**2 * self.moment_part)


def _moment(f: ComplexField, strict: bool) -> float:
    dens = f.grid.x**2 * np.abs(f.values) ** 2
    top = dens.max()
    if top == 0:
        return 0.0
    if strict and max(dens[0], dens[-1]) >= TAIL_TOLERANCE * top:
        raise WeightedNormDivergent("x^2 |f|^2 is not negligible at the boundary")
    return float(f.grid.spacing * dens.sum())


def commutator_form(f: ComplexField, gamma: float, A: float, B: float, strict: bool = True) -> CommutatorForm:
    """Termwise route: spectral gradient and the second moment."""
    return CommutatorForm(gamma, A, B, l2_norm(spectral_derivative(f)) ** 2, _moment(f, strict))


def commutator_direct(f: ComplexField, gamma: float, A: float, B: float) -> float:
    """Operator route: ((S Asym - Asym S) f, f) by composing the spectral operators."""
    Sf, Af = symmetric_part(f, gamma, A, B), skew_part(f, gamma, A, B)
    SAf = symmetric_part(Af, gamma, A, B)
    ASf = skew_part(Sf, gamma, A, B)
    return inner_product(SAf - ASf, f).real


@dataclass(frozen=True)
class HermiteMargin:
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


def hermite_lower_bound_check(f: ComplexField, gamma: float, strict: bool = True) -> HermiteMargin:
    """int |f'|^2 + 4 gamma^2 x^2 |f|^2 against 2 gamma int |f|^2."""
    lhs = l2_norm(spectral_derivative(f)) ** 2 + 4 * gamma**2 * _moment(f, strict)
    return HermiteMargin(lhs, 2 * gamma * l2_norm(f) ** 2)


@dataclass(frozen=True)
class GradientEstimate:
    gradient_term: float
    moment_term: float
    sup_weighted_norm: float
    rhs_without_constant: float

    @property
    def lhs(self) -> float:
        return self.gradient_term + self.moment_term

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_without_constant if self.rhs_without_constant else 0.0


def gradient_estimate_check(
    u: SpaceTimeField, gamma: float, M1: float = 0.0, forcing_sup: float = 0.0
) -> GradientEstimate:
    """Space-time weighted gradient and moment norms against the sup of the
    weighted norm.  The slice times are mapped affinely onto [0, 1].

    exp(gamma x^2) u_x is formed as f' - 2 gamma x f with f = exp(gamma x^2) u,
    which avoids multiplying the spectral round-off of u_x by the weight.
    """
    profile = StaticGaussian(gamma)
    t = u.times
    s = (t - t[0]) / (t[-1] - t[0])
    w = time_quadrature_weights(s) * s * (1 - s)
    grad_sq, mom_sq, sup = [], [], 0.0
    for slice_ in u.slices():
        report = weighted_l2_norm(slice_, profile, strict=True)
        sup = max(sup, report.value)
        f = ComplexField(u.grid, weighted_values(slice_, profile))
        grad = spectral_derivative(f).values - 2 * gamma * u.grid.x * f.values
        grad_sq.append(u.grid.spacing * np.sum(np.abs(grad) ** 2))
        mom_sq.append(_moment(f, strict=True))
    return GradientEstimate(
        math.sqrt(float(np.dot(w, grad_sq))),
        math.sqrt(float(np.dot(w, mom_sq))),
        sup,
        (1 + M1) * sup + forcing_sup,
    )


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _centred(values: np.ndarray, stencil: np.ndarray, h: float, power: int) -> np.ndarray:
    """Five-point fourth-order differences along axis 0 at nodes 2..n-3."""
    n = values.shape[0]
    out = sum(c * values[j:n - 4 + j] for j, c in enumerate(stencil))
    return out / h**power


@dataclass(frozen=True)
class SecondDerivativeResidual:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def absolute(self) -> float:
        return float(np.max(np.abs(self.lhs - self.rhs))) if self.lhs.size else 0.0

    @property
    def relative(self) -> float:
        scale = float(np.max(np.abs(self.lhs))) if self.lhs.size else 0.0
        return self.absolute / scale if scale > 1e-12 else self.absolute


def second_derivative_identity_check(u: SpaceTimeField, gamma: float, A: float, B: float) -> SecondDerivativeResidual:
    """H'' from time differences against the operator expansion

        2 d/dt Re(r, f) + 2 (S_t f + [S, Asym] f, f) + ||f_t - Asym f + S f||^2 - ||r||^2,

    r = f_t - S f - Asym f, with f_t taken from fourth-order time differences
    of the weighted slices and S, Asym applied spectrally.
    """
    h = u.time_step()
    if len(u) < 9:
        raise InvalidField("need at least 9 time slices")
    fs = _weighted_slices(u, gamma) if gamma > 0 else u.slices()
    F = np.stack([f.values for f in fs])
    H = u.grid.spacing * np.sum(np.abs(F) ** 2, axis=1)
    ft = _centred(F, _D1, h, 1)
    flux, plus_sq, minus_sq, form = [], [], [], []
    for i, fv in enumerate(F[2:-2]):
        f = ComplexField(u.grid, fv)
        Sf = symmetric_part(f, gamma, A, B).values
        Af = skew_part(f, gamma, A, B).values
        r = ft[i] - Sf - Af
        flux.append(u.grid.spacing * np.vdot(fv, r).real)
        plus_sq.append(u.grid.spacing * np.sum(np.abs(ft[i] - Af + Sf) ** 2))
        minus_sq.append(u.grid.spacing * np.sum(np.abs(r) ** 2))
        form.append(commutator_form(f, gamma, A, B, strict=False).value_of_form if gamma > 0 else 0.0)
    flux, plus_sq, minus_sq, form = map(np.asarray, (flux, plus_sq, minus_sq, form))
    lhs = _centred(H, _D2, h, 2)[2:-2]
    rhs = 2 * _centred(flux, _D1, h, 1) + (2 * form + plus_sq - minus_sq)[2:-2]
    return SecondDerivativeResidual(u.times[4:-4], lhs, rhs)


def closed_form_gaussian_trace(state, A: float, B: float, gamma: float, times) -> ConvexityTrace:
    """H(t) for Gaussian data straight from the closed-form evolution."""
    from .analytic import evolve_gaussian_path, gaussian_weighted_norm

    H = [gaussian_weighted_norm(s, gamma) ** 2 for s in evolve_gaussian_path(state, A, B, times)]
    return ConvexityTrace.from_H(times, H)

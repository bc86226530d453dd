"""Exponential weights exp(phase(x, t)) and weighted L2 norms.

Every weight family is a small frozen dataclass exposing ``phase(x, t)``.
Truncated and regularised quadratics are mollified with the unit-mass bump
kernel from :mod:`hardylab.bumps`; the convolution is evaluated by
Gauss-Legendre quadrature split at the kinks of the mollified profile, so it
can be evaluated at arbitrary x rather than only on a fixed grid.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import ClassVar

import numpy as np
from scipy.integrate import quad
from scipy.special import logsumexp

from .bumps import kernel, kernel_second_moment
from .errors import ParameterOutOfRange, WeightedNormDivergent
from .grid import ComplexField

TAIL_TOLERANCE = 1e-10
_GL_NODES = 96


def _require_positive(kind, **params):
    for name, value in params.items():
        if not value > 0:
            raise ParameterOutOfRange(f"weight.{name}", f"{kind} needs {name} > 0, got {value}")


def _require_time(t, lo=0.0, hi=1.0):
    t = np.asarray(t, dtype=float)
    if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
        raise ParameterOutOfRange("weight.t", f"t must lie in [{lo}, {hi}]")


class WeightProfile:
    kind: ClassVar[str] = ""
    time_dependent: ClassVar[bool] = False

    def phase(self, x, t=0.0):
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class StaticGaussian(WeightProfile):
    gamma: float
    kind: ClassVar[str] = "StaticGaussian"

    def __post_init__(self):
        _require_positive(self.kind, gamma=self.gamma)

    def phase(self, x, t=0.0):
        return self.gamma * np.asarray(x, dtype=float) ** 2


@dataclass(frozen=True)
class LemmaOneRate(WeightProfile):
    """gamma A x^2 / (A + 4 gamma (A^2 + B^2) t), the decay rate carried by a
    dissipative (A > 0) flow started from exp(gamma x^2)-integrable data."""

    gamma: float
    A: float
    B: float = 0.0
    kind: ClassVar[str] = "LemmaOneRate"
    time_dependent: ClassVar[bool] = True

    def __post_init__(self):
        _require_positive(self.kind, gamma=self.gamma, A=self.A)

    def rate(self, t):
        A, B, g = self.A, self.B, self.gamma
        return g * A / (A + 4.0 * g * (A * A + B * B) * np.asarray(t, dtype=float))

    def phase(self, x, t=0.0):
        if np.any(np.asarray(t) < 0):
            raise ParameterOutOfRange("weight.t", "LemmaOneRate is defined for t >= 0")
        return self.rate(t) * np.asarray(x, dtype=float) ** 2


@dataclass(frozen=True)
class TimeInterpolated(WeightProfile):
    """x^2 / (alpha t + (1 - t) beta)^2 on [0, 1]."""

    alpha: float
    beta: float
    kind: ClassVar[str] = "TimeInterpolated"
    time_dependent: ClassVar[bool] = True

    def __post_init__(self):
        _require_positive(self.kind, alpha=self.alpha, beta=self.beta)

    def rate(self, t):
        return 1.0 / (self.alpha * np.asarray(t, dtype=float) + (1.0 - np.asarray(t, dtype=float)) * self.beta) ** 2

    def phase(self, x, t=0.0):
        _require_time(t)
        return self.rate(t) * np.asarray(x, dtype=float) ** 2


@dataclass(frozen=True)
class MovingCarleman(WeightProfile):
    """Gaussian centred at x = -R t (1 - t), shifted down in time.

    ``operator`` is ``"schrodinger"`` or ``"parabolic"``; the parabolic weight
    carries the extra cubic-in-t term R^2 t (1 - t) (1 - 2t) / 6.
    """

    mu: float
    R: float
    eps: float
    operator: str = "schrodinger"
    kind: ClassVar[str] = "MovingCarleman"
    time_dependent: ClassVar[bool] = True

    def __post_init__(self):
        _require_positive(self.kind, mu=self.mu, R=self.R, eps=self.eps)
        if self.operator not in ("schrodinger", "parabolic"):
            raise ParameterOutOfRange("weight.operator", f"unknown operator {self.operator!r}")

    def centre_shift(self, t):
        return self.R * t * (1.0 - t)

    def time_phase(self, t):
        t = np.asarray(t, dtype=float)
        mu, R, eps = self.mu, self.R, self.eps
        out = -(1.0 + eps) * R**2 * t * (1.0 - t) / (16.0 * mu)
        if self.operator == "parabolic":
            out = out + R**2 * t * (1.0 - t) * (1.0 - 2.0 * t) / 6.0
        return out

    def phase(self, x, t=0.0):
        t = np.asarray(t, dtype=float)
        y = np.asarray(x, dtype=float) + self.centre_shift(t)
        return self.mu * y**2 + self.time_phase(t)


@dataclass(frozen=True)
class LinearExponential(WeightProfile):
    lam: float
    kind: ClassVar[str] = "LinearExponential"

    def phase(self, x, t=0.0):
        return self.lam * np.asarray(x, dtype=float)


def mollify(func, x, rho, kinks=(), order=0, nodes=_GL_NODES):
    """(kernel_rho^(order) * func)(x) for kernel_rho(z) = kernel(z / rho) / rho.

    ``kinks`` lists the points where ``func`` loses smoothness; the s-integral
    is split there so that each Gauss-Legendre panel sees a smooth integrand.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    shape = x.shape
    x = x.ravel()
    ends = [np.full_like(x, -1.0), np.full_like(x, 1.0)]
    ends += [np.clip((x - k) / rho, -1.0, 1.0) for k in kinks]
    ends = np.sort(np.stack(ends, axis=-1), axis=-1)
    lo, hi = ends[:, :-1], ends[:, 1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    gs, gw = np.polynomial.legendre.leggauss(nodes)
    s = mid[..., None] + half[..., None] * gs
    w = half[..., None] * gw
    vals = kernel(s, order) * func(x[:, None, None] - rho * s)
    out = np.sum(w * vals, axis=(1, 2)) / rho**order
    if order == 0:
        # Normalise by the discrete kernel mass so constants are reproduced exactly.
        out = out / _discrete_mass(nodes)
    return out.reshape(shape)


def _discrete_mass(nodes):
    gs, gw = np.polynomial.legendre.leggauss(nodes)
    return float(np.sum(gw * kernel(gs)))


def truncated_square(R):
    return lambda x: np.minimum(x * x, R * R)


def convex_regularised_square(a):
    """|x|^2 inside the unit ball, (2|x|^(2-a) - a)/(2-a) outside."""

    def phi(x):
        ax = np.abs(x)
        return np.where(ax < 1.0, x * x, (2.0 * np.maximum(ax, 1.0) ** (2.0 - a) - a) / (2.0 - a))

    return phi


def convex_regularised_square_d2(a):
    def d2(x):
        ax = np.abs(x)
        return np.where(ax < 1.0, 2.0, 2.0 * (1.0 - a) * np.maximum(ax, 1.0) ** (-a))

    return d2


@dataclass(frozen=True)
class TruncatedGaussian(WeightProfile):
    gamma: float
    radius: float
    rho: float
    kind: ClassVar[str] = "TruncatedGaussian"

    def __post_init__(self):
        _require_positive(self.kind, gamma=self.gamma, radius=self.radius, rho=self.rho)

    def phase(self, x, t=0.0):
        R = self.radius
        return self.gamma * mollify(truncated_square(R), x, self.rho, kinks=(-R, R))


@dataclass(frozen=True)
class RegularizedConvex(WeightProfile):
    gamma: float
    a: float
    rho: float
    kind: ClassVar[str] = "RegularizedConvex"

    def __post_init__(self):
        _require_positive(self.kind, gamma=self.gamma, a=self.a, rho=self.rho)
        if self.a >= 1 or self.rho >= 1:
            raise ParameterOutOfRange("weight.a" if self.a >= 1 else "weight.rho", "must be < 1")

    def phase(self, x, t=0.0):
        return self.gamma * mollify(convex_regularised_square(self.a), x, self.rho, kinks=(-1.0, 1.0))


PROFILE_KINDS = {
    cls.kind: cls
    for cls in (StaticGaussian, LemmaOneRate, TimeInterpolated, MovingCarleman,
                LinearExponential, TruncatedGaussian, RegularizedConvex)
}


def profile_from_dict(data: dict) -> WeightProfile:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in PROFILE_KINDS:
        raise ParameterOutOfRange("weight.kind", f"unknown weight kind {kind!r}")
    try:
        return PROFILE_KINDS[kind](**data)
    except TypeError as exc:
        raise ParameterOutOfRange("weight", str(exc)) from None


def evaluate_phase(profile: WeightProfile, x, t=0.0):
    return profile.phase(x, t)


@dataclass(frozen=True)
class WeightedNormReport:
    value: float
    tail_ratio: float

    @property
    def converged(self) -> bool:
        return self.tail_ratio < TAIL_TOLERANCE


def weighted_log_density(field: ComplexField, profile: WeightProfile, t=0.0) -> np.ndarray:
    """log |exp(phase) u|^2 on the grid (-inf where u vanishes)."""
    return _log_density(field, profile.phase(field.grid.x, t))


def _log_density(field: ComplexField, phase: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 2.0 * phase + 2.0 * np.log(np.abs(field.values))


def weighted_l2_norm(field: ComplexField, profile: WeightProfile, t=0.0, strict: bool = False) -> WeightedNormReport:
    """||exp(phase) u|| by the rectangle rule, evaluated in log space.

    ``tail_ratio`` is the larger boundary integrand over the largest
    integrand.  A ratio >= 1e-10 means the periodic box is too small for this
    weight (or the data's round-off floor is being amplified); with
    ``strict=True`` that raises :class:`WeightedNormDivergent`.
    """
    label = f"{profile.kind} weight at t={float(np.asarray(t)):g}"
    return norm_with_phase(field, profile.phase(field.grid.x, t), strict, label)


def quadratic_weighted_norm(field: ComplexField, rate: float, strict: bool = False) -> WeightedNormReport:
    """||exp(rate x^2) u|| for a rate of either sign."""
    return norm_with_phase(field, rate * field.grid.x**2, strict, f"exp({rate:g} x^2) weight")


def norm_with_phase(field: ComplexField, phase: np.ndarray, strict: bool = False, label: str = "weight") -> WeightedNormReport:
    logd = _log_density(field, phase)
    top = np.max(logd)
    if top == -np.inf:
        return WeightedNormReport(0.0, 0.0)
    tail = math.exp(max(logd[0], logd[-1]) - top)
    log_sq = logsumexp(logd) + math.log(field.grid.spacing)
    value = math.exp(0.5 * log_sq) if 0.5 * log_sq < 709 else math.inf
    report = WeightedNormReport(value, tail)
    if strict and not report.converged:
        raise WeightedNormDivergent(f"{label}: tail ratio {tail:.3g} >= {TAIL_TOLERANCE:g}")
    return report


def weighted_values(field: ComplexField, profile: WeightProfile, t=0.0) -> np.ndarray:
    """Samples of exp(phase) u; raises if they overflow."""
    with np.errstate(over="ignore"):
        out = np.exp(profile.phase(field.grid.x, t)) * field.values
    if not np.all(np.isfinite(out)):
        raise WeightedNormDivergent("weighted field overflows on the grid")
    return out


def gaussian_average_identity_check(gamma: float, x_samples) -> float:
    """Worst relative error of the averaging identity

        int exp(2 sqrt(gamma) lam x - lam^2 / 2) d lam = sqrt(2 pi) exp(2 gamma x^2),

    with the left side computed by adaptive quadrature in lam.
    """
    if not gamma > 0:
        raise ParameterOutOfRange("weight.gamma", "must be positive")
    root = math.sqrt(gamma)
    worst = 0.0
    for x in np.atleast_1d(x_samples):
        centre = 2.0 * root * x
        lhs = quad(lambda lam: math.exp(2.0 * root * lam * x - 0.5 * lam * lam),
                   centre - 40.0, centre + 40.0, points=[centre], epsabs=0.0, epsrel=1e-13, limit=200)[0]
        rhs = math.sqrt(2.0 * math.pi) * math.exp(2.0 * gamma * x * x)
        worst = max(worst, abs(lhs - rhs) / rhs)
    return worst


def mollified_bilaplacian(a: float, rho: float, x) -> np.ndarray:
    """Fourth derivative of kernel_rho * phi_a at x.

    Two integrations by parts move two derivatives onto phi_a, whose second
    derivative is bounded; subtracting the interior value 2 (the kernel's
    second derivative has zero mass) leaves an integrand of size O(a).
    """
    d2 = convex_regularised_square_d2(a)
    return mollify(lambda y: d2(y) - 2.0, x, rho, kinks=(-1.0, 1.0), order=2)


def mollified_bilaplacian_bound(a: float, rho: float, samples: int = 4001) -> float:
    """sup |d^4/dx^4 (kernel_rho * phi_a)| sampled on a fine grid."""
    if not 0 < a < 1:
        raise ParameterOutOfRange("weight.a", "must lie in (0, 1)")
    if not 0 < rho < 1:
        raise ParameterOutOfRange("weight.rho", "must lie in (0, 1)")
    # The profile is even and the fourth derivative vanishes for |x| < 1 - rho.
    x = np.linspace(max(0.0, 1.0 - rho), 3.0 + rho, samples)
    return float(np.max(np.abs(mollified_bilaplacian(a, rho, x))))


def mollification_offset() -> float:
    """C in kernel_rho * x^2 = x^2 + C rho^2."""
    return kernel_second_moment()

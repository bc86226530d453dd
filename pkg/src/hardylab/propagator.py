"""Evolution engines for du/dt = (A + iB)(u_xx + V u + F).

* :func:`free_flow` applies the exact Fourier multiplier exp(-(A+iB) k^2 t).
* :func:`split_step_flow` handles bounded potentials by Strang splitting and
  sources by a trapezoidal Duhamel step.
* :func:`regularize_flow` builds u_eps(t) = exp(eps t H) u(t), H = d^2/dx^2 + V1,
  both directly and through its Duhamel representation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BackwardDissipative, ParameterOutOfRange, UnstableStep, InvalidField
from .grid import ComplexField, Grid, SpaceTimeField, l2_norm, time_quadrature_weights
from .weight import LemmaOneRate, StaticGaussian, weighted_l2_norm

DEFAULT_DT = 1e-3


class Potential:
    """Bounded potential V(x, t) sampled on a grid."""

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    is_static = False
    is_real = False


@dataclass(frozen=True)
class StaticPotential(Potential):
    func: Callable[[np.ndarray], np.ndarray]
    bound: Optional[float] = None
    is_static = True
    is_real = True

    def __call__(self, x, t=0.0):
        v = np.asarray(self.func(x))
        if np.iscomplexobj(v):
            if np.any(v.imag != 0):
                raise ParameterOutOfRange("flow.potential", "static potential must be real-valued")
            v = v.real
        return np.broadcast_to(v.astype(float), np.shape(x))

    def sup(self, grid: Grid) -> float:
        sampled = float(np.max(np.abs(self(grid.x))))
        if self.bound is not None:
            if self.bound < sampled * (1 - 1e-12):
                raise ParameterOutOfRange("flow.M1", f"declared bound {self.bound} below sampled sup {sampled}")
            return float(self.bound)
        return sampled


@dataclass(frozen=True)
class TimeDependentPotential(Potential):
    """Complex-valued V2(x, t)."""

    func: Callable[[np.ndarray, float], np.ndarray]

    def __call__(self, x, t=0.0):
        return np.broadcast_to(np.asarray(self.func(x, t), dtype=complex), np.shape(x))


@dataclass(frozen=True)
class SumPotential(Potential):
    static: StaticPotential
    dynamic: TimeDependentPotential

    def __call__(self, x, t=0.0):
        return self.static(x, t) + self.dynamic(x, t)


def builtin_potential(name: str, **params) -> Potential:
    """Named potentials available from experiment configs."""
    if name == "constant":
        value = float(params.get("value", 0.0))
        return StaticPotential(lambda x: np.full_like(x, value, dtype=float), bound=abs(value))
    if name == "gaussian_well":
        depth, width = float(params.get("depth", 1.0)), float(params.get("width", 1.0))
        return StaticPotential(lambda x: depth * np.exp(-(x / width) ** 2), bound=abs(depth))
    if name == "absorbing_gaussian":
        depth, width = float(params.get("depth", 1.0)), float(params.get("width", 1.0))
        return TimeDependentPotential(lambda x, t: 1j * depth * np.exp(-(x / width) ** 2))
    raise ParameterOutOfRange("flow.potential", f"unknown built-in potential {name!r}")


@dataclass(frozen=True)
class FlowSpec:
    A: float
    B: float
    potential: Optional[Potential] = None
    source: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def __post_init__(self):
        if self.A < 0:
            raise ParameterOutOfRange("flow.A", "must be nonnegative")
        if self.A == 0 and self.B == 0 and self.potential is not None:
            raise ParameterOutOfRange("flow.B", "A = B = 0 makes the flow trivial")

    @property
    def coefficient(self) -> complex:
        return complex(self.A, self.B)

    def check_bounds(self, grid: Grid) -> None:
        """Reject a declared M1 that is below the sampled sup of V1."""
        pot = self.potential
        static = pot if isinstance(pot, StaticPotential) else getattr(pot, "static", None)
        if static is not None:
            static.sup(grid)

    def potential_growth_rate(self, grid: Grid, t: float) -> float:
        """||A (Re V)^+ - B Im V||_inf at time t."""
        if self.potential is None:
            return 0.0
        v = np.asarray(self.potential(grid.x, t), dtype=complex)
        return float(np.max(np.abs(self.A * np.maximum(v.real, 0.0) - self.B * v.imag)))


def _multiplier(grid: Grid, z: complex) -> np.ndarray:
    return np.exp(-z * grid.k**2)


def free_flow(u0: ComplexField, A: float, B: float, t: float) -> ComplexField:
    if A < 0:
        raise ParameterOutOfRange("flow.A", "must be nonnegative")
    if A > 0 and t < 0:
        raise BackwardDissipative("dissipative flows only run forward in time")
    if t == 0:
        return u0
    return u0.with_values(np.fft.ifft(_multiplier(u0.grid, complex(A, B) * t) * np.fft.fft(u0.values)))


def heat_semigroup(u: ComplexField, z: complex) -> ComplexField:
    """exp(z d^2/dx^2) u for Re z >= 0."""
    z = complex(z)
    if z.real < 0:
        raise BackwardDissipative("exp(z H) needs Re z >= 0")
    return u.with_values(np.fft.ifft(_multiplier(u.grid, z) * np.fft.fft(u.values)))


def semigroup_identity_check(u0: ComplexField, z1: complex, z2: complex) -> float:
    together = heat_semigroup(u0, complex(z1) + complex(z2))
    composed = heat_semigroup(heat_semigroup(u0, z2), z1)
    scale = l2_norm(together)
    return l2_norm(together - composed) / scale if scale else 0.0


def _substeps(span: float, dt: float) -> int:
    return max(1, math.ceil(span / dt - 1e-9))


def split_step_flow(u0: ComplexField, spec: FlowSpec, t_grid, dt: float = DEFAULT_DT) -> SpaceTimeField:
    """Strang splitting from ``t_grid[0]`` (the time of ``u0``) through ``t_grid``.

    The potential half-steps use V at the midpoint of each step. A source F is
    added with the trapezoidal Duhamel rule, which keeps second order.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise InvalidField("t_grid must be strictly increasing")
    if spec.A > 0 and np.any(times < times[0]):
        raise BackwardDissipative("dissipative flows only run forward in time")
    grid = u0.grid
    x, ksq = grid.x, grid.k**2
    z = spec.coefficient
    u = u0.values.astype(complex)
    out = [u.copy()]
    spec.check_bounds(grid)
    norm0 = l2_norm(u0)
    # |exp(h z V / 2)| = exp(h Re(z V) / 2) and the kinetic factor is a
    # contraction, so exp(int max Re(zV)^+ dt) bounds the norm growth.
    log_growth = 0.0
    source_mass = 0.0
    t = times[0]
    for t_next in times[1:]:
        n = _substeps(t_next - t, dt)
        h = (t_next - t) / n
        kinetic = np.exp(-z * h * ksq)
        for _ in range(n):
            if spec.potential is not None:
                zv = z * np.asarray(spec.potential(x, t + 0.5 * h), dtype=complex)
                log_growth += h * max(float(np.max(zv.real)), 0.0)
                with np.errstate(over="ignore", invalid="ignore"):
                    half = np.exp(0.5 * h * zv)
                    u = half * np.fft.ifft(kinetic * np.fft.fft(half * u))
            else:
                u = np.fft.ifft(kinetic * np.fft.fft(u))
            if spec.source is not None:
                f0 = z * np.asarray(spec.source(x, t), dtype=complex)
                f1 = z * np.asarray(spec.source(x, t + h), dtype=complex)
                if spec.potential is not None:
                    half = np.exp(0.5 * h * z * np.asarray(spec.potential(x, t + 0.5 * h), dtype=complex))
                    f0 = half * np.fft.ifft(kinetic * np.fft.fft(half * f0))
                else:
                    f0 = np.fft.ifft(kinetic * np.fft.fft(f0))
                u = u + 0.5 * h * (f0 + f1)
                source_mass += h * abs(z) * 0.5 * (
                    math.sqrt(grid.spacing) * (np.linalg.norm(spec.source(x, t)) + np.linalg.norm(spec.source(x, t + h)))
                )
            t += h
        t = t_next
        if not np.all(np.isfinite(u)):
            raise UnstableStep(f"non-finite samples at t={t:g}")
        current = math.sqrt(grid.spacing) * np.linalg.norm(u)
        base = norm0 + source_mass
        if current > 0 and (base == 0 or math.log(current) > log_growth + math.log(base) + math.log1p(1e-3)):
            raise UnstableStep(f"norm {current:.6g} exceeds the a-priori bound exp({log_growth:.6g}) * {base:.6g} at t={t:g}")
        out.append(u.copy())
    return SpaceTimeField(grid, times, np.stack(out))


def evolve(u0: ComplexField, spec: FlowSpec, t_grid, dt: float = DEFAULT_DT) -> SpaceTimeField:
    """Exact multiplier when there is neither potential nor source, else split-step."""
    times = np.asarray(t_grid, dtype=float)
    if spec.potential is None and spec.source is None:
        slices = [free_flow(u0, spec.A, spec.B, t - times[0]) for t in times]
        return SpaceTimeField.from_slices(times, slices)
    return split_step_flow(u0, spec, times, dt)


def _semigroup(w: np.ndarray, grid: Grid, z: complex, V1: Optional[StaticPotential], dt: float) -> np.ndarray:
    """exp(z H) w for H = d^2/dx^2 + V1, Re z >= 0."""
    if V1 is None or z == 0:
        return np.fft.ifft(_multiplier(grid, z) * np.fft.fft(w)) if z != 0 else w
    # exp(z H) is the flow of dv/dtau = (z/|z|)(H v) for tau in [0, |z|].
    unit = z / abs(z)
    spec = FlowSpec(unit.real, unit.imag, V1)
    res = split_step_flow(ComplexField(grid, w), spec, [0.0, abs(z)], dt)
    return res.values[-1]


@dataclass(frozen=True)
class RegularizedFlow:
    epsilon: float
    base: SpaceTimeField
    result: SpaceTimeField
    duhamel: SpaceTimeField
    duhamel_discrepancy: float


def regularize_flow(
    u: SpaceTimeField,
    epsilon: float,
    V1: Optional[StaticPotential] = None,
    V2: Optional[TimeDependentPotential] = None,
    dt: float = DEFAULT_DT,
) -> RegularizedFlow:
    """u_eps(t) = exp(eps t H) u(t) and its Duhamel cross-check.

    ``u`` is assumed to solve du/dt = i (H u + V2 u). The second route builds

        u_eps(t) = exp((eps+i) t H) u(0) + (eps+i) int_0^t exp((eps+i)(t-s) H) F_eps(s) ds,
        F_eps(s) = i/(eps+i) exp(eps s H)(V2(s) u(s)),

    with the time integral advanced pairwise by Simpson's rule, so it is
    available at every other node. ``duhamel_discrepancy`` is the largest
    relative L2 gap between the routes at those nodes.
    """
    if not epsilon > 0:
        raise ParameterOutOfRange("regularize.epsilon", "must be positive")
    grid, times = u.grid, u.times
    direct = np.stack([_semigroup(u.values[i], grid, epsilon * t, V1, dt) for i, t in enumerate(times)])
    result = SpaceTimeField(grid, times, direct)

    z = complex(epsilon, 1.0)
    h = u.time_step() if len(times) > 1 else 0.0
    if V2 is not None:
        forcing = np.stack([
            1j / z * _semigroup(V2(grid.x, t) * u.values[i], grid, epsilon * t, V1, dt) for i, t in enumerate(times)
        ])
    else:
        forcing = np.zeros_like(direct)
    one = lambda w: _semigroup(w, grid, z * h, V1, dt)  # noqa: E731
    idx = list(range(0, len(times), 2))
    integral = np.zeros(grid.points, dtype=complex)
    rows = []
    for n in idx:
        if n > 0:
            # int over [t_{n-2}, t_n] of exp(z (t_n - s) H) F(s) ds by Simpson.
            a = one(one(integral + h / 3.0 * forcing[n - 2]))
            b = one(4.0 * h / 3.0 * forcing[n - 1])
            integral = a + b + h / 3.0 * forcing[n]
        free = _semigroup(u.values[0], grid, z * times[n] - z * times[0], V1, dt)
        rows.append(free + z * integral)
    duhamel = SpaceTimeField(grid, times[idx], np.stack(rows))
    gaps = []
    for j, n in enumerate(idx):
        ref = np.linalg.norm(direct[n])
        gaps.append(np.linalg.norm(rows[j] - direct[n]) / ref if ref else 0.0)
    return RegularizedFlow(epsilon, u, result, duhamel, float(max(gaps)))


@dataclass(frozen=True)
class DecayCheck:
    lhs: float
    rhs: float
    rate: float
    growth: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def lemma1_decay_check(
    u0: ComplexField,
    spec: FlowSpec,
    gamma: float,
    T: float,
    uT: Optional[ComplexField] = None,
    dt: float = DEFAULT_DT,
    strict: bool = True,
) -> DecayCheck:
    """Both sides of the dissipative decay bound at time T.

    lhs = exp(-M_T) ||exp(a(T) x^2) u(T)||,
    rhs = ||exp(gamma x^2) u(0)|| + |A+iB| int_0^T ||exp(a(t) x^2) F(t)|| dt,

    with a(t) = gamma A / (A + 4 gamma (A^2+B^2) t) and
    M_T = int_0^T ||A (Re V)^+ - B Im V||_inf dt.  ``uT`` may be supplied
    (for example from a closed form); otherwise the flow is evolved.
    """
    if not spec.A > 0:
        raise ParameterOutOfRange("flow.A", "the decay bound needs A > 0")
    if not gamma > 0:
        raise ParameterOutOfRange("weight.gamma", "must be positive")
    if not 0 < T <= 1:
        raise ParameterOutOfRange("decay.T", "must lie in (0, 1]")
    grid = u0.grid
    profile = LemmaOneRate(gamma, spec.A, spec.B)
    n = max(2, 2 * math.ceil(T / (2 * dt)))
    tq = np.linspace(0.0, T, n + 1)
    w = time_quadrature_weights(tq)
    growth = float(np.dot(w, [spec.potential_growth_rate(grid, t) for t in tq]))
    if uT is None:
        uT = evolve(u0, spec, [0.0, T], dt).slice(1)
    final = weighted_l2_norm(uT, profile, T, strict=strict).value
    lhs = math.exp(-growth) * final
    rhs = weighted_l2_norm(u0, StaticGaussian(gamma), 0.0, strict=strict).value
    if spec.source is not None:
        norms = [
            weighted_l2_norm(ComplexField(grid, spec.source(grid.x, t)), profile, t, strict=strict).value for t in tq
        ]
        rhs += abs(spec.coefficient) * float(np.dot(w, norms))
    return DecayCheck(lhs, rhs, float(profile.rate(T)), growth)

"""Quadrature checks of the moving-Gaussian Carleman inequalities in 1-d.

For a test field g with compact support in R x (0, 1) and
phi(x, t) = mu y^2 + c(t), y = x + R t (1 - t), the inequality reads

    R sqrt(eps / (8 mu)) ||exp(phi) g|| <= ||exp(phi) P g||,

with P = d/dt - i d^2/dx^2 (Schrodinger) or P = d/dt - d^2/dx^2 (parabolic),
norms taken over space-time.  All derivatives of g are analytic.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .bumps import bump, smoothstep
from .errors import ParameterOutOfRange, SupportOutOfDomain
from .grid import SpaceTimeField, spectral_derivative
from .weight import MovingCarleman

OPERATORS = ("schrodinger", "parabolic")


@dataclass(frozen=True)
class CarlemanConfig:
    mu: float
    eps: float
    R: float
    operator: str = "schrodinger"

    def __post_init__(self):
        for name in ("mu", "eps", "R"):
            if not getattr(self, name) > 0:
                raise ParameterOutOfRange(f"carleman.{name}", "must be positive")
        if self.operator not in OPERATORS:
            raise ParameterOutOfRange("carleman.operator", f"must be one of {OPERATORS}")

    @property
    def profile(self) -> MovingCarleman:
        return MovingCarleman(self.mu, self.R, self.eps, self.operator)

    @property
    def constant(self) -> float:
        return self.R * math.sqrt(self.eps / (8.0 * self.mu))


@dataclass(frozen=True)
class BumpField:
    """amplitude * b((x - cx)/wx) * b((t - ct)/wt) * exp(i k x), b the unit bump."""

    center_x: float
    width_x: float
    center_t: float
    width_t: float
    amplitude: complex = 1.0
    wavenumber: float = 0.0

    def spatial(self, x, order: int = 0):
        xi = (np.asarray(x, dtype=float) - self.center_x) / self.width_x
        k, w = self.wavenumber, self.width_x
        b0 = bump(xi)
        osc = np.exp(1j * k * np.asarray(x, dtype=float))
        if order == 0:
            return b0 * osc
        b1 = bump(xi, 1) / w
        if order == 1:
            return (b1 + 1j * k * b0) * osc
        if order == 2:
            return (bump(xi, 2) / w**2 + 2j * k * b1 - k * k * b0) * osc
        raise ValueError("spatial derivatives up to order 2")

    def temporal(self, t, order: int = 0):
        return bump((np.asarray(t, dtype=float) - self.center_t) / self.width_t, order) / self.width_t**order

    def sample(self, x, t, dx: int = 0, dt: int = 0) -> np.ndarray:
        """Mixed derivative on the tensor grid t x x, shape (len(t), len(x))."""
        return complex(self.amplitude) * np.outer(self.temporal(t, dt), self.spatial(x, dx))

    def nodes(self, points: int, oversample: int = 4):
        """Uniform nodes spanning the support (endpoints included, where g = 0)."""
        n = points * oversample
        x = np.linspace(self.center_x - self.width_x, self.center_x + self.width_x, n + 1)
        t = np.linspace(self.center_t - self.width_t, self.center_t + self.width_t, n + 1)
        return x, t, x[1] - x[0], t[1] - t[0]


def make_bump(center_x, width_x, center_t, width_t, amplitude=1.0, wavenumber=0.0,
              domain_half_width: Optional[float] = None) -> BumpField:
    if width_x <= 0 or width_t <= 0:
        raise SupportOutOfDomain("bump widths must be positive")
    if center_t - width_t <= 0 or center_t + width_t >= 1:
        raise SupportOutOfDomain("time support must lie inside (0, 1)")
    if domain_half_width is not None and abs(center_x) + width_x >= domain_half_width:
        raise SupportOutOfDomain("spatial support must lie inside the grid domain")
    return BumpField(float(center_x), float(width_x), float(center_t), float(width_t), complex(amplitude), float(wavenumber))


def random_bumps(n: int, seed: int, domain_half_width: float = 6.0) -> list[BumpField]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        ct = rng.uniform(0.15, 0.85)
        wt = rng.uniform(0.05, min(ct, 1 - ct) - 0.02)
        wx = rng.uniform(0.3, 2.0)
        cx = rng.uniform(-(domain_half_width - wx) * 0.5, (domain_half_width - wx) * 0.5)
        amp = complex(rng.normal(), rng.normal())
        out.append(make_bump(cx, wx, ct, wt, amp, rng.uniform(-3.0, 3.0), domain_half_width))
    return out


@dataclass(frozen=True)
class CarlemanReport:
    lhs: float
    rhs: float
    constant: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -1e-8 * self.rhs


@dataclass(frozen=True)
class _Samples:
    x: np.ndarray
    t: np.ndarray
    cell: float
    g: np.ndarray
    g_t: np.ndarray
    g_x: np.ndarray
    g_xx: np.ndarray


def _samples(g: BumpField, points: int, oversample: int) -> _Samples:
    x, t, hx, ht = g.nodes(points, oversample)
    return _Samples(x, t, hx * ht, g.sample(x, t), g.sample(x, t, dt=1), g.sample(x, t, dx=1), g.sample(x, t, dx=2))


def _log_norm(phase: np.ndarray, values: np.ndarray, cell: float) -> float:
    with np.errstate(divide="ignore"):
        logd = 2.0 * phase + 2.0 * np.log(np.abs(values))
    top = np.max(logd)
    if top == -np.inf:
        return -math.inf
    return 0.5 * (logsumexp(logd) + math.log(cell))


def _check_samples(s: _Samples, cfg: CarlemanConfig) -> CarlemanReport:
    phase = cfg.profile.phase(s.x[None, :], s.t[:, None])
    generator = s.g_t - (1j if cfg.operator == "schrodinger" else 1.0) * s.g_xx
    log_l = _log_norm(phase, s.g, s.cell)
    log_r = _log_norm(phase, generator, s.cell)
    lhs = cfg.constant * math.exp(log_l) if log_l > -math.inf else 0.0
    rhs = math.exp(log_r) if log_r > -math.inf else 0.0
    return CarlemanReport(lhs, rhs, cfg.constant)


def carleman_check(g: BumpField, cfg: CarlemanConfig, points: int = 48, oversample: int = 4) -> CarlemanReport:
    return _check_samples(_samples(g, points, oversample), cfg)


@dataclass(frozen=True)
class ExpansionCheck:
    """Per time slice: the form (S_t f + [S, Asym] f, f) by the operator route
    and by the sum-of-squares route, plus the guaranteed lower bound."""

    times: np.ndarray
    direct: np.ndarray
    expanded: np.ndarray
    lower_bound: np.ndarray

    @property
    def residual(self) -> float:
        scale = np.maximum(np.abs(self.expanded), np.finfo(float).tiny)
        mask = self.expanded > 0
        return float(np.max(np.abs(self.direct - self.expanded)[mask] / scale[mask])) if np.any(mask) else 0.0

    @property
    def slack(self) -> float:
        return float(np.min(self.expanded - self.lower_bound))


def _weighted_derivatives(s: _Samples, cfg: CarlemanConfig):
    """f = exp(phi - shift) g and f' with the shift chosen to avoid overflow."""
    mu, R = cfg.mu, cfg.R
    t = s.t[:, None]
    y = s.x[None, :] + R * t * (1 - t)
    phase = cfg.profile.phase(s.x[None, :], t)
    shift = float(np.max(phase))
    e = np.exp(phase - shift)
    dphi = 2 * mu * y
    f = e * s.g
    fx = e * (dphi * s.g + s.g_x)
    fxx = e * ((2 * mu + dphi**2) * s.g + 2 * dphi * s.g_x + s.g_xx)
    return y, f, fx, fxx


def commutator_operator(cfg: CarlemanConfig, y, t, f, fx, fxx):
    """(S_t + [S, Asym]) f for the moving weight, in closed form."""
    mu, R, eps = cfg.mu, cfg.R, cfg.eps
    drift = R * (1 - 2 * t)
    tail = (1 + eps) * R**2 / (8 * mu)
    if cfg.operator == "schrodinger":
        return (-8 * mu * fxx + (32 * mu**3 * y**2 - 4 * mu * R * y + 2 * mu * drift**2 + tail) * f
                - 8j * mu * drift * fx)
    return (-8 * mu * fxx
            + (32 * mu**3 * y**2 + 2 * mu * drift**2 + 4 * mu * R * (4 * mu * (1 - 2 * t) - 1) * y
               + (2 * t - 1) * R**2 + tail) * f)


def commutator_expansion_check(g: BumpField, cfg: CarlemanConfig, points: int = 48, oversample: int = 4) -> ExpansionCheck:
    mu, R, eps = cfg.mu, cfg.R, cfg.eps
    s = _samples(g, points, oversample)
    y, f, fx, fxx = _weighted_derivatives(s, cfg)
    t = s.t[:, None]
    hx = s.x[1] - s.x[0]
    Qf = commutator_operator(cfg, y, t, f, fx, fxx)
    direct = hx * np.sum(Qf * np.conj(f), axis=1).real
    mass = hx * np.sum(np.abs(f) ** 2, axis=1)
    if cfg.operator == "schrodinger":
        centre = y - R / (16 * mu**2)
        grad = np.abs(1j * fx - 0.5 * R * (1 - 2 * t) * f) ** 2
    else:
        centre = y + (4 * mu * (1 - 2 * t) - 1) * R / (16 * mu**2)
        grad = np.abs(fx) ** 2
    expanded = (32 * mu**3 * hx * np.sum(centre**2 * np.abs(f) ** 2, axis=1)
                + eps * R**2 / (8 * mu) * mass + 8 * mu * hx * np.sum(grad, axis=1))
    return ExpansionCheck(s.t, direct, expanded, eps * R**2 / (8 * mu) * mass)


@dataclass(frozen=True)
class ParameterWindow:
    lower: float
    upper: float

    @property
    def nonempty(self) -> bool:
        return self.lower < self.upper


def parameter_window(gamma: float, eps: float) -> ParameterWindow:
    """Admissible mu: (1+eps)^(3/2) / (2 (1-eps)^3) < mu <= gamma / (1+eps)."""
    if not gamma > 0:
        raise ParameterOutOfRange("carleman.gamma", "must be positive")
    if not 0 < eps < 1:
        raise ParameterOutOfRange("carleman.eps", "must lie in (0, 1)")
    return ParameterWindow((1 + eps) ** 1.5 / (2 * (1 - eps) ** 3), gamma / (1 + eps))


def core_phase_predicate(mu: float, eps: float) -> float:
    """4 mu^2 (1-eps)^6 - (1+eps)^3; positive exactly when mu is above the window's lower end."""
    return 4 * mu**2 * (1 - eps) ** 6 - (1 + eps) ** 3


def core_phase_minimum(mu: float, eps: float, R: float, samples: int = 201) -> float:
    """Sampled minimum of the Schrodinger weight phase over the core region
    |x| <= eps (1-eps)^2 R / 4, (1-eps)/2 <= t <= (1+eps)/2."""
    profile = MovingCarleman(mu, R, eps, "schrodinger")
    r = eps * (1 - eps) ** 2 * R / 4
    x = np.linspace(-r, r, samples)
    t = np.linspace((1 - eps) / 2, (1 + eps) / 2, samples)
    return float(np.min(profile.phase(x[None, :], t[:, None])))


def _time_cutoff(t, R_cut, order=0):
    edge = 1.0 / (2.0 * R_cut)
    rise = (np.asarray(t) - edge) / edge
    fall = (1.0 - np.asarray(t) - edge) / edge
    a0, b0 = smoothstep(rise), smoothstep(fall)
    if order == 0:
        return a0 * b0
    return smoothstep(rise, 1) / edge * b0 - a0 * smoothstep(fall, 1) / edge


def _space_cutoff(x, M, order=0):
    ax = np.abs(np.asarray(x, dtype=float))
    s = (ax - M) / M
    if order == 0:
        return 1.0 - smoothstep(s)
    sign = np.sign(x)
    if order == 1:
        return -smoothstep(s, 1) / M * sign
    return -smoothstep(s, 2) / M**2


@dataclass(frozen=True)
class CutoffResult:
    field: SpaceTimeField
    defect: SpaceTimeField
    gradient_defect: SpaceTimeField


def cutoff_apply(u: SpaceTimeField, M: float, R_cut: float) -> CutoffResult:
    """g = theta_M(x) eta_R(t) u and the defect
    theta_M eta_R' u - i (2 theta_M' u_x + u theta_M'') eta_R."""
    if not 0 < 2 * M < u.grid.half_width:
        raise SupportOutOfDomain("need 0 < 2M < half width of the grid")
    if not R_cut > 2:
        raise SupportOutOfDomain("need R_cut > 2 so that 1/R_cut lies inside (0, 1/2)")
    if u.times[0] < 0 or u.times[-1] > 1:
        raise SupportOutOfDomain("times must lie in [0, 1]")
    x, t = u.grid.x, u.times
    theta, dtheta, d2theta = (_space_cutoff(x, M, k) for k in range(3))
    eta, deta = _time_cutoff(t, R_cut), _time_cutoff(t, R_cut, 1)
    ux = np.stack([spectral_derivative(s).values for s in u.slices()])
    g = eta[:, None] * theta[None, :] * u.values
    grad = -1j * (2 * dtheta[None, :] * ux + d2theta[None, :] * u.values) * eta[:, None]
    defect = theta[None, :] * deta[:, None] * u.values + grad
    return CutoffResult(SpaceTimeField(u.grid, t, g), SpaceTimeField(u.grid, t, defect),
                        SpaceTimeField(u.grid, t, grad))


@dataclass(frozen=True)
class SweepRow:
    bump: int
    mu: float
    eps: float
    R: float
    operator: str
    lhs: float
    rhs: float
    margin: float
    passed: bool


def carleman_sweep(
    operator: str,
    n_bumps: int = 50,
    mus=(0.5, 1.0, 2.0),
    epss=(0.1, 0.5, 1.0),
    Rs=(1.0, 5.0, 10.0),
    seed: int = 0,
    threads: int = 1,
    points: int = 48,
    oversample: int = 4,
) -> list[SweepRow]:
    """Every bump against every (mu, eps, R); rows in (bump, mu, eps, R) order."""
    bumps = random_bumps(n_bumps, seed)
    configs = [CarlemanConfig(m, e, r, operator) for m in mus for e in epss for r in Rs]

    def run(index):
        s = _samples(bumps[index], points, oversample)
        rows = []
        for cfg in configs:
            rep = _check_samples(s, cfg)
            rows.append(SweepRow(index, cfg.mu, cfg.eps, cfg.R, operator, rep.lhs, rep.rhs, rep.margin, rep.passed))
        return rows

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        chunks = list(pool.map(run, range(n_bumps)))
    return [row for chunk in chunks for row in chunk]


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bump", "mu", "eps", "R", "operator", "lhs", "rhs", "margin", "pass"])
        for r in rows:
            d = asdict(r)
            w.writerow([d["bump"], repr(d["mu"]), repr(d["eps"]), repr(d["R"]), d["operator"],
                        repr(d["lhs"]), repr(d["rhs"]), repr(d["margin"]), str(d["passed"]).lower()])

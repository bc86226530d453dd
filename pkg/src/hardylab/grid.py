"""Uniform periodic grid on [-L, L), complex fields and spectral calculus.

Everything downstream works in one space dimension on this grid.  The
periodic box stands in for the real line, so callers are expected to keep
their fields (and weighted integrands) negligible at the boundary; see
:func:`hardylab.weight.weighted_l2_norm` for the tail diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatch, InvalidField, NonUniformTimeGrid, ParameterOutOfRange


@dataclass(frozen=True)
class Grid:
    half_width: float
    points: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ParameterOutOfRange("grid.half_width", "must be positive")
        n = int(self.points)
        if n != self.points or n < 16 or n & (n - 1):
            raise ParameterOutOfRange("grid.points", "must be a power of two >= 16")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points)

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def k_odd(self) -> np.ndarray:
        # Nyquist mode has no well-defined odd derivative on an even grid.
        k = self.k.copy()
        k[self.points // 2] = 0.0
        return k

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.half_width, self.points * factor)


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.points,):
            raise InvalidField(f"expected {self.grid.points} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidField("field contains non-finite samples")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ComplexField":
        return cls(grid, func(grid.x))

    def with_values(self, values) -> "ComplexField":
        return ComplexField(self.grid, values)

    def __add__(self, other: "ComplexField") -> "ComplexField":
        _same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        _same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar) -> "ComplexField":
        return self.with_values(scalar * self.values)

    __rmul__ = __mul__


def _same_grid(f: ComplexField, g: ComplexField) -> None:
    if f.grid != g.grid:
        raise GridMismatch(f"{f.grid} != {g.grid}")


def spectral_derivative(field: ComplexField, order: int = 1) -> ComplexField:
    k = field.grid.k_odd if order % 2 else field.grid.k
    return field.with_values(np.fft.ifft((1j * k) ** order * np.fft.fft(field.values)))


def spectral_laplacian(field: ComplexField) -> ComplexField:
    return field.with_values(np.fft.ifft(-field.grid.k**2 * np.fft.fft(field.values)))


def apply_multiplier(field: ComplexField, multiplier: np.ndarray) -> ComplexField:
    return field.with_values(np.fft.ifft(multiplier * np.fft.fft(field.values)))


def l2_norm(field: ComplexField) -> float:
    return float(np.sqrt(field.grid.spacing * np.sum(np.abs(field.values) ** 2)))


def inner_product(f: ComplexField, g: ComplexField) -> complex:
    """Rectangle-rule approximation of the integral of f * conj(g)."""
    _same_grid(f, g)
    return complex(f.grid.spacing * np.vdot(g.values, f.values))


def spectral_norm(field: ComplexField) -> float:
    """L2 norm computed from the Fourier coefficients (Parseval)."""
    coeffs = np.fft.fft(field.values)
    return float(np.sqrt(field.grid.spacing / field.grid.points * np.sum(np.abs(coeffs) ** 2)))


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Slices of a field on a fixed grid at strictly increasing times.

    ``values`` has shape ``(len(times), grid.points)``.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise InvalidField("times must be strictly increasing")
        if v.shape != (t.size, self.grid.points):
            raise InvalidField(f"values shape {v.shape} does not match {(t.size, self.grid.points)}")
        if not np.all(np.isfinite(v)):
            raise InvalidField("space-time field contains non-finite samples")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_slices(cls, times, slices) -> "SpaceTimeField":
        slices = list(slices)
        grid = slices[0].grid
        for s in slices:
            _same_grid(slices[0], s)
        return cls(grid, np.asarray(times), np.stack([s.values for s in slices]))

    def __len__(self):
        return self.times.size

    def slice(self, i: int) -> ComplexField:
        return ComplexField(self.grid, self.values[i])

    def slices(self):
        return [self.slice(i) for i in range(len(self))]

    def time_step(self) -> float:
        """Common step of a uniform time grid."""
        dt = np.diff(self.times)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
            raise NonUniformTimeGrid("time grid is not uniform")
        return float(dt.mean())


def time_quadrature_weights(times: np.ndarray) -> np.ndarray:
    """Composite Simpson weights on a uniform grid (trapezoid on the last
    interval when the count of intervals is odd)."""
    times = np.asarray(times, dtype=float)
    n = times.size - 1
    if n < 1:
        return np.zeros(times.size)
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
        raise NonUniformTimeGrid("Simpson rule needs a uniform time grid")
    h = dt[0]
    w = np.zeros(times.size)
    m = n if n % 2 == 0 else n - 1
    if m > 0:
        w[0:m + 1:2] += 2.0
        w[1:m:2] += 4.0
        w[0] -= 1.0
        w[m] -= 1.0
        w[: m + 1] *= h / 3.0
    if m < n:
        w[n - 1] += h / 2.0
        w[n] += h / 2.0
    return w

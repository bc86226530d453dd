"""Compactly supported C-infinity profiles with closed-form derivatives.

Three building blocks are used throughout:

* ``bump(s, order)``: ``exp(1 - 1/(1 - s^2))`` on (-1, 1), zero outside,
  normalised so that ``bump(0) == 1``.
* ``kernel(s, order)``: the same profile rescaled to unit mass, used as the
  mollifier.
* ``smoothstep(s, order)``: a C-infinity transition from 0 (s <= 0) to 1
  (s >= 1), used for the space and time cutoffs.
"""
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.integrate import quad

MAX_ORDER = 4


def _log_bump_derivs(s):
    # psi = 1 + 1/(s^2 - 1); its n-th derivative from partial fractions.
    psi = [1.0 + 1.0 / (s * s - 1.0)]
    for n in range(1, MAX_ORDER + 1):
        psi.append(0.5 * (-1) ** n * factorial(n) * ((s - 1.0) ** (-n - 1) - (s + 1.0) ** (-n - 1)))
    return psi


def bump(s, order: int = 0):
    """Derivative of the given order of the unit-height bump."""
    if order > MAX_ORDER:
        raise ValueError(f"order must be <= {MAX_ORDER}")
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    if not np.any(inside):
        return out
    si = s[inside]
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        p0, p1, p2, p3, p4 = _log_bump_derivs(si)
        e = np.exp(p0)
        # Faa di Bruno for exp(psi).
        poly = [
            1.0,
            p1,
            p2 + p1**2,
            p3 + 3 * p1 * p2 + p1**3,
            p4 + 4 * p1 * p3 + 3 * p2**2 + 6 * p1**2 * p2 + p1**4,
        ][order]
        val = e * poly
    out[inside] = np.where(e > 0, val, 0.0)
    return out


@lru_cache(maxsize=None)
def _kernel_mass() -> float:
    return quad(lambda s: float(bump(np.array(s))), -1, 1, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def kernel(s, order: int = 0):
    """Unit-mass mollifier on [-1, 1] (or its derivative)."""
    return bump(s, order) / _kernel_mass()


@lru_cache(maxsize=None)
def kernel_second_moment() -> float:
    """The constant C with (kernel_rho * x^2)(x) = x^2 + C rho^2."""
    return quad(lambda s: s * s * float(kernel(np.array(s))), -1, 1, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def _h(s):
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)


def smoothstep(s, order: int = 0):
    """C-infinity step from 0 to 1 across [0, 1], or its first/second derivative."""
    s = np.asarray(s, dtype=float)
    if order == 0:
        p, q = _h(s), _h(1.0 - s)
        return p / (p + q)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    u = 1.0 - si
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        p, q = _h(si), _h(u)
        dp, dq = p / si**2, -q / u**2
        den = p + q
        num1 = dp * q - p * dq
        if order == 1:
            val = num1 / den**2
        elif order == 2:
            d2p = p * (1 / si**4 - 2 / si**3)
            d2q = q * (1 / u**4 - 2 / u**3)
            val = ((d2p * q - p * d2q) * den - 2 * num1 * (dp + dq)) / den**3
        else:
            raise ValueError("smoothstep supports order <= 2")
    out[inside] = np.nan_to_num(val)
    return out

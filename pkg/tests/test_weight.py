import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardylab.errors import ParameterOutOfRange, WeightedNormDivergent
from hardylab.grid import ComplexField, Grid
from hardylab.weight import (
    LemmaOneRate,
    LinearExponential,
    MovingCarleman,
    RegularizedConvex,
    StaticGaussian,
    TimeInterpolated,
    TruncatedGaussian,
    evaluate_phase,
    gaussian_average_identity_check,
    mollification_offset,
    mollified_bilaplacian_bound,
    mollify,
    profile_from_dict,
    weighted_l2_norm,
)


def test_phase_examples():
    assert evaluate_phase(StaticGaussian(1.0), 2.0, 0.3) == pytest.approx(4.0)
    assert evaluate_phase(LemmaOneRate(1.0, 1.0, 0.0), 1.0, 1.0) == pytest.approx(0.2)
    assert evaluate_phase(MovingCarleman(1.0, 4.0, 0.5), 0.0, 0.5) == pytest.approx(0.625)


def test_parabolic_phase_adds_cubic_term():
    s, p = MovingCarleman(1.0, 4.0, 0.5), MovingCarleman(1.0, 4.0, 0.5, "parabolic")
    t = 0.3
    assert p.phase(0.7, t) - s.phase(0.7, t) == pytest.approx(16 * t * (1 - t) * (1 - 2 * t) / 6)


@pytest.mark.parametrize("bad", [
    {"kind": "StaticGaussian", "gamma": -1.0},
    {"kind": "MovingCarleman", "mu": 1.0, "R": 0.0, "eps": 0.5},
    {"kind": "LemmaOneRate", "gamma": 1.0, "A": 0.0},
    {"kind": "NoSuchWeight"},
])
def test_invalid_parameters_raise(bad):
    with pytest.raises(ParameterOutOfRange):
        profile_from_dict(bad)


def test_error_names_the_parameter():
    with pytest.raises(ParameterOutOfRange) as info:
        StaticGaussian(-0.5)
    assert info.value.name == "weight.gamma"


def test_profiles_round_trip_through_dicts():
    for p in (StaticGaussian(0.3), LemmaOneRate(0.5, 1.0, 2.0), TimeInterpolated(1.0, 2.0),
              MovingCarleman(1.0, 5.0, 0.1, "parabolic"), LinearExponential(-0.7),
              TruncatedGaussian(0.5, 3.0, 0.2), RegularizedConvex(0.5, 0.3, 0.4)):
        assert profile_from_dict(p.to_dict()) == p


def test_weighted_norm_examples(grid):
    u = ComplexField(grid, np.exp(-grid.x**2))
    rep = weighted_l2_norm(u, StaticGaussian(0.25))
    assert rep.value == pytest.approx((2 * math.pi / 3) ** 0.25, rel=1e-12)
    assert rep.converged
    with pytest.raises(WeightedNormDivergent):
        weighted_l2_norm(u, StaticGaussian(2.0), strict=True)
    assert not weighted_l2_norm(u, StaticGaussian(2.0)).converged
    zero = weighted_l2_norm(ComplexField(grid, np.zeros(grid.points)), StaticGaussian(5.0), strict=True)
    assert zero.value == 0.0 and zero.converged


def test_gaussian_average_identity():
    assert gaussian_average_identity_check(0.25, [0.0]) < 1e-10
    assert gaussian_average_identity_check(0.25, [1.0]) < 1e-8
    assert gaussian_average_identity_check(1.0, [2.0]) < 1e-8


def test_bilaplacian_decays_linearly_in_a():
    a = np.array([0.5, 0.25, 0.125, 0.0625])
    sups = np.array([mollified_bilaplacian_bound(ai, 0.5) for ai in a])
    assert np.all(np.isfinite(sups)) and np.all(sups > 0)
    slope = np.polyfit(np.log(a), np.log(sups), 1)[0]
    assert slope >= 0.9


def test_bilaplacian_rejects_out_of_range():
    with pytest.raises(ParameterOutOfRange):
        mollified_bilaplacian_bound(1.5, 0.5)


def test_regularised_phase_is_square_near_origin():
    rho = 0.05
    x = np.linspace(-0.5, 0.5, 101)
    phase = RegularizedConvex(1.0, 0.5, rho).phase(x)
    assert np.max(np.abs(phase - x**2)) <= mollification_offset() * rho**2 * (1 + 1e-9)


def test_mollify_reproduces_quadratic_offset():
    x = np.linspace(-2, 2, 9)
    out = mollify(lambda y: y * y, x, 0.3)
    assert np.allclose(out, x**2 + mollification_offset() * 0.09, atol=1e-13)


def test_truncated_gaussian_is_flat_outside():
    p = TruncatedGaussian(0.5, 2.0, 0.25)
    x = np.linspace(2.3, 8.0, 50)
    assert np.ptp(p.phase(x)) < 1e-13
    assert np.ptp(p.phase(-x)) < 1e-13


@given(st.floats(0.05, 2.0), st.floats(0.1, 3.0), st.floats(-3.0, 3.0), st.floats(0.0, 1.0))
def test_decaying_rate_solves_riccati(gamma, A, B, t):
    p = LemmaOneRate(gamma, A, B)
    h = 1e-5
    deriv = (p.rate(t + h) - p.rate(t - h)) / (2 * h)  # the formula is smooth across t = 0
    lhs = deriv + 4 * (A + B * B / A) * p.rate(t) ** 2
    scale = 4 * (A + B * B / A) * p.rate(t) ** 2
    assert abs(lhs) <= 1e-6 * scale + 1e-8


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(-5.0, 5.0))
def test_time_interpolated_endpoints(alpha, beta, x):
    p = TimeInterpolated(alpha, beta)
    assert p.phase(x, 0.0) == pytest.approx(x * x / beta**2, rel=1e-14, abs=1e-300)
    assert p.phase(x, 1.0) == pytest.approx(x * x / alpha**2, rel=1e-14, abs=1e-300)


@given(st.floats(0.1, 2.0), st.floats(0.5, 4.0), st.floats(0.05, 0.5))
def test_truncated_gaussian_below_mollified_square(gamma, R, rho):
    x = np.linspace(-R - 2, R + 2, 301)
    phase = TruncatedGaussian(gamma, R, rho).phase(x)
    assert np.all(phase <= gamma * (x**2 + mollification_offset() * rho**2) + 1e-12)
    assert np.all(phase >= 0)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_regularized_convex_is_convex(a, rho):
    x = np.linspace(-4, 4, 801)
    phase = RegularizedConvex(1.0, a, rho).phase(x)
    assert np.min(phase[2:] - 2 * phase[1:-1] + phase[:-2]) >= -1e-10


@given(st.sampled_from(["static", "decaying", "interp"]), st.floats(0.05, 1.0), st.floats(0.0, 1.0))
def test_gaussian_weights_are_at_least_one(kind, gamma, t):
    x = np.linspace(-10, 10, 201)
    p = {"static": StaticGaussian(gamma), "decaying": LemmaOneRate(gamma, 1.0, 0.5),
         "interp": TimeInterpolated(1.0 + gamma, 2.0)}[kind]
    assert np.all(np.exp(p.phase(x, t)) >= 1.0)


@given(st.floats(0.0, 1.0))
def test_converged_flag_matches_tail_ratio(gamma):
    g = Grid(6.0, 256)
    rep = weighted_l2_norm(ComplexField(g, np.exp(-g.x**2)), StaticGaussian(gamma + 1e-3))
    assert rep.converged == (rep.tail_ratio < 1e-10)

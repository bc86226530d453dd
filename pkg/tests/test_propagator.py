import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardylab.analytic import GaussianState, evolve_gaussian, sample_evolution
from hardylab.errors import BackwardDissipative, ParameterOutOfRange, UnstableStep
from hardylab.grid import ComplexField, Grid, SpaceTimeField, l2_norm
from hardylab.propagator import (
    FlowSpec,
    StaticPotential,
    SumPotential,
    TimeDependentPotential,
    builtin_potential,
    evolve,
    free_flow,
    heat_semigroup,
    lemma1_decay_check,
    regularize_flow,
    semigroup_identity_check,
    split_step_flow,
)

GAUSS = GaussianState(1.0)


@pytest.fixture(scope="module")
def u0(grid):
    return GAUSS.sample(grid)


def test_free_flow_matches_closed_form(grid, u0):
    exact = evolve_gaussian(GAUSS, 0.0, 1.0, 0.3).sample(grid)
    assert l2_norm(free_flow(u0, 0.0, 1.0, 0.3) - exact) < 1e-9


def test_free_flow_at_zero_time_is_identity(u0):
    assert free_flow(u0, 1.0, 0.0, 0.0) is u0


def test_free_flow_is_unitary(u0):
    n0 = l2_norm(u0)
    for t in np.arange(1, 11) / 10:
        assert abs(l2_norm(free_flow(u0, 0.0, 1.0, t)) - n0) < 1e-12 * n0


def test_backward_heat_is_rejected(u0):
    with pytest.raises(BackwardDissipative):
        free_flow(u0, 1.0, 0.0, -0.1)
    with pytest.raises(BackwardDissipative):
        heat_semigroup(u0, -0.1)


def test_free_flow_composes(u0):
    a = free_flow(free_flow(u0, 0.5, 1.0, 0.2), 0.5, 1.0, 0.3)
    assert l2_norm(a - free_flow(u0, 0.5, 1.0, 0.5)) < 1e-12


@pytest.mark.parametrize("z1,z2", [(0.1, 0.2), (0.1 + 0.3j, 0.05 - 0.1j), (0.5j, 0.5j)])
def test_semigroup_examples(u0, z1, z2):
    assert semigroup_identity_check(u0, z1, z2) < 1e-12


def test_imaginary_semigroup_is_schrodinger(u0):
    assert l2_norm(heat_semigroup(u0, 1j) - free_flow(u0, 0.0, 1.0, 1.0)) < 1e-12


def test_split_step_without_potential(u0):
    u = split_step_flow(u0, FlowSpec(0.0, 1.0), np.linspace(0, 1, 11))
    assert l2_norm(u.slice(10) - free_flow(u0, 0.0, 1.0, 1.0)) < 1e-8


def test_constant_potential_is_global_phase(u0):
    spec = FlowSpec(0.0, 1.0, builtin_potential("constant", value=-1.0))
    u = split_step_flow(u0, spec, [0.0, 1.0])
    assert l2_norm(u.slice(1) - np.exp(-1j) * free_flow(u0, 0.0, 1.0, 1.0)) < 1e-8


def test_split_step_is_second_order(u0):
    spec = FlowSpec(0.0, 1.0, StaticPotential(lambda x: np.exp(-x**2)))
    sols = [split_step_flow(u0, spec, [0.0, 1.0], dt).slice(1) for dt in (0.04, 0.02, 0.01, 0.0025)]
    e1, e2 = l2_norm(sols[0] - sols[3]), l2_norm(sols[1] - sols[3])
    assert 3.0 < e1 / e2 < 5.5


def test_declared_bound_below_potential_is_refused(u0):
    with pytest.raises(ParameterOutOfRange):
        split_step_flow(u0, FlowSpec(1.0, 0.0, StaticPotential(lambda x: 2.0 + 0 * x, bound=1.0)), [0.0, 0.1])


def test_overflowing_step_is_reported(u0):
    huge = StaticPotential(lambda x: 1e7 * np.exp(-x**2))
    with pytest.raises(UnstableStep):
        split_step_flow(u0, FlowSpec(1.0, 0.0, huge), [0.0, 0.01])


def test_growth_stays_within_the_a_priori_bound(u0):
    # Strong gain between output times: the bound integrates the applied
    # potential, so a legitimate run is not flagged.
    pulse = TimeDependentPotential(lambda x, t: 20.0 * np.sin(np.pi * t) ** 2 * np.exp(-x**2))
    u = split_step_flow(u0, FlowSpec(1.0, 0.0, pulse), [0.0, 1.0])
    assert l2_norm(u.slice(1)) > l2_norm(u0)


def test_regularization_examples(grid, u0):
    times = np.linspace(0, 1, 101)
    u = evolve(u0, FlowSpec(0.0, 1.0), times)
    reg = regularize_flow(u, 0.1)
    assert np.array_equal(reg.result.values[0], u.values[0])
    target = heat_semigroup(u0, 0.1 + 1j)
    assert l2_norm(reg.result.slice(100) - target) < 1e-10
    tiny = regularize_flow(u, 1e-6)
    assert max(l2_norm(tiny.result.slice(i) - u.slice(i)) for i in range(len(u))) < 1e-4


def test_regularization_duhamel_routes_agree(grid, u0):
    V1 = StaticPotential(lambda x: np.exp(-x**2))
    V2 = TimeDependentPotential(lambda x, t: 0.5 * np.exp(-x**2) * (1 + 0.3j * np.cos(t)))
    u = split_step_flow(u0, FlowSpec(0.0, 1.0, SumPotential(V1, V2)), np.linspace(0, 1, 101))
    assert regularize_flow(u, 0.1, V1=V1, V2=V2).duhamel_discrepancy < 1e-6


def test_decay_check_heat_case(grid, u0):
    uT = evolve_gaussian(GAUSS, 1.0, 0.0, 1.0).sample(grid)
    check = lemma1_decay_check(u0, FlowSpec(1.0, 0.0), 0.5, 1.0, uT=uT)
    assert check.rate == pytest.approx(1 / 6)
    assert check.margin >= 0


def test_decay_check_complex_case():
    g = Grid(12.0, 1024)
    check = lemma1_decay_check(GAUSS.sample(g), FlowSpec(1.0, 1.0), 0.25, 0.5)
    assert check.rate == pytest.approx(1 / 8)
    assert check.margin >= 0


def test_decay_check_zero_data(grid):
    check = lemma1_decay_check(ComplexField(grid, np.zeros(grid.points)), FlowSpec(1.0, 0.0), 0.5, 1.0)
    assert check.lhs == 0 and check.rhs == 0 and check.margin == 0


def test_decay_check_with_absorbing_potential():
    g = Grid(12.0, 1024)
    spec = FlowSpec(1.0, 1.0, builtin_potential("absorbing_gaussian", depth=0.5))
    check = lemma1_decay_check(GAUSS.sample(g), spec, 0.25, 0.5)
    assert check.growth > 0 and check.margin >= 0


def test_decay_check_rejects_unitary_flow(u0):
    with pytest.raises(ParameterOutOfRange):
        lemma1_decay_check(u0, FlowSpec(0.0, 1.0), 0.5, 1.0)


@given(st.floats(0.0, 1.0), st.floats(0.5, 3.0), st.floats(0.1, 2.0))
def test_split_step_unitarity_with_real_potential(t_end, depth, width):
    g = Grid(20.0, 512)
    u0 = GAUSS.sample(g)
    spec = FlowSpec(0.0, 1.0, builtin_potential("gaussian_well", depth=depth, width=width))
    u = split_step_flow(u0, spec, [0.0, max(t_end, 1e-3)], dt=1e-2)
    assert abs(l2_norm(u.slice(1)) - l2_norm(u0)) < 1e-10 * l2_norm(u0)


@given(st.floats(0.1, 1.0), st.floats(-1.0, 1.0))
def test_two_sided_norm_bound_for_complex_potential(depth, sign):
    g = Grid(20.0, 512)
    u0 = GAUSS.sample(g)
    V2 = TimeDependentPotential(lambda x, t: sign * 1j * depth * np.exp(-x**2))
    u = split_step_flow(u0, FlowSpec(0.0, 1.0, V2), np.linspace(0, 1, 6), dt=1e-2)
    n0 = l2_norm(u0)
    for t, s in zip(u.times, u.slices()):
        N = math.exp(abs(sign) * depth * t)
        assert n0 / N * (1 - 1e-6) <= l2_norm(s) <= N * n0 * (1 + 1e-6)


@given(st.floats(0.0, 0.5), st.floats(-1.0, 1.0), st.floats(0.0, 0.5), st.floats(-1.0, 1.0))
def test_semigroup_property(a1, b1, a2, b2):
    g = Grid(20.0, 512)
    assert semigroup_identity_check(GAUSS.sample(g), complex(a1, b1), complex(a2, b2)) < 1e-12

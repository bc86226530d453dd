import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardylab import carleman as cm
from hardylab.analytic import GaussianState, sample_evolution
from hardylab.errors import ParameterOutOfRange, SupportOutOfDomain
from hardylab.grid import ComplexField, Grid, spectral_laplacian


def test_centered_bump_is_normalized():
    g = cm.make_bump(0.0, 1.0, 0.5, 0.2)
    assert abs(g.spatial(0.0)) == pytest.approx(1.0)
    assert abs(g.temporal(0.5)) == pytest.approx(1.0)


def test_derivatives_vanish_at_the_support_edge():
    g = cm.make_bump(0.3, 1.5, 0.5, 0.3, wavenumber=2.0)
    edges = np.array([0.3 - 1.5, 0.3 + 1.5])
    for order in range(3):
        assert np.max(np.abs(g.spatial(edges, order))) < 1e-300
    assert np.max(np.abs(g.temporal(np.array([0.2, 0.8]), 1))) < 1e-300


def test_analytic_laplacian_matches_spectral():
    # The bump is Gevrey, not analytic, so the spectral error decays slower than geometrically.
    grid = Grid(6.0, 1024)
    g = cm.make_bump(0.5, 3.0, 0.5, 0.3, wavenumber=1.5, domain_half_width=grid.half_width)
    spectral = spectral_laplacian(ComplexField(grid, g.spatial(grid.x))).values
    analytic = g.spatial(grid.x, 2)
    assert np.linalg.norm(spectral - analytic) / np.linalg.norm(analytic) < 1e-8


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.1, 0.2), (0.0, 1.0, 0.9, 0.2), (0.0, -1.0, 0.5, 0.1),
                                  (5.5, 1.0, 0.5, 0.1)])
def test_bump_support_is_checked(args):
    with pytest.raises(SupportOutOfDomain):
        cm.make_bump(*args, domain_half_width=6.0)


def test_zero_bump_gives_zero_sides():
    rep = cm.carleman_check(cm.make_bump(0.0, 1.0, 0.5, 0.2, amplitude=0.0), cm.CarlemanConfig(1.0, 0.5, 5.0))
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.passed


@given(st.integers(0, 10_000), st.sampled_from(cm.OPERATORS), st.sampled_from([0.5, 1.0, 2.0]),
       st.sampled_from([0.1, 0.5, 1.0]), st.sampled_from([1.0, 5.0, 10.0]))
def test_carleman_inequality_holds(seed, operator, mu, eps, R):
    g = cm.random_bumps(1, seed)[0]
    rep = cm.carleman_check(g, cm.CarlemanConfig(mu, eps, R, operator), points=32)
    assert rep.passed
    assert rep.constant == pytest.approx(R * np.sqrt(eps / (8 * mu)))


@pytest.mark.parametrize("operator", cm.OPERATORS)
def test_expansion_routes_agree_and_bound_holds(operator):
    g = cm.make_bump(0.0, 1.0, 0.5, 0.3)
    for eps in (0.5, 1e-9):
        ex = cm.commutator_expansion_check(g, cm.CarlemanConfig(1.0, eps, 5.0, operator))
        assert ex.residual < 1e-6
        assert ex.slack >= 0


def test_config_is_validated():
    with pytest.raises(ParameterOutOfRange):
        cm.CarlemanConfig(0.0, 0.5, 1.0)
    with pytest.raises(ParameterOutOfRange):
        cm.CarlemanConfig(1.0, 0.5, 1.0, "wave")


def test_parameter_window_examples():
    assert cm.parameter_window(1.0, 0.5).lower == pytest.approx(7.348, abs=1e-3)
    assert not cm.parameter_window(11.0, 0.5).nonempty
    assert cm.parameter_window(11.1, 0.5).nonempty
    w = cm.parameter_window(0.4, 0.1)
    assert not w.nonempty
    assert w.lower == pytest.approx(0.7913, abs=1e-4)
    near = cm.parameter_window(1.0, 1e-9)
    assert near.nonempty
    assert near.lower == pytest.approx(0.5, abs=1e-6) and near.upper == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("gamma, eps", [(0.0, 0.5), (1.0, 0.0), (1.0, 1.0)])
def test_parameter_window_rejects_bad_input(gamma, eps):
    with pytest.raises(ParameterOutOfRange):
        cm.parameter_window(gamma, eps)


@given(st.floats(0.3, 5.0), st.floats(0.02, 0.9))
def test_core_predicate_forces_a_positive_core_phase(mu, eps):
    if cm.core_phase_predicate(mu, eps) > 0:
        assert cm.core_phase_minimum(mu, eps, 10.0) > 0


def test_core_predicate_matches_the_window_lower_end():
    for eps in (0.05, 0.2, 0.5):
        lower = cm.parameter_window(1.0, eps).lower
        assert cm.core_phase_predicate(lower * 1.001, eps) > 0 > cm.core_phase_predicate(lower * 0.999, eps)


@pytest.fixture(scope="module")
def spread():
    grid = Grid(20.0, 512)
    return sample_evolution(GaussianState(0.05), 0.0, 1.0, grid, np.linspace(0, 1, 21))


def test_cutoff_is_identity_in_the_core(spread):
    res = cm.cutoff_apply(spread, 4.0, 5.0)
    core_x = np.abs(spread.grid.x) <= 4.0
    core_t = (spread.times >= 0.2) & (spread.times <= 0.8)
    assert np.array_equal(res.field.values[np.ix_(core_t, core_x)], spread.values[np.ix_(core_t, core_x)])
    assert np.all(res.defect.values[np.ix_(core_t, core_x)] == 0)


def test_cutoff_gradient_defect_decays_with_M(spread):
    small = np.linalg.norm(cm.cutoff_apply(spread, 2.0, 5.0).gradient_defect.values)
    large = np.linalg.norm(cm.cutoff_apply(spread, 4.0, 5.0).gradient_defect.values)
    assert small / large >= 1.9


@pytest.mark.parametrize("M, R_cut", [(6.0, 1.5), (11.0, 4.0), (0.0, 4.0)])
def test_cutoff_domain_checks(spread, M, R_cut):
    with pytest.raises(SupportOutOfDomain):
        cm.cutoff_apply(spread, M, R_cut)


def test_sweep_rows_and_csv(tmp_path):
    rows = cm.carleman_sweep("schrodinger", n_bumps=3, mus=(1.0,), epss=(0.5, 1.0), Rs=(1.0, 5.0), points=16)
    assert len(rows) == 12
    assert [(r.bump, r.eps, r.R) for r in rows[:4]] == [(0, 0.5, 1.0), (0, 0.5, 5.0), (0, 1.0, 1.0), (0, 1.0, 5.0)]
    path = tmp_path / "sweep.csv"
    cm.write_sweep_csv(rows, path)
    with open(path) as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["bump", "mu", "eps", "R", "operator", "lhs", "rhs", "margin", "pass"]
    assert len(table) == 13 and all(r[-1] == "true" for r in table[1:])


def test_sweep_is_independent_of_thread_count():
    kw = dict(n_bumps=4, mus=(0.5,), epss=(0.1,), Rs=(10.0,), points=16)
    assert cm.carleman_sweep("parabolic", threads=1, **kw) == cm.carleman_sweep("parabolic", threads=3, **kw)

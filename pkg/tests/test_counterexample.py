import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardylab.counterexample import (
    MAX_STEP,
    divergence_demonstration,
    explicit_solution_residual,
    scaled_residual,
    scaled_weight,
    solve_weight_ode,
)
from hardylab.errors import ParameterOutOfRange, StepTooLarge, TrajectoryTooShort
from hardylab.grid import Grid


@pytest.fixture(scope="module")
def traj():
    return solve_weight_ode(20.0)


def test_initial_conditions(traj):
    assert traj.a(0.0) == 1.0
    assert traj.a(0.0, 1) == 0.0
    assert traj.a(0.0, 2) == pytest.approx(-32.0)


def test_first_integral_is_conserved(traj):
    assert np.max(np.abs(traj.energy_residual())) < 1e-8


def test_dense_output_solves_the_equation_between_nodes(traj):
    t = np.linspace(0.0, 20.0, 997)  # off the node lattice
    assert np.max(np.abs(traj.residual(t))) < 1e-6


@given(st.floats(0.05, 10.0), st.floats(-1.0, 1.0))
def test_rescaled_weights_solve_the_same_equation(traj, R, t):
    scale = max(R**3, 1.0)
    assert abs(float(scaled_residual(traj, R, t))) < 1e-6 * scale


def test_scaled_weight_is_even_with_odd_slope(traj):
    assert scaled_weight(traj, 3.0, 0.4) == scaled_weight(traj, 3.0, -0.4)
    assert scaled_weight(traj, 3.0, 0.4, 1) == -scaled_weight(traj, 3.0, -0.4, 1)


def test_weight_at_one_shrinks_as_R_grows(traj):
    values = [float(scaled_weight(traj, R, 1.0)) for R in (1, 2, 5, 10, 20)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 0.1


def test_guards():
    with pytest.raises(StepTooLarge):
        solve_weight_ode(1.0, step=2 * MAX_STEP)
    with pytest.raises(ParameterOutOfRange):
        solve_weight_ode(0.0)
    short = solve_weight_ode(1.0)
    with pytest.raises(TrajectoryTooShort):
        scaled_weight(short, 2.0, 1.0)
    with pytest.raises(TrajectoryTooShort):
        short.b(1.5)
    with pytest.raises(ParameterOutOfRange):
        scaled_weight(short, -1.0, 0.5)


def test_explicit_solution_is_a_free_solution():
    grid = Grid(40.0, 2048)
    for t in (-1.0, 0.0, 0.5, 1.0):
        assert explicit_solution_residual(grid, t) < 1e-8


@pytest.mark.parametrize("R", [0.05, 0.1])
def test_weighted_norm_at_zero_converges_below_a_quarter(R, traj):
    table = divergence_demonstration(R, (10.0, 20.0, 40.0), traj)
    assert table.regime == "convergent"
    assert table.rows[-1].H0_converged and table.rows[-1].H1_converged


@pytest.mark.parametrize("R", [1.0, 5.0])
def test_weighted_norm_at_zero_diverges_above_a_quarter(R, traj):
    L = (10.0, 20.0, 40.0)
    table = divergence_demonstration(R, L, traj)
    assert table.regime == "divergent"
    assert not table.rows[-1].H0_converged
    assert table.rows[-1].H1_converged
    # log H(0) grows like (2R - 1/2) L^2
    assert table.rows[-1].log_H0 / L[-1] ** 2 == pytest.approx(2 * R - 0.5, rel=0.05)


def test_halfwidths_must_increase(traj):
    with pytest.raises(ParameterOutOfRange):
        divergence_demonstration(1.0, (10.0, 5.0), traj)


def test_divergence_csv(tmp_path, traj):
    path = tmp_path / "div.csv"
    divergence_demonstration(1.0, (5.0, 10.0), traj).write_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["R", "L", "log_H0_truncated", "H_minus1", "H_plus1", "H0_converged", "H1_converged"]
    assert len(rows) == 3 and math.isfinite(float(rows[2][2]))


def test_quarter_is_the_threshold_at_zero(traj):
    # Just above 1/4 the t=0 column keeps growing; just below it settles.
    above = divergence_demonstration(0.26, (60.0, 80.0), traj)
    below = divergence_demonstration(0.24, (60.0, 80.0), traj)
    assert above.rows[-1].log_H0 - above.rows[0].log_H0 > 10
    assert below.rows[-1].H0_converged


def test_base_weight_is_positive_and_decreasing(traj):
    a = traj.a_values
    assert np.all(a > 0)
    assert np.all(np.diff(a) < 0)


def test_unit_scaling_is_the_base_trajectory(traj):
    t = np.linspace(0.0, 1.0, 11)
    np.testing.assert_array_equal(scaled_weight(traj, 1.0, t), traj.a(t))
    assert scaled_weight(traj, 7.0, 0.0) == pytest.approx(7.0)


def test_log_H0_outgrows_the_next_square(traj):
    # Integrand exp((2 - 1/2) x^2) at R = 1: each step adds about 1.5 (L'^2 - L^2).
    L = (5.0, 10.0, 20.0, 40.0)
    logs = [r.log_H0 for r in divergence_demonstration(1.0, L, traj).rows]
    for nxt, a, b in zip(L[1:], logs, logs[1:]):
        assert b - a > nxt**2

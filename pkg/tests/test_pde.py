import numpy as np
import pytest

from valsynth.expr import Position, parse_candidate
from valsynth.games import GameDynamics, synth_isaacs_1d
from valsynth.hamiltonian import closed_form_hamiltonian
from valsynth.pde import (GridSpec, SolveError, interp_multilinear,
                          minimax_spot_check, solve_dp, solve_monotone_grid)


def hopf_lax_1d(t, pts):
    """Value of the 1-D game with H = -|s| and terminal 1 + |x|.

    H is concave and 1-Lipschitz, so the value is the infimum of the
    terminal payoff over the reachable interval |y - x| <= theta0 - t.
    """
    return 1.0 + np.maximum(np.abs(pts[:, 0]) - (1.0 - t), 0.0)


def test_zero_hamiltonian_keeps_terminal(phi1):
    h0 = closed_form_hamiltonian({"const": 0.0}, 2)
    field = solve_monotone_grid(h0, phi1, GridSpec(points_per_axis=41))
    assert np.max(np.abs(field.final - field.terminal)) <= 1e-11
    assert field.meta["max_principle_excess"] <= 1e-12


def test_terminal_slice_is_exact_copy(phi1, h_neg_max):
    field = solve_monotone_grid(h_neg_max, phi1, GridSpec(points_per_axis=21))
    pts = np.array(np.meshgrid(*field.axes, indexing="ij")).reshape(2, -1).T
    sigma = phi1.ast.evaluate_batch(np.ones(pts.shape[0]), pts).reshape(21, 21)
    assert np.array_equal(field.terminal, sigma)


def test_monotone_solve_accuracy_and_refinement(phi1, h_neg_max):
    f81 = solve_monotone_grid(h_neg_max, phi1, GridSpec(points_per_axis=81))
    assert f81.stats.max_error <= 0.03
    assert f81.meta["max_principle_excess"] <= 1e-12
    f161 = solve_monotone_grid(h_neg_max, phi1, GridSpec(points_per_axis=161))
    assert f161.stats.max_error / f81.stats.max_error <= 0.7


def test_cfl_guard(phi1, h_neg_max):
    with pytest.raises(SolveError, match="CFL"):
        solve_monotone_grid(h_neg_max, phi1,
                            GridSpec(points_per_axis=81, dt=0.5))


def test_global_dissipation_mode_smears_contacts(phi1, h_neg_max):
    loc = solve_monotone_grid(h_neg_max, phi1,
                              GridSpec(points_per_axis=81, dissipation="local"))
    glo = solve_monotone_grid(h_neg_max, phi1,
                              GridSpec(points_per_axis=81, dissipation="global"))
    assert glo.stats.max_error > 3 * loc.stats.max_error


def test_interp_multilinear_exact_on_linear():
    axes = [np.linspace(-1, 1, 11), np.linspace(-1, 1, 9)]
    G = np.meshgrid(*axes, indexing="ij")
    vals = 2.0 * G[0] - 3.0 * G[1] + 0.5
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (100, 2))
    out = interp_multilinear(vals, axes, pts)
    np.testing.assert_allclose(out, 2 * pts[:, 0] - 3 * pts[:, 1] + 0.5, atol=1e-12)
    # clamped beyond the box
    far = interp_multilinear(vals, axes, np.array([[5.0, 0.0]]))
    assert far[0] == pytest.approx(2.0 * 1.0 + 0.5)


def test_dp_frozen_dynamics(abs_1d):
    h0 = closed_form_hamiltonian({"const": 0.0}, 1)
    game = GameDynamics(kind="isaacs-1d", n=1, upsilon=0.0, hamiltonian=h0,
                        control_sets={}, growth_constant=0.0)
    field = solve_dp(game, abs_1d, GridSpec(points_per_axis=51, dt=0.02))
    assert np.array_equal(field.final, field.terminal)


def test_dp_matches_game_value(abs_1d, h_neg_abs_1d):
    game = synth_isaacs_1d(h_neg_abs_1d)
    field = solve_dp(game, abs_1d, GridSpec(points_per_axis=201, dt=0.01),
                     reference=hopf_lax_1d)
    assert field.stats.max_error <= 0.05


def test_dp_order_inequality(abs_1d, h_neg_abs_1d):
    game = synth_isaacs_1d(h_neg_abs_1d)
    f_max = solve_dp(game, abs_1d, GridSpec(points_per_axis=101, dt=0.02),
                     order="maxmin", compare=False)
    f_min = solve_dp(game, abs_1d, GridSpec(points_per_axis=101, dt=0.02),
                     order="minmax", compare=False)
    for a, b in zip(f_max.values, f_min.values):
        assert np.all(a <= b + 1e-9)


def test_dp_agrees_with_monotone_grid(abs_1d, h_neg_abs_1d):
    game = synth_isaacs_1d(h_neg_abs_1d)
    dp = solve_dp(game, abs_1d, GridSpec(points_per_axis=201, dt=0.01),
                  reference=hopf_lax_1d)
    lf = solve_monotone_grid(h_neg_abs_1d, abs_1d, GridSpec(points_per_axis=201),
                             reference=hopf_lax_1d)
    assert dp.stats.max_error + lf.stats.max_error <= 0.08
    for i, t in enumerate(dp.times):
        j = int(np.argmin(np.abs(lf.times - t)))
        if abs(float(lf.times[j]) - float(t)) < 5e-3:
            assert np.max(np.abs(dp.values[i] - lf.values[j])) <= 0.05


def test_dp_control_budget_guard(phi1, h_neg_max):
    from valsynth.games import synth_maxmin
    game = synth_maxmin(h_neg_max)
    with pytest.raises(SolveError, match="control discretization"):
        solve_dp(game, phi1, GridSpec(points_per_axis=81, dt=0.02),
                 control_mesh=0.05)


def test_spot_check_phi1_closed_form(phi1_pw, h_neg_max):
    positions = [Position(0.5, (0.0, 0.7)), Position(0.5, (0.7, 0.0)),
                 Position(0.5, (0.3, -0.4)), Position(0.25, (-0.5, 0.1))]
    rep = minimax_spot_check(phi1_pw, h_neg_max, positions)
    # smooth: 1 + H(grad) = 0 exactly; kink vertices are boundary-tight
    assert rep["max_smooth_residual"] <= 1e-12
    assert rep["max_upper_violation"] <= 1e-9
    assert rep["max_lower_violation"] <= 1e-9


def test_spot_check_constant_candidate():
    c = parse_candidate({"n": 1, "t0": 0.0, "theta0": 1.0, "expr": {"const": 2}})
    from valsynth.piecewise import decompose
    pw = decompose(c)
    h0 = closed_form_hamiltonian({"const": 0.0}, 1)
    rep = minimax_spot_check(pw, h0, [Position(0.5, (0.3,))])
    assert rep["max_smooth_residual"] == 0.0


def test_spot_check_flags_impossible_candidate(abs_1d, h_neg_abs_1d):
    # t + |x| against H = -|s|: the kink point (1, 0) of the subdifferential
    # gives 1 + H(0) = 1, an unfixable upper-inequality violation
    from valsynth.piecewise import decompose
    pw = decompose(abs_1d)
    rep = minimax_spot_check(pw, h_neg_abs_1d, [Position(0.5, (0.0,))])
    # interior samples approach gradient zero where 1 + H(s) -> 1
    assert rep["max_upper_violation"] >= 0.5

import numpy as np
import pytest
from scipy.optimize import LinearConstraint, minimize

from bnepoly import (ConfigError, DiscretizedObjective, SolverConfig, StrategyProfile,
                     best_response, best_response_gap, bilinear_quadratic, expected_utility,
                     gauss_seidel_solve, grid_quantize, mc_quantize, monomial_basis, rent_seeking)
from bnepoly.solver import solve_inner


def _qp_oracle(obj, d):
    """Independent SLSQP solve of the same sample-average problem."""
    g, i = obj.game, obj.i
    theta = obj.sample.atoms
    rows = monomial_basis(theta[:, i], d)
    box = g.action_domains[i]

    def neg(v):
        a = obj.actions.copy()
        a[:, i] = rows @ v
        return -float(np.dot(obj.weights, g.utility(i, a, theta)))

    v0 = np.zeros(d + 1)
    v0[0] = box.mid
    res = minimize(neg, v0, method="SLSQP", constraints=[LinearConstraint(rows, box.lo, box.hi)],
                   options={"ftol": 1e-14, "maxiter": 500})
    return -res.fun


@pytest.mark.parametrize("c,d", [(4.0, 1), (7.5, 2), (2.0, 3)])
def test_inner_solver_matches_slsqp(c, d):
    g = bilinear_quadratic()
    sample = grid_quantize(g, [9, 9])
    opp = np.zeros(d + 1)
    opp[0] = c
    cfg = SolverConfig(degree=d)
    obj = DiscretizedObjective.build(g, sample, 0, [np.zeros(d + 1), opp], cfg)
    info = solve_inner(obj, None, cfg)
    assert info.value == pytest.approx(_qp_oracle(obj, d), abs=1e-7)
    acts = obj.own_actions(info.v)
    assert acts.min() >= -1e-9 and acts.max() <= 10 + 1e-9


def test_warm_start_at_optimum_is_cheap():
    g = bilinear_quadratic()
    sample = grid_quantize(g, [9, 9])
    cfg = SolverConfig(degree=2)
    obj = DiscretizedObjective.build(g, sample, 1, [np.array([6.0, 1.0, 0.0]), np.zeros(3)], cfg)
    first = solve_inner(obj, None, cfg)
    again = solve_inner(obj, first.v, cfg)
    assert again.newton_steps <= 3
    assert again.value >= first.value - 1e-12


def test_best_response_returns_coefficients():
    g = bilinear_quadratic()
    sample = grid_quantize(g, [5, 5])
    cfg = SolverConfig(degree=1)
    obj = DiscretizedObjective.build(g, sample, 0, [np.zeros(2), np.array([5.0, 0.0])], cfg)
    v = best_response(obj, None, cfg)
    assert v.shape == (2,)
    assert expected_utility(obj, v) >= expected_utility(obj, np.array([5.0, 0.0]))


def test_gap_positive_away_from_equilibrium():
    g = bilinear_quadratic()
    sample = grid_quantize(g, [8, 8])
    gap, gaps = best_response_gap(g, StrategyProfile.midpoint(g, 1), sample, per_player=True)
    assert gap > 1.0 and len(gaps) == 2 and min(gaps) >= 0


def test_converged_implies_small_gap():
    g = rent_seeking()
    cfg = SolverConfig(degree=4, gap_tol=1e-6)
    res = gauss_seidel_solve(g, grid_quantize(g, [12, 12]), cfg)
    assert res.converged and res.br_gap <= cfg.gap_tol
    assert len(res.outer_trace) == res.iterations


def test_sweep_budget_exhaustion_reports_not_converged():
    g = rent_seeking()
    res = gauss_seidel_solve(g, grid_quantize(g, [6, 6]), SolverConfig(degree=2, outer_max_sweeps=1))
    assert not res.converged and res.iterations == 1


def test_damping_order_and_callback():
    g = bilinear_quadratic()
    calls = []
    res = gauss_seidel_solve(g, grid_quantize(g, [6, 6]), SolverConfig(degree=1, damping=0.7),
                             order=[1, 0], callback=lambda s, c, info: calls.append(s))
    assert res.converged
    assert calls[:2] == [1, 1]
    assert np.max(np.abs(res.profile.coeff_matrix())) <= 1e-6


def test_monte_carlo_sample_solve():
    g = bilinear_quadratic()
    res = gauss_seidel_solve(g, mc_quantize(g, 200, seed=5), SolverConfig(degree=2))
    assert res.converged
    assert np.max(np.abs(res.profile.coeff_matrix())) <= 1e-6


def test_solver_config_validation():
    with pytest.raises(ConfigError, match="solver.damping"):
        SolverConfig(damping=0.0)
    with pytest.raises(ConfigError, match="solver.degree"):
        SolverConfig(degree=-1)

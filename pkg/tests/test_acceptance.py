"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Run under pytest (``pytest tests/test_acceptance.py -s``) or directly
(``python tests/test_acceptance.py``); either way one PASS/FAIL line is
printed per criterion.
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from bnepoly import (Interval, SolverConfig, StrategyProfile, UniformMarginal, bernstein_fit,
                     best_response_gap, bilinear, bilinear_quadratic, dispersion,
                     eval_strategy, gauss_seidel_solve, grid_quantize, kantorovich_upper_bound,
                     rent_seeking, RentSeekingParams)
from bnepoly.diagnostics import (brute_force_discrete_equilibria, check_monotonicity,
                                 convergence_study, estimate_strong_concavity, sandwich)
from bnepoly.games import step_rule
from bnepoly.poly import bernstein_to_monomial, eval_strategy_unchecked
from bnepoly.core import PolynomialStrategy
from bnepoly.solver import DiscretizedObjective

EVAL = 1000


def report(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def sup_diff_on(grid, s1, s2) -> float:
    return float(np.max(np.abs(eval_strategy_unchecked(s1, grid) - eval_strategy_unchecked(s2, grid))))


# ---------------------------------------------------------------- criteria

def criterion_1():
    t0 = time.perf_counter()
    game = bilinear_quadratic()
    res = gauss_seidel_solve(game, grid_quantize(game, [20, 20]), SolverConfig(degree=1))
    secs = time.perf_counter() - t0
    vnorm = float(np.max(np.abs(res.profile.coeff_matrix())))
    ok = vnorm <= 1e-6 and secs < 1.0
    return ok, f"|V|_inf={vnorm:.3e} (<=1e-6), {secs:.2f}s (<1s)"


def criterion_2():
    t0 = time.perf_counter()
    game = bilinear_quadratic()
    sample = grid_quantize(game, [20, 20])
    worst_f, worst_gap = 0.0, 0.0
    for d in (1, 3, 5):
        res = gauss_seidel_solve(game, sample, SolverConfig(degree=d))
        for s, dom in zip(res.profile.strategies, game.type_domains):
            worst_f = max(worst_f, float(np.max(np.abs(eval_strategy(s, dom.grid(EVAL))))))
        worst_gap = max(worst_gap, res.br_gap)
    secs = time.perf_counter() - t0
    ok = worst_f <= 1e-5 and worst_gap <= 1e-8 and secs < 5.0
    return ok, f"sup|f|={worst_f:.3e} (<=1e-5), gap={worst_gap:.3e} (<=1e-8), {secs:.2f}s (<5s)"


def criterion_3():
    marg = [UniformMarginal(Interval(0.0, 1.0))]
    worst_k, worst_b = 0.0, 0.0
    for m in (4, 16, 64):
        sample = grid_quantize(marg, [m])
        dk = kantorovich_upper_bound(sample, marg)
        # oracle: int_cell |x - c| dx = ((c - l)^2 + (r - c)^2) / 2 summed over cells
        ax = sample.grid[0]
        exact = math.fsum(((c - l) ** 2 + (r - c) ** 2) / 2
                          for c, l, r in zip(ax.points, ax.edges[:-1], ax.edges[1:]))
        target = 1.0 / (4 * m)
        worst_k = max(worst_k, abs(dk - target) / target, abs(exact - target) / target)
        beta = dispersion(sample, [Interval(0.0, 1.0)])
        worst_b = max(worst_b, abs(beta - 1.0 / (2 * m)))
    ok = worst_k <= 1e-10 and worst_b == 0.0
    return ok, f"d_K rel err={worst_k:.2e} (<=1e-10), dispersion abs err={worst_b:.1e} (==0)"


def _random_bounded(rng):
    # random trigonometric sum, then squeezed into [lo, hi]
    lo = rng.uniform(-5, 5)
    hi = lo + rng.uniform(0.1, 10)
    k = rng.integers(1, 6)
    amp, freq, phase = rng.normal(size=k), rng.uniform(0.5, 20, k), rng.uniform(0, 2 * np.pi, k)

    def raw(t):
        t = np.asarray(t, dtype=float)
        return np.sum(amp[:, None] * np.sin(freq[:, None] * np.atleast_1d(t) + phase[:, None]), axis=0)

    span = np.sum(np.abs(amp))
    return (lambda t: lo + (hi - lo) * (raw(t) / span + 1) / 2), lo, hi


def criterion_4():
    dom = Interval(0.0, 1.0)
    t = np.linspace(0.0, 1.0, 10001)
    worst = 0.0
    for d in (2, 4, 8):
        s = bernstein_fit(lambda x: np.asarray(x) ** 2, d, dom, Interval(0.0, 1.0))
        vals = eval_strategy(s, t)
        closed = t ** 2 + t * (1 - t) / d
        err = float(np.max(np.abs(vals - t ** 2)))
        worst = max(worst, abs(err - 1.0 / (4 * d)), float(np.max(np.abs(vals - closed))))
    rng = np.random.default_rng(4)
    inside = True
    for _ in range(20):
        f, lo, hi = _random_bounded(rng)
        a, b = sorted(rng.uniform(-3, 3, 2))
        dom_f = Interval(a, b + 0.5)
        d = int(rng.integers(1, 31))
        s = bernstein_fit(f, d, dom_f, Interval(lo, hi))
        v = eval_strategy(s, dom_f.grid(10 ** 4))
        inside &= bool(np.all(v >= lo) and np.all(v <= hi))
    ok = worst <= 1e-9 and inside
    return ok, f"sup-error deviation={worst:.2e} (<=1e-9), bounds preserved on 20 functions={inside}"


def _symmetric_contest():
    return rent_seeking(RentSeekingParams(type_domains=((0.01, 1.01), (0.01, 1.01)),
                                          effort_cap=(100.0, 100.0)))


def criterion_5():
    t0 = time.perf_counter()
    game = _symmetric_contest()
    res = gauss_seidel_solve(game, grid_quantize(game, [30, 30]), SolverConfig(degree=8, gap_tol=1e-5))
    secs = time.perf_counter() - t0
    diff = sup_diff_on(game.type_domains[0].grid(EVAL), *res.profile.strategies)
    ok = res.converged and diff <= 1e-3 and res.br_gap <= 1e-5 and secs < 60
    return ok, (f"converged={res.converged}, |f1-f2|={diff:.2e} (<=1e-3), "
                f"gap={res.br_gap:.2e} (<=1e-5), {secs:.1f}s (<60s)")


def criterion_6():
    t0 = time.perf_counter()
    game = _symmetric_contest()
    cfg = SolverConfig(gap_tol=1e-5)
    deg = convergence_study(game, "degree", [5, 6, 7, 8, 9], [70, 70], cfg)
    smp = convergence_study(game, "sample-size", [10, 20, 30, 40], 9, cfg)
    secs = time.perf_counter() - t0
    dd, sd = deg.successive_sup_diffs, smp.successive_sup_diffs
    ok_deg = dd[-1] <= dd[0]
    ok_smp = all(b <= a for a, b in zip(sd, sd[1:]))
    ok = ok_deg and ok_smp and secs < 600 and deg.sample_sizes[0] == 4900 \
        and smp.sample_sizes == [100, 400, 900, 1600]
    return ok, (f"degree diffs={[round(x, 4) for x in dd]} (8->9 <= 5->6), "
                f"sample diffs={[round(x, 4) for x in sd]} (non-increasing), {secs:.1f}s (<600s)")


def criterion_7():
    t0 = time.perf_counter()
    game = rent_seeking(RentSeekingParams(type_domains=((0.01, 1.01), (0.01, 2.01)),
                                          effort_cap=(100.0, 100.0)))
    k = 30
    res = gauss_seidel_solve(game, grid_quantize(game, [k, 2 * k]), SolverConfig(degree=8, gap_tol=1e-4))
    secs = time.perf_counter() - t0
    diff = sup_diff_on(Interval(0.01, 1.01).grid(EVAL), *res.profile.strategies)
    ok = res.converged and res.br_gap <= 1e-4 and diff > 0.01 and secs < 120
    return ok, (f"converged={res.converged}, gap={res.br_gap:.2e} (<=1e-4), "
                f"players differ by {diff:.3f} (>0.01), {secs:.1f}s (<120s)")


def criterion_8():
    t0 = time.perf_counter()
    game = _symmetric_contest()
    sample = grid_quantize(game, [21, 21])
    tables = brute_force_discrete_equilibria(game, 21, 201, sample=sample)
    res = gauss_seidel_solve(game, sample, SolverConfig(degree=8, gap_tol=1e-5))
    secs = time.perf_counter() - t0
    worst = 0.0
    for tab in tables:
        for k, s in enumerate(res.profile.strategies):
            worst = max(worst, float(np.max(np.abs(eval_strategy(s, tab.type_points[k]) - tab.actions[k]))))
    ok = len(tables) >= 1 and worst <= 1.0 and secs < 120
    return ok, f"{len(tables)} table equilibria, max diff={worst:.3f} (<=1.0), {secs:.1f}s (<120s)"


def criterion_9():
    t0 = time.perf_counter()
    game = bilinear()
    tables = brute_force_discrete_equilibria(game, 21, 11)
    secs = time.perf_counter() - t0

    def matches(tab, rule):
        return all(np.array_equal(tab.actions[k], rule(tab.type_points[k])) for k in range(2))

    zero = any(matches(t, lambda th: np.zeros_like(th)) for t in tables)
    step = any(matches(t, step_rule) for t in tables)
    ok = zero and step and secs < 30
    return ok, f"zero fixed point={zero}, step fixed point={step}, {secs:.1f}s (<30s)"


def criterion_10():
    t0 = time.perf_counter()
    game = bilinear_quadratic()
    sample = grid_quantize(game, [20, 20])
    mono = check_monotonicity(game, 100, sample, seed=10)
    sigma = min(estimate_strong_concavity(game, i, seed=10) for i in range(game.n))
    contest = _symmetric_contest()
    csample = grid_quantize(contest, [15, 15])
    cfg = SolverConfig(degree=4)
    rng = np.random.default_rng(10)
    sandwich_ok = True
    for _ in range(10):
        dom, box = contest.type_domains[1], contest.action_domains[1]
        opp = bernstein_to_monomial(rng.uniform(box.lo, box.hi, size=5), dom)
        obj = DiscretizedObjective.build(contest, csample, 0, [np.zeros(5), opp], cfg)
        sw = sandwich(obj, cfg)
        sandwich_ok &= sw["lower"] <= sw["value"] + 1e-8 and sw["value"] <= sw["upper"] + 1e-8
    secs = time.perf_counter() - t0
    ok = mono.verdict == "consistent" and mono.pairs_tested == 100 and 1.99 <= sigma <= 2.01 \
        and sandwich_ok and secs < 60
    return ok, (f"monotonicity={mono.verdict} over {mono.pairs_tested} pairs, sigma={sigma:.6f} "
                f"in [1.99,2.01], sandwich holds={sandwich_ok}, {secs:.1f}s (<60s)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("num", range(1, 11))
def test_criterion(num):
    ok, detail = CRITERIA[num - 1]()
    report(num, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for num, crit in enumerate(CRITERIA, start=1):
        ok, detail = crit()
        report(num, ok, detail)
        failures += not ok
    sys.exit(1 if failures else 0)

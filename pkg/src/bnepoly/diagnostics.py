"""Checks that back the solver with theory and with independent oracles.

* ``check_monotonicity``: sampled diagonal strict monotonicity of the
  own-action gradient map (uniqueness evidence).
* ``estimate_strong_concavity``: second-difference estimate of the own-action
  curvature (growth condition with exponent 2).
* ``brute_force_discrete_equilibria``: exhaustive best-response iteration on
  type/action tables, sharing the solver's quantized weights.
* ``interim_best_response`` / ``sandwich``: per-type 1-D maximisation used to
  bound the polynomial best response from both sides.
* ``convergence_study``: re-solve along the degree or sample-size axis.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import ConfigError, GameSpec, PolynomialStrategy, QuantizedMeasure, StrategyProfile
from .poly import bernstein_fit, bernstein_to_monomial, eval_strategy_unchecked
from .quantize import dispersion, grid_quantize, kantorovich_upper_bound
from .solver import (DiscretizedObjective, SolverConfig, _pad_profile, expected_utility,
                     gauss_seidel_solve, solve_inner)

log = logging.getLogger(__name__)

EVAL_POINTS = 1000


class UnsupportedGame(ValueError):
    pass


class BudgetExceeded(ValueError):
    pass


# --------------------------------------------------------------------------
# monotonicity
# --------------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    pairs_tested: int
    min_integral: float
    max_integral: float
    verdict: str
    witness: Optional[tuple] = None
    note: str = ("sampled evidence only: the condition quantifies over all pairs of "
                 "behavioural functions, so 'consistent' is not a proof")

    def to_dict(self) -> dict:
        return {"pairs_tested": self.pairs_tested, "min_integral": self.min_integral,
                "max_integral": self.max_integral, "verdict": self.verdict, "note": self.note}


def monotonicity_integral(game: GameSpec, rules_a: Sequence[Callable], rules_b: Sequence[Callable],
                          sample: QuantizedMeasure) -> float:
    """Sum over atoms of p_j * [H(f'(theta)) - H(f''(theta))] . (f'(theta) - f''(theta))."""
    theta = sample.atoms
    fa = np.stack([np.asarray(r(theta[:, k]), dtype=float) * np.ones(len(theta))
                   for k, r in enumerate(rules_a)], axis=1)
    fb = np.stack([np.asarray(r(theta[:, k]), dtype=float) * np.ones(len(theta))
                   for k, r in enumerate(rules_b)], axis=1)
    total = np.zeros(len(theta))
    for i in range(game.n):
        total += (game.own_grad(i, fa, theta) - game.own_grad(i, fb, theta)) * (fa[:, i] - fb[:, i])
    return math.fsum(sample.weights * total)


def _random_rule(rng, dom, box, degree):
    # Bernstein ordinates inside the box give a rule inside the box
    ctl = rng.uniform(box.lo, box.hi, size=degree + 1)
    s = PolynomialStrategy(bernstein_to_monomial(ctl, dom), dom, box)
    return lambda t: eval_strategy_unchecked(s, t)


def check_monotonicity(game: GameSpec, trials: int, sample: QuantizedMeasure, seed: int = 0, *,
                       degree: int = 3, extra_pairs: Sequence = ()) -> MonotonicityReport:
    """Evaluate the monotonicity integral on random pairs of feasible polynomial profiles.

    Random rules are Bernstein polynomials with ordinates drawn uniformly in
    the action interval, hence feasible.  ``extra_pairs`` adds hand-picked
    pairs of profiles (sequences of per-player callables).
    """
    if game.own_grad is None:
        raise UnsupportedGame(f"game {game.name!r} provides no own-action gradient")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(trials):
        pa = [_random_rule(rng, t, a, degree) for t, a in zip(game.type_domains, game.action_domains)]
        pb = [_random_rule(rng, t, a, degree) for t, a in zip(game.type_domains, game.action_domains)]
        pairs.append((pa, pb))
    pairs.extend(extra_pairs)
    vals = [monotonicity_integral(game, pa, pb, sample) for pa, pb in pairs]
    worst = int(np.argmax(vals))
    verdict = "consistent" if vals[worst] < 0 else "violated"
    return MonotonicityReport(
        pairs_tested=len(pairs), min_integral=float(np.min(vals)), max_integral=float(vals[worst]),
        verdict=verdict, witness=pairs[worst] if verdict == "violated" else None)


# --------------------------------------------------------------------------
# strong concavity
# --------------------------------------------------------------------------

def estimate_strong_concavity(game: GameSpec, i: int, probes: int = 1000, seed: int = 0) -> float:
    """-max of the own-action second difference quotient over random interior points."""
    rng = np.random.default_rng(seed)
    box = game.action_domains[i]
    h = 1e-4 * box.width
    a = np.stack([rng.uniform(d.lo, d.hi, probes) for d in game.action_domains], axis=1)
    a[:, i] = rng.uniform(box.lo + h, box.hi - h, probes)
    theta = np.stack([rng.uniform(d.lo, d.hi, probes) for d in game.type_domains], axis=1)
    ap, am = a.copy(), a.copy()
    ap[:, i] += h
    am[:, i] -= h
    q = (game.utility(i, ap, theta) - 2.0 * game.utility(i, a, theta)
         + game.utility(i, am, theta)) / (h * h)
    return float(-np.max(q))


# --------------------------------------------------------------------------
# brute-force table equilibria
# --------------------------------------------------------------------------

@dataclass
class TableProfile:
    """One discrete equilibrium: for each player, the action chosen at each grid type."""

    type_points: tuple
    actions: tuple
    seeds: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"type_points": [p.tolist() for p in self.type_points],
                "actions": [a.tolist() for a in self.actions],
                "seeds": list(self.seeds)}


class _TableGame:
    def __init__(self, game, sample, levels):
        self.game, self.sample, self.levels = game, sample, levels
        self.own = []
        for i in range(game.n):
            pts, inv = np.unique(sample.atoms[:, i], return_inverse=True)
            self.own.append((pts, inv.reshape(-1)))

    def payoff_table(self, i, tables):
        """Expected payoff of every (own type, own action level) against the other tables."""
        g, theta, p = self.game, self.sample.atoms, self.sample.weights
        a = np.empty_like(theta)
        for k in range(g.n):
            if k != i:
                a[:, k] = self.levels[k][tables[k][self.own[k][1]]]
        pts, inv = self.own[i]
        out = np.empty((len(pts), len(self.levels[i])))
        for l, lev in enumerate(self.levels[i]):
            a[:, i] = lev
            out[:, l] = np.bincount(inv, p * g.utility(i, a, theta), minlength=len(pts))
        return out

    def best_reply(self, i, tables):
        pay = self.payoff_table(i, tables)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(pay))))
        best = pay.max(axis=1, keepdims=True)
        # smallest action among (numerical) ties
        return np.argmax(pay >= best - tol, axis=1)

    def iterate(self, tables, max_sweeps):
        tables = [t.copy() for t in tables]
        for _ in range(max_sweeps):
            changed = False
            for i in range(self.game.n):
                new = self.best_reply(i, tables)
                if not np.array_equal(new, tables[i]):
                    changed = True
                    tables[i] = new
            if not changed:
                return tables
        return None


def _levels(game, action_grid):
    counts = np.broadcast_to(np.atleast_1d(action_grid), (game.n,))
    return [np.linspace(d.lo, d.hi, int(k)) for d, k in zip(game.action_domains, counts)]


def brute_force_discrete_equilibria(game: GameSpec, type_grid, action_grid, *,
                                    sample: Optional[QuantizedMeasure] = None,
                                    max_sweeps: int = 500, threads: int = 1,
                                    budget: int = 10 ** 7) -> list:
    """All table fixed points reached by pointwise best-response iteration.

    Players choose one of ``action_grid`` evenly spaced levels at each of the
    ``type_grid`` Voronoi type points (the same midpoint grid the solver uses,
    unless ``sample`` is given).  Iteration starts from every corner of the
    action box and from the all-midpoint table.
    """
    if sample is None:
        counts = np.broadcast_to(np.atleast_1d(type_grid), (game.n,))
        sample = grid_quantize(game, [int(k) for k in counts])
    levels = _levels(game, action_grid)
    cost = sample.size * sum(len(l) for l in levels)
    if cost > budget:
        raise BudgetExceeded(
            f"brute force needs {cost} utility evaluations per sweep "
            f"({sample.size} type atoms x action levels {[len(l) for l in levels]}), budget {budget}")
    tg = _TableGame(game, sample, levels)
    sizes = [len(tg.own[i][0]) for i in range(game.n)]
    seeds = []
    for corner in itertools.product(*[(0, len(l) - 1) for l in levels]):
        seeds.append(("corner" + "".join("H" if c else "L" for c in corner),
                      [np.full(sizes[i], c) for i, c in enumerate(corner)]))
    seeds.append(("mid", [np.full(sizes[i], (len(l) - 1) // 2) for i, l in enumerate(levels)]))

    def run(seed):
        return tg.iterate(seed[1], max_sweeps)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, seeds))
    else:
        results = [run(s) for s in seeds]
    found: list[TableProfile] = []
    keys = []
    for (label, _), tables in zip(seeds, results):
        if tables is None:
            log.info("seed %s did not reach a fixed point", label)
            continue
        key = tuple(tuple(t.tolist()) for t in tables)
        if key in keys:
            found[keys.index(key)].seeds.append(label)
            continue
        keys.append(key)
        found.append(TableProfile(
            type_points=tuple(tg.own[i][0] for i in range(game.n)),
            actions=tuple(levels[i][tables[i]] for i in range(game.n)),
            seeds=[label]))
    return found


def table_regret(game: GameSpec, table: TableProfile, action_grid, sample=None) -> float:
    """Largest gain from changing one table entry to any action level (0 at a fixed point)."""
    if sample is None:
        sample = grid_quantize(game, [len(p) for p in table.type_points])
    levels = _levels(game, action_grid)
    tg = _TableGame(game, sample, levels)
    idx = [np.searchsorted(levels[i], table.actions[i]) for i in range(game.n)]
    worst = 0.0
    for i in range(game.n):
        pay = tg.payoff_table(i, idx)
        here = pay[np.arange(pay.shape[0]), idx[i]]
        worst = max(worst, float(np.max(pay.max(axis=1) - here)))
    return worst


# --------------------------------------------------------------------------
# interim best responses and the sandwich
# --------------------------------------------------------------------------

def _maximize_1d(fun, dfun, lo, hi, tol=1e-13):
    """Maximum of a (quasi-)concave 1-D function: golden section, then a derivative root."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol * max(1.0, hi - lo):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    cands = [lo, hi, 0.5 * (a + b)]
    if dfun is not None:
        glo, ghi = dfun(lo), dfun(hi)
        if glo > 0 > ghi:
            try:
                cands.append(brentq(dfun, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
            except ValueError:
                pass
    vals = [fun(x) for x in cands]
    k = int(np.argmax(vals))
    return cands[k], vals[k]


def _opponent_marginal(obj: DiscretizedObjective):
    return obj.actions, obj.sample.atoms, obj.weights


def interim_best_response(obj: DiscretizedObjective, theta_i: float):
    """Best action and value for own type ``theta_i`` against the opponents' marginal sample."""
    g, i = obj.game, obj.i
    acts, theta, p = _opponent_marginal(obj)
    th = theta.copy()
    th[:, i] = theta_i
    a = acts.copy()

    def fun(x):
        a[:, i] = x
        return float(np.dot(p, g.utility(i, a, th)))

    def dfun(x):
        a[:, i] = x
        return float(np.dot(p, g.grad(i, a, th)))

    box = g.action_domains[i]
    return _maximize_1d(fun, dfun, box.lo, box.hi)


def sandwich(obj: DiscretizedObjective, cfg: SolverConfig) -> dict:
    """Lower and upper bounds around the polynomial best-response value.

    upper: per own sample type, the best constant action against that type's
    conditional opponents.  lower: the Bernstein fit of the interim best-reply
    curve (feasible everywhere by construction).
    """
    g, i = obj.game, obj.i
    theta, p = obj.sample.atoms, obj.weights
    upper_terms = []
    for k, t in enumerate(obj.own_types):
        rows = obj.inverse == k
        a = obj.actions[rows].copy()
        pk = p[rows]
        th = theta[rows]

        def fun(x, a=a, pk=pk, th=th):
            a[:, i] = x
            return float(np.dot(pk, g.utility(i, a, th)))

        def dfun(x, a=a, pk=pk, th=th):
            a[:, i] = x
            return float(np.dot(pk, g.grad(i, a, th)))

        box = g.action_domains[i]
        upper_terms.append(_maximize_1d(fun, dfun, box.lo, box.hi)[1])
    upper = math.fsum(upper_terms)
    curve = bernstein_fit(lambda t: interim_best_response(obj, t)[0], cfg.degree,
                          g.type_domains[i], g.action_domains[i])
    lower = expected_utility(obj, curve.coeffs) if curve.control is None else math.fsum(
        p * obj.values_at(eval_strategy_unchecked(curve, theta[:, i])))
    value = solve_inner(obj, None, cfg).value
    return {"lower": lower, "value": value, "upper": upper}


# --------------------------------------------------------------------------
# convergence studies
# --------------------------------------------------------------------------

@dataclass
class ConvergenceStudy:
    axis: str
    levels: list
    theta_grids: list
    curves: np.ndarray
    successive_sup_diffs: list
    converged: list
    br_gaps: list
    iterations: list
    sample_sizes: list
    kantorovich: list
    dispersions: list
    profiles: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"axis": self.axis, "levels": self.levels,
                "successive_sup_diffs": self.successive_sup_diffs,
                "converged": self.converged, "br_gaps": self.br_gaps,
                "iterations": self.iterations, "sample_sizes": self.sample_sizes,
                "kantorovich_bounds": self.kantorovich, "dispersions": self.dispersions,
                "coefficients": [p.coeff_matrix().T.tolist() for p in self.profiles]}


def _counts_for(game, level, multipliers):
    if np.ndim(level) == 0:
        return [int(level) * int(m) for m in multipliers]
    return [int(k) for k in level]


def convergence_study(game: GameSpec, axis: str, levels: Sequence, fixed, cfg: SolverConfig, *,
                      multipliers: Optional[Sequence[int]] = None,
                      sample: Optional[QuantizedMeasure] = None) -> ConvergenceStudy:
    """Solve at each level, warm-starting from the previous one, and tabulate the rules.

    axis="degree": ``levels`` are degrees and ``fixed`` the per-player grid counts
    (or pass ``sample``).  axis="sample-size": ``levels`` are base grid counts K
    (player i gets K * multipliers[i] points) or explicit count tuples, and
    ``fixed`` is the degree.
    """
    if axis not in ("degree", "sample-size"):
        raise ConfigError(f"study.axis must be 'degree' or 'sample-size', got {axis!r}")
    levels = list(levels)
    if not levels:
        raise ConfigError("study.levels must not be empty")
    multipliers = list(multipliers) if multipliers is not None else [1] * game.n
    grids = [d.grid(EVAL_POINTS) for d in game.type_domains]
    curves, prof_list = [], []
    conv, gaps, iters, sizes, dks, disps = [], [], [], [], [], []
    prev: Optional[StrategyProfile] = None
    for level in levels:
        if axis == "degree":
            d = int(level)
            if sample is None:
                sample = grid_quantize(game, _counts_for(game, fixed, multipliers))
            smp = sample
        else:
            d = int(fixed)
            smp = grid_quantize(game, _counts_for(game, level, multipliers))
        c = replace(cfg, degree=d)
        init = None if prev is None else _pad_profile(game, prev, d)
        res = gauss_seidel_solve(game, smp, c, init)
        prev = res.profile
        prof_list.append(res.profile)
        curves.append(np.stack([eval_strategy_unchecked(s, grids[k])
                                for k, s in enumerate(res.profile.strategies)]))
        conv.append(bool(res.converged))
        gaps.append(float(res.br_gap))
        iters.append(int(res.iterations))
        sizes.append(int(smp.size))
        dks.append(float(kantorovich_upper_bound(smp, game)))
        disps.append(float(dispersion(smp, game.type_domains)))
        log.info("%s level %s: converged=%s gap=%.3e sweeps=%d", axis, level, res.converged,
                 res.br_gap, res.iterations)
    curves = np.stack(curves)
    diffs = [float(np.max(np.abs(curves[k] - curves[k - 1]))) for k in range(1, len(curves))]
    return ConvergenceStudy(axis, levels, grids, curves, diffs, conv, gaps, iters, sizes, dks,
                            disps, prof_list)

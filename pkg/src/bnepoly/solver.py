"""Polynomial decision-rule equilibria on a quantized type sample.

Each player's sample-average utility is maximised over the coefficient
polytope {v : a_i <= v . xi_d(theta_i) <= b_i at every sampled own type,
|v|_inf <= coeff_box} by a log-barrier Newton method; players are updated
cyclically (Gauss-Seidel) until the coefficients stop moving.

Internally the barrier works in a Legendre basis scaled to the player's type
interval, which is a fixed linear change of variables; coefficients going in
and out are monomial.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import Legendre, Polynomial
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import nnls

from .core import (ConfigError, EquilibriumResult, GameSpec, PolynomialStrategy,
                   QuantizedMeasure, StrategyProfile)
from .poly import monomial_basis

log = logging.getLogger(__name__)


class NumericalError(FloatingPointError):
    """Non-finite objective or derivative met inside the inner solver."""


@dataclass(frozen=True)
class SolverConfig:
    degree: int = 1
    outer_tol: float = 1e-8
    outer_max_sweeps: int = 500
    inner_tol: float = 1e-10
    inner_max_newton: int = 200
    coeff_box: float = 1e6
    damping: float = 1.0
    gap_tol: float = 1e-8

    def __post_init__(self):
        if int(self.degree) < 0:
            raise ConfigError(f"solver.degree must be >= 0, got {self.degree}")
        for name in ("outer_tol", "inner_tol", "coeff_box", "gap_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"solver.{name} must be > 0, got {getattr(self, name)}")
        if not 0 < self.damping <= 1:
            raise ConfigError(f"solver.damping must lie in (0, 1], got {self.damping}")
        if int(self.outer_max_sweeps) < 1 or int(self.inner_max_newton) < 1:
            raise ConfigError("solver iteration budgets must be >= 1")
        object.__setattr__(self, "degree", int(self.degree))


def _legendre_to_monomial(dom, d: int) -> np.ndarray:
    """Column k: monomial coefficients of the k-th Legendre polynomial scaled to ``dom``."""
    t = np.zeros((d + 1, d + 1))
    for k in range(d + 1):
        c = Legendre.basis(k, domain=[dom.lo, dom.hi]).convert(kind=Polynomial).coef
        t[:c.size, k] = c
    return t


@dataclass
class DiscretizedObjective:
    """Player i's sample-average utility with the opponents' rules held fixed."""

    game: GameSpec
    sample: QuantizedMeasure
    i: int
    opponent_coeffs: tuple
    degree: int
    coeff_box: float = 1e6
    own_types: np.ndarray = field(init=False)
    inverse: np.ndarray = field(init=False)
    rows: np.ndarray = field(init=False)
    actions: np.ndarray = field(init=False)

    def __post_init__(self):
        g, i, d = self.game, self.i, self.degree
        theta = self.sample.atoms
        self.own_types, self.inverse = np.unique(theta[:, i], return_inverse=True)
        self.inverse = self.inverse.reshape(-1)
        dom = g.type_domains[i]
        self.rows = monomial_basis(self.own_types, d)
        acts = np.zeros_like(theta)
        for k in range(g.n):
            if k == i:
                continue
            c = np.asarray(self.opponent_coeffs[k], dtype=float)
            acts[:, k] = monomial_basis(theta[:, k], c.size - 1) @ c
        self.actions = acts
        # Legendre-preconditioned constraint rows
        self.to_mono = _legendre_to_monomial(dom, d)
        s = (2.0 * self.own_types - dom.lo - dom.hi) / dom.width
        self.leg_rows = np.polynomial.legendre.legvander(s, d)
        abox = g.action_domains[i]
        self.bounds = abox
        self.G = np.vstack([-self.leg_rows, self.leg_rows, self.to_mono, -self.to_mono])
        self.h = np.concatenate([
            np.full(len(self.own_types), -abox.lo), np.full(len(self.own_types), abox.hi),
            np.full(d + 1, self.coeff_box), np.full(d + 1, self.coeff_box)])
        self.n_action_rows = 2 * len(self.own_types)

    @classmethod
    def build(cls, game: GameSpec, sample: QuantizedMeasure, i: int, coeffs, cfg: SolverConfig):
        return cls(game, sample, i, tuple(np.asarray(c, dtype=float) for c in coeffs),
                   cfg.degree, cfg.coeff_box)

    @property
    def weights(self) -> np.ndarray:
        return self.sample.weights

    def own_actions(self, v) -> np.ndarray:
        """Own action at every sample atom for monomial coefficients ``v``."""
        return (self.rows @ np.asarray(v, dtype=float))[self.inverse]

    def _profile(self, x_atoms: np.ndarray) -> np.ndarray:
        a = self.actions.copy()
        a[:, self.i] = x_atoms
        return a

    def values_at(self, x_atoms) -> np.ndarray:
        return self.game.utility(self.i, self._profile(x_atoms), self.sample.atoms)

    # the following work on Legendre coordinates w
    def _x_w(self, w):
        return (self.leg_rows @ w)[self.inverse]

    def f_w(self, w) -> float:
        return float(np.dot(self.weights, self.values_at(self._x_w(w))))

    def derivs_w(self, w):
        x = self._x_w(w)
        a = self._profile(x)
        theta = self.sample.atoms
        u = self.game.utility(self.i, a, theta)
        g1 = self.game.grad(self.i, a, theta)
        g2 = self.game.hess(self.i, a, theta)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
            bad = int(np.flatnonzero(~(np.isfinite(u) & np.isfinite(g1) & np.isfinite(g2)))[0])
            raise NumericalError(
                f"player {self.i}: non-finite utility/derivative at action profile {a[bad]}, "
                f"type profile {theta[bad]}")
        p = self.weights
        k = len(self.own_types)
        c1 = np.bincount(self.inverse, p * g1, minlength=k)
        c2 = np.bincount(self.inverse, p * g2, minlength=k)
        grad = self.leg_rows.T @ c1
        hess = (self.leg_rows * c2[:, None]).T @ self.leg_rows
        return float(np.dot(p, u)), grad, hess

    def to_w(self, v) -> np.ndarray:
        return np.linalg.solve(self.to_mono, np.asarray(v, dtype=float))

    def to_v(self, w) -> np.ndarray:
        return self.to_mono @ w

    def center_w(self) -> np.ndarray:
        v = np.zeros(self.degree + 1)
        v[0] = self.bounds.mid
        return self.to_w(v)

    def action_scale(self) -> float:
        return max(1.0, self.bounds.width)


def expected_utility(obj: DiscretizedObjective, v) -> float:
    """Weighted sum over atoms of u_i with own rule ``v``; exactly rounded (fsum)."""
    x = obj.own_actions(v)
    vals = obj.values_at(x)
    return math.fsum(obj.weights * vals)


@dataclass
class InnerInfo:
    v: np.ndarray
    value: float
    newton_steps: int
    converged: bool
    polished: bool = False
    shortcut: bool = False
    message: str = ""


def _slack(obj, w):
    return obj.h - obj.G @ w


def _kkt_residual(obj, w, grad_f, tol_active):
    """Stationarity residual of the linear-constraint KKT system at ``w``."""
    s = _slack(obj, w)
    active = s <= tol_active
    if not np.any(active):
        return float(np.linalg.norm(grad_f))
    ga = obj.G[active]
    # grad F = G_A^T lam with lam >= 0
    _, res = nnls(ga.T, grad_f)
    return float(res)


def _strictly_feasible_start(obj, w0):
    wc = obj.center_w()
    if w0 is None:
        return wc
    scale = obj.action_scale()
    if np.min(_slack(obj, w0)) > 1e-9 * scale:
        return w0
    # pull towards the centre just enough to become strictly interior
    for tau in (1e-9, 1e-7, 1e-5, 1e-3, 1e-2, 0.1, 0.5):
        w = (1 - tau) * w0 + tau * wc
        if np.min(_slack(obj, w)) > 0:
            return w
    return wc


def _barrier_value(obj, w, mu):
    s = _slack(obj, w)
    if np.any(s <= 0):
        return math.inf
    return -obj.f_w(w) - mu * float(np.sum(np.log(s)))


def _newton_direction(h_mat, g_vec):
    lam = 0.0
    diag_scale = max(1e-300, float(np.max(np.abs(np.diag(h_mat)))))
    for _ in range(60):
        try:
            c = cho_factor(h_mat + lam * np.eye(len(g_vec)), lower=False, check_finite=True)
            return -cho_solve(c, g_vec)
        except (LinAlgError, ValueError):
            lam = max(2 * lam, 1e-12 * diag_scale)
    raise NumericalError("Newton system could not be regularised")


def _polish(obj, w, f_w):
    """Snap near-active constraints to equality and re-optimise on that face.

    Accepted only when the candidate is feasible and does not lower the
    objective; this removes the sqrt(mu) offset barrier iterates keep from
    degenerate active constraints.
    """
    scale = obj.action_scale()
    best_w, best_f, improved = w, f_w, False
    s0 = _slack(obj, w)
    tried = set()
    for thr in (1e-4, 1e-6, 1e-8):
        active = s0 <= thr * scale
        key = tuple(np.flatnonzero(active))
        if not key or key in tried:
            continue
        tried.add(key)
        ga, ha = obj.G[active], obj.h[active]
        u_, sv, vt = np.linalg.svd(ga, full_matrices=True)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        wp = w + np.linalg.lstsq(ga, ha - ga @ w, rcond=None)[0]
        if np.max(np.abs(ga @ wp - ha)) > 1e-9 * scale:
            continue
        z = vt[rank:].T
        cand = wp
        if z.shape[1]:
            y = np.zeros(z.shape[1])
            for _ in range(30):
                wc = wp + z @ y
                fval, g, hmat = obj.derivs_w(wc)
                gz = z.T @ g
                hz = -(z.T @ hmat @ z)
                if np.linalg.norm(gz) <= 1e-13 * max(1.0, abs(fval)):
                    break
                dy = -_newton_direction(hz, -gz)
                step = 1.0
                for _ in range(40):
                    trial = wp + z @ (y + step * dy)
                    if np.min(_slack(obj, trial)) >= -1e-13 * scale and obj.f_w(trial) >= fval:
                        break
                    step *= 0.5
                else:
                    break
                y = y + step * dy
                if step * np.max(np.abs(dy)) <= 1e-15 * scale:
                    break
            cand = wp + z @ y
        if np.min(_slack(obj, cand)) < -1e-12 * scale:
            continue
        fc = obj.f_w(cand)
        if fc >= best_f:
            best_w, best_f, improved = cand, fc, True
    return best_w, best_f, improved


def _monomial_feasible(obj, v) -> np.ndarray:
    """Pull ``v`` towards the constant mid-rule until its monomial values sit inside the box."""
    x = obj.rows @ v
    lo, hi = obj.bounds.lo, obj.bounds.hi
    if np.all((x >= lo) & (x <= hi)):
        return v
    vc = np.zeros_like(v)
    vc[0] = obj.bounds.mid
    tau = 1e-15
    while tau < 1:
        cand = (1 - tau) * v + tau * vc
        x = obj.rows @ cand
        if np.all((x >= lo) & (x <= hi)):
            return cand
        tau *= 4
    return vc


def solve_inner(obj: DiscretizedObjective, warm_start=None,
                cfg: SolverConfig = SolverConfig()) -> InnerInfo:
    """Barrier Newton maximisation of the sample-average utility over the polytope."""
    scale = obj.action_scale()
    m = obj.G.shape[0]
    mu_final = cfg.inner_tol / m
    w0 = None if warm_start is None else obj.to_w(warm_start)

    # a warm start that already satisfies the KKT conditions is returned as is
    if w0 is not None and np.min(_slack(obj, w0)) >= -1e-12 * scale:
        f0, g0, _ = obj.derivs_w(w0)
        # relative to the gradient: with active constraints it need not vanish
        if _kkt_residual(obj, w0, g0, 1e-9 * scale) <= cfg.inner_tol * max(1.0, float(np.linalg.norm(g0))):
            v0 = np.asarray(warm_start, dtype=float)
            return InnerInfo(v0, expected_utility(obj, v0), 0, True, shortcut=True)

    w = _strictly_feasible_start(obj, w0)
    f, g, hmat = obj.derivs_w(w)
    s = _slack(obj, w)
    gb = obj.G.T @ (1.0 / s)
    # start on the decade of mu that best explains the current gradient
    mu = 1.0
    denom = float(gb @ gb)
    if w0 is not None and denom > 0:
        mu_fit = float(g @ gb) / denom
        if mu_fit > 0 and np.linalg.norm(g - mu_fit * gb) <= 0.5 * np.linalg.norm(g):
            mu = min(1.0, max(mu_fit, mu_final))
    steps = 0
    converged = True
    message = ""
    while True:
        while True:
            f, g, hmat = obj.derivs_w(w)
            s = _slack(obj, w)
            grad = -g + mu * (obj.G.T @ (1.0 / s))
            gs = obj.G / s[:, None]
            hess = -hmat + mu * (gs.T @ gs)
            dw = _newton_direction(hess, grad)
            dec = float(-grad @ dw)
            if dec / 2 <= 1e-14 * max(1.0, abs(f)):
                break
            if steps >= cfg.inner_max_newton:
                converged, message = False, "Newton budget exhausted"
                break
            gd = obj.G @ dw
            pos = gd > 0
            tmax = float(np.min(0.99 * s[pos] / gd[pos])) if np.any(pos) else 1.0
            t = min(1.0, tmax)
            phi0 = -f - mu * float(np.sum(np.log(s)))
            while t > 1e-14:
                phi = _barrier_value(obj, w + t * dw, mu)
                if phi <= phi0 - 0.25 * t * dec:
                    break
                t *= 0.5
            else:
                converged, message = False, "line search failed to decrease"
                break
            w = w + t * dw
            steps += 1
            log.debug("mu=%.1e step=%d t=%.3e dec=%.3e", mu, steps, t, dec)
        if not converged or mu <= mu_final * (1 + 1e-9):
            break
        mu = max(mu / 10.0, mu_final)

    f = obj.f_w(w)
    w, f, polished = _polish(obj, w, f)
    v = _monomial_feasible(obj, obj.to_v(w))
    val = expected_utility(obj, v)
    if warm_start is not None:
        vw = np.asarray(warm_start, dtype=float)
        x = obj.rows @ vw
        if np.all((x >= obj.bounds.lo) & (x <= obj.bounds.hi)):
            vw_val = expected_utility(obj, vw)
            if vw_val > val:
                v, val = vw, vw_val
    return InnerInfo(v, val, steps, converged, polished=polished, message=message)


def best_response(obj: DiscretizedObjective, warm_start=None,
                  cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Monomial coefficients of player ``obj.i``'s best reply on the sample."""
    return solve_inner(obj, warm_start, cfg).v


def _coeff_list(profile: StrategyProfile):
    return [np.array(s.coeffs, dtype=float) for s in profile.strategies]


def _check_sample(game: GameSpec, sample: QuantizedMeasure):
    if sample.dim != game.n:
        raise ConfigError(f"sample has {sample.dim} type coordinates, game has {game.n} players")
    if not sample.within(game.type_domains):
        raise ConfigError("sample atoms must lie inside the type domains")


def best_response_gap(game: GameSpec, profile: StrategyProfile, sample: QuantizedMeasure,
                      cfg: SolverConfig = SolverConfig(), *, per_player: bool = False):
    """Largest gain any player gets from re-optimising its rule on the sample."""
    _check_sample(game, sample)
    coeffs = _coeff_list(profile)
    gaps = []
    for i in range(game.n):
        obj = DiscretizedObjective.build(game, sample, i, coeffs, _with_degree(cfg, profile.degree))
        here = expected_utility(obj, coeffs[i])
        # cold start: the supremum is searched independently of the tested rule
        info = solve_inner(obj, None, _with_degree(cfg, profile.degree))
        gaps.append(max(info.value, here) - here)
    return (max(gaps), gaps) if per_player else max(gaps)


def _with_degree(cfg: SolverConfig, d: int) -> SolverConfig:
    if cfg.degree == d:
        return cfg
    from dataclasses import replace
    return replace(cfg, degree=d)


def own_concavity_violation(game: GameSpec, profile: StrategyProfile,
                            sample: QuantizedMeasure) -> float:
    """Largest own-action second derivative over the sample (> 0 means not concave there)."""
    a = profile.actions(sample.atoms)
    return max(float(np.max(game.hess(i, a, sample.atoms))) for i in range(game.n))


def gauss_seidel_solve(game: GameSpec, sample: QuantizedMeasure,
                       cfg: SolverConfig = SolverConfig(),
                       init: Optional[StrategyProfile] = None, *,
                       order=None, callback=None) -> EquilibriumResult:
    """Cyclic best-response iteration on the quantized game.

    ``order`` permutes the update sequence (default: players in index order).
    ``callback(sweep, coeffs, info)`` is called after every player update.
    """
    _check_sample(game, sample)
    if init is None:
        init = StrategyProfile.midpoint(game, cfg.degree)
    if init.n != game.n:
        raise ConfigError("initial profile has the wrong number of players")
    if init.degree != cfg.degree:
        init = _pad_profile(game, init, cfg.degree)
    coeffs = _coeff_list(init)
    order = list(range(game.n)) if order is None else list(order)
    lam = cfg.damping
    trace = []
    step_ok = False
    sweeps = 0
    for sweep in range(1, cfg.outer_max_sweeps + 1):
        sweeps = sweep
        biggest = 0.0
        for i in order:
            obj = DiscretizedObjective.build(game, sample, i, coeffs, cfg)
            info = solve_inner(obj, coeffs[i], cfg)
            if not info.converged:
                log.warning("sweep %d player %d: inner solver %s", sweep, i, info.message)
            new = info.v if lam == 1.0 else (1 - lam) * coeffs[i] + lam * info.v
            biggest = max(biggest, float(np.max(np.abs(new - coeffs[i]))))
            coeffs[i] = new
            if callback is not None:
                callback(sweep, [c.copy() for c in coeffs], info)
        trace.append(biggest)
        log.debug("sweep %d: max coefficient change %.3e", sweep, biggest)
        if biggest <= cfg.outer_tol:
            step_ok = True
            break
    profile = StrategyProfile.from_coeffs(game, coeffs)
    gap, gaps = best_response_gap(game, profile, sample, cfg, per_player=True)
    local = own_concavity_violation(game, profile, sample) > 1e-8
    return EquilibriumResult(
        profile=profile, iterations=sweeps, outer_trace=tuple(trace), br_gap=gap,
        converged=bool(step_ok and gap <= cfg.gap_tol), quantization=sample,
        gaps_per_player=tuple(gaps), local=local)


def _pad_profile(game, profile: StrategyProfile, d: int) -> StrategyProfile:
    out = []
    for s in profile.strategies:
        c = np.zeros(d + 1)
        k = min(d, s.degree) + 1
        c[:k] = s.coeffs[:k]
        if s.degree > d:
            c = np.zeros(d + 1)
            c[0] = s.action_bounds.mid
        out.append(c)
    return StrategyProfile.from_coeffs(game, out)

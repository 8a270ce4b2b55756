"""Domain types shared by every module: intervals, marginals, games, strategies.

Player indices are 0-based throughout the library.  Action and type profiles
are arrays whose last axis has length ``n``; utilities are evaluated in a
vectorised way over any leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np


class DomainError(ValueError):
    """An input lies outside the interval it is required to belong to."""


class ConfigError(ValueError):
    """Invalid construction parameters."""


# relative slack used by all membership tests
_MEMBER_RTOL = 1e-12


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError(f"interval bounds must be finite, got [{lo}, {hi}]")
        if not lo < hi:
            raise ConfigError(f"interval needs lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def _slack(self) -> float:
        return _MEMBER_RTOL * max(1.0, abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        s = self._slack()
        return bool(np.all((x >= self.lo - s) & (x <= self.hi + s)))

    def grid(self, num: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, num)

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]


def as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    lo, hi = x
    return Interval(lo, hi)


# --------------------------------------------------------------------------
# marginal distributions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformMarginal:
    support: Interval

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.support.lo) & (x <= self.support.hi),
                        1.0 / self.support.width, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.support.lo) / self.support.width, 0.0, 1.0)

    def ppf(self, q):
        return self.support.lo + np.asarray(q, dtype=float) * self.support.width

    def breakpoints(self) -> np.ndarray:
        """Points where the density changes its polynomial form."""
        return np.array([self.support.lo, self.support.hi])

    def to_dict(self) -> dict:
        return {"kind": "uniform"}


@dataclass(frozen=True)
class TabulatedMarginal:
    """Piecewise-linear density through ``(nodes, values)``, renormalised.

    The nodes must span the support exactly.
    """

    support: Interval
    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2:
            raise ConfigError("tabulated density needs matching 1-D nodes/values (>= 2)")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("tabulated density nodes must be strictly increasing")
        if nodes[0] != self.support.lo or nodes[-1] != self.support.hi:
            raise ConfigError("tabulated density nodes must start/end at the support bounds")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ConfigError("tabulated density values must be finite and >= 0")
        mass = float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(nodes)))
        if mass <= 0:
            raise ConfigError("tabulated density has zero mass")
        values = values / mass
        # cumulative mass at each node
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(nodes))])
        cum[-1] = 1.0
        for arr in (nodes, values, cum):
            arr.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_cum", cum)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.support.lo) & (x <= self.support.hi)
        return np.where(inside, np.interp(x, self.nodes, self.values), 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.support.lo, self.support.hi)
        k = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.nodes.size - 2)
        x0 = self.nodes[k]
        f0 = self.values[k]
        slope = (self.values[k + 1] - f0) / (self.nodes[k + 1] - x0)
        dx = x - x0
        return np.clip(self._cum[k] + f0 * dx + 0.5 * slope * dx * dx, 0.0, 1.0)

    def ppf(self, q):
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        k = np.clip(np.searchsorted(self._cum, q, side="right") - 1, 0, self.nodes.size - 2)
        x0 = self.nodes[k]
        f0 = self.values[k]
        slope = (self.values[k + 1] - f0) / (self.nodes[k + 1] - x0)
        r = q - self._cum[k]
        # solve f0*dx + slope/2*dx^2 = r for dx >= 0 (stable form)
        disc = np.sqrt(np.maximum(f0 * f0 + 2.0 * slope * r, 0.0))
        denom = f0 + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = np.where(denom > 0, 2.0 * r / denom, 0.0)
        return np.clip(x0 + dx, self.nodes[k], self.nodes[k + 1])

    def breakpoints(self) -> np.ndarray:
        return self.nodes

    def to_dict(self) -> dict:
        return {"kind": "tabulated", "nodes": self.nodes.tolist(), "values": self.values.tolist()}


Marginal = Union[UniformMarginal, TabulatedMarginal]


# --------------------------------------------------------------------------
# games
# --------------------------------------------------------------------------

UtilityFn = Callable[[int, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GameSpec:
    """A Bayesian game with interval types and actions and independent types.

    ``utility(i, a, theta)`` must accept arrays with trailing axis ``n`` and
    return player ``i``'s payoff with the leading shape.  ``own_grad`` and
    ``own_hess`` optionally give the first and second partial derivatives with
    respect to player ``i``'s own action; when absent, central finite
    differences are used.
    """

    n: int
    type_domains: tuple
    action_domains: tuple
    utility: UtilityFn
    marginals: tuple = None
    own_grad: Optional[UtilityFn] = None
    own_hess: Optional[UtilityFn] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    reference_equilibrium: Optional[tuple] = None
    flags: frozenset = frozenset()

    def __post_init__(self):
        if int(self.n) < 2:
            raise ConfigError(f"a game needs at least 2 players, got n={self.n}")
        types = tuple(as_interval(t) for t in self.type_domains)
        actions = tuple(as_interval(a) for a in self.action_domains)
        if len(types) != self.n or len(actions) != self.n:
            raise ConfigError("type_domains and action_domains need one interval per player")
        margs = self.marginals
        if margs is None:
            margs = tuple(UniformMarginal(t) for t in types)
        margs = tuple(margs)
        if len(margs) != self.n:
            raise ConfigError("marginals need one entry per player")
        for m, t in zip(margs, types):
            if m.support != t:
                raise ConfigError("each marginal's support must equal that player's type domain")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "type_domains", types)
        object.__setattr__(self, "action_domains", actions)
        object.__setattr__(self, "marginals", margs)
        object.__setattr__(self, "flags", frozenset(self.flags))

    @property
    def has_gradients(self) -> bool:
        return self.own_grad is not None

    def grad(self, i: int, a, theta) -> np.ndarray:
        """Own-action derivative of u_i, analytic when available."""
        if self.own_grad is not None:
            return np.asarray(self.own_grad(i, a, theta), dtype=float)
        a = np.array(a, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(a[..., i]))
        ap, am = a.copy(), a.copy()
        ap[..., i] += h
        am[..., i] -= h
        return (self.utility(i, ap, theta) - self.utility(i, am, theta)) / (2.0 * h)

    def hess(self, i: int, a, theta) -> np.ndarray:
        """Own-action second derivative of u_i."""
        if self.own_hess is not None:
            return np.asarray(self.own_hess(i, a, theta), dtype=float)
        a = np.array(a, dtype=float)
        if self.own_grad is not None:
            h = 1e-6 * np.maximum(1.0, np.abs(a[..., i]))
            ap, am = a.copy(), a.copy()
            ap[..., i] += h
            am[..., i] -= h
            return (self.own_grad(i, ap, theta) - self.own_grad(i, am, theta)) / (2.0 * h)
        h = 1e-4 * np.maximum(1.0, np.abs(a[..., i]))
        ap, am = a.copy(), a.copy()
        ap[..., i] += h
        am[..., i] -= h
        return (self.utility(i, ap, theta) - 2.0 * self.utility(i, a, theta)
                + self.utility(i, am, theta)) / (h * h)


def _check_profile(name: str, x, domains: Sequence[Interval]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (len(domains),):
        raise DomainError(f"{name} profile needs trailing length {len(domains)}, got shape {x.shape}")
    for k, dom in enumerate(domains):
        if not dom.contains(x[..., k]):
            raise DomainError(f"{name}[{k}] outside [{dom.lo}, {dom.hi}]")
    return x


def eval_utility(game: GameSpec, i: int, a, theta) -> float:
    """u_i(a, theta) at a single in-domain point."""
    if not 0 <= i < game.n:
        raise DomainError(f"player index {i} out of range for n={game.n}")
    a = _check_profile("action", a, game.action_domains)
    theta = _check_profile("type", theta, game.type_domains)
    val = float(game.utility(i, a, theta))
    if not math.isfinite(val):
        raise FloatingPointError(f"utility of player {i} is not finite at a={a}, theta={theta}")
    return val


def marginal_density(game: GameSpec, i: int, theta_i: float) -> float:
    dom = game.type_domains[i]
    if not dom.contains(theta_i):
        raise DomainError(f"type {theta_i} outside [{dom.lo}, {dom.hi}] of player {i}")
    return float(game.marginals[i].pdf(theta_i))


def rectangle_measure(game: GameSpec, rect: Sequence) -> float:
    """eta(R_1 x ... x R_n) for the independent product of the marginals."""
    out = 1.0
    for m, (lo, hi) in zip(game.marginals, rect):
        out *= float(m.cdf(hi) - m.cdf(lo))
    return out


# --------------------------------------------------------------------------
# strategies and results
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PolynomialStrategy:
    """The decision rule theta -> sum_j coeffs[j] * theta**j on ``domain``.

    ``control`` holds Bernstein ordinates when the rule came from a high-degree
    fit; evaluation then uses the Bernstein form instead of the monomial one.
    """

    coeffs: np.ndarray
    domain: Interval
    action_bounds: Interval
    certified: bool = False
    control: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise ConfigError("strategy coefficients must be a non-empty finite vector")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "domain", as_interval(self.domain))
        object.__setattr__(self, "action_bounds", as_interval(self.action_bounds))
        if self.control is not None:
            ctl = np.array(self.control, dtype=float)
            ctl.setflags(write=False)
            object.__setattr__(self, "control", ctl)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, theta):
        from .poly import eval_strategy
        return eval_strategy(self, theta)


@dataclass(frozen=True)
class StrategyProfile:
    strategies: tuple

    def __post_init__(self):
        strategies = tuple(self.strategies)
        if len(strategies) < 1:
            raise ConfigError("a profile needs at least one strategy")
        degrees = {s.degree for s in strategies}
        if len(degrees) != 1:
            raise ConfigError(f"all strategies must share one degree, got {sorted(degrees)}")
        object.__setattr__(self, "strategies", strategies)

    @property
    def n(self) -> int:
        return len(self.strategies)

    @property
    def degree(self) -> int:
        return self.strategies[0].degree

    def coeff_matrix(self) -> np.ndarray:
        """Coefficients stacked as a (d+1) x n array."""
        return np.stack([s.coeffs for s in self.strategies], axis=1)

    def actions(self, theta) -> np.ndarray:
        """Action profile at type profile(s) ``theta`` (trailing axis n)."""
        from .poly import eval_strategy_unchecked
        theta = np.asarray(theta, dtype=float)
        return np.stack([eval_strategy_unchecked(s, theta[..., k])
                         for k, s in enumerate(self.strategies)], axis=-1)

    def matches(self, game: GameSpec) -> bool:
        return self.n == game.n and all(
            s.domain == t for s, t in zip(self.strategies, game.type_domains))

    @classmethod
    def from_coeffs(cls, game: GameSpec, coeffs: Sequence) -> "StrategyProfile":
        return cls(tuple(PolynomialStrategy(c, t, a) for c, t, a in
                         zip(coeffs, game.type_domains, game.action_domains)))

    @classmethod
    def midpoint(cls, game: GameSpec, degree: int) -> "StrategyProfile":
        """Constant rules at the centre of each action interval."""
        coeffs = []
        for a in game.action_domains:
            c = np.zeros(degree + 1)
            c[0] = a.mid
            coeffs.append(c)
        return cls.from_coeffs(game, coeffs)


@dataclass(frozen=True)
class GridAxis:
    """One dimension of a tensor quantization grid: atoms and Voronoi cell edges."""

    points: np.ndarray
    edges: np.ndarray
    masses: np.ndarray


@dataclass(frozen=True)
class QuantizedMeasure:
    atoms: np.ndarray
    weights: np.ndarray
    provenance: str
    grid: Optional[tuple] = None

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] == 0:
            raise ConfigError("a quantized measure needs at least one atom")
        if atoms.shape[0] != weights.size:
            raise ConfigError("atoms and weights disagree in length")
        if np.any(weights < 0):
            raise ConfigError("weights must be nonnegative")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ConfigError(f"weights sum to {math.fsum(weights)!r}, not 1")
        if self.provenance not in ("grid-voronoi", "monte-carlo"):
            raise ConfigError(f"unknown provenance {self.provenance!r}")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def within(self, domains: Sequence[Interval]) -> bool:
        return all(dom.contains(self.atoms[:, k]) for k, dom in enumerate(domains))


@dataclass(frozen=True)
class EquilibriumResult:
    profile: StrategyProfile
    iterations: int
    outer_trace: tuple
    br_gap: float
    converged: bool
    quantization: QuantizedMeasure
    gaps_per_player: tuple = ()
    local: bool = False

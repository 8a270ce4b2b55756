"""Built-in games with analytic own-action derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConfigError, GameSpec, Interval, as_interval

NO_CONTINUOUS_EQUILIBRIUM = "no-continuous-equilibrium-guarantee"


@dataclass(frozen=True)
class RentSeekingParams:
    """Contest with private marginal cost of effort.

    ``effort_cap`` defaults to 1/alpha_i where alpha_i is the lower end of
    player i's type interval.
    """

    n: int = 2
    type_domains: tuple = ((0.01, 1.01), (0.01, 1.01))
    effort_cap: Optional[tuple] = None
    effort_floor: float = 0.0

    def __post_init__(self):
        if int(self.n) < 2:
            raise ConfigError(f"game.n must be >= 2, got {self.n}")
        doms = tuple(as_interval(t) for t in self.type_domains)
        if len(doms) == 1:
            doms = doms * int(self.n)
        if len(doms) != self.n:
            raise ConfigError(f"game.type_domains needs {self.n} intervals, got {len(doms)}")
        for k, dom in enumerate(doms):
            if dom.lo <= 0:
                raise ConfigError(
                    f"game.type_domains[{k}]: lowest marginal cost must be > 0, got {dom.lo}")
        if self.effort_cap is None:
            caps = tuple(1.0 / d.lo for d in doms)
        else:
            caps = tuple(float(c) for c in np.broadcast_to(self.effort_cap, (int(self.n),)))
        eps = float(self.effort_floor)
        if eps < 0 or eps >= min(caps):
            raise ConfigError(f"game.effort_floor must lie in [0, {min(caps)}), got {eps}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "type_domains", doms)
        object.__setattr__(self, "effort_cap", caps)
        object.__setattr__(self, "effort_floor", eps)


def _others(a: np.ndarray, i: int) -> np.ndarray:
    return np.sum(a, axis=-1) - a[..., i]


def rent_seeking_utility(i, a, theta):
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n = a.shape[-1]
    ai = a[..., i]
    total = ai + _others(a, i)
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(total > 0, ai / np.where(total > 0, total, 1.0), 1.0 / n)
    return -ai * theta[..., i] + share


def rent_seeking_grad(i, a, theta):
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    s = _others(a, i)
    total = a[..., i] + s
    safe = np.where(total > 0, total, 1.0)
    # at zero total effort the share is flat for a_i > 0, so its slope is taken as 0
    return -theta[..., i] + np.where(total > 0, s / (safe * safe), 0.0)


def rent_seeking_hess(i, a, theta):
    a = np.asarray(a, dtype=float)
    s = _others(a, i)
    total = a[..., i] + s
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, -2.0 * s / (safe * safe * safe), 0.0)


def rent_seeking(params: RentSeekingParams = RentSeekingParams()) -> GameSpec:
    actions = tuple(Interval(params.effort_floor, c) for c in params.effort_cap)
    return GameSpec(
        n=params.n,
        type_domains=params.type_domains,
        action_domains=actions,
        utility=rent_seeking_utility,
        own_grad=rent_seeking_grad,
        own_hess=rent_seeking_hess,
        name="rent-seeking",
        params={"n": params.n,
                "type_domains": [d.as_list() for d in params.type_domains],
                "effort_cap": list(params.effort_cap),
                "effort_floor": params.effort_floor},
    )


def rent_seeking_concavity_bound(game: GameSpec) -> float:
    """Lower bound on -d2u_i/da_i2 over the effort box when the floor is positive."""
    eps = game.action_domains[0].lo
    caps = sum(a.hi for a in game.action_domains)
    return 2.0 * (game.n - 1) * eps / caps ** 3


def _zero_rule(theta):
    return np.zeros_like(np.asarray(theta, dtype=float))


def _bq_utility(i, a, theta):
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return a[..., 0] * a[..., 1] * theta[..., i] - a[..., i] ** 2


def _bq_grad(i, a, theta):
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return a[..., 1 - i] * theta[..., i] - 2.0 * a[..., i]


def _bq_hess(i, a, theta):
    return np.full(np.shape(a)[:-1], -2.0)


def bilinear_quadratic() -> GameSpec:
    """Two players, u_i = a_1 a_2 theta_i - a_i**2 on [0,10] x [-1,1]; unique equilibrium at 0."""
    return GameSpec(
        n=2,
        type_domains=((-1.0, 1.0), (-1.0, 1.0)),
        action_domains=((0.0, 10.0), (0.0, 10.0)),
        utility=_bq_utility,
        own_grad=_bq_grad,
        own_hess=_bq_hess,
        name="bilinear-quadratic",
        reference_equilibrium=(_zero_rule, _zero_rule),
    )


def bq_h_matrix(theta1: float, theta2: float) -> np.ndarray:
    """Linear map taking (f_1, f_2) to the own-action gradients of the bilinear-quadratic game."""
    return np.array([[-2.0, theta1], [theta2, -2.0]])


def _bl_utility(i, a, theta):
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return a[..., 0] * a[..., 1] * theta[..., i]


def _bl_grad(i, a, theta):
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return a[..., 1 - i] * theta[..., i]


def _bl_hess(i, a, theta):
    return np.zeros(np.shape(a)[:-1])


def step_rule(theta):
    """10 on positive types, 0 otherwise."""
    return np.where(np.asarray(theta, dtype=float) > 0, 10.0, 0.0)


def bilinear() -> GameSpec:
    """u_i = a_1 a_2 theta_i: linear in own action, with several discontinuous equilibria."""
    return GameSpec(
        n=2,
        type_domains=((-1.0, 1.0), (-1.0, 1.0)),
        action_domains=((0.0, 10.0), (0.0, 10.0)),
        utility=_bl_utility,
        own_grad=_bl_grad,
        own_hess=_bl_hess,
        name="bilinear",
        flags=frozenset({NO_CONTINUOUS_EQUILIBRIUM}),
        params={"known_equilibria": ["zero", "step"]},
    )


def known_bilinear_equilibria() -> dict:
    return {"zero": (_zero_rule, _zero_rule), "step": (step_rule, step_rule)}


BUILTINS = {
    "rent-seeking": rent_seeking,
    "bilinear-quadratic": bilinear_quadratic,
    "bilinear": bilinear,
}

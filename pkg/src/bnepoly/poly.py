"""Monomial decision rules, Bernstein fitting and feasibility certificates."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from .core import DomainError, Interval, PolynomialStrategy, as_interval

# above this degree the monomial expansion of a Bernstein polynomial is not trusted
BERNSTEIN_MONOMIAL_CAP = 25


def monomial_basis(t, d: int) -> np.ndarray:
    """(1, t, t**2, ..., t**d) along a new trailing axis, by repeated multiplication."""
    if d < 0:
        raise ValueError(f"degree must be >= 0, got {d}")
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape + (d + 1,))
    out[..., 0] = 1.0
    for j in range(1, d + 1):
        out[..., j] = out[..., j - 1] * t
    return out


def de_casteljau(control: np.ndarray, t) -> np.ndarray:
    """Evaluate the Bernstein polynomial with ordinates ``control`` at t in [0, 1]."""
    t = np.asarray(t, dtype=float)
    b = np.broadcast_to(np.asarray(control, dtype=float), t.shape + (len(control),)).copy()
    tt = t[..., None]
    for r in range(len(control) - 1, 0, -1):
        b = (1.0 - tt) * b[..., :r] + tt * b[..., 1:r + 1]
    return b[..., 0]


def eval_strategy_unchecked(s: PolynomialStrategy, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if s.control is not None:
        dom = s.domain
        return de_casteljau(s.control, (theta - dom.lo) / dom.width)
    return monomial_basis(theta, s.degree) @ s.coeffs


def eval_strategy(s: PolynomialStrategy, theta):
    """Action chosen by rule ``s`` at type(s) ``theta``."""
    if not s.domain.contains(theta):
        raise DomainError(f"type outside strategy domain [{s.domain.lo}, {s.domain.hi}]")
    out = eval_strategy_unchecked(s, theta)
    return float(out) if np.ndim(out) == 0 else out


def bernstein_to_monomial(control, domain: Interval) -> np.ndarray:
    """Monomial coefficients (in the raw variable) of a Bernstein polynomial on ``domain``."""
    control = np.asarray(control, dtype=float)
    d = control.size - 1
    # coefficients in t = (theta - lo) / width
    ct = np.zeros(d + 1)
    for k in range(d + 1):
        ct[k] = sum(control[j] * comb(d, j) * comb(d - j, k - j) * (-1) ** (k - j)
                    for j in range(k + 1))
    shift = Polynomial([-domain.lo / domain.width, 1.0 / domain.width])
    out = Polynomial(ct)(shift).coef
    coeffs = np.zeros(d + 1)
    coeffs[:out.size] = out
    return coeffs


def bernstein_fit(f: Callable, d: int, domain, bounds) -> PolynomialStrategy:
    """Bernstein approximation of ``f`` on ``domain`` as a decision rule.

    When ``f`` maps into ``bounds`` so does the fitted rule.  Degrees above
    ``BERNSTEIN_MONOMIAL_CAP`` keep the Bernstein ordinates and evaluate with
    de Casteljau; their monomial coefficients are informational only.
    """
    domain = as_interval(domain)
    bounds = as_interval(bounds)
    if d == 0:
        c = float(np.squeeze(f(domain.mid)))
        return PolynomialStrategy(np.array([c]), domain, bounds)
    if d < 0:
        raise ValueError(f"degree must be >= 0, got {d}")
    nodes = domain.lo + domain.width * np.arange(d + 1) / d
    control = np.array([float(np.squeeze(f(x))) for x in nodes])
    coeffs = bernstein_to_monomial(control, domain)
    keep = control if d > BERNSTEIN_MONOMIAL_CAP else None
    if not np.all(np.isfinite(coeffs)):
        coeffs = np.zeros(d + 1)
        keep = control
    return PolynomialStrategy(coeffs, domain, bounds, control=keep)


@dataclass(frozen=True)
class FeasibilityCertificate:
    status: str  # "certified" | "violated" | "undecided"
    witness: Optional[float]
    margin: float
    grid_points: int


def derivative_bound(coeffs, domain: Interval) -> float:
    r = max(1.0, abs(domain.lo), abs(domain.hi))
    j = np.arange(len(coeffs))
    return float(np.sum(j[1:] * np.abs(coeffs[1:]) * r ** (j[1:] - 1)))


def certify_feasible(s: PolynomialStrategy, *, g0: int = 65,
                     g_max: int = 2 ** 20) -> FeasibilityCertificate:
    """Decide whether ``s`` stays inside its action bounds on its whole domain.

    Grid values plus a derivative bound give a rigorous enclosure of the range;
    the grid doubles until the answer is decided or ``g_max`` is reached.
    """
    dom, box = s.domain, s.action_bounds
    if s.control is not None:
        # Bernstein ordinates enclose the range (convex hull property)
        lo, hi = float(np.min(s.control)), float(np.max(s.control))
        margin = min(lo - box.lo, box.hi - hi)
        if margin >= 0:
            return FeasibilityCertificate("certified", None, margin, 0)
    lip = derivative_bound(s.coeffs, dom)
    r = max(1.0, abs(dom.lo), abs(dom.hi))
    # floating point error of one evaluation
    round_err = 4 * (s.degree + 2) * np.finfo(float).eps * float(
        np.sum(np.abs(s.coeffs) * r ** np.arange(s.degree + 1)))
    g = g0
    while True:
        theta = np.linspace(dom.lo, dom.hi, g)
        vals = eval_strategy_unchecked(s, theta)
        below = box.lo - vals
        above = vals - box.hi
        worst = np.maximum(below, above)
        k = int(np.argmax(worst))
        if worst[k] > round_err:
            return FeasibilityCertificate("violated", float(theta[k]), -float(worst[k]), g)
        h = dom.width / (g - 1)
        excursion = 0.5 * h * lip + round_err
        margin = float(min(np.min(vals) - box.lo, box.hi - np.max(vals))) - excursion
        if margin >= 0:
            return FeasibilityCertificate("certified", float(theta[k]), margin, g)
        if g >= g_max:
            return FeasibilityCertificate("undecided", float(theta[k]), margin, g)
        g = 2 * (g - 1) + 1

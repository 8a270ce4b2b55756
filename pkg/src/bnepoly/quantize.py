"""Discrete surrogates of the type distribution and their error diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .core import (ConfigError, GameSpec, GridAxis, Interval, QuantizedMeasure,
                   TabulatedMarginal, UniformMarginal)

log = logging.getLogger(__name__)

MODES = ("grid-voronoi", "monte-carlo")


class UnsupportedProvenance(ValueError):
    pass


@dataclass(frozen=True)
class QuantizerConfig:
    mode: str = "grid-voronoi"
    counts: Union[int, tuple] = 10
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"quantizer.mode must be one of {MODES}, got {self.mode!r}")
        counts = self.counts
        if self.mode == "grid-voronoi":
            counts = tuple(int(k) for k in np.atleast_1d(counts))
            if any(k < 1 for k in counts):
                raise ConfigError(f"quantizer.counts must be >= 1 per dimension, got {list(counts)}")
        else:
            if np.ndim(counts) != 0 or int(counts) < 1:
                raise ConfigError(f"quantizer.counts must be a single integer >= 1, got {counts!r}")
            counts = int(counts)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(np.prod(self.counts))

    def build(self, game: GameSpec) -> QuantizedMeasure:
        if self.mode == "grid-voronoi":
            counts = self.counts
            if len(counts) == 1:
                counts = counts * game.n
            return grid_quantize(game, counts)
        return mc_quantize(game, self.counts, self.seed)


def _gl_pieces(breaks: np.ndarray, q: int):
    """Gauss-Legendre nodes/weights on each interval between consecutive breaks."""
    x, w = np.polynomial.legendre.leggauss(q)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def _cell_means(marg: TabulatedMarginal, edges: np.ndarray) -> np.ndarray:
    breaks = np.union1d(edges, marg.nodes)
    nodes, w = _gl_pieces(breaks, 4)
    dens = marg.pdf(nodes) * w
    cell = np.clip(np.searchsorted(edges, nodes, side="right") - 1, 0, len(edges) - 2)
    mass = np.bincount(cell, dens, minlength=len(edges) - 1)
    first = np.bincount(cell, dens * nodes, minlength=len(edges) - 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(mass > 0, first / mass, mids)
    return np.clip(means, edges[:-1], edges[1:])


def quantize_axis(marg, k: int) -> GridAxis:
    """1-D atoms for one marginal plus their Voronoi cells and cell masses."""
    if k < 1:
        raise ConfigError(f"quantizer.counts must be >= 1, got {k}")
    dom = marg.support
    if isinstance(marg, UniformMarginal):
        part = dom.lo + dom.width * np.arange(k + 1) / k
        part[-1] = dom.hi
        points = 0.5 * (part[:-1] + part[1:])
    else:
        part = marg.ppf(np.arange(k + 1) / k)
        part[0], part[-1] = dom.lo, dom.hi
        points = _cell_means(marg, part)
    edges = np.concatenate([[dom.lo], 0.5 * (points[:-1] + points[1:]), [dom.hi]])
    if isinstance(marg, UniformMarginal):
        masses = np.diff(edges) / dom.width
    else:
        masses = np.diff(marg.cdf(edges))
    masses = masses / math.fsum(masses)
    return GridAxis(points, edges, masses)


def _marginals(source) -> tuple:
    """Marginals of a game, or a plain sequence of marginals (any dimension)."""
    if isinstance(source, GameSpec):
        return source.marginals
    return tuple(source)


def grid_quantize(game, counts: Sequence[int]) -> QuantizedMeasure:
    """Tensor grid of per-player Voronoi atoms; weights are products of cell masses.

    ``game`` may also be a sequence of marginals, e.g. ``[UniformMarginal((0, 1))]``.
    """
    margs = _marginals(game)
    counts = [int(k) for k in counts]
    if len(counts) != len(margs):
        raise ConfigError(f"quantizer.counts needs {len(margs)} entries, got {len(counts)}")
    for k in counts:
        if k < 1:
            raise ConfigError(f"quantizer.counts must be >= 1 per dimension, got {counts}")
    axes = tuple(quantize_axis(m, k) for m, k in zip(margs, counts))
    mesh = np.meshgrid(*[ax.points for ax in axes], indexing="ij")
    atoms = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*[ax.masses for ax in axes], indexing="ij")
    weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=1), axis=1)
    weights = weights / math.fsum(weights)
    return QuantizedMeasure(atoms, weights, "grid-voronoi", grid=axes)


def mc_quantize(game: GameSpec, m: int, seed: int) -> QuantizedMeasure:
    """``m`` iid draws from the product of the marginals, equally weighted."""
    if m < 1:
        raise ConfigError(f"quantizer.counts must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    u = rng.random((m, game.n))
    atoms = np.stack([marg.ppf(u[:, k]) for k, marg in enumerate(game.marginals)], axis=1)
    return QuantizedMeasure(atoms, np.full(m, 1.0 / m), "monte-carlo")


def _axis_dispersion(ax: GridAxis, dom: Interval) -> float:
    p = ax.points
    gaps = [p[0] - dom.lo, dom.hi - p[-1]]
    if p.size > 1:
        gaps.append(0.5 * float(np.max(np.diff(p))))
    return float(max(gaps))


def dispersion(sample: QuantizedMeasure, domains: Sequence[Interval], *,
               probes: int = 10 ** 6) -> float:
    """Fill distance max_theta min_k |theta - theta^k| of the atoms in the domain box.

    Exact for tensor grids.  For other samples it is a dense-grid search and
    therefore a lower-bound estimate.
    """
    if sample.size == 0:
        raise ValueError("empty sample")
    if sample.grid is not None:
        return math.sqrt(sum(_axis_dispersion(ax, dom) ** 2
                             for ax, dom in zip(sample.grid, domains)))
    n = len(domains)
    per = max(2, int(math.ceil(probes ** (1.0 / n))))
    mesh = np.meshgrid(*[dom.grid(per) for dom in domains], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    dist, _ = cKDTree(sample.atoms).query(pts)
    log.debug("dispersion of %d-atom sample estimated from %d probes", sample.size, pts.shape[0])
    return float(np.max(dist))


def dispersion_is_exact(sample: QuantizedMeasure) -> bool:
    return sample.grid is not None


def _axis_distance_rule(ax: GridAxis, marg, q: int):
    breaks = np.union1d(np.union1d(ax.edges, ax.points), marg.breakpoints())
    nodes, w = _gl_pieces(breaks, q)
    cell = np.clip(np.searchsorted(ax.edges, nodes, side="right") - 1, 0, ax.points.size - 1)
    r = np.abs(nodes - ax.points[cell])
    return r, w * marg.pdf(nodes)


def kantorovich_upper_bound(sample: QuantizedMeasure, game, *, q: int = 8,
                            max_nodes: int = 2 * 10 ** 7) -> float:
    """Integral of the distance to the nearest atom, i.e. the transport cost to eta^M.

    The integrand is split at cell edges, atoms and density breakpoints, so the
    1-D uniform case is integrated exactly.
    """
    if sample.provenance != "grid-voronoi" or sample.grid is None:
        raise UnsupportedProvenance(
            f"kantorovich bound needs grid-voronoi cells, sample is {sample.provenance}")
    margs = _marginals(game)
    rules = [_axis_distance_rule(ax, m, q) for ax, m in zip(sample.grid, margs)]
    if len(rules) == 1:
        r, w = rules[0]
        return math.fsum(r * w)
    while np.prod([r.size for r, _ in rules]) > max_nodes and q > 2:
        q //= 2
        rules = [_axis_distance_rule(ax, m, q) for ax, m in zip(sample.grid, margs)]
    r2 = rules[0][0] ** 2
    wt = rules[0][1]
    for r, w in rules[1:-1]:
        r2 = (r2[..., None] + r ** 2).reshape(-1)
        wt = (wt[..., None] * w).reshape(-1)
    r_last, w_last = rules[-1]
    total = np.sqrt(r2[:, None] + r_last[None, :] ** 2) * wt[:, None] * w_last[None, :]
    return math.fsum(total.sum(axis=1))

import math

import numpy as np
import pytest

from bnepoly import (ConfigError, Interval, QuantizerConfig, TabulatedMarginal, UniformMarginal,
                     bilinear_quadratic, dispersion, grid_quantize, kantorovich_upper_bound,
                     mc_quantize)
from bnepoly.quantize import UnsupportedProvenance, dispersion_is_exact, quantize_axis


def test_grid_weights_are_cell_masses():
    g = bilinear_quadratic()
    s = grid_quantize(g, [4, 5])
    assert s.size == 20 and s.provenance == "grid-voronoi"
    assert np.allclose(s.weights, 1 / 20)
    assert s.within(g.type_domains)


def test_tabulated_axis_equal_mass_cells():
    m = TabulatedMarginal(Interval(0, 1), [0, 1], [1, 3])
    ax = quantize_axis(m, 8)
    assert math.fsum(ax.masses) == pytest.approx(1.0)
    assert np.all(np.diff(ax.points) > 0)
    assert np.allclose(ax.edges[1:-1], 0.5 * (ax.points[:-1] + ax.points[1:]))


def test_dispersion_of_two_dim_grid():
    g = bilinear_quadratic()
    s = grid_quantize(g, [4, 4])
    # half cell width 0.25 in each direction
    assert dispersion(s, g.type_domains) == pytest.approx(math.hypot(0.25, 0.25))
    assert dispersion_is_exact(s)


def test_mc_dispersion_is_lower_bound_of_probe_search():
    g = bilinear_quadratic()
    s = mc_quantize(g, 50, seed=3)
    est = dispersion(s, g.type_domains, probes=40000)
    dense = dispersion(s, g.type_domains, probes=250000)
    assert 0 < est <= dense + 1e-12
    assert not dispersion_is_exact(s)


def test_mc_is_reproducible():
    g = bilinear_quadratic()
    a, b = mc_quantize(g, 30, seed=1), mc_quantize(g, 30, seed=1)
    assert np.array_equal(a.atoms, b.atoms)
    assert not np.array_equal(a.atoms, mc_quantize(g, 30, seed=2).atoms)


def test_kantorovich_two_dim_against_monte_carlo():
    g = bilinear_quadratic()
    s = grid_quantize(g, [3, 5])
    bound = kantorovich_upper_bound(s, g)
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (400000, 2))
    d = np.min(np.linalg.norm(x[:, None, :] - s.atoms[None, :, :], axis=2), axis=1)
    assert bound == pytest.approx(d.mean(), rel=5e-3)


def test_kantorovich_shrinks_under_refinement():
    marg = [UniformMarginal(Interval(0, 1))]
    vals = [kantorovich_upper_bound(grid_quantize(marg, [m]), marg) for m in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_kantorovich_rejects_mc():
    g = bilinear_quadratic()
    with pytest.raises(UnsupportedProvenance):
        kantorovich_upper_bound(mc_quantize(g, 10, 0), g)


def test_quantizer_config_messages_name_field():
    with pytest.raises(ConfigError, match="quantizer.counts"):
        QuantizerConfig(counts=[0, 3])
    with pytest.raises(ConfigError, match="quantizer.mode"):
        QuantizerConfig(mode="sobol")
    cfg = QuantizerConfig(counts=6)
    assert cfg.build(bilinear_quadratic()).size == 36

# %% [markdown]
# # Discretizing the type distribution
#
# The solver replaces the continuous type measure by finitely many atoms.
# Grid quantization uses cell midpoints weighted by Voronoi cell mass;
# Monte-Carlo quantization uses iid draws with equal weights.  Two error
# measures come with each: the dispersion (fill distance) and, for grids,
# an upper bound on the transport distance to the true measure.

# %%
from bnepoly import (Interval, TabulatedMarginal, UniformMarginal, dispersion, grid_quantize,
                     kantorovich_upper_bound, mc_quantize, rent_seeking)

unit = [UniformMarginal(Interval(0.0, 1.0))]
for m in (4, 16, 64):
    s = grid_quantize(unit, [m])
    print(f"M={m:3d}  d_K={kantorovich_upper_bound(s, unit):.6f}  1/(4M)={1 / (4 * m):.6f}  "
          f"dispersion={dispersion(s, [Interval(0, 1)]):.6f}")

# %% [markdown]
# On the two-player contest both quantities shrink as the grid is refined.
# The Monte-Carlo dispersion is a probe-search estimate, hence only a lower
# bound, and no transport bound is reported for it.

# %%
game = rent_seeking()
for k in (10, 20, 40):
    g = grid_quantize(game, [k, k])
    mc = mc_quantize(game, k * k, seed=0)
    print(f"K={k:2d}  grid: d_K={kantorovich_upper_bound(g, game):.4f} "
          f"disp={dispersion(g, game.type_domains):.4f}   mc: disp~{dispersion(mc, game.type_domains):.4f}")

# %% [markdown]
# Non-uniform marginals are supported through piecewise-linear densities.
# Atoms then sit at the conditional means of equal-mass cells.

# %%
skew = TabulatedMarginal(Interval(0, 1), [0, 1], [0.2, 1.8])
s = grid_quantize([skew], [6])
print("atoms  ", s.atoms[:, 0].round(4))
print("weights", s.weights.round(4))

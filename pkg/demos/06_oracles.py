# %% [markdown]
# # Independent checks
#
# Brute force: both players choose from a finite action grid at each grid
# type, and pointwise best replies are iterated from every corner of the
# action box.  This finds discontinuous equilibria that polynomial rules
# cannot represent, and it cross-checks the polynomial solver where a
# continuous equilibrium exists.

# %%
import numpy as np

from bnepoly import SolverConfig, bilinear, gauss_seidel_solve, grid_quantize, rent_seeking
from bnepoly.diagnostics import brute_force_discrete_equilibria, sandwich
from bnepoly.solver import DiscretizedObjective

for tab in brute_force_discrete_equilibria(bilinear(), 21, 11):
    print("bilinear fixed point from", tab.seeds, "player 1 actions:", tab.actions[0])

# %% [markdown]
# Contest: the table equilibrium on 21 types and 201 effort levels against
# the degree-8 polynomial solution on the same atoms.

# %%
game = rent_seeking()
sample = grid_quantize(game, [21, 21])
tabs = brute_force_discrete_equilibria(game, 21, 201, sample=sample)
res = gauss_seidel_solve(game, sample, SolverConfig(degree=8, gap_tol=1e-5))
for tab in tabs:
    diff = np.max(np.abs(res.profile.strategies[0](tab.type_points[0]) - tab.actions[0]))
    print(f"max difference to the table: {diff:.3f} (effort grid step 0.5)")

# %% [markdown]
# Sandwich: the polynomial best-response value lies between the value of a
# Bernstein fit of the per-type best reply (lower) and the per-type optimum
# (upper).

# %%
cfg = SolverConfig(degree=8)
coeffs = [s.coeffs for s in res.profile.strategies]
print(sandwich(DiscretizedObjective.build(game, sample, 0, coeffs, cfg), cfg))

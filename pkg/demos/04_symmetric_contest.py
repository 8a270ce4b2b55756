# %% [markdown]
# # Symmetric rent-seeking contest
#
# Two players with private marginal effort cost uniform on [0.01, 1.01]
# compete for a unit prize split in proportion to effort.  Effort is capped
# at 100.  We solve with degree-8 rules, then check how the answer moves
# as the degree and the number of atoms grow.

# %%
import numpy as np

from bnepoly import SolverConfig, gauss_seidel_solve, grid_quantize, rent_seeking
from bnepoly.diagnostics import convergence_study

game = rent_seeking()
res = gauss_seidel_solve(game, grid_quantize(game, [30, 30]), SolverConfig(degree=8, gap_tol=1e-5))
theta = game.type_domains[0].grid(1000)
f1, f2 = (s(theta) for s in res.profile.strategies)
print(f"converged={res.converged} sweeps={res.iterations} gap={res.br_gap:.1e} "
      f"|f1-f2|={np.max(np.abs(f1 - f2)):.1e}")
for th in (0.01, 0.1, 0.3, 0.6, 1.01):
    print(f"  effort at cost {th:4.2f}: {res.profile.strategies[0](th):.4f}")

# %% [markdown]
# Degree study on a 70 x 70 grid and sample-size study at degree 9.
# The successive sup differences between curves should shrink.

# %%
cfg = SolverConfig(gap_tol=1e-5)
deg = convergence_study(game, "degree", [5, 6, 7, 8, 9], [70, 70], cfg)
print("degree diffs     ", np.round(deg.successive_sup_diffs, 4))
smp = convergence_study(game, "sample-size", [10, 20, 30, 40], 9, cfg)
print("sample-size diffs", np.round(smp.successive_sup_diffs, 4))
print("transport bounds ", np.round(smp.kantorovich, 4))

# %% [markdown]
# # Asymmetric contest
#
# Player 2's cost now ranges over [0.01, 2.01], so it is on average the
# weaker contestant.  Player 2 gets twice as many grid points to keep the
# cell widths equal.  The two rules should separate visibly.

# %%
import numpy as np

from bnepoly import (Interval, RentSeekingParams, SolverConfig, gauss_seidel_solve, grid_quantize,
                     rent_seeking)

game = rent_seeking(RentSeekingParams(type_domains=((0.01, 1.01), (0.01, 2.01)),
                                      effort_cap=(100.0, 100.0)))
res = gauss_seidel_solve(game, grid_quantize(game, [30, 60]), SolverConfig(degree=8, gap_tol=1e-4))
print(f"converged={res.converged} sweeps={res.iterations} gap={res.br_gap:.1e}")

common = Interval(0.01, 1.01).grid(1000)
f1, f2 = (s(common) for s in res.profile.strategies)
print(f"largest gap between the rules on common costs: {np.max(np.abs(f1 - f2)):.3f}")
for th in (0.05, 0.25, 0.5, 1.0):
    print(f"  cost {th:4.2f}: player 1 {res.profile.strategies[0](th):.4f}  player 2 {res.profile.strategies[1](th):.4f}")

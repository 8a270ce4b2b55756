# %% [markdown]
# # Bounded polynomial rules
#
# A Bernstein fit of a function that stays inside the action interval stays
# inside it too, so it is a safe way to turn any bounded curve into a
# feasible polynomial rule.  The price is slow convergence: for `t**2` on
# [0, 1] the sup error is exactly `1/(4d)`.

# %%
import numpy as np

from bnepoly import PolynomialStrategy, bernstein_fit, certify_feasible, eval_strategy

t = np.linspace(0, 1, 10001)
for d in (2, 4, 8, 16):
    s = bernstein_fit(lambda x: np.asarray(x) ** 2, d, (0, 1), (0, 1))
    print(f"d={d:2d}  sup error={np.max(np.abs(eval_strategy(s, t) - t ** 2)):.6f}  1/(4d)={1 / (4 * d):.6f}")

# %% [markdown]
# A feasibility certificate checks a rule on a grid and bounds what can
# happen between grid points with a derivative bound.  It either certifies
# the rule, returns a violating type, or gives up as undecided.

# %%
for coeffs, box in [([0.5, 0.1, -0.1], (0, 1)), ([0.0, 4.0, -4.0], (0, 0.99))]:
    cert = certify_feasible(PolynomialStrategy(coeffs, (0, 1), box))
    print(coeffs, box, "->", cert.status, cert.witness)

"""Polynomial decision-rule equilibria of Bayesian games with interval types and actions."""

from .core import (ConfigError, DomainError, EquilibriumResult, GameSpec, Interval,
                   PolynomialStrategy, QuantizedMeasure, StrategyProfile, TabulatedMarginal,
                   UniformMarginal, eval_utility, marginal_density)
from .games import RentSeekingParams, bilinear, bilinear_quadratic, rent_seeking
from .poly import bernstein_fit, certify_feasible, eval_strategy, monomial_basis
from .quantize import (QuantizerConfig, dispersion, grid_quantize, kantorovich_upper_bound,
                       mc_quantize)
from .solver import (DiscretizedObjective, SolverConfig, best_response, best_response_gap,
                     expected_utility, gauss_seidel_solve)

__version__ = "0.1.0"

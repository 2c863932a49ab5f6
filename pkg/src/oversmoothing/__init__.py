"""Oversmoothing Tikhonov regularization for ``F(u) = exp(G u)`` in the sup norm.

``G`` is the Volterra integration operator on [0, 1]. The package provides its
discrete calculus (fractional powers, resolvents, scale norms), the forward
model with its noise scheme, a Tikhonov solver with a max-norm derivative
penalty, a priori and discrepancy parameter choices, Lavrentiev diagnostics
and an experiment harness.
"""

from .estimators import DiscrepancyTikhonov, FractionalIntegral, TikhonovRegularizer
from .experiments import ExperimentConfig, ExperimentRecord, run_figure, run_rates, run_table
from .forward import ProblemSetup, apply_F, frechet_apply, make_noise, nonlinearity_ratios
from .grid import (
    Grid,
    GridFunction,
    NormTag,
    QuadratureConfig,
    ScaleOperator,
    apply_G,
    apply_G_inverse,
    frac_integral_rl,
    frac_power_balakrishnan,
    resolvent_solve,
    scale_norm,
)
from .regops import LavrentievFamily, auxiliary_element, companion_apply, g_functions, lavrentiev_apply
from .rules import (
    DiscrepancyConfig,
    SmoothnessCase,
    apriori_alpha,
    discrepancy_search,
    rate_ratio,
)
from .solver import INFINITY, Minimizer, RegConfig, alpha_scan, e_r, evaluate, minimize

__version__ = "0.1.0"

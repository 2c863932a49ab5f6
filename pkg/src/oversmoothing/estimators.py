"""scikit-learn style wrappers around the solvers.

Data are nodal values on the uniform grid: a row of length ``n + 1`` is one
grid function, ``X`` of shape ``(k, n + 1)`` holds ``k`` of them.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_nodal_rows, check_order, check_positive, grid_for
from .forward import NoiseRealization, apply_F
from .grid import GridFunction, frac_integral_rl, frac_power_balakrishnan
from .rules import DiscrepancyConfig, discrepancy_search
from .solver import RegConfig, minimize

__all__ = ["FractionalIntegral", "TikhonovRegularizer", "DiscrepancyTikhonov"]


class FractionalIntegral(TransformerMixin, BaseEstimator):
    """Applies ``G**order`` to every row.

    ``method="rl"`` uses product integration, ``"balakrishnan"`` the
    resolvent integral (orders strictly below one).
    """

    def __init__(self, order=0.5, method="rl"):
        self.order = order
        self.method = method

    def fit(self, X, y=None):
        X = check_nodal_rows(X)
        check_order(self.order)
        if self.method not in ("rl", "balakrishnan"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "balakrishnan" and self.order >= 1:
            raise ValueError("the resolvent integral needs order < 1")
        self.n_nodes_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_nodes_")
        X = check_nodal_rows(X, self.n_nodes_ - 1)
        g = grid_for(X)
        op = frac_integral_rl if self.method == "rl" else frac_power_balakrishnan
        return np.vstack([op(self.order, GridFunction(g, row)).values for row in X])


class _TikhonovBase(BaseEstimator):
    def _reg_config(self) -> RegConfig:
        return RegConfig(r=self.r, a=self.a, smoothing_q=self.smoothing_q, opt_tol=self.opt_tol)

    def _noise(self, row, delta=0.0):
        return NoiseRealization(float(delta), 0, GridFunction(grid_for(row[None, :]), row))

    def predict(self, X=None):
        """Forward data ``F(u)`` of the fitted solution(s)."""
        check_is_fitted(self, "solution_")
        sol = np.atleast_2d(self.solution_)
        g = grid_for(sol)
        out = np.vstack([apply_F(GridFunction(g, u)).values for u in sol])
        return out[0] if np.ndim(self.solution_) == 1 else out

    def transform(self, X):
        """Regularized solution for every data row."""
        X = check_nodal_rows(X)
        return np.vstack([self._solve(row)[0] for row in X])

    def fit(self, X, y=None):
        """Fit to a single data vector ``f_delta`` (shape ``(n + 1,)`` or ``(1, n + 1)``)."""
        X = check_nodal_rows(X)
        if X.shape[0] != 1:
            raise ValueError("fit expects one data vector; use transform for several")
        u, info = self._solve(X[0])
        self.solution_ = u
        for k, v in info.items():
            setattr(self, k, v)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).solution_[None, :]


class TikhonovRegularizer(_TikhonovBase):
    """Minimiser of ``||F(u) - f||^r + alpha ||u'||^r`` for a fixed ``alpha``."""

    def __init__(self, alpha=1e-2, r=1.0, a=1.0, smoothing_q=64, opt_tol=1e-8):
        self.alpha = alpha
        self.r = r
        self.a = a
        self.smoothing_q = smoothing_q
        self.opt_tol = opt_tol

    def _solve(self, row):
        alpha = check_positive("alpha", self.alpha)
        m = minimize(alpha, self._noise(row), self._reg_config())
        info = {
            "misfit_": m.misfit,
            "penalty_": m.penalty,
            "objective_": m.objective,
            "n_iter_": m.iterations,
        }
        return m.u.values.copy(), info


class DiscrepancyTikhonov(_TikhonovBase):
    """Tikhonov solution with ``alpha`` from the sequential discrepancy principle."""

    def __init__(self, delta=1e-2, b=2.0, theta=2.0, alpha0=1.0, k_max=60,
                 r=1.0, a=1.0, smoothing_q=64, opt_tol=1e-8):
        self.delta = delta
        self.b = b
        self.theta = theta
        self.alpha0 = alpha0
        self.k_max = k_max
        self.r = r
        self.a = a
        self.smoothing_q = smoothing_q
        self.opt_tol = opt_tol

    def _solve(self, row):
        delta = check_positive("delta", self.delta)
        dcfg = DiscrepancyConfig(self.b, self.theta, self.alpha0, self.k_max)
        res = discrepancy_search(self._noise(row, delta), self._reg_config(), dcfg)
        info = {
            "alpha_star_": res.alpha_star,
            "misfit_": res.minimizer.misfit,
            "penalty_": res.minimizer.penalty,
            "trace_": list(res.trace),
        }
        return res.minimizer.u.values.copy(), info

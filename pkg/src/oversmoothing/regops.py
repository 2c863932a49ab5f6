"""Iterated Lavrentiev operators, their companions and the low-order calculus.

For ``beta > 0`` the m-times iterated method gives ``R_beta`` with
``S_beta = I - R_beta G = beta**m (G + beta I)**-m``. The auxiliary element
``u_beta = u_bar + R_beta G (u_true - u_bar)`` and the three rate functions
built from it drive the convergence analysis; everything here is sampled on
geometric ``beta`` grids and summarised by log-log slopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad as _quad
from scipy.optimize import brentq
from scipy.special import gamma

from .grid import (
    DomainError,
    Grid,
    GridFunction,
    _check_same_grid,
    apply_G,
    matrix_frac_power_operator,
    resolvent_solve,
)
from .rules import SmoothnessCase

__all__ = [
    "LavrentievFamily",
    "RateEnvelope",
    "LowOrderReport",
    "lavrentiev_apply",
    "lavrentiev_closed_form",
    "companion_apply",
    "auxiliary_element",
    "g_functions",
    "rate_envelope",
    "beta_star",
    "beta_grid",
    "fit_slope",
    "phi",
    "chi",
    "chi_inverse",
    "log_representative",
    "low_order_decay",
    "decay_orders",
]


@dataclass(frozen=True)
class LavrentievFamily:
    """m-times iterated Lavrentiev regularization; saturates at order ``m``."""

    grid: Grid
    m: int = 2

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"iteration count m must be an integer >= 1, got {self.m}")

    @property
    def saturation(self) -> int:
        return self.m

    def require_saturation(self, a: float):
        """Rate analysis with degree ``a`` needs ``m >= 1 + a``."""
        if self.m < math.ceil(1 + a):
            raise ValueError(f"m = {self.m} is below the required saturation 1 + a = {1 + a}")


def _beta(beta):
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return float(beta)


def lavrentiev_apply(fam: LavrentievFamily, beta: float, f: GridFunction) -> GridFunction:
    """``R_beta f`` via ``(G + beta I) v_k = beta v_{k-1} + f``, ``v_0 = 0``."""
    beta = _beta(beta)
    _check_same_grid(fam.grid, f.grid)
    v = GridFunction.zeros(fam.grid)
    for _ in range(fam.m):
        v = resolvent_solve(beta, beta * v + f)
    return v


def lavrentiev_closed_form(fam: LavrentievFamily, beta: float, f: GridFunction) -> GridFunction:
    """``beta**-1 * sum_{j=1..m} beta**j (G + beta I)**-j f``."""
    beta = _beta(beta)
    acc = GridFunction.zeros(fam.grid)
    term = f
    for j in range(1, fam.m + 1):
        term = resolvent_solve(beta, term)
        acc = acc + beta ** (j - 1) * term
    return acc


def companion_apply(fam: LavrentievFamily, beta: float, u: GridFunction) -> GridFunction:
    """``S_beta u = beta**m (G + beta I)**-m u``."""
    beta = _beta(beta)
    _check_same_grid(fam.grid, u.grid)
    for _ in range(fam.m):
        u = beta * resolvent_solve(beta, u)
    return u


def _rel_gap(a: np.ndarray, b: np.ndarray, scale: float) -> float:
    return float(np.max(np.abs(a - b))) / max(scale, np.finfo(float).tiny)


def auxiliary_element(
    fam: LavrentievFamily, beta: float, u_true: GridFunction, u_bar: GridFunction
) -> GridFunction:
    """``u_bar + R_beta G (u_true - u_bar)``, cross-checked against ``u_true - S_beta(...)``."""
    diff = u_true - u_bar
    via_r = u_bar + lavrentiev_apply(fam, beta, apply_G(diff))
    via_s = u_true - companion_apply(fam, beta, diff)
    scale = max(diff.max_norm(), u_bar.max_norm(), u_true.max_norm())
    if scale > 0 and _rel_gap(via_r.values, via_s.values, scale) > 1e-10:
        raise ArithmeticError("auxiliary element formulas disagree")
    return via_r


def _power(grid: Grid, a: float, v: GridFunction) -> GridFunction:
    if float(a).is_integer():
        for _ in range(int(a)):
            v = apply_G(v)
        return v
    return matrix_frac_power_operator(grid, a)(v)


def g_functions(
    fam: LavrentievFamily,
    beta: float,
    u_true: GridFunction,
    u_bar: GridFunction,
    a: float = 1.0,
) -> tuple[float, float, float]:
    """``(||S d||, beta**-a ||G**a S d||, beta ||R d||)`` with ``d = u_true - u_bar``."""
    beta = _beta(beta)
    if not 0 < a <= fam.saturation:
        raise ValueError(f"a must lie in (0, {fam.saturation}], got {a}")
    d = u_true - u_bar
    s = companion_apply(fam, beta, d)
    g1 = s.max_norm()
    g2 = beta ** (-a) * _power(fam.grid, a, s).max_norm()
    g3 = beta * lavrentiev_apply(fam, beta, d).max_norm()
    return g1, g2, g3


def beta_grid(lo: float = 1e-4, hi: float = 1.0) -> np.ndarray:
    """Powers of two covering ``[lo, hi]``."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    k0 = math.floor(math.log2(lo))
    k1 = math.floor(math.log2(hi))
    return 2.0 ** np.arange(k0, k1 + 1)


def fit_slope(betas, values, middle: float = 0.6) -> float:
    """Least-squares log-log slope over the central ``middle`` fraction."""
    betas = np.asarray(betas, dtype=float)
    values = np.asarray(values, dtype=float)
    k = betas.size
    lo = int(round(k * (1 - middle) / 2))
    hi = int(round(k * (1 + middle) / 2))
    b, v = betas[lo:hi], values[lo:hi]
    if b.size < 2 or np.any(v <= 0):
        raise ValueError("slope fit needs at least two positive samples")
    return float(np.polyfit(np.log(b), np.log(v), 1)[0])


@dataclass(frozen=True)
class RateEnvelope:
    case: SmoothnessCase
    samples: list = field(default_factory=list)
    fitted_orders: tuple = ()


def rate_envelope(
    fam: LavrentievFamily,
    case: SmoothnessCase,
    u_true: GridFunction,
    u_bar: GridFunction,
    a: float = 1.0,
    betas=None,
) -> RateEnvelope:
    """Sample ``g1, g2, g3`` over ``betas`` and fit their orders."""
    betas = beta_grid() if betas is None else np.asarray(betas, dtype=float)
    samples = [(float(b), *g_functions(fam, b, u_true, u_bar, a)) for b in betas]
    arr = np.array(samples)
    if not np.all(np.isfinite(arr)) or np.any(arr[:, 1:] < 0):
        raise ArithmeticError("rate functions must be finite and nonnegative")
    orders = ()
    if np.all(arr[:, 1:] > 0):
        orders = tuple(fit_slope(arr[:, 0], arr[:, i]) for i in (1, 2, 3))
    return RateEnvelope(case, samples, orders)


def decay_orders(fam: LavrentievFamily, p: float, w: GridFunction, betas=None):
    """Slopes of ``||S_beta G**p w||`` and ``||R_beta G**p w||`` against ``beta``.

    Also returns the largest ``||S_beta G**p w|| / (beta**p ||w||)`` seen.
    """
    betas = beta_grid() if betas is None else np.asarray(betas, dtype=float)
    gw = _power(fam.grid, p, w) if p > 0 else w
    s = np.array([companion_apply(fam, b, gw).max_norm() for b in betas])
    r = np.array([lavrentiev_apply(fam, b, gw).max_norm() for b in betas])
    const = float(np.max(s / (betas**p * w.max_norm())))
    return fit_slope(betas, s), fit_slope(betas, r), const


def beta_star(case: SmoothnessCase, delta: float, a: float = 1.0, c: float = 1.0) -> float:
    """Auxiliary-element parameter matched to the noise level."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not (a > 0 and c > 0):
        raise ValueError("a and c must be positive")
    if case.tag == "no_explicit":
        return c * delta ** (1.0 / a)
    if case.tag == "hoelder":
        return c * delta ** (1.0 / (case.p + a))
    if delta >= 1:
        raise ValueError("low-order choice needs delta < 1")
    return c * (delta * math.log(1.0 / delta)) ** (1.0 / a)


# -- low-order calculus -----------------------------------------------------


def _unit(t):
    t = np.asarray(t, dtype=float)
    if np.any((t <= 0) | (t >= 1)):
        raise DomainError("argument must lie in (0, 1)")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def phi(t):
    """``1 / log(1/t)`` on (0, 1)."""
    t = _unit(t)
    return _out(1.0 / np.log(1.0 / t))


def chi(sign: int, q: float, t):
    """``t**q * log(1/t)**(-sign)`` on (0, 1)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if q < 0 or (sign == -1 and q == 0):
        raise ValueError("q must be positive")
    t = _unit(t)
    return _out(t**q * np.log(1.0 / t) ** (-sign))


def chi_inverse(q: float, s: float) -> float:
    """Inverse of ``chi(1, q, .)`` on (0, 1).

    Solved for ``L = log(1/t)`` from ``q L + log L = log(1/s)``, which stays
    well conditioned far below the smallest positive double in ``t``.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    if not s > 0:
        raise DomainError("s must be positive")
    target = math.log(1.0 / s) if s < 1 else -math.log(s)

    def eq(L):
        return q * L + math.log(L) - target

    lo, hi = 1e-300, 1.0
    while eq(hi) < 0:
        hi *= 2.0
    if eq(lo) > 0:
        raise DomainError(f"s = {s} is outside the range of chi")
    L = brentq(eq, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(-L)


def log_representative(grid: Grid, lam: float = 1.0) -> GridFunction:
    """``u(x) = int_0^inf exp(-lam q) x**q / Gamma(1 + q) dq``.

    This is the Laplace transform in the order variable of the Abel powers
    applied to the constant one. It vanishes at 0 and behaves like
    ``1 / (lam + log(1/x))`` there, so it lies in no range of ``G**p`` but
    decays at the logarithmic rate.
    """
    x = grid.nodes
    vals = np.zeros_like(x)
    for i, xi in enumerate(x[1:], start=1):
        lx = math.log(xi)
        vals[i] = _quad(
            lambda q: math.exp(q * (lx - lam)) / gamma(1.0 + q), 0.0, np.inf, limit=200
        )[0]
    return GridFunction(grid, vals)


@dataclass(frozen=True)
class LowOrderReport:
    betas: np.ndarray
    norms: np.ndarray
    ratios: np.ndarray
    sup_ratio: float


def low_order_decay(fam: LavrentievFamily, u: GridFunction, p: float = 0.0, betas=None) -> LowOrderReport:
    """``||S_beta G**p u||`` against the low-order envelope ``beta**p / log(1/beta)``."""
    if not 0 <= p < fam.m:
        raise ValueError(f"need 0 <= p < m = {fam.m}, got {p}")
    betas = beta_grid(1e-4, 0.1) if betas is None else np.asarray(betas, dtype=float)
    if np.any((betas <= 0) | (betas >= 1)):
        raise ValueError("betas must lie in (0, 1)")
    gu = _power(fam.grid, p, u) if p > 0 else u
    norms = np.array([companion_apply(fam, b, gu).max_norm() for b in betas])
    ratios = norms / (betas**p / np.log(1.0 / betas))
    return LowOrderReport(betas, norms, ratios, float(np.max(ratios)))

"""Choice of the regularization parameter: a priori rules and the discrepancy principle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .forward import NoiseRealization, ProblemSetup
from .grid import GridFunction
from .solver import (
    INFINITY,
    Minimizer,
    RegConfig,
    e_r,
    minimize,
    minimizer_at_infinity,
)

__all__ = [
    "DiscrepancyConfig",
    "DiscrepancyError",
    "DiscrepancyResult",
    "SmoothnessCase",
    "apriori_alpha",
    "discrepancy_search",
    "e_r",
    "rate_ratio",
]


@dataclass(frozen=True)
class DiscrepancyConfig:
    """Constants of the sequential discrepancy principle.

    ``b`` multiplies the noise level, ``theta`` is the ladder ratio and
    ``alpha0`` the first rung.
    """

    b: float = 2.0
    theta: float = 2.0
    alpha0: float = 1.0
    k_max: int = 60

    def __post_init__(self):
        if not self.theta > 1:
            raise ValueError(f"theta must exceed 1, got {self.theta}")
        if not self.alpha0 > 0:
            raise ValueError(f"alpha0 must be positive, got {self.alpha0}")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")

    def check_against(self, cfg: RegConfig):
        if not self.b > cfg.e_r:
            raise ValueError(f"b = {self.b} must exceed e_r = {cfg.e_r}")


@dataclass(frozen=True)
class SmoothnessCase:
    """``"no_explicit"``, ``"hoelder"`` (with exponent ``p``) or ``"low_order"``."""

    tag: str
    p: float | None = None

    def __post_init__(self):
        if self.tag not in ("no_explicit", "hoelder", "low_order"):
            raise ValueError(f"unknown smoothness case {self.tag!r}")
        if self.tag == "hoelder" and not (self.p is not None and 0 < self.p <= 1):
            raise ValueError(f"Hoelder exponent must lie in (0, 1], got {self.p}")

    @classmethod
    def hoelder(cls, p: float) -> SmoothnessCase:
        return cls("hoelder", float(p))

    @classmethod
    def low_order(cls) -> SmoothnessCase:
        return cls("low_order")

    @classmethod
    def no_explicit(cls) -> SmoothnessCase:
        return cls("no_explicit")


def apriori_alpha(
    case: SmoothnessCase,
    delta: float,
    cfg: RegConfig,
    c: float = 1.0,
    exponent: float | None = None,
) -> float:
    """A priori parameter ``alpha(delta)``.

    Hoelder(p): ``c * delta**(1 / (kappa (p + a)))``; low order: ``c * delta``;
    no explicit smoothness: ``c * delta**exponent`` where the caller's exponent
    must satisfy ``0 < exponent * kappa * a < 1``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if not c > 0:
        raise ValueError("c must be positive")
    if case.tag == "hoelder":
        return c * delta ** (1.0 / (cfg.kappa * (case.p + cfg.a)))
    if case.tag == "low_order":
        return c * delta
    if exponent is None or not (exponent > 0 and exponent * cfg.kappa * cfg.a < 1):
        raise ValueError(
            "no-explicit-smoothness rule needs an exponent s with 0 < s*kappa*a < 1"
        )
    return c * delta**exponent


class DiscrepancyError(RuntimeError):
    """Ladder exhausted without bracketing ``b * delta``."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class DiscrepancyResult(NamedTuple):
    alpha_star: float
    minimizer: Minimizer
    trace: list


def discrepancy_search(
    noise: NoiseRealization,
    cfg: RegConfig,
    dcfg: DiscrepancyConfig,
    u_bar: GridFunction | None = None,
) -> DiscrepancyResult:
    """Sequential discrepancy principle on the ladder ``alpha0 * theta**(-+k)``.

    Returns ``alpha_star = INFINITY`` and ``u_bar`` when the initial guess
    already fits the data to ``b * delta``. Otherwise the ladder runs down
    (or up) from ``alpha0`` until the misfit first crosses ``b * delta``.
    ``trace`` lists every ``(alpha, misfit)`` pair that was computed.
    """
    delta = noise.delta
    if not delta > 0:
        raise ValueError("the discrepancy principle needs delta > 0")
    dcfg.check_against(cfg)
    level = dcfg.b * delta

    at_inf = minimizer_at_infinity(noise, cfg, u_bar)
    trace = [(INFINITY, at_inf.misfit)]
    if at_inf.misfit <= level:
        return DiscrepancyResult(INFINITY, at_inf, trace)

    current = minimize(dcfg.alpha0, noise, cfg, init=u_bar, u_bar=u_bar)
    trace.append((current.alpha, current.misfit))
    descending = current.misfit >= level
    for k in range(1, dcfg.k_max + 1):
        factor = dcfg.theta ** (-k if descending else k)
        nxt = minimize(dcfg.alpha0 * factor, noise, cfg, init=current.u, u_bar=u_bar)
        trace.append((nxt.alpha, nxt.misfit))
        if descending and nxt.misfit <= level:
            return DiscrepancyResult(nxt.alpha, nxt, trace)
        if not descending and nxt.misfit >= level:
            return DiscrepancyResult(current.alpha, current, trace)
        current = nxt
    raise DiscrepancyError(
        f"no bracketing of b*delta = {level:.3e} within {dcfg.k_max} rungs", trace
    )


def rate_ratio(minimizer: Minimizer, setup: ProblemSetup, delta: float, cfg: RegConfig) -> float:
    """Error divided by the predicted order ``delta**(p / (p + a))``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    err = float(np.max(np.abs(minimizer.u.values - setup.u_true.values)))
    return error_ratio(err, delta, setup.p_true, cfg.a)


def error_ratio(error: float, delta: float, p: float, a: float = 1.0) -> float:
    return error / delta ** (p / (p + a))


def bracket_ok(result: DiscrepancyResult, level: float, theta: float) -> bool:
    """Check that the trace holds adjacent rungs straddling ``level``."""
    if math.isinf(result.alpha_star):
        return result.minimizer.misfit <= level
    by_alpha = {a: m for a, m in result.trace if not math.isinf(a)}
    a = result.alpha_star
    partner = next(
        (b for b in by_alpha if math.isclose(b, a * theta, rel_tol=1e-12)), None
    )
    if partner is None:
        return False
    return by_alpha[a] <= level <= by_alpha[partner]

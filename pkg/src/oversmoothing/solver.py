"""Minimisation of the Tikhonov functional with an oversmoothing penalty.

The functional is ``||F(u) - f_delta||^r + alpha * ||u - u_bar||_1^r`` with
max norms throughout and ``||v||_1 = max |v'|``. Decision variables are the
spline values at ``x_1 .. x_n``; ``u(0) = 0`` is pinned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize
from scipy.optimize import minimize_scalar

from .forward import NoiseRealization
from .grid import GridFunction, _check_same_grid, _integration_matrix

__all__ = [
    "INFINITY",
    "RegConfig",
    "Minimizer",
    "OptimizationError",
    "e_r",
    "evaluate",
    "minimize",
    "alpha_scan",
    "minimizer_at_infinity",
]

logger = logging.getLogger(__name__)

INFINITY = math.inf


class OptimizationError(RuntimeError):
    pass


def e_r(r: float) -> float:
    """Limit constant of the misfit as ``alpha -> 0``: 1 for ``r >= 1``."""
    if not r > 0:
        raise ValueError(f"exponent r must be positive, got {r}")
    return 1.0 if r >= 1 else 2.0 ** (-1.0 + 1.0 / r)


@dataclass(frozen=True)
class RegConfig:
    r: float = 1.0
    a: float = 1.0
    smoothing_q: int = 64
    opt_tol: float = 1e-8
    max_iter: int = 3000
    polish_iter: int = 300

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not self.a > 0:
            raise ValueError("a must be positive")
        if int(self.smoothing_q) != self.smoothing_q or self.smoothing_q < 2:
            raise ValueError("smoothing_q must be an integer >= 2")
        if not self.opt_tol > 0 or self.max_iter < 1 or self.polish_iter < 0:
            raise ValueError("invalid optimizer settings")

    @property
    def kappa(self) -> float:
        return 1.0 / (self.r * (1.0 + self.a))

    @property
    def e_r(self) -> float:
        return e_r(self.r)


@dataclass(frozen=True, eq=False)
class Minimizer:
    u: GridFunction
    alpha: float
    objective: float
    misfit: float
    penalty: float
    iterations: int
    converged: bool
    polish_moves: int = 0


def _lq(v: np.ndarray, q: int):
    """``l_q`` norm of ``v`` and its gradient, overflow-safe."""
    av = np.abs(v)
    big = av.max()
    if big == 0.0:
        return 0.0, np.zeros_like(v)
    ratio = av / big
    norm = big * np.sum(ratio**q) ** (1.0 / q)
    grad = np.sign(v) * (av / norm) ** (q - 1)
    return float(norm), grad


class _Functional:
    """Smoothed and exact objectives in the reduced variables ``z = u[1:]``."""

    def __init__(self, alpha, f_delta, u_bar, cfg: RegConfig):
        self.alpha = float(alpha)
        self.cfg = cfg
        self.grid = f_delta.grid
        self.n = self.grid.n
        self.h = self.grid.h
        self.f = f_delta.values
        self.ubar = u_bar.values
        self.Gz = np.ascontiguousarray(_integration_matrix(self.n)[:, 1:])

    def full(self, z):
        return np.concatenate(([0.0], z))

    def _diffs(self, z):
        # forward differences of u - u_bar, n entries
        return np.diff(self.full(z) - self.ubar) / self.h

    def exact_parts(self, z):
        F = np.exp(self.Gz @ z)
        misfit = float(np.max(np.abs(F - self.f)))
        penalty = float(np.max(np.abs(self._diffs(z))))
        return misfit, penalty

    def exact(self, z):
        m, p = self.exact_parts(z)
        r = self.cfg.r
        return m**r + self.alpha * p**r

    def smoothed_parts(self, z):
        F = np.exp(self.Gz @ z)
        q = self.cfg.smoothing_q
        m, gm = _lq(F - self.f, q)
        d = self._diffs(z)
        # duplicate last difference, as in the discrete G^-1
        pen, gp = _lq(np.append(d, d[-1]), q)
        return m, gm, F, pen, gp

    def smoothed(self, z):
        m, _, _, pen, _ = self.smoothed_parts(z)
        r = self.cfg.r
        return m**r + self.alpha * pen**r

    def value_and_grad(self, z):
        m, gm, F, pen, gp = self.smoothed_parts(z)
        r = self.cfg.r
        gd = gp[:-1].copy()
        gd[-1] += gp[-1]
        grad_pen = (gd - np.append(gd[1:], 0.0)) / self.h
        grad_mis = self.Gz.T @ (F * gm)
        if r == 1:
            return m + self.alpha * pen, grad_mis + self.alpha * grad_pen
        mr = m**r
        pr = pen**r
        dm = r * m ** (r - 1) if m > 0 else 0.0
        dp = r * pen ** (r - 1) if pen > 0 else 0.0
        return mr + self.alpha * pr, dm * grad_mis + self.alpha * dp * grad_pen


def evaluate(
    u: GridFunction,
    alpha: float,
    noise: NoiseRealization,
    cfg: RegConfig,
    smoothed: bool = False,
    u_bar: GridFunction | None = None,
) -> float:
    """Tikhonov functional at ``u``; ``smoothed`` swaps max norms for ``l_q`` norms."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    _check_same_grid(u.grid, noise.f_delta.grid)
    if abs(u.values[0]) > 1e-12:
        raise ValueError("u must vanish at x = 0")
    if u_bar is None:
        u_bar = GridFunction.zeros(u.grid)
    fun = _Functional(alpha, noise.f_delta, u_bar, cfg)
    z = u.values[1:]
    return fun.smoothed(z) if smoothed else fun.exact(z)


def _ramp_start(fun: _Functional, z0: np.ndarray) -> np.ndarray | None:
    # At u = u_bar the penalty has a kink and quasi-Newton steps stall;
    # a 1-D search along u_bar + c*x gives a differentiable starting point.
    ramp = fun.grid.nodes[1:]
    res = minimize_scalar(
        lambda c: fun.exact(z0 + c * ramp), bounds=(-3.0, 3.0), method="bounded"
    )
    if res.fun < fun.exact(z0):
        return z0 + res.x * ramp
    return None


def _polish(fun: _Functional, z: np.ndarray, max_moves: int):
    """Compass search on the exact objective: best single-node move per step."""
    if max_moves == 0:
        return z, 0
    z = z.copy()
    n, h, alpha, r = fun.n, fun.h, fun.alpha, fun.cfg.r
    best = fun.exact(z)
    step = 1e-3 * max(1.0, float(np.max(np.abs(z))))
    moves = 0
    idx = np.arange(n)
    for _ in range(max_moves):
        if step < 1e-10:
            break
        base = np.exp(fun.Gz @ z)
        shift = np.exp(step * fun.Gz)
        mis_up = np.max(np.abs(base[:, None] * shift - fun.f[:, None]), axis=0)
        mis_dn = np.max(np.abs(base[:, None] / shift - fun.f[:, None]), axis=0)

        d = fun._diffs(z)
        ad = np.abs(d)
        # moving z[j] changes differences j and j + 1 only; the max over
        # the rest comes from the three largest entries
        top = np.argsort(ad)[::-1][:3]
        top_vals = np.append(ad[top], [0.0] * (3 - top.size))
        top = np.append(top, [-1] * (3 - top.size))
        left, right = idx, idx + 1
        hit0 = (top[0] == left) | (top[0] == right)
        hit1 = (top[1] == left) | (top[1] == right)
        others = np.where(~hit0, top_vals[0], np.where(~hit1, top_vals[1], top_vals[2]))
        ds = step / h
        right_ok = right < n
        d_right = np.where(right_ok, d[np.minimum(right, n - 1)], 0.0)
        pen_up = np.maximum(others, np.abs(d[left] + ds))
        pen_up = np.maximum(pen_up, np.where(right_ok, np.abs(d_right - ds), 0.0))
        pen_dn = np.maximum(others, np.abs(d[left] - ds))
        pen_dn = np.maximum(pen_dn, np.where(right_ok, np.abs(d_right + ds), 0.0))

        obj_up = mis_up**r + alpha * pen_up**r
        obj_dn = mis_dn**r + alpha * pen_dn**r
        j_up, j_dn = int(np.argmin(obj_up)), int(np.argmin(obj_dn))
        if obj_up[j_up] <= obj_dn[j_dn]:
            j, sign, cand = j_up, 1.0, obj_up[j_up]
        else:
            j, sign, cand = j_dn, -1.0, obj_dn[j_dn]
        if cand < best * (1.0 - 1e-14):
            z[j] += sign * step
            best = fun.exact(z)
            moves += 1
        else:
            step *= 0.5
    return z, moves


def minimize(
    alpha: float,
    noise: NoiseRealization,
    cfg: RegConfig,
    init: GridFunction | None = None,
    u_bar: GridFunction | None = None,
) -> Minimizer:
    """Local minimiser of the Tikhonov functional for one ``alpha``.

    L-BFGS with analytic gradients on the ``l_q``-smoothed functional, then a
    compass-search polish on the exact one. The result is never worse than
    ``u_bar`` in the exact functional.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    grid = noise.f_delta.grid
    if u_bar is None:
        u_bar = GridFunction.zeros(grid)
    if init is None:
        init = u_bar
    _check_same_grid(grid, init.grid)
    _check_same_grid(grid, u_bar.grid)
    if abs(init.values[0]) > 1e-12:
        raise ValueError("initial point must vanish at x = 0")

    fun = _Functional(alpha, noise.f_delta, u_bar, cfg)
    z0 = init.values[1:].copy()
    with np.errstate(over="ignore"):
        start_value = fun.exact(z0)
    if not math.isfinite(start_value):
        raise OptimizationError("objective is not finite at the initial point")

    if np.all(fun._diffs(z0) == 0.0):
        start = _ramp_start(fun, z0)
        if start is not None:
            z0 = start

    with np.errstate(over="ignore"):
        res = _scipy_minimize(
            fun.value_and_grad,
            z0,
            jac=True,
            method="L-BFGS-B",
            options={
                "ftol": cfg.opt_tol,
                "gtol": 1e-12,
                "maxiter": cfg.max_iter,
                "maxcor": 30,
            },
        )
    z = res.x if np.all(np.isfinite(res.x)) else z0
    z, moves = _polish(fun, z, cfg.polish_iter)

    zbar = u_bar.values[1:]
    if fun.exact(zbar) <= fun.exact(z):
        z = zbar.copy()
    misfit, penalty = fun.exact_parts(z)
    u = GridFunction(grid, fun.full(z))
    logger.debug("alpha=%.4g misfit=%.4g penalty=%.4g nit=%d", alpha, misfit, penalty, res.nit)
    return Minimizer(
        u=u,
        alpha=float(alpha),
        objective=fun.exact(z),
        misfit=misfit,
        penalty=penalty,
        iterations=int(res.nit),
        converged=bool(res.success),
        polish_moves=moves,
    )


def minimizer_at_infinity(noise: NoiseRealization, cfg: RegConfig, u_bar: GridFunction | None = None) -> Minimizer:
    """The convention ``u_alpha = u_bar`` for ``alpha = infinity``."""
    grid = noise.f_delta.grid
    if u_bar is None:
        u_bar = GridFunction.zeros(grid)
    misfit = float(np.max(np.abs(np.exp(_integration_matrix(grid.n) @ u_bar.values) - noise.f_delta.values)))
    return Minimizer(u_bar, INFINITY, misfit**cfg.r, misfit, 0.0, 0, True)


def alpha_scan(
    noise: NoiseRealization,
    cfg: RegConfig,
    alphas,
    u_bar: GridFunction | None = None,
) -> list[Minimizer]:
    """Minimise along a descending ladder, warm-starting each rung."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alpha ladder is empty")
    if any(not a > 0 for a in alphas):
        raise ValueError("alphas must be positive")
    if any(b >= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly decreasing")
    out = []
    current = u_bar
    for a in alphas:
        m = minimize(a, noise, cfg, init=current, u_bar=u_bar)
        out.append(m)
        current = m.u
    return out

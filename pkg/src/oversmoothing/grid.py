"""Discrete calculus on [0, 1] for the Volterra integration operator.

Functions are stored as nodal values of linear splines on a uniform grid.
The integration operator ``G`` is the cumulative trapezoidal rule, which is
exact on linear splines; fractional powers ``G**p`` are Abel (Riemann-Liouville)
integrals evaluated by product integration against the same splines.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular
from scipy.signal import lfilter
from scipy.special import gamma

__all__ = [
    "DomainError",
    "GridMismatchError",
    "Grid",
    "GridFunction",
    "ScaleOperator",
    "NormTag",
    "QuadratureConfig",
    "integration_operator",
    "frac_power_operator",
    "matrix_frac_power_operator",
    "positive_type_constant",
    "resolvent_operator",
    "apply_G",
    "apply_G_inverse",
    "apply_G_power",
    "frac_integral_rl",
    "frac_power_balakrishnan",
    "balakrishnan_self_check",
    "resolvent_solve",
    "spline_resolvent_solve",
    "scale_norm",
]


class DomainError(ValueError):
    """An argument lies outside the domain of an operator."""


class GridMismatchError(ValueError):
    """Two objects live on different grids."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_i = i/n`` on [0, 1]."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"grid needs a positive integer n, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        # i/n rather than i*h: exact at both ends
        x = np.arange(self.n + 1) / self.n
        x.flags.writeable = False
        return x

    def __len__(self):
        return self.n + 1


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values of a linear spline on ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n + 1,):
            raise ValueError(
                f"expected {self.grid.n + 1} nodal values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, func) -> GridFunction:
        return cls(grid, func(grid.nodes))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> GridFunction:
        return cls(grid, np.full(grid.n + 1, float(c)))

    @classmethod
    def zeros(cls, grid: Grid) -> GridFunction:
        return cls(grid, np.zeros(grid.n + 1))

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _other(self, other):
        if isinstance(other, GridFunction):
            _check_same_grid(self.grid, other.grid)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __repr__(self):
        return f"GridFunction(n={self.grid.n}, max={self.max_norm():.6g})"


def _check_same_grid(a: Grid, b: Grid):
    if a != b:
        raise GridMismatchError(f"grid mismatch: n={a.n} vs n={b.n}")


@dataclass(frozen=True, eq=False)
class ScaleOperator:
    """Dense lower-triangular matrix acting on grid functions.

    ``kind`` is a tuple tag such as ``("integration",)``,
    ``("frac_power", p)``, ``("resolvent", beta)``,
    ``("lavrentiev", m, beta)`` or ``("companion", m, beta)``.
    """

    grid: Grid
    matrix: np.ndarray
    kind: tuple = field(default=("integration",))

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.grid.n + 1, self.grid.n + 1):
            raise ValueError(f"matrix shape {m.shape} does not fit grid n={self.grid.n}")
        if np.any(np.triu(m, 1) != 0.0):
            raise ValueError("scale operators must be lower triangular")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def __call__(self, u: GridFunction) -> GridFunction:
        _check_same_grid(self.grid, u.grid)
        return GridFunction(self.grid, self.matrix @ u.values)

    def __matmul__(self, other):
        if isinstance(other, GridFunction):
            return self(other)
        if isinstance(other, ScaleOperator):
            _check_same_grid(self.grid, other.grid)
            return ScaleOperator(
                self.grid, self.matrix @ other.matrix, ("product", self.kind, other.kind)
            )
        return NotImplemented


@dataclass(frozen=True)
class NormTag:
    """Index ``tau`` of a norm in the scale; ``tau`` in [-p0, 0] or exactly 1."""

    tau: float
    p0: float = 2.0

    def __post_init__(self):
        if self.p0 <= 0:
            raise ValueError("saturation order p0 must be positive")
        if not (self.tau == 1 or -self.p0 <= self.tau <= 0):
            raise ValueError(
                f"unsupported norm index tau={self.tau}; allowed [-{self.p0}, 0] or 1"
            )


@dataclass(frozen=True)
class QuadratureConfig:
    """Trapezoid rule in ``t = log s`` on ``[-T, T]`` with ``nodes`` points.

    ``resolvent`` selects how ``(G + sI)^-1 G u`` is evaluated at each node:
    ``"spline"`` solves the continuous resolvent equation exactly for the
    linear-spline interpolant, ``"discrete"`` uses the trapezoidal matrix.
    """

    T: float = 30.0
    nodes: int = 400
    resolvent: str = "spline"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("quadrature truncation T must be positive")
        if self.nodes < 16:
            raise ValueError("quadrature needs at least 16 nodes")
        if self.resolvent not in ("spline", "discrete"):
            raise ValueError(f"unknown resolvent mode {self.resolvent!r}")


# -- matrices ---------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _integration_matrix(n: int) -> np.ndarray:
    h = 1.0 / n
    G = np.tril(np.full((n + 1, n + 1), h))
    G[:, 0] = h / 2
    np.fill_diagonal(G, h / 2)
    G[0, 0] = 0.0
    G.flags.writeable = False
    return G


@functools.lru_cache(maxsize=64)
def _abel_matrix(n: int, p: float) -> np.ndarray:
    # Product-trapezoid weights: exact cell moments of (x_i - s)^(p-1)
    # against the hat-function basis.
    h = 1.0 / n
    i = np.arange(n + 1, dtype=float)[:, None]
    j = np.arange(n + 1, dtype=float)[None, :]
    k = i - j
    with np.errstate(invalid="ignore"):
        kp = np.where(k >= 0, np.abs(k) ** (p + 1), 0.0)
        kp1 = np.where(k >= 1, np.abs(k - 1) ** (p + 1), 0.0)
        kq = np.where(k >= -1, np.abs(k + 1) ** (p + 1), 0.0)
    A = kq - 2.0 * kp + kp1
    r = i[1:, 0]
    A[1:, 0] = (r - 1.0) ** (p + 1) - (r - p - 1.0) * r**p
    A = np.tril(A)
    np.fill_diagonal(A, 1.0)
    A[0, :] = 0.0
    A *= h**p / gamma(p + 2.0)
    A.flags.writeable = False
    return A


def integration_operator(grid: Grid) -> ScaleOperator:
    """The cumulative trapezoidal rule as a :class:`ScaleOperator`."""
    return ScaleOperator(grid, _integration_matrix(grid.n), ("integration",))


def frac_power_operator(grid: Grid, p: float) -> ScaleOperator:
    """Matrix of ``G**p`` for ``p >= 0`` (Abel integral for the fractional part)."""
    if p < 0:
        raise DomainError(f"power must be nonnegative, got {p}")
    k, frac = divmod(float(p), 1.0)
    M = np.eye(grid.n + 1)
    if frac > 0:
        M = _abel_matrix(grid.n, frac).copy()
    G = _integration_matrix(grid.n)
    for _ in range(int(k)):
        M = G @ M
    return ScaleOperator(grid, M, ("frac_power", float(p)))


@functools.lru_cache(maxsize=16)
def _matrix_frac_power(n: int, p: float, T: float, nodes: int) -> np.ndarray:
    # Balakrishnan integral with the trapezoid matrix's own resolvent, so the
    # result is the fractional power of that matrix and commutes with it.
    G = _integration_matrix(n)
    eye = np.eye(n + 1)
    t = np.linspace(-T, T, nodes)
    dt = t[1] - t[0]
    M = np.zeros((n + 1, n + 1))
    for k, tk in enumerate(t):
        s = math.exp(tk)
        wk = dt * (0.5 if k in (0, nodes - 1) else 1.0)
        M += wk * math.exp(p * tk) * solve_triangular(G + s * eye, G, lower=True)
    small = np.zeros((n + 1, n + 1))
    small[1:, :] = solve_triangular(G[1:, 1:], G[1:, :], lower=True)
    M += math.exp(-p * T) / p * small + math.exp((p - 1) * T) / (1 - p) * G
    M = np.tril(M * math.sin(math.pi * p) / math.pi)
    M.flags.writeable = False
    return M


def matrix_frac_power_operator(
    grid: Grid, p: float, quad: QuadratureConfig | None = None
) -> ScaleOperator:
    """``G**p`` as the fractional power of the trapezoid matrix itself.

    Unlike :func:`frac_power_operator` (Abel weights, accurate for the
    continuous operator) this matrix is a function of the discrete ``G`` and
    therefore commutes with its resolvents, which is what the decay rates
    of the Lavrentiev operators require at the discrete level.
    """
    if p < 0:
        raise DomainError(f"power must be nonnegative, got {p}")
    quad = quad or QuadratureConfig()
    k, frac = divmod(float(p), 1.0)
    M = np.eye(grid.n + 1)
    if frac > 0:
        M = _matrix_frac_power(grid.n, frac, quad.T, quad.nodes).copy()
    G = _integration_matrix(grid.n)
    for _ in range(int(k)):
        M = G @ M
    return ScaleOperator(grid, M, ("matrix_frac_power", float(p)))


def positive_type_constant(grid: Grid, betas) -> float:
    """Largest ``beta * ||(G + beta I)^-1||`` over ``betas`` (exact row sums)."""
    out = 0.0
    for b in betas:
        inv = resolvent_operator(grid, float(b)).matrix
        out = max(out, float(b) * float(np.max(np.sum(np.abs(inv), axis=1))))
    return out


def resolvent_operator(grid: Grid, beta: float) -> ScaleOperator:
    """``(G + beta I)^-1`` as an explicit lower-triangular matrix."""
    _check_beta(beta)
    A = _integration_matrix(grid.n) + beta * np.eye(grid.n + 1)
    inv = solve_triangular(A, np.eye(grid.n + 1), lower=True)
    return ScaleOperator(grid, np.tril(inv), ("resolvent", float(beta)))


# -- operations -------------------------------------------------------------


def apply_G(u: GridFunction) -> GridFunction:
    """Cumulative trapezoidal integral ``int_0^x u``; vanishes at ``x = 0``."""
    h = u.grid.h
    v = u.values
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(0.5 * h * (v[1:] + v[:-1]), out=out[1:])
    return GridFunction(u.grid, out)


def apply_G_inverse(u: GridFunction, atol: float = 1e-12) -> GridFunction:
    """Forward-difference derivative, last node copies its neighbour.

    Raises :class:`DomainError` if ``u(0)`` is not zero, since only functions
    vanishing at the origin lie in the range of ``G``.
    """
    if abs(u.values[0]) > atol:
        raise DomainError(f"u(0) = {u.values[0]:.3e} is not zero; u is outside range(G)")
    d = np.diff(u.values) / u.grid.h
    return GridFunction(u.grid, np.append(d, d[-1]))


def apply_G_power(p: float, u: GridFunction) -> GridFunction:
    """``G**p u`` for any ``p >= 0``: repeated integration plus an Abel part."""
    if p < 0:
        raise DomainError(f"power must be nonnegative, got {p}")
    k, frac = divmod(float(p), 1.0)
    for _ in range(int(k)):
        u = apply_G(u)
    if frac > 0:
        u = frac_integral_rl(frac, u)
    return u


def frac_integral_rl(p: float, u: GridFunction) -> GridFunction:
    """Riemann-Liouville integral of order ``p`` in (0, 1].

    The kernel ``(x - s)**(p - 1) / Gamma(p)`` is integrated exactly against
    the piecewise-linear interpolant of ``u``; for ``p = 1`` this reduces to
    the trapezoidal rule.
    """
    if not 0 < p <= 1:
        raise DomainError(f"fractional order must lie in (0, 1], got {p}")
    if p == 1:
        return apply_G(u)
    return GridFunction(u.grid, _abel_matrix(u.grid.n, float(p)) @ u.values)


def _check_beta(beta):
    if not beta > 0:
        raise DomainError(f"resolvent parameter must be positive, got {beta}")


def resolvent_solve(beta: float, w: GridFunction) -> GridFunction:
    """Solve ``(G + beta I) v = w`` by forward substitution."""
    _check_beta(beta)
    A = _integration_matrix(w.grid.n) + beta * np.eye(w.grid.n + 1)
    return GridFunction(w.grid, solve_triangular(A, w.values, lower=True))


def _phi2(z: float) -> float:
    # z - (1 - exp(-z)) without cancellation
    if z > 1e-3:
        return z + math.expm1(-z)
    return z * z * (0.5 - z * (1.0 / 6 - z * (1.0 / 24 - z / 120)))


def spline_resolvent_solve(s: float, u: GridFunction) -> GridFunction:
    """``(G + sI)^-1 G u`` for the exact integral operator and spline ``u``.

    ``v = (G + sI)^-1 G u`` solves ``s v' + v = u`` with ``v(0) = 0``; the
    solution is propagated cell by cell with the exponential kernel
    integrated in closed form against the linear interpolant.
    """
    _check_beta(s)
    h = u.grid.h
    z = h / s
    decay = math.exp(-z)
    one_minus = -math.expm1(-z)
    slope_w = s * _phi2(z) / h
    uv = u.values
    inc = uv[:-1] * one_minus + (uv[1:] - uv[:-1]) * slope_w
    v = np.empty_like(uv)
    v[0] = 0.0
    v[1:] = lfilter([1.0], [1.0, -decay], inc)
    return GridFunction(u.grid, v)


def _discrete_resolvent_g(s: float, Gu: np.ndarray, n: int) -> np.ndarray:
    A = _integration_matrix(n) + s * np.eye(n + 1)
    return solve_triangular(A, Gu, lower=True)


def frac_power_balakrishnan(
    p: float, u: GridFunction, quad: QuadratureConfig | None = None
) -> GridFunction:
    """Fractional power via the Balakrishnan resolvent integral.

    Evaluates ``sin(pi p)/pi * int_0^inf s**(p-1) (G + sI)^-1 G u ds`` after
    the substitution ``s = exp(t)``. Both truncated tails are added in closed
    form from the limits ``(G + sI)^-1 G u -> u`` (``s -> 0``, at nodes
    ``x > 0``) and ``-> G u / s`` (``s -> inf``).
    """
    if not 0 < p < 1:
        raise DomainError(f"Balakrishnan formula needs p in (0, 1), got {p}")
    quad = quad or QuadratureConfig()
    grid = u.grid
    t = np.linspace(-quad.T, quad.T, quad.nodes)
    dt = t[1] - t[0]
    weights = np.full(t.size, dt)
    weights[[0, -1]] *= 0.5
    Gu = apply_G(u).values
    acc = np.zeros(grid.n + 1)
    for tk, wk in zip(t, weights):
        s = math.exp(tk)
        if quad.resolvent == "spline":
            v = spline_resolvent_solve(s, u).values
        else:
            v = _discrete_resolvent_g(s, Gu, grid.n)
        acc += wk * math.exp(p * tk) * v
    if quad.resolvent == "spline":
        small = u.values.copy()
        small[0] = 0.0
    else:
        G = _integration_matrix(grid.n)
        small = np.zeros(grid.n + 1)
        small[1:] = solve_triangular(G[1:, 1:], Gu[1:], lower=True)
    acc += math.exp(-p * quad.T) / p * small
    acc += math.exp((p - 1) * quad.T) / (1 - p) * Gu
    return GridFunction(grid, math.sin(math.pi * p) / math.pi * acc)


def balakrishnan_self_check(
    p: float, u: GridFunction, quad: QuadratureConfig | None = None
) -> float:
    """Relative change when both ``T`` and the node count are doubled."""
    quad = quad or QuadratureConfig()
    base = frac_power_balakrishnan(p, u, quad).values
    fine = frac_power_balakrishnan(
        p, u, QuadratureConfig(2 * quad.T, 2 * quad.nodes, quad.resolvent)
    ).values
    scale = max(np.max(np.abs(fine)), np.finfo(float).tiny)
    return float(np.max(np.abs(base - fine)) / scale)


def scale_norm(tag: NormTag | float, u: GridFunction) -> float:
    """Norm ``||u||_tau`` of the scale generated by ``G``.

    ``tau = 0`` is the discrete max norm, ``tau < 0`` applies ``G**|tau|``
    first, and ``tau = 1`` takes the max norm of the forward-difference
    derivative (``u(0) = 0`` required).
    """
    if not isinstance(tag, NormTag):
        tag = NormTag(float(tag))
    if tag.tau == 1:
        return apply_G_inverse(u, atol=1e-10).max_norm()
    if tag.tau == 0:
        return u.max_norm()
    return apply_G_power(-tag.tau, u).max_norm()

"""The exponential forward model ``F(u) = exp(G u)`` and its noisy data."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridFunction, _check_same_grid, apply_G

__all__ = [
    "ProblemSetup",
    "NoiseRealization",
    "apply_F",
    "frechet_apply",
    "make_noise",
    "noise_generator",
    "nonlinearity_ratios",
    "linearization_residual",
]


def noise_generator(seed: int) -> np.random.Generator:
    """Philox-4x64 (counter based) generator; identical streams per seed."""
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True, eq=False)
class ProblemSetup:
    """True solution ``x**p``, its exact data and the initial guess."""

    p_true: float
    grid: Grid
    u_true: GridFunction
    f_true: GridFunction
    u_bar: GridFunction

    @classmethod
    def create(cls, p_true: float, n: int = 100, u_bar: GridFunction | None = None):
        if not 0 < p_true < 1:
            raise ValueError(f"p_true must lie in (0, 1), got {p_true}")
        grid = Grid(n)
        x = grid.nodes
        u_true = GridFunction(grid, x**p_true)
        f_true = GridFunction(grid, np.exp(x ** (p_true + 1) / (p_true + 1)))
        if u_bar is None:
            u_bar = GridFunction.zeros(grid)
        else:
            _check_same_grid(grid, u_bar.grid)
            if u_bar.values[0] != 0.0:
                raise ValueError("initial guess must vanish at x = 0")
        return cls(float(p_true), grid, u_true, f_true, u_bar)

    @property
    def n(self) -> int:
        return self.grid.n


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    delta: float
    seed: int
    f_delta: GridFunction


def apply_F(u: GridFunction) -> GridFunction:
    """Pointwise ``exp`` of the cumulative integral."""
    return GridFunction(u.grid, np.exp(apply_G(u).values))


def frechet_apply(u: GridFunction, h: GridFunction) -> GridFunction:
    """Directional derivative ``F'(u) h = F(u) * G h``."""
    _check_same_grid(u.grid, h.grid)
    return apply_F(u) * apply_G(h)


def make_noise(setup: ProblemSetup, delta: float, seed: int) -> NoiseRealization:
    """Data ``f_delta`` with max-norm noise level exactly ``delta``.

    Gaussian noise is drawn at nodes 1..n, normalised to unit max norm and
    scaled by ``delta``; the value at ``x = 0`` is left exact.
    """
    if not delta >= 0:
        raise ValueError(f"noise level must be nonnegative, got {delta}")
    rng = noise_generator(seed)
    rho = rng.standard_normal(setup.n)
    f = setup.f_true.values.copy()
    if delta > 0:
        f[1:] += delta * (rho / np.max(np.abs(rho)))
    return NoiseRealization(float(delta), int(seed), GridFunction(setup.grid, f))


def _random_smooth(rng: np.random.Generator, x: np.ndarray, modes: int = 6) -> np.ndarray:
    k = np.arange(1, modes + 1)
    a = rng.standard_normal(modes) / k
    b = rng.standard_normal(modes) / k
    phase = np.outer(x, k) * math.pi
    return np.cos(phase) @ a + np.sin(phase) @ b + rng.standard_normal()


def nonlinearity_ratios(setup: ProblemSetup, samples: int, radius: float, seed: int):
    """Sample misfit versus weak-norm ratios near ``u_true``.

    Each sample is ``u = u_true + d`` with ``d`` a random trigonometric
    polynomial rescaled so that ``||G d||`` equals ``radius`` times a uniform
    factor in (0, 1]. Returns a list of ``(weak_norm, misfit, ratio)``
    triples, where the misfit is measured against ``F(u_true)``.
    """
    if not 0 < radius < 1:
        raise ValueError(f"radius must lie in (0, 1), got {radius}")
    rng = noise_generator(seed)
    f_ref = apply_F(setup.u_true).values
    x = setup.grid.nodes
    out = []
    for _ in range(samples):
        d = GridFunction(setup.grid, _random_smooth(rng, x))
        gd = apply_G(d).max_norm()
        if gd == 0:
            continue
        scale = radius * (1.0 - rng.random()) / gd
        u = setup.u_true + scale * d
        weak = apply_G(u - setup.u_true).max_norm()
        misfit = float(np.max(np.abs(apply_F(u).values - f_ref)))
        if weak == 0:
            continue
        out.append((weak, misfit, misfit / weak))
    return out


def linearization_residual(setup: ProblemSetup, u: GridFunction):
    """Both sides of ``|F(u) - F(u+) - F'(u+)(u - u+)| <= |G(u - u+)| |F(u) - F(u+)|``."""
    diff = u - setup.u_true
    f_true = apply_F(setup.u_true)
    delta_f = apply_F(u) - f_true
    lhs = np.abs((delta_f - frechet_apply(setup.u_true, diff)).values)
    rhs = np.abs(apply_G(diff).values) * np.abs(delta_f.values)
    return lhs, rhs

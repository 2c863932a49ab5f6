import math

import numpy as np
import pytest

from oversmoothing.forward import NoiseRealization, ProblemSetup, make_noise
from oversmoothing.grid import GridFunction
from oversmoothing.refinement import tolerance
from oversmoothing.solver import (
    INFINITY,
    OptimizationError,
    RegConfig,
    alpha_scan,
    e_r,
    evaluate,
    minimize,
    minimizer_at_infinity,
)


def test_regconfig_constants():
    cfg = RegConfig()
    assert cfg.kappa == 0.5
    assert cfg.kappa * cfg.a - 1 / cfg.r == pytest.approx(-cfg.kappa)
    c2 = RegConfig(r=0.5, a=2.0)
    assert c2.kappa * c2.a - 1 / c2.r == pytest.approx(-c2.kappa)
    with pytest.raises(ValueError):
        RegConfig(r=0)
    with pytest.raises(ValueError):
        RegConfig(smoothing_q=1)


@pytest.mark.parametrize("r,val", [(1, 1.0), (2, 1.0), (0.5, 2.0)])
def test_e_r(r, val):
    assert e_r(r) == val


def test_e_r_rejects():
    with pytest.raises(ValueError):
        e_r(0)


def test_evaluate_at_initial_guess(noise03, setup03):
    cfg = RegConfig()
    mis = np.max(np.abs(1.0 - noise03.f_delta.values))
    for alpha in (1e-3, 1.0):
        assert evaluate(setup03.u_bar, alpha, noise03, cfg) == pytest.approx(mis)


def test_evaluate_true_solution_zero_noise(setup03):
    nz = make_noise(setup03, 0.0, 0)
    from oversmoothing.solver import _Functional

    fun = _Functional(1.0, nz.f_delta, setup03.u_bar, RegConfig())
    mis, pen = fun.exact_parts(setup03.u_true.values[1:])
    assert mis <= 2e-3
    fine = ProblemSetup.create(0.3, 400)
    nz4 = make_noise(fine, 0.0, 0)
    pen4 = _Functional(1.0, nz4.f_delta, fine.u_bar, RegConfig()).exact_parts(fine.u_true.values[1:])[1]
    assert pen4 > 2 * pen


def test_smoothing_sandwich(noise03, rng):
    cfg = RegConfig()
    g = noise03.f_delta.grid
    for _ in range(20):
        v = rng.standard_normal(101)
        v[0] = 0
        u = GridFunction(g, v)
        ex = evaluate(u, 0.01, noise03, cfg)
        sm = evaluate(u, 0.01, noise03, cfg, smoothed=True)
        assert ex <= sm * (1 + 1e-12)
        assert sm <= ex * 101 ** (1 / 64) * (1 + 1e-12)


def test_evaluate_rejects(noise03, setup03):
    with pytest.raises(ValueError):
        evaluate(setup03.u_bar, 0.0, noise03, RegConfig())
    with pytest.raises(ValueError):
        evaluate(GridFunction.constant(setup03.grid, 1.0), 1.0, noise03, RegConfig())


def test_gradient_matches_finite_differences(noise03, rng):
    from oversmoothing.solver import _Functional

    fun = _Functional(0.01, noise03.f_delta, GridFunction.zeros(noise03.f_delta.grid), RegConfig(smoothing_q=8))
    z = rng.standard_normal(100) * 0.3
    _, g = fun.value_and_grad(z)
    for j in (0, 17, 99):
        e = np.zeros(100)
        e[j] = 1e-6
        fd = (fun.smoothed(z + e) - fun.smoothed(z - e)) / 2e-6
        assert fd == pytest.approx(g[j], rel=1e-4, abs=1e-8)


def test_large_alpha_returns_initial_guess(noise03):
    m = minimize(1e3, noise03, RegConfig())
    assert np.all(m.u.values == 0)
    assert m.misfit == pytest.approx(np.max(np.abs(1 - noise03.f_delta.values)))


def test_minimality_against_initial_guess(noise03):
    cfg = RegConfig()
    for alpha in (1.0, 0.1, 0.01):
        m = minimize(alpha, noise03, cfg)
        assert m.objective <= evaluate(GridFunction.zeros(m.u.grid), alpha, noise03, cfg)
        assert m.objective >= m.misfit
        assert m.u.values[0] == 0


def test_local_minimality_toy(rng):
    setup = ProblemSetup.create(0.5, 10)
    noise = make_noise(setup, 0.01, 2)
    cfg = RegConfig()
    m = minimize(0.05, noise, cfg)
    for _ in range(200):
        d = rng.standard_normal(11) * 1e-3
        d[0] = 0
        assert evaluate(m.u + GridFunction(m.u.grid, d), 0.05, noise, cfg) >= m.objective * (1 - 1e-9)


def test_figure_best_alpha_error(setup03):
    errs = []
    for seed in (1, 2, 3):
        noise = make_noise(setup03, 0.0125, seed)
        ladder = [2.0**-k for k in range(10)]
        m = alpha_scan(noise, RegConfig(), ladder)[-1]
        assert m.alpha == 2.0**-9
        errs.append(np.max(np.abs(m.u.values - setup03.u_true.values)))
    assert 0.193 * 0.5 <= np.median(errs) <= 0.193 * 1.5


def test_reproducible(noise03):
    a = minimize(0.01, noise03, RegConfig())
    b = minimize(0.01, noise03, RegConfig())
    assert np.array_equal(a.u.values, b.u.values) and a.objective == b.objective


def test_non_finite_start(noise03):
    u = GridFunction(noise03.f_delta.grid, np.r_[0.0, np.full(100, 1e4)])
    with pytest.raises(OptimizationError):
        minimize(1.0, noise03, RegConfig(), init=u)


def test_minimizer_at_infinity(noise03):
    m = minimizer_at_infinity(noise03, RegConfig())
    assert m.alpha == INFINITY and np.all(m.u.values == 0) and m.penalty == 0


def test_alpha_scan_validation(noise03):
    with pytest.raises(ValueError):
        alpha_scan(noise03, RegConfig(), [])
    with pytest.raises(ValueError):
        alpha_scan(noise03, RegConfig(), [0.1, 0.2])
    with pytest.raises(ValueError):
        alpha_scan(noise03, RegConfig(), [0.1, -0.2])


def test_alpha_scan_single_equals_minimize(noise03):
    a = alpha_scan(noise03, RegConfig(), [0.05])[0]
    b = minimize(0.05, noise03, RegConfig())
    assert np.array_equal(a.u.values, b.u.values)


@pytest.mark.parametrize("seed", [1, 2])
def test_ladder_monotonicity(setup03, seed):
    mins = alpha_scan(make_noise(setup03, 0.0125, seed), RegConfig(), [2.0**-k for k in range(12)])
    tol = tolerance("tol_mono")
    mis = np.array([m.misfit for m in mins])
    pen = np.array([m.penalty for m in mins])
    assert np.all(mis[1:] <= mis[:-1] * (1 + tol))
    assert np.all(pen[1:] >= pen[:-1] * (1 - tol))

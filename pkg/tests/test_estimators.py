import numpy as np
import pytest
from sklearn.base import clone

from oversmoothing.estimators import DiscrepancyTikhonov, FractionalIntegral, TikhonovRegularizer
from oversmoothing.forward import make_noise
from oversmoothing.grid import Grid


def test_params_roundtrip():
    est = TikhonovRegularizer(alpha=0.5)
    assert est.get_params()["alpha"] == 0.5
    est.set_params(alpha=0.25)
    c = clone(est)
    assert c.alpha == 0.25 and not hasattr(c, "solution_")
    assert clone(DiscrepancyTikhonov(delta=0.1)).get_params()["delta"] == 0.1


def test_fractional_integral_constant():
    g = Grid(100)
    x = g.nodes
    est = FractionalIntegral(order=1.0).fit(np.ones((1, 101)))
    assert np.allclose(est.transform(np.ones((2, 101))), np.vstack([x, x]), atol=1e-12)


def test_fractional_integral_methods_agree():
    x = Grid(100).nodes
    X = np.vstack([np.sin(np.pi * x), x**2])
    rl = FractionalIntegral(0.5).fit_transform(X)
    bk = FractionalIntegral(0.5, method="balakrishnan").fit_transform(X)
    assert np.max(np.abs(rl - bk)) < 1e-3


def test_fractional_integral_validation():
    with pytest.raises(ValueError):
        FractionalIntegral(method="spectral").fit(np.ones((1, 11)))
    with pytest.raises(ValueError):
        FractionalIntegral(order=1.5, method="balakrishnan").fit(np.ones((1, 11)))
    with pytest.raises(ValueError):
        FractionalIntegral(order=-1).fit(np.ones((1, 11)))
    est = FractionalIntegral().fit(np.ones((1, 11)))
    with pytest.raises(ValueError):
        est.transform(np.ones((1, 12)))
    with pytest.raises(ValueError):
        est.transform(np.full((1, 11), np.nan))


def test_unfitted_predict():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        TikhonovRegularizer().predict()
    with pytest.raises(NotFittedError):
        FractionalIntegral().transform(np.ones((1, 11)))


def test_tikhonov_fit_predict(setup07):
    f = make_noise(setup07, 0.0125, 1).f_delta.values
    est = TikhonovRegularizer(alpha=2.0**-6).fit(f)
    assert est.solution_.shape == (101,)
    assert est.misfit_ == pytest.approx(np.max(np.abs(est.predict() - f)), rel=1e-12)
    assert est.objective_ >= est.misfit_
    # transform on the same row reproduces the fit
    assert np.allclose(est.transform(f[None, :])[0], est.solution_, atol=1e-10)
    with pytest.raises(ValueError):
        est.fit(np.vstack([f, f]))
    with pytest.raises(ValueError):
        TikhonovRegularizer(alpha=0).fit(f)


def test_discrepancy_estimator(setup07):
    f = make_noise(setup07, 0.0125, 1).f_delta.values
    est = DiscrepancyTikhonov(delta=0.0125).fit(f)
    assert est.misfit_ <= 2 * 0.0125
    assert est.trace_[-1][0] == est.alpha_star_
    big = DiscrepancyTikhonov(delta=10.0).fit(f)
    assert np.isinf(big.alpha_star_) and np.all(big.solution_ == 0)

import math

import numpy as np
import pytest

from oversmoothing.forward import ProblemSetup, make_noise
from oversmoothing.rules import (
    DiscrepancyConfig,
    DiscrepancyError,
    SmoothnessCase,
    apriori_alpha,
    bracket_ok,
    discrepancy_search,
    error_ratio,
    rate_ratio,
)
from oversmoothing.solver import INFINITY, RegConfig, minimize


def test_discrepancy_config_validation():
    with pytest.raises(ValueError):
        DiscrepancyConfig(theta=1.0)
    with pytest.raises(ValueError):
        DiscrepancyConfig(alpha0=0)
    with pytest.raises(ValueError):
        DiscrepancyConfig(b=1.0).check_against(RegConfig())
    DiscrepancyConfig(b=1.5).check_against(RegConfig())


def test_smoothness_case():
    with pytest.raises(ValueError):
        SmoothnessCase.hoelder(1.5)
    with pytest.raises(ValueError):
        SmoothnessCase("other")


def test_apriori_examples():
    cfg = RegConfig()
    # 0.01 ** (2 / 1.3) = 8.3768e-4
    expected = math.exp(math.log(0.01) * 2 / 1.3)
    assert apriori_alpha(SmoothnessCase.hoelder(0.3), 0.01, cfg) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(8.3768e-4, rel=1e-4)
    assert apriori_alpha(SmoothnessCase.low_order(), 0.01, cfg) == 0.01
    assert apriori_alpha(SmoothnessCase.hoelder(1.0), 0.01, cfg, c=3) == pytest.approx(0.03)
    assert apriori_alpha(SmoothnessCase.no_explicit(), 0.01, cfg, exponent=1.5) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        apriori_alpha(SmoothnessCase.no_explicit(), 0.01, cfg, exponent=2.0)
    with pytest.raises(ValueError):
        apriori_alpha(SmoothnessCase.low_order(), 0.0, cfg)


def test_rate_ratio_examples():
    assert error_ratio(0.2118, 0.05, 0.3) == pytest.approx(0.4228, abs=5e-4)
    assert error_ratio(0.0916, 0.05, 0.7) == pytest.approx(0.3146, abs=5e-4)
    assert error_ratio(0.0, 0.01, 0.3) == 0


def test_rate_ratio_from_minimizer(setup03):
    noise = make_noise(setup03, 0.01, 1)
    m = minimize(0.01, noise, RegConfig())
    err = np.max(np.abs(m.u.values - setup03.u_true.values))
    assert rate_ratio(m, setup03, 0.01, RegConfig()) == pytest.approx(err / 0.01 ** (0.3 / 1.3))
    with pytest.raises(ValueError):
        rate_ratio(m, setup03, 0.0, RegConfig())


def test_step_one_branch(setup03):
    noise = make_noise(setup03, 10.0, 1)
    res = discrepancy_search(noise, RegConfig(), DiscrepancyConfig())
    assert res.alpha_star == INFINITY
    assert np.all(res.minimizer.u.values == 0)


def test_zero_noise_rejected(setup03):
    with pytest.raises(ValueError):
        discrepancy_search(make_noise(setup03, 0.0, 1), RegConfig(), DiscrepancyConfig())


@pytest.mark.parametrize("delta", [0.05, 0.0125, 0.0002])
def test_descending_bracketing(setup03, delta):
    dcfg = DiscrepancyConfig()
    res = discrepancy_search(make_noise(setup03, delta, 1), RegConfig(), dcfg)
    assert res.minimizer.misfit <= dcfg.b * delta
    assert bracket_ok(res, dcfg.b * delta, dcfg.theta)
    k = -math.log2(res.alpha_star)
    assert k == int(k)


def test_ascending_branch(setup07):
    # start far below the bracket so the ladder has to climb
    dcfg = DiscrepancyConfig(alpha0=2.0**-12)
    res = discrepancy_search(make_noise(setup07, 0.05, 1), RegConfig(), dcfg)
    alphas = [a for a, _ in res.trace if not math.isinf(a)]
    assert alphas == sorted(alphas)
    assert res.minimizer.misfit <= 0.1
    assert bracket_ok(res, 0.1, 2.0)


def test_ladder_cap(setup03):
    with pytest.raises(DiscrepancyError) as exc:
        discrepancy_search(make_noise(setup03, 1e-7, 1), RegConfig(), DiscrepancyConfig(k_max=3))
    assert len(exc.value.trace) == 5


def test_lower_bound_on_alpha_star(setup07):
    cfg = RegConfig()
    vals = []
    for delta in (0.05, 0.0125, 0.003125, 0.00078125, 0.0002):
        res = discrepancy_search(make_noise(setup07, delta, 1), cfg, DiscrepancyConfig())
        vals.append(delta / res.alpha_star ** (cfg.kappa * (0.7 + 1)))
    assert max(vals) <= 1.0

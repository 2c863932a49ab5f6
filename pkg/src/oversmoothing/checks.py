"""Numerical property checks shared by the test suite and ``oversmoothing verify``.

Each check returns a :class:`CheckResult`; numbered ones mirror the
acceptance criteria listed in the README.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .experiments import ExperimentConfig, run_figure, run_records, summarize_rates
from .forward import ProblemSetup, make_noise, noise_generator, _random_smooth, nonlinearity_ratios
from .grid import (
    Grid,
    GridFunction,
    apply_G,
    frac_integral_rl,
    frac_power_balakrishnan,
    positive_type_constant,
    resolvent_solve,
)
from .refinement import abel_tol, tolerance
from .regops import (
    LavrentievFamily,
    chi,
    chi_inverse,
    decay_orders,
    lavrentiev_apply,
    lavrentiev_closed_form,
    companion_apply,
    phi,
)
from .solver import RegConfig, alpha_scan

__all__ = ["CheckResult", "ACCEPTANCE", "PROPERTIES", "run_checks"]

TABLE_DELTAS = (0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625, 0.00078125, 0.000390625, 0.0002)
SEEDS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _timed(name, fn, *args, **kw) -> CheckResult:
    t = time.perf_counter()
    ok, detail = fn(*args, **kw)
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t)


# -- acceptance criteria ----------------------------------------------------


def abel_identity(n: int = 100):
    g = Grid(n)
    err = 0.0
    for p in (0.3, 0.5, 0.7):
        v = frac_integral_rl(p, GridFunction.constant(g, gamma(1 + p))).values
        err = max(err, float(np.max(np.abs(v - g.nodes**p))))
    tol = abel_tol(n)
    shrinks = abel_tol(4 * n) < tol
    return err <= tol and shrinks, f"max error {err:.2e} <= tol({n}) = {tol:.1e}"


def _smooth_inputs(g: Grid):
    x = g.nodes
    return [np.sin(np.pi * x), 1.0 + x, np.exp(x), np.cos(2 * x) + x**2]


def oracle_equivalence(n: int = 100):
    g = Grid(n)
    worst = 0.0
    for p in (0.3, 0.5, 0.7):
        for v in _smooth_inputs(g):
            u = GridFunction(g, v)
            rl = frac_integral_rl(p, u).values
            bk = frac_power_balakrishnan(p, u).values
            worst = max(worst, float(np.max(np.abs(rl - bk)) / np.max(np.abs(rl))))
    tol = tolerance("balakrishnan_oracle")
    return worst <= tol, f"max relative difference {worst:.2e} <= {tol:g}"


def _random_inputs(g: Grid, count: int, seed: int):
    rng = noise_generator(seed)
    x = g.nodes
    for k in range(count):
        kind = k % 3
        if kind == 0:
            yield rng.standard_normal(x.size)
        elif kind == 1:
            yield _random_smooth(rng, x, modes=20)
        else:
            yield np.sign(rng.standard_normal(x.size)) * rng.random(x.size) ** 0.2


def interpolation_inequality(n: int = 100, count: int = 200, seed: int = 11):
    g = Grid(n)
    slack = 1.0 + tolerance("interpolation_slack")
    worst = 0.0
    for v in _random_inputs(g, count, seed):
        u = GridFunction(g, v)
        gu, nu = apply_G(u).max_norm(), u.max_norm()
        for p in (0.25, 0.5, 0.75):
            lhs = frac_integral_rl(p, u).max_norm()
            worst = max(worst, lhs / (6.0 * gu**p * nu ** (1 - p)))
    return worst <= slack, f"largest lhs/rhs {worst:.3f} over {count} inputs (limit {slack})"


def lavrentiev_orders(n: int = 100):
    g = Grid(n)
    fam = LavrentievFamily(g, 2)
    w = GridFunction(g, 1.0 + g.nodes)
    ok = True
    parts = []
    for p in (0.25, 0.5, 0.75, 1.0):
        s, r, _ = decay_orders(fam, p, w)
        ok &= abs(s - p) <= 0.1 and abs(r - (p - 1)) <= 0.1
        parts.append(f"p={p}: S {s:.3f}, R {r:.3f}")
    return ok, "; ".join(parts)


def nonlinearity_bounds(p: float = 0.3, samples: int = 500, radius: float = 0.5, seed: int = 5):
    setup = ProblemSetup.create(p)
    rows = nonlinearity_ratios(setup, samples, radius, seed)
    ratios = np.array([r for _, _, r in rows])
    c1, c2 = math.exp(-1 / (p + 1)), math.exp(1 / (p + 1))
    upper = c2 / (1 - radius)
    ok = len(rows) == samples and np.all(ratios > 0) and ratios.max() <= upper and ratios.min() > 0.1 * c1
    return ok, f"ratios in [{ratios.min():.3f}, {ratios.max():.3f}], bounds (> {0.1 * c1:.3f}, <= {upper:.3f})"


def misfit_monotonicity(p: float = 0.3, delta: float = 0.0125, seeds=SEEDS, rungs: int = 12):
    setup = ProblemSetup.create(p)
    cfg = RegConfig()
    tol = tolerance("tol_mono")
    worst = 0.0
    for seed in seeds:
        mins = alpha_scan(make_noise(setup, delta, seed), cfg, [2.0**-k for k in range(rungs)])
        m = np.array([x.misfit for x in mins])
        worst = max(worst, float(np.max(m[1:] / m[:-1] - 1.0)))
    return worst <= tol, f"largest relative misfit increase {worst:+.4f} (limit {tol})"


def _rate_config(p, rule):
    return ExperimentConfig(p_true=p, deltas=TABLE_DELTAS, seeds=SEEDS, rule=rule, timing=False)


def table_reproduction(jobs: int = 1, cache: dict | None = None):
    ok = True
    parts = []
    for p in (0.3, 0.7):
        cfg = _rate_config(p, "discrepancy")
        recs = _records(cfg, jobs, cache)
        rep = summarize_rates(cfg, recs)
        ok &= rep.failures == 0 and all(0.1 <= q <= 1.5 for q in rep.median_ratios)
        parts.append(
            f"p={p}: median ratios {min(rep.median_ratios):.3f}..{max(rep.median_ratios):.3f}, "
            f"{rep.failures} failures"
        )
    return ok, "; ".join(parts)


def rate_slopes(jobs: int = 1, cache: dict | None = None):
    ok = True
    parts = []
    for rule in ("apriori", "discrepancy"):
        for p in (0.3, 0.7):
            cfg = _rate_config(p, rule)
            rep = summarize_rates(cfg, _records(cfg, jobs, cache))
            ok &= abs(rep.slope - rep.target) <= 0.15
            parts.append(f"{rule} p={p}: {rep.slope:.3f} vs {rep.target:.3f}")
    return ok, "; ".join(parts)


def _records(cfg, jobs, cache):
    key = (cfg.p_true, cfg.rule)
    if cache is not None and key in cache:
        return cache[key]
    recs = run_records(cfg, jobs)
    if cache is not None:
        cache[key] = recs
    return recs


def figure_shape(out_dir, jobs: int = 1):
    cfg = ExperimentConfig(p_true=0.3, seeds=SEEDS, figure_delta=0.0125)
    results = run_figure(cfg, out_dir, jobs)
    shaped = sum(r.u_shaped() for r in results)
    errs = ", ".join(
        f"seed {r.seed}: {r.errors[0]:.3f}/{r.error_star:.3f}/{r.errors[-1]:.3f}" for r in results
    )
    return shaped >= 4, f"{shaped}/5 seeds U-shaped (first/selected/last: {errs})"


def chi_calculus():
    ok = True
    notes = []
    t = np.linspace(0, 1, 1002)[1:-1]
    for q in (0.5, 1.0, 2.0):
        # (a) chi_{1,q} increasing on (0,1), tends to 0
        ok &= bool(np.all(np.diff(chi(1, q, t)) > 0)) and chi(1, q, 1e-300) < 1e-100
        # (b) chi_{-1,q} increasing on (0, exp(-1/q)], tends to 0
        tb = np.linspace(0, math.exp(-1 / q), 1001)[1:]
        ok &= bool(np.all(np.diff(chi(-1, q, tb)) > 0)) and chi(-1, q, 1e-300) < 1e-100
        # round trip
        for t0 in (0.01, 0.1, 0.5):
            ok &= abs(chi_inverse(q, chi(1, q, t0)) - t0) <= 1e-10 * t0
        # (c) chi_inverse(s) ~ q^(-1/q) chi_{-1,1}(s)^(1/q): ratio rises to 1
        svals = [10.0 ** (-e) for e in (6, 12, 24, 48, 96)]
        ratios = [chi_inverse(q, s) / (q ** (-1 / q) * chi(-1, 1, s) ** (1 / q)) for s in svals]
        ok &= all(b > a for a, b in zip(ratios, ratios[1:])) and all(r < 1 for r in ratios)
        ok &= all(0.9 <= r <= 1.1 for r in ratios[3:])
        notes.append(f"q={q}: inverse asymptotic ratio {ratios[0]:.3f} at 1e-6, {ratios[-1]:.3f} at 1e-96")
        # (d) log(1/chi) = q log(1/t) -+ log log(1/t), so phi(chi_{+-1,q}(t))
        # behaves like phi(t) / q; the bound phi(chi^e) <= c phi(t) follows
        tt = [10.0 ** (-e) for e in (10, 30, 100)]
        for sign in (1, -1):
            d = [abs(q * phi(chi(sign, q, x)) / phi(x) - 1) for x in tt]
            ok &= d[0] > d[1] > d[2] and d[2] < 0.1
            for e in (0.25, 1.0):
                bound = max(phi(chi(sign, q, x) ** e) / phi(x) for x in tt)
                ok &= bound <= 2.0 / (q * e)
    # (e) phi(c t) ~ phi(t)
    for c2 in (0.1, 10.0):
        e = [abs(phi(c2 * x) / phi(x) - 1) for x in (1e-10, 1e-50, 1e-250)]
        ok &= e[0] > e[1] > e[2] and e[2] < 0.01
    ok &= abs(phi(math.exp(-1)) - 1) < 1e-15
    return ok, "; ".join(notes)


# -- further module properties ------------------------------------------------


def resolvent_bound(n: int = 100):
    k = positive_type_constant(Grid(n), 2.0 ** np.arange(-30, 11))
    slack = tolerance("kappa_star_slack")
    return k <= slack, f"observed kappa* = {k:.4f} <= {slack}"


def lavrentiev_identities(n: int = 100, seed: int = 3):
    g = Grid(n)
    rng = noise_generator(seed)
    worst = 0.0
    for m in (1, 2, 3):
        fam = LavrentievFamily(g, m)
        for beta in (1e-3, 1e-1, 10.0):
            u = GridFunction(g, rng.standard_normal(n + 1))
            a = lavrentiev_apply(fam, beta, u).values
            b = lavrentiev_closed_form(fam, beta, u).values
            worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
            s = companion_apply(fam, beta, u).values
            t = u.values - lavrentiev_apply(fam, beta, apply_G(u)).values
            worst = max(worst, float(np.max(np.abs(s - t)) / u.max_norm()))
            c1 = lavrentiev_apply(fam, beta, apply_G(u)).values
            c2 = apply_G(lavrentiev_apply(fam, beta, u)).values
            worst = max(worst, float(np.max(np.abs(c1 - c2)) / u.max_norm()))
    return worst <= 1e-10, f"largest identity defect {worst:.2e}"


def resolvent_round_trip(n: int = 100, seed: int = 4):
    g = Grid(n)
    rng = noise_generator(seed)
    u = GridFunction(g, rng.standard_normal(n + 1))
    worst = 0.0
    for beta in (1e-4, 1e-2, 1.0):
        w = apply_G(u) + beta * u
        v = resolvent_solve(beta, w)
        worst = max(worst, float(np.max(np.abs(v.values - u.values)) / u.max_norm()))
    return worst <= 1e-12, f"relative round-trip error {worst:.2e}"


ACCEPTANCE = {
    1: ("Abel identity", abel_identity),
    2: ("Balakrishnan vs Riemann-Liouville", oracle_equivalence),
    3: ("interpolation inequality", interpolation_inequality),
    4: ("Lavrentiev decay orders", lavrentiev_orders),
    5: ("nonlinearity conditions", nonlinearity_bounds),
    6: ("misfit monotonicity along alpha ladder", misfit_monotonicity),
    7: ("rate table reproduction", table_reproduction),
    8: ("rate slopes", rate_slopes),
    9: ("minimiser figure U-shape", figure_shape),
    10: ("phi/chi calculus", chi_calculus),
}

PROPERTIES = {
    "resolvent bound": resolvent_bound,
    "Lavrentiev identities": lavrentiev_identities,
    "resolvent round trip": resolvent_round_trip,
}

SLOW = {7, 8, 9}


def run_checks(full: bool = False, jobs: int = 1, out_dir="verify_out") -> list[CheckResult]:
    """Run the property suite; ``full`` adds the table and figure experiments."""
    results = [_timed(name, fn) for name, fn in PROPERTIES.items()]
    cache: dict = {}
    for num, (name, fn) in ACCEPTANCE.items():
        label = f"{num}. {name}"
        if num in SLOW and not full:
            continue
        if num in (7, 8):
            results.append(_timed(label, fn, jobs=jobs, cache=cache))
        elif num == 9:
            results.append(_timed(label, fn, out_dir, jobs=jobs))
        else:
            results.append(_timed(label, fn))
    return results

"""Experiment harness: rate tables, minimiser figures and slope reports.

Experiments are described by small INI files::

    [experiment]
    p_true = 0.3
    deltas = 0.05, 0.025, 0.0125
    seeds = 1, 2, 3

    [rule]
    kind = discrepancy
    b = 2

Every output is a deterministic function of the config (and the seed base),
except the optional wall-clock column.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .forward import ProblemSetup, make_noise
from .rules import (
    DiscrepancyConfig,
    DiscrepancyError,
    SmoothnessCase,
    apriori_alpha,
    discrepancy_search,
    error_ratio,
)
from .solver import RegConfig, alpha_scan

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentRecord",
    "TABLE_COLUMNS",
    "load_config",
    "parse_config",
    "run_cell",
    "run_table",
    "run_figure",
    "run_rates",
    "fit_rate",
    "write_svg",
]

TABLE_COLUMNS = (
    "delta",
    "seed",
    "alpha_star",
    "error",
    "ratio",
    "ladder_length",
    "wall_time_ms",
    "failed",
)

# default figure rungs: alpha = 2^-3, 2^-6, 2^-9, 2^-12, 2^-16
FIGURE_ALPHAS = (0.125, 0.015625, 0.001953125, 0.000244140625, 0.0000152587890625)


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    p_true: float = 0.3
    n: int = 100
    r: float = 1.0
    a: float = 1.0
    deltas: tuple = (0.05, 0.025, 0.0125)
    seeds: tuple = (1,)
    rule: str = "discrepancy"
    b: float = 2.0
    theta: float = 2.0
    alpha0: float = 1.0
    k_max: int = 60
    case: str = "hoelder"
    c: float = 16.0
    exponent: float | None = None
    output_dir: str = "out"
    emit_plots: bool = False
    timing: bool = True
    figure_delta: float = 0.0125
    figure_alphas: tuple = FIGURE_ALPHAS
    name: str = "experiment"

    def __post_init__(self):
        if not 0 < self.p_true < 1:
            raise ConfigError(f"p_true must lie in (0, 1), got {self.p_true}")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if not self.deltas:
            raise ConfigError("deltas must not be empty")
        if any(d <= 0 for d in self.deltas):
            raise ConfigError("noise levels must be positive")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ConfigError("deltas must be strictly decreasing")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds) or any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be distinct nonnegative integers")
        if self.rule not in ("discrepancy", "apriori"):
            raise ConfigError(f"unknown rule {self.rule!r}")
        try:
            self.reg_config()
            self.discrepancy_config().check_against(self.reg_config())
            self.smoothness_case()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.figure_alphas or any(a <= 0 for a in self.figure_alphas):
            raise ConfigError("figure alphas must be positive")

    def reg_config(self) -> RegConfig:
        return RegConfig(r=self.r, a=self.a)

    def discrepancy_config(self) -> DiscrepancyConfig:
        return DiscrepancyConfig(self.b, self.theta, self.alpha0, self.k_max)

    def smoothness_case(self) -> SmoothnessCase:
        if self.case == "hoelder":
            return SmoothnessCase.hoelder(self.p_true)
        if self.case == "low_order":
            return SmoothnessCase.low_order()
        if self.case == "no_explicit":
            return SmoothnessCase.no_explicit()
        raise ConfigError(f"unknown smoothness case {self.case!r}")


def _floats(text):
    return tuple(float(v) for v in text.replace("\n", ",").split(",") if v.strip())


def _ints(text):
    out = []
    for v in text.replace("\n", ",").split(","):
        v = v.strip()
        if not v:
            continue
        if "-" in v[1:]:
            lo, hi = v.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(v))
    return tuple(out)


_FIELDS = {
    "experiment": {
        "p_true": float,
        "n": int,
        "r": float,
        "a": float,
        "deltas": _floats,
        "seeds": _ints,
        "output_dir": str,
        "name": str,
    },
    "rule": {
        "kind": str,
        "b": float,
        "theta": float,
        "alpha0": float,
        "k_max": int,
        "case": str,
        "c": float,
        "exponent": float,
    },
    "figure": {"delta": float, "alphas": _floats},
}

_BOOLS = {("experiment", "emit_plots"): "emit_plots", ("experiment", "timing"): "timing"}


def parse_config(text: str) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from INI text."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    kwargs = {}
    for section in cp.sections():
        if section not in _FIELDS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if (section, key) in _BOOLS:
                try:
                    kwargs[_BOOLS[section, key]] = cp.getboolean(section, key)
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key}: {exc}") from exc
                continue
            conv = _FIELDS[section].get(key)
            if conv is None:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
            name = {"kind": "rule", "delta": "figure_delta", "alphas": "figure_alphas"}.get(key, key)
            kwargs[name] = value
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


@dataclass(frozen=True)
class ExperimentRecord:
    delta: float
    seed: int
    alpha_star: float | None
    error: float | None
    ratio: float | None
    ladder_length: int
    wall_time_ms: float | None
    failed: bool = False
    u: np.ndarray | None = field(default=None, repr=False, compare=False)

    def row(self) -> list[str]:
        def num(v):
            if v is None:
                return ""
            return "inf" if math.isinf(v) else repr(float(v))

        wall = "" if self.wall_time_ms is None else f"{self.wall_time_ms:.1f}"
        return [
            repr(float(self.delta)),
            str(self.seed),
            num(self.alpha_star),
            num(self.error),
            num(self.ratio),
            str(self.ladder_length),
            wall,
            "1" if self.failed else "0",
        ]


def _apriori_ladder(alpha: float, alpha0: float = 1.0) -> list[float]:
    # halving ladder from alpha0 down to the target, used for warm starts
    ladder = []
    a = alpha0
    while a > alpha * (1 + 1e-12):
        ladder.append(a)
        a *= 0.5
    ladder.append(alpha)
    return ladder


def run_cell(config: ExperimentConfig, delta: float, seed: int) -> ExperimentRecord:
    """One (delta, seed) cell of a table."""
    setup = ProblemSetup.create(config.p_true, config.n)
    cfg = config.reg_config()
    noise = make_noise(setup, delta, seed)
    start = time.perf_counter()
    if config.rule == "discrepancy":
        try:
            alpha_star, mini, trace = discrepancy_search(noise, cfg, config.discrepancy_config())
        except DiscrepancyError as exc:
            wall = (time.perf_counter() - start) * 1e3 if config.timing else None
            return ExperimentRecord(delta, seed, None, None, None, len(exc.trace) - 1, wall, True)
        length = sum(1 for a, _ in trace if not math.isinf(a))
        u = mini.u.values
    else:
        alpha_star = apriori_alpha(
            config.smoothness_case(), delta, cfg, config.c, config.exponent
        )
        ladder = _apriori_ladder(alpha_star, config.alpha0)
        u = alpha_scan(noise, cfg, ladder)[-1].u.values
        length = len(ladder)
    wall = (time.perf_counter() - start) * 1e3 if config.timing else None
    err = float(np.max(np.abs(u - setup.u_true.values)))
    ratio = error_ratio(err, delta, config.p_true, config.a)
    return ExperimentRecord(delta, seed, alpha_star, err, ratio, length, wall, False, u)


def _cell_args(config, seed_base):
    return [(config, d, seed_base + s) for d in config.deltas for s in config.seeds]


def _run_cell_tuple(args):
    return run_cell(*args)


def run_records(config: ExperimentConfig, jobs: int = 1, seed_base: int = 0) -> list[ExperimentRecord]:
    """All cells in (delta, seed) order; cells run on ``jobs`` worker processes."""
    args = _cell_args(config, seed_base)
    if jobs <= 1:
        return [run_cell(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell_tuple, args))


def table_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()


def run_table(config: ExperimentConfig, out_dir=None, jobs: int = 1, seed_base: int = 0):
    """Write ``<name>_table.csv`` and return ``(path, records)``."""
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = run_records(config, jobs, seed_base)
    path = out / f"{config.name}_table.csv"
    path.write_text(table_csv(records))
    return path, records


# -- rates --------------------------------------------------------------------


def fit_rate(deltas, errors) -> float:
    """Slope of ``log error`` against ``log delta``."""
    d = np.asarray(deltas, dtype=float)
    e = np.asarray(errors, dtype=float)
    if d.size < 2 or np.unique(d).size < 2:
        raise ValueError("rate fit needs at least two distinct noise levels")
    if np.any(d <= 0) or np.any(e <= 0):
        raise ValueError("rate fit needs positive noise levels and errors")
    return float(np.polyfit(np.log(d), np.log(e), 1)[0])


@dataclass(frozen=True)
class RateReport:
    rule: str
    p_true: float
    target: float
    slope: float
    deltas: tuple
    median_errors: tuple
    median_ratios: tuple
    failures: int

    def text(self) -> str:
        lines = [
            f"rule: {self.rule}",
            f"p_true: {self.p_true}",
            f"target slope p/(p+a): {self.target:.4f}",
            f"fitted slope: {self.slope:.4f}",
            f"deviation: {self.slope - self.target:+.4f}",
            f"failed cells: {self.failures}",
        ]
        return "\n".join(lines) + "\n"


def check_rate_design(config: ExperimentConfig):
    d = np.asarray(config.deltas)
    if np.unique(d).size < 4:
        raise ConfigError("rate study needs at least 4 distinct noise levels")
    if math.log10(d.max() / d.min()) < 2:
        raise ConfigError("rate study needs noise levels spanning at least 2 decades")
    if len(config.seeds) < 3:
        raise ConfigError("rate study needs at least 3 seeds")


def summarize_rates(config: ExperimentConfig, records) -> RateReport:
    med_err, med_ratio = [], []
    for d in config.deltas:
        rows = [r for r in records if r.delta == d and not r.failed]
        if not rows:
            raise RuntimeError(f"every cell failed at delta = {d}")
        med_err.append(statistics.median(r.error for r in rows))
        med_ratio.append(statistics.median(r.ratio for r in rows))
    slope = fit_rate(config.deltas, med_err)
    return RateReport(
        config.rule,
        config.p_true,
        config.p_true / (config.p_true + config.a),
        slope,
        tuple(config.deltas),
        tuple(med_err),
        tuple(med_ratio),
        sum(r.failed for r in records),
    )


def run_rates(config: ExperimentConfig, out_dir=None, jobs: int = 1, seed_base: int = 0):
    """Median error per noise level, its log-log slope and the target order."""
    check_rate_design(config)
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = run_records(config, jobs, seed_base)
    (out / f"{config.name}_table.csv").write_text(table_csv(records))
    report = summarize_rates(config, records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("delta", "median_error", "median_ratio"))
    for d, e, q in zip(report.deltas, report.median_errors, report.median_ratios):
        w.writerow((repr(float(d)), repr(float(e)), repr(float(q))))
    (out / f"{config.name}_rates.csv").write_text(buf.getvalue())
    (out / f"{config.name}_rates.txt").write_text(report.text())
    return report


# -- figure ---------------------------------------------------------------------


@dataclass(frozen=True)
class FigureResult:
    seed: int
    alphas: tuple
    errors: tuple
    alpha_star: float
    error_star: float

    def u_shaped(self) -> bool:
        return self.errors[0] > self.error_star and self.errors[-1] > self.error_star


def _figure_seed(config: ExperimentConfig, seed: int):
    setup = ProblemSetup.create(config.p_true, config.n)
    cfg = config.reg_config()
    noise = make_noise(setup, config.figure_delta, seed)
    targets = sorted(set(config.figure_alphas), reverse=True)
    # a halving ladder through every requested rung keeps warm starts close
    ladder = sorted(
        set(_apriori_ladder(min(targets), config.alpha0)) | set(targets), reverse=True
    )
    ladder = [a for a in ladder if a <= max(config.alpha0, max(targets))]
    mins = {m.alpha: m for m in alpha_scan(noise, cfg, ladder)}
    picked = [mins[a] for a in config.figure_alphas]
    alpha_star, best, _ = discrepancy_search(noise, cfg, config.discrepancy_config())
    err = [float(np.max(np.abs(m.u.values - setup.u_true.values))) for m in picked]
    err_star = float(np.max(np.abs(best.u.values - setup.u_true.values)))
    return setup, picked, FigureResult(seed, tuple(config.figure_alphas), tuple(err), alpha_star, err_star)


def _figure_task(args):
    config, seed = args
    return _figure_seed(config, seed)


def write_svg(path, x, curves, title="", width=480, height=320):
    """Minimal line plot; ``curves`` is a list of ``(label, y, colour)``."""
    pad = 40
    ys = np.concatenate([np.asarray(c[1]) for c in curves])
    y0, y1 = float(ys.min()), float(ys.max())
    if y1 == y0:
        y1 = y0 + 1.0
    x = np.asarray(x, dtype=float)

    def px(v):
        return pad + (v - x[0]) / (x[-1] - x[0]) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{pad}" y="{pad / 2:.0f}" font-size="12">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="4" y="{pad}" font-size="10">{y1:.3g}</text>',
        f'<text x="4" y="{height - pad}" font-size="10">{y0:.3g}</text>',
    ]
    for k, (label, y, colour) in enumerate(curves):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - pad - 90}" y="{pad + 14 * k}" font-size="10" fill="{colour}">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def run_figure(config: ExperimentConfig, out_dir=None, jobs: int = 1, seed_base: int = 0):
    """Minimisers at the figure rungs for every seed, plus an error summary."""
    out = Path(out_dir or config.output_dir) / f"{config.name}_figure"
    out.mkdir(parents=True, exist_ok=True)
    args = [(config, seed_base + s) for s in config.seeds]
    if jobs <= 1:
        runs = [_figure_task(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_figure_task, args))

    results = []
    summary = io.StringIO()
    w = csv.writer(summary, lineterminator="\n")
    w.writerow(("seed", "alpha", "error", "selected"))
    for setup, picked, res in runs:
        results.append(res)
        x = setup.grid.nodes
        for k, m in enumerate(picked):
            stem = out / f"seed{res.seed}_alpha{k}"
            with open(f"{stem}.dat", "w") as fh:
                fh.write(f"# alpha = {float(m.alpha)!r}\n# x u_alpha u_true\n")
                for xi, ui, ti in zip(x, m.u.values, setup.u_true.values):
                    fh.write(f"{float(xi)!r} {float(ui)!r} {float(ti)!r}\n")
            if config.emit_plots:
                write_svg(
                    f"{stem}.svg",
                    x,
                    [("u_alpha", m.u.values, "#c0392b"), ("u_true", setup.u_true.values, "#2c3e50")],
                    title=f"alpha = {m.alpha:.3g}, error = {res.errors[k]:.3f}",
                )
            w.writerow((res.seed, repr(float(m.alpha)), repr(float(res.errors[k])), 0))
        star = "inf" if math.isinf(res.alpha_star) else repr(float(res.alpha_star))
        w.writerow((res.seed, star, repr(float(res.error_star)), 1))
    (out / "summary.csv").write_text(summary.getvalue())
    return results


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **kw)


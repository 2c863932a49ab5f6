import csv
import io
import math

import numpy as np
import pytest

from oversmoothing.experiments import (
    TABLE_COLUMNS,
    ConfigError,
    ExperimentConfig,
    check_rate_design,
    fit_rate,
    load_config,
    parse_config,
    run_cell,
    run_figure,
    run_table,
    summarize_rates,
    table_csv,
    with_overrides,
)
from oversmoothing.forward import ProblemSetup
from oversmoothing.rules import error_ratio

SMALL = ExperimentConfig(p_true=0.7, deltas=(0.05, 0.025), seeds=(1, 2), timing=False, name="small")


def test_parse_full_config():
    cfg = parse_config(
        """
[experiment]
name = t
p_true = 0.3
deltas = 0.05, 0.025,
  0.0125
seeds = 1-3, 7
emit_plots = yes
timing = off
[rule]
kind = apriori
c = 4   # inline comment
[figure]
delta = 0.01
alphas = 0.5, 0.25
"""
    )
    assert cfg.deltas == (0.05, 0.025, 0.0125)
    assert cfg.seeds == (1, 2, 3, 7)
    assert cfg.rule == "apriori" and cfg.c == 4.0
    assert cfg.emit_plots and not cfg.timing
    assert cfg.figure_delta == 0.01 and cfg.figure_alphas == (0.5, 0.25)


@pytest.mark.parametrize(
    "text",
    [
        "[experiment]\np_true = 1.5\n",
        "[experiment]\np_true = zero\n",
        "[experiment]\ndeltas = 0.01, 0.05\n",
        "[experiment]\ndeltas = 0.05, -0.01\n",
        "[experiment]\nseeds = 1, 1\n",
        "[experiment]\nbogus = 1\n",
        "[nosuch]\nx = 1\n",
        "[rule]\nkind = magic\n",
        "[rule]\ntheta = 1\n",
        "[rule]\nb = 0.5\n",
        "[rule]\ncase = strange\n",
        "[experiment]\ntiming = maybe\n",
        "no section header\n",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_shipped_configs_parse():
    from pathlib import Path

    paths = sorted(Path(__file__).parent.parent.joinpath("configs").glob("*.ini"))
    assert paths
    for p in paths:
        load_config(p)


def test_golden_header_and_determinism(tmp_path):
    p1, rec1 = run_table(SMALL, tmp_path / "a")
    p2, _ = run_table(SMALL, tmp_path / "b")
    text = p1.read_text()
    assert text == p2.read_text()
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == TABLE_COLUMNS
    assert len(rows) == 1 + len(SMALL.deltas) * len(SMALL.seeds)
    assert all(len(r) == len(TABLE_COLUMNS) for r in rows)
    assert [(float(r[0]), int(r[1])) for r in rows[1:]] == [(d, s) for d in SMALL.deltas for s in SMALL.seeds]
    # the ratio column is recomputable from the row
    for r in rows[1:]:
        assert float(r[4]) == pytest.approx(error_ratio(float(r[3]), float(r[0]), 0.7))
        assert r[6] == "" and r[7] == "0"


def test_wall_time_present_when_timing(tmp_path):
    rec = run_cell(with_overrides(SMALL, timing=True), 0.05, 1)
    assert rec.wall_time_ms > 0


def test_seed_base_changes_noise():
    a = run_cell(SMALL, 0.05, 1)
    b = run_cell(SMALL, 0.05, 101)
    assert a.error != b.error


def test_huge_noise_gives_infinity():
    setup = ProblemSetup.create(0.7)
    cfg = with_overrides(SMALL, deltas=(10.0,))
    rec = run_cell(cfg, 10.0, 1)
    assert math.isinf(rec.alpha_star)
    assert rec.error == pytest.approx(setup.u_true.max_norm())
    assert rec.ladder_length == 0
    assert rec.row()[2] == "inf"


def test_apriori_rule_cell():
    cfg = with_overrides(SMALL, rule="apriori")
    rec = run_cell(cfg, 0.05, 1)
    assert rec.alpha_star == pytest.approx(16 * 0.05 ** (2 / 1.7))
    assert not rec.failed and rec.ladder_length >= 1


def test_failed_row_when_ladder_too_short():
    cfg = with_overrides(SMALL, k_max=1)
    rec = run_cell(cfg, 0.0002, 1)
    assert rec.failed
    row = rec.row()
    assert row[2] == row[3] == row[4] == "" and row[7] == "1"
    assert "1" in table_csv([rec]).splitlines()[1].split(",")[-1]


def test_fit_rate_oracle():
    d = np.array([0.1, 0.01, 0.001])
    assert fit_rate(d, 3 * d**0.4) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        fit_rate([0.1, 0.1], [1.0, 2.0])
    with pytest.raises(ValueError):
        fit_rate([0.1], [1.0])


def test_rate_design_guards():
    with pytest.raises(ConfigError):
        check_rate_design(SMALL)
    wide = with_overrides(SMALL, deltas=(0.1, 0.01, 0.003, 0.001), seeds=(1, 2, 3))
    check_rate_design(wide)
    narrow = with_overrides(wide, deltas=(0.1, 0.05, 0.03, 0.02))
    with pytest.raises(ConfigError):
        check_rate_design(narrow)


def test_summarize_rates_small():
    cfg = with_overrides(SMALL, deltas=(0.1, 0.01, 0.003, 0.001), seeds=(1, 2, 3))
    from oversmoothing.experiments import run_records

    report = summarize_rates(cfg, run_records(cfg))
    assert not report.failures
    assert "slope" in report.text()


def test_run_figure_outputs(tmp_path):
    cfg = with_overrides(SMALL, seeds=(1,), figure_alphas=(0.125, 2.0**-9), emit_plots=True, name="fig")
    results = run_figure(cfg, tmp_path)
    out = tmp_path / "fig_figure"
    for k in range(2):
        data = np.loadtxt(out / f"seed1_alpha{k}.dat")
        assert data.shape == (101, 3)
        assert data[0, 1] == 0.0 and data[0, 2] == 0.0
        assert (out / f"seed1_alpha{k}.svg").read_text().startswith("<svg")
    rows = list(csv.reader(io.StringIO((out / "summary.csv").read_text())))
    assert rows[0] == ["seed", "alpha", "error", "selected"]
    assert [r[3] for r in rows[1:]] == ["0", "0", "1"]
    assert len(results) == 1 and len(results[0].errors) == 2

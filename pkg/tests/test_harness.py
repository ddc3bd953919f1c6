"""Experiment harness: configs, Monte Carlo tables, CSV round trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icafix.distributions import ParameterError
from icafix.empirical import StoppingRule
from icafix.harness import (
    CELLS_HEADER,
    CURVE_HEADER,
    DEFAULT_RULES,
    TABLE1_DISTRIBUTIONS,
    TABLE2_SCENARIOS,
    ExperimentConfig,
    build_model,
    cells_csv,
    figure1_csv,
    figure1_data,
    monte_carlo_cells,
    parse_config,
    parse_rule,
    summarize,
    table1,
    table1_csv,
    table2,
    table2_csv,
    write_csv,
)
from icafix.nonlinearity import builtin
from icafix.population import ConfigurationError, make_engine

import oracles


def tiny_config(**kw):
    base = dict(distributions=("uniform",), d=2, nls=("gauss",),
                n=500, trials=5, rules=(parse_rule("1e-6"),))
    base.update(kw)
    return ExperimentConfig(**base)


# --- rule parsing ---

def test_parse_rule_plain_and_min_iterations():
    assert parse_rule("1e-4") == StoppingRule(1e-4)
    assert parse_rule(" 1e-8 ") == StoppingRule(1e-8)
    assert parse_rule("2.5e-6") == StoppingRule(2.5e-6)
    assert parse_rule("1e-4x10") == StoppingRule(1e-4, min_iterations=10)


def test_parse_rule_rejects_garbage():
    with pytest.raises(ValueError):
        parse_rule("tight")
    with pytest.raises(ValueError):
        parse_rule("1e-4x0")


@given(st.sampled_from(("1", "2.5", "5")), st.integers(-12, -1),
       st.integers(1, 99))
@settings(max_examples=60, deadline=None)
def test_rule_label_round_trips(mant, expo, min_iter):
    rule = StoppingRule(float(f"{mant}e{expo}"), min_iterations=min_iter)
    assert parse_rule(rule.label()) == rule


# --- configuration ---

def test_config_defaults():
    cfg = ExperimentConfig()
    assert cfg.distributions == TABLE1_DISTRIBUTIONS
    assert cfg.d == 2
    assert cfg.mixing == "identity"
    assert cfg.rules == DEFAULT_RULES
    assert tuple(r.label() for r in DEFAULT_RULES) == (
        "1e-4", "1e-6", "1e-8", "1e-4x10")


def test_config_validation():
    with pytest.raises(ConfigurationError, match="trials"):
        tiny_config(trials=0)
    with pytest.raises(ConfigurationError, match="d >= 2"):
        tiny_config(d=1)
    with pytest.raises(ConfigurationError, match="mixing"):
        tiny_config(mixing="shear")
    with pytest.raises(KeyError):
        tiny_config(nls=("gauss", "sigmoid"))
    with pytest.raises(ParameterError):
        tiny_config(distributions=("uniform", "cauchy"))


def test_scenario_presets_are_wellformed():
    assert set(TABLE2_SCENARIOS) == {"a", "b", "c"}
    for labels in TABLE2_SCENARIOS.values():
        assert len(labels) == 5
    assert len(TABLE1_DISTRIBUTIONS) == 9


def test_build_model_label_handling():
    one = build_model(tiny_config(d=3), ("laplace",))
    assert one.d == 3
    assert all(s.label == "laplace" for s in one.sources)
    np.testing.assert_array_equal(one.A, np.eye(3))
    exact = build_model(tiny_config(distributions=("uniform", "laplace")))
    assert [s.label for s in exact.sources] == ["uniform", "laplace"]
    with pytest.raises(ConfigurationError, match="labels"):
        build_model(tiny_config(d=3), ("uniform", "laplace"))


def test_build_model_random_mixing_is_seeded():
    a = build_model(tiny_config(mixing="random", mixing_seed=9), ("uniform",))
    b = build_model(tiny_config(mixing="random", mixing_seed=9), ("uniform",))
    np.testing.assert_array_equal(a.A, b.A)
    np.testing.assert_allclose(a.A.T @ a.A, np.eye(2), atol=1e-12)


# --- Monte Carlo cells ---

def test_monte_carlo_cells_shape_and_determinism():
    cfg = tiny_config(nls=("gauss", "kurtosis"),
                      rules=(parse_rule("1e-4"), parse_rule("1e-8")))
    rows = monte_carlo_cells(cfg)
    assert len(rows) == 4
    assert [(r.nl, r.rule) for r in rows] == [
        ("gauss", "1e-4"), ("gauss", "1e-8"),
        ("kurtosis", "1e-4"), ("kurtosis", "1e-8")]
    for r in rows:
        assert r.trials == 5
        assert 0 <= r.spurious <= r.trials
        assert 0 <= r.failures <= r.trials
    assert monte_carlo_cells(cfg) == rows


def test_shared_trajectory_matches_single_rule_runs():
    # per-trial seeds depend only on (seed, row, col, trial), so running
    # the four rules jointly on one trajectory must reproduce the counts
    # of four separate single-rule experiments exactly
    base = dict(distributions=("bimod:-0.4,2",), d=2, nls=("gauss",),
                n=800, trials=30)
    joint = monte_carlo_cells(ExperimentConfig(rules=DEFAULT_RULES, **base))
    for i, rule in enumerate(DEFAULT_RULES):
        solo = monte_carlo_cells(ExperimentConfig(rules=(rule,), **base))
        assert (solo[0].spurious, solo[0].failures) == (
            joint[i].spurious, joint[i].failures)


# --- spurious-count table ---

def test_table1_rows_and_population_column():
    cfg = tiny_config(distributions=("uniform", "bimod:-0.4,2"),
                      nls=("gauss", "kurtosis"), n=300, trials=3,
                      rules=(parse_rule("1e-4"),))
    rows = table1(cfg)
    assert [(r.dist, r.nl) for r in rows] == [
        ("uniform", "gauss"), ("uniform", "kurtosis"),
        ("bimod:-0.4,2", "gauss"), ("bimod:-0.4,2", "kurtosis")]
    for r in rows:
        assert r.rules == ("1e-4",)
        assert len(r.spurious) == len(r.failures) == 1
        assert r.trials == 3
    # the ||f'|| column is quadrature, seed-free, and for asymmetric laws
    # reports the smaller of the two diagonal sign classes
    assert rows[0].fprime_norm == pytest.approx(
        oracles.diagonal_fprime("uniform", "gauss"), abs=1e-6)
    assert rows[1].fprime_norm == pytest.approx(3.0, abs=1e-9)
    want = min(oracles.diagonal_fprime("bimod:-0.4,2", "gauss", sign=1.0),
               oracles.diagonal_fprime("bimod:-0.4,2", "gauss", sign=-1.0))
    assert rows[2].fprime_norm == pytest.approx(want, abs=1e-6)


def test_table1_rejects_odd_dimensions():
    with pytest.raises(ConfigurationError, match="\\{2, 3, 5\\}"):
        table1(tiny_config(d=4))


# --- sample-size table ---

def test_table2_preset_scenario_rows():
    cfg = tiny_config(nls=("kurtosis",), trials=2,
                      sample_sizes=(200, 400))
    rows = table2(cfg, scenario="c")
    assert [(r.scenario, r.n, r.nl) for r in rows] == [
        ("c", 200, "kurtosis"), ("c", 400, "kurtosis")]
    for r in rows:
        assert r.trials == 2
        assert 0 <= r.bad <= 2
        assert 0 <= r.failures <= 2


def test_table2_custom_scenario_uses_config_sources():
    cfg = tiny_config(distributions=("uniform", "laplace"), nls=("gauss",),
                      trials=2, sample_sizes=(300,))
    rows = table2(cfg, scenario="mine")
    assert len(rows) == 1
    assert rows[0].scenario == "custom"
    # an explicit override rule is accepted in place of the 1e-8 default
    loose = table2(cfg, scenario="mine", rule=StoppingRule(1e-2))
    assert loose[0].trials == 2


# --- half-circle curves ---

def test_figure1_data_grid_and_fixed_points():
    model = build_model(tiny_config(), ("uniform",))
    engine = make_engine(model)
    rows = figure1_data(model, engine, builtin("gauss"), grid=21)
    assert len(rows) == 21
    assert rows[0].theta == 0.0
    assert rows[-1].theta == pytest.approx(math.pi)
    # phi vanishes at the two axes and at the diagonal
    for idx in (0, 5, 10, 20):
        assert rows[idx].phi_norm < 1e-9
    assert rows[5].theta == pytest.approx(math.pi / 4)
    assert rows[5].fprime_norm == pytest.approx(
        oracles.diagonal_fprime("uniform", "gauss"), abs=1e-6)
    # between fixed points the map moves
    assert rows[2].phi_norm > 1e-3
    assert all(np.isfinite(r.contrast) for r in rows)


def test_figure1_data_guards():
    model = build_model(tiny_config(), ("uniform",))
    engine = make_engine(model)
    with pytest.raises(ConfigurationError, match="two grid points"):
        figure1_data(model, engine, builtin("gauss"), grid=1)
    model3 = build_model(tiny_config(d=3), ("uniform",))
    with pytest.raises(ConfigurationError, match="two-dimensional"):
        figure1_data(model3, make_engine(model3), builtin("gauss"))


# --- CSV emission ---

def test_write_csv_formatting(tmp_path):
    path = tmp_path / "out.csv"
    write_csv(str(path), ("a", "b", "c"),
              [(0.1, float("nan"), -0.0), (5.11958243245, "", 7)])
    text = path.read_text(encoding="utf-8")
    assert text == "a,b,c\n0.1,nan,0\n5.11958243245,,7\n"
    assert "\r" not in text


def test_write_csv_to_stdout(capsys):
    write_csv("-", ("x",), [(1.5,)])
    assert capsys.readouterr().out == "x\n1.5\n"


def test_table_csv_round_trip(tmp_path):
    cfg = tiny_config(nls=("gauss",), trials=4, n=300,
                      rules=(parse_rule("1e-4"), parse_rule("1e-8")))
    rows = monte_carlo_cells(cfg)
    path = tmp_path / "cells.csv"
    cells_csv(str(path), rows)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CELLS_HEADER)
    assert len(lines) == 1 + len(rows)
    # byte-identical across a rerun of the same experiment
    again = tmp_path / "again.csv"
    cells_csv(str(again), monte_carlo_cells(cfg))
    assert again.read_bytes() == path.read_bytes()


def test_table1_csv_is_long_format(tmp_path):
    cfg = tiny_config(distributions=("uniform",), nls=("kurtosis",),
                      n=300, trials=2,
                      rules=(parse_rule("1e-4"), parse_rule("1e-8")))
    path = tmp_path / "t1.csv"
    table1_csv(str(path), table1(cfg))
    lines = path.read_text().splitlines()
    # one line per (dist, nl, rule)
    assert len(lines) == 3
    assert lines[1].startswith("uniform,kurtosis,3,1e-4,")
    assert lines[2].startswith("uniform,kurtosis,3,1e-8,")


def test_figure1_csv_headers(tmp_path):
    model = build_model(tiny_config(), ("uniform",))
    rows = figure1_data(model, make_engine(model), builtin("gauss"), grid=3)
    path = tmp_path / "curve.csv"
    figure1_csv(str(path), rows)
    assert path.read_text().splitlines()[0] == ",".join(CURVE_HEADER)


# --- summaries ---

def test_summarize_rates_and_intervals(tmp_path):
    path = tmp_path / "counts.csv"
    write_csv(str(path), CELLS_HEADER, [
        ("gauss", "1e-4", 4, 1, 0),
        ("gauss", "1e-8", 10000, 0, 0),
    ])
    rows = summarize(str(path))
    assert rows[0]["nl"] == "gauss" and rows[0]["rule"] == "1e-4"
    assert not rows[0]["missing"]
    assert rows[0]["rate"] == pytest.approx(0.25)
    assert rows[0]["lo"] == 0.0
    assert rows[0]["hi"] == pytest.approx(0.25 + 1.96 * math.sqrt(0.25 * 0.75 / 4))
    # a zero count gets the one-sided exact interval, not a zero width
    assert rows[1]["rate"] == 0.0
    assert rows[1]["lo"] == 0.0
    assert rows[1]["hi"] == pytest.approx(3.688e-4, rel=1e-3)


def test_summarize_accepts_bad_column_and_flags_missing(tmp_path):
    path = tmp_path / "scaling.csv"
    path.write_text("scenario,n,nl,trials,bad,failures\n"
                    "c,500,gauss,100,7,0\n"
                    "c,1500,gauss,100,,0\n", encoding="utf-8")
    rows = summarize(str(path))
    assert rows[0]["rate"] == pytest.approx(0.07)
    assert rows[1]["missing"] is True
    assert math.isnan(rows[1]["rate"])


def test_summarize_rejects_unusable_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ValueError, match="empty"):
        summarize(str(empty))
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="trials"):
        summarize(str(wrong))


# --- config files ---

def test_parse_config_reads_flat_keys(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "# experiment\n"
        "Trials = 50\n"
        "dist = uniform, laplace   # two laws\n"
        "\n"
        "rule = 1e-4x10\n",
        encoding="utf-8",
    )
    got = parse_config(str(path))
    assert got == {"trials": "50", "dist": "uniform, laplace",
                   "rule": "1e-4x10"}


def test_parse_config_reports_bad_lines(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("trials = 5\nnonsense\n", encoding="utf-8")
    with pytest.raises(ValueError, match=r"bad\.cfg:2: expected"):
        parse_config(str(path))
    nokey = tmp_path / "nokey.cfg"
    nokey.write_text("= 5\n", encoding="utf-8")
    with pytest.raises(ValueError, match="nokey"):
        parse_config(str(nokey))

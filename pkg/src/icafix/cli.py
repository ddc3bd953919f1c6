"""Command-line interface.

Subcommands: scan, classify, run, montecarlo, table, figure1.  Every
option can also come from a flat ``key = value`` config file passed via
--config; an option given on the command line wins over the file.  All
delimited output is UTF-8 CSV with a header row and LF line endings.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import click
import numpy as np

from . import harness
from .distributions import (
    NumericFailureError,
    ParameterError,
    UnsupportedOperationError,
    parse_distribution,
)
from .empirical import StoppingRule, generate_sample, run as run_algorithm
from .fixed_points import (
    NotAFixedPointError,
    classify as classify_point,
    scan_circle,
)
from .harness import ExperimentConfig, parse_config, parse_rule, write_csv
from .nonlinearity import BUILTIN_NAMES, builtin
from .population import (
    AssumptionViolationError,
    ConfigurationError,
    MixingModel,
    as_unit,
    make_engine,
)

SCAN_COLUMNS = ("theta", "v1", "v2", "alpha", "fprime_norm", "class",
                "residual")

_BOOL_WORDS = {"1": True, "true": True, "yes": True, "on": True,
               "0": False, "false": False, "no": False, "off": False}


def _to_bool(text: str) -> bool:
    try:
        return _BOOL_WORDS[text.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}") from None


#: config-file value converters, keyed by option name
_CONVERTERS = {
    "dist": str, "nl": str, "n": int, "d": int, "eps": float,
    "min_iter": int, "max_iter": int, "seed": int, "trials": int,
    "grid": int, "theta": float, "w0": str, "which": int, "scenario": str,
    "method": str, "nodes": int, "mixing": str, "mixing_seed": int,
    "rules": str, "sample_sizes": str, "out": str, "threshold": float,
    "full": _to_bool, "plot": _to_bool, "trace": _to_bool,
}


def _merge_config(ctx: click.Context, params: dict) -> dict:
    """Overlay config-file values onto defaulted parameters; CLI wins."""
    path = params.pop("config", None)
    if not path:
        return params
    try:
        file_values = parse_config(path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc))
    from click.core import ParameterSource

    defaulted = (ParameterSource.DEFAULT, ParameterSource.DEFAULT_MAP)
    for key, raw in file_values.items():
        if key not in params:
            continue
        if ctx.get_parameter_source(key) in defaulted:
            try:
                params[key] = _CONVERTERS[key](raw)
            except (ValueError, KeyError) as exc:
                raise click.ClickException(f"config key {key!r}: {exc}")
    return params


def _config_option(fn):
    return click.option("--config", type=click.Path(exists=True, dir_okay=False),
                        default=None, help="Flat key = value config file; "
                        "explicit command-line flags win.")(fn)


def _engine_options(fn):
    fn = click.option("--nodes", type=int, default=None,
                      help="Quadrature nodes per axis (engine default if unset).")(fn)
    fn = click.option("--method", default=None,
                      type=click.Choice(["gauss_hermite_mixture",
                                         "tensor_quadrature",
                                         "quasi_monte_carlo"]),
                      help="Expectation engine (auto-selected if unset).")(fn)
    return fn


def _model_options(fn):
    fn = click.option("--mixing-seed", type=int, default=0,
                      help="Seed for the random orthogonal mixing matrix.")(fn)
    fn = click.option("--mixing", type=click.Choice(["identity", "random"]),
                      default="identity", help="Mixing matrix choice.")(fn)
    fn = click.option("--d", type=int, default=2, help="Dimension.")(fn)
    fn = click.option("--dist", default="bimod:-0.4,2",
                      help="Comma-separated source laws; one label is "
                      "repeated to dimension d.")(fn)
    return fn


def _build_model(dist: str, d: int, mixing: str, mixing_seed: int) -> MixingModel:
    labels = _split_labels(dist)
    if len(labels) == 1:
        labels = labels * d
    sources = [parse_distribution(lb) for lb in labels]
    if mixing == "identity":
        return MixingModel.identity(sources)
    return MixingModel.random(sources, seed=mixing_seed)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _echo_rows(header, rows, out: str | None) -> None:
    write_csv(out or "-", header, rows)
    _report_csv(out, len(rows))


def _report_csv(out: str | None, n_rows: int) -> None:
    # stdout emission is the report; only real files get a confirmation
    if out and out != "-":
        click.echo(f"wrote {out} ({n_rows} rows)")


def _record_row(record) -> tuple:
    row = record.csv_row()
    return tuple(row.get(col) for col in SCAN_COLUMNS)


def main(args=None):
    cli(args=args, prog_name="icafix")


@click.group()
def cli():
    """Fixed points and spurious solutions of one-unit FastICA."""


@cli.command()
@_model_options
@_engine_options
@click.option("--nl", default="gauss", help=f"Nonlinearity: {BUILTIN_NAMES}.")
@click.option("--grid", type=int, default=3600,
              help="Bracketing grid resolution on [0, pi].")
@click.option("--out", default="scan.csv", help="Output CSV ('-' = stdout).")
@_config_option
@click.pass_context
def scan(ctx, **params):
    """Locate and classify all fixed points on the half-circle (d = 2)."""
    p = _merge_config(ctx, params)
    model = _build_model(p["dist"], 2, p["mixing"], p["mixing_seed"])
    engine = make_engine(model, method=p["method"], nodes=p["nodes"])
    records = scan_circle(model, engine, builtin(p["nl"]), grid=p["grid"])
    _echo_rows(SCAN_COLUMNS, [_record_row(r) for r in records], p["out"])


@cli.command()
@_model_options
@_engine_options
@click.option("--nl", default="gauss", help=f"Nonlinearity: {BUILTIN_NAMES}.")
@click.option("--theta", type=float, default=None,
              help="Angle on the a1-a2 circle (d = 2 only).")
@click.option("--w0", default=None,
              help="Candidate vector, comma-separated coordinates.")
@click.option("--out", default="-", help="Output CSV ('-' = stdout).")
@_config_option
@click.pass_context
def classify(ctx, **params):
    """Classify one candidate fixed point given by --theta or --w0."""
    p = _merge_config(ctx, params)
    model = _build_model(p["dist"], p["d"], p["mixing"], p["mixing_seed"])
    engine = make_engine(model, method=p["method"], nodes=p["nodes"])
    if (p["theta"] is None) == (p["w0"] is None):
        raise click.UsageError("give exactly one of --theta or --w0")
    if p["theta"] is not None:
        if model.d != 2:
            raise click.UsageError("--theta needs d = 2; use --w0")
        v = model.A @ np.array([math.cos(p["theta"]), math.sin(p["theta"])])
        theta = p["theta"]
    else:
        v = as_unit([float(x) for x in p["w0"].split(",")])
        if v.size != model.d:
            raise click.UsageError(f"--w0 needs {model.d} coordinates")
        theta = None
    record = classify_point(model, engine, builtin(p["nl"]), v, theta=theta)
    row = record.csv_row()
    header = tuple(row.keys())
    _echo_rows(header, [tuple(row.values())], p["out"])


@cli.command()
@_model_options
@click.option("--nl", default="gauss", help=f"Nonlinearity: {BUILTIN_NAMES}.")
@click.option("--n", type=int, default=5000, help="Sample size.")
@click.option("--eps", type=float, default=1e-8, help="Stopping tolerance.")
@click.option("--min-iter", type=int, default=1, help="Minimum iterations.")
@click.option("--max-iter", type=int, default=1000, help="Iteration cap.")
@click.option("--seed", type=int, default=0, help="Master seed.")
@click.option("--w0", default=None,
              help="Initial iterate (default: random from seed).")
@click.option("--trace/--no-trace", default=False,
              help="Write per-iteration trace CSV to --out.")
@click.option("--out", default="run_trace.csv",
              help="Trace CSV path (with --trace).")
@_config_option
@click.pass_context
def run(ctx, **params):
    """One empirical FastICA run: sample, whiten, iterate, report."""
    p = _merge_config(ctx, params)
    model = _build_model(p["dist"], p["d"], p["mixing"], p["mixing_seed"])
    rule = StoppingRule(epsilon=p["eps"], min_iterations=p["min_iter"],
                        max_iterations=p["max_iter"])
    rng = np.random.default_rng(p["seed"])
    sample = generate_sample(model, p["n"], rng)
    if p["w0"] is not None:
        w0 = as_unit([float(x) for x in p["w0"].split(",")])
        if w0.size != model.d:
            raise click.UsageError(f"--w0 needs {model.d} coordinates")
    else:
        w0 = rng.standard_normal(model.d)
        w0 /= np.linalg.norm(w0)
    result = run_algorithm(sample, builtin(p["nl"]), w0, rule,
                           trace=p["trace"])
    for key in ("iterations", "halted_by", "convergence_mode", "deviation",
                "matched_source", "failure"):
        value = getattr(result, key)
        click.echo(f"{key}={harness._format_cell(value)}")
    click.echo("w_final=" + ",".join(format(x, ".12g")
                                     for x in result.w_final))
    if p["trace"]:
        header = ("iter",) + tuple(f"w{k}" for k in
                                   range(1, model.d + 1)) + ("delta",)
        rows = [(it, *w, delta) for it, w, delta in result.trace]
        write_csv(p["out"], header, rows)
        click.echo(f"wrote {p['out']} ({len(rows)} rows)")


def _apply_full(ctx, p):
    if p["full"] and ctx.get_parameter_source("trials") in (
            click.core.ParameterSource.DEFAULT,
            click.core.ParameterSource.DEFAULT_MAP):
        p["trials"] = 10000


@cli.command()
@_model_options
@_engine_options
@click.option("--nl", default="gauss,tanh,kurtosis",
              help="Comma-separated nonlinearities.")
@click.option("--n", type=int, default=5000, help="Sample size.")
@click.option("--trials", type=int, default=2000, help="Trials per cell.")
@click.option("--rules", default="1e-4,1e-6,1e-8,1e-4x10",
              help="Comma-separated stopping rules (eps or epsxmin).")
@click.option("--threshold", type=float, default=0.01,
              help="Deviation threshold for a bad estimate.")
@click.option("--seed", type=int, default=0, help="Master seed.")
@click.option("--full", is_flag=True, help="Use 10000 trials.")
@click.option("--plot", is_flag=True, help="Also render a rate chart PNG.")
@click.option("--out", default="montecarlo.csv", help="Output CSV.")
@_config_option
@click.pass_context
def montecarlo(ctx, **params):
    """Monte Carlo spurious-solution counts for one source model."""
    p = _merge_config(ctx, params)
    _apply_full(ctx, p)
    labels = _split_labels(p["dist"])
    config = ExperimentConfig(
        distributions=labels, d=p["d"] if len(labels) == 1 else len(labels),
        mixing=p["mixing"], mixing_seed=p["mixing_seed"],
        nls=_split(p["nl"]), n=p["n"], trials=p["trials"],
        rules=tuple(parse_rule(r) for r in _split(p["rules"])),
        threshold=p["threshold"], seed=p["seed"], method=p["method"],
        nodes=p["nodes"],
    )
    rows = harness.monte_carlo_cells(config)
    harness.cells_csv(p["out"], rows)
    _report_csv(p["out"], len(rows))
    if p["plot"]:
        png = _plot_cells(p["out"] if p["out"] != "-" else "cells.csv", rows)
        click.echo(f"wrote {png}")


@cli.command()
@click.option("--which", type=click.Choice(["1", "2"]), required=True,
              help="Which table experiment to run.")
@_model_options
@_engine_options
@click.option("--nl", default="gauss,tanh,kurtosis",
              help="Comma-separated nonlinearities.")
@click.option("--n", type=int, default=5000,
              help="Sample size (table 1).")
@click.option("--trials", type=int, default=2000, help="Trials per cell.")
@click.option("--rules", default="1e-4,1e-6,1e-8,1e-4x10",
              help="Stopping rules (table 1).")
@click.option("--scenario", type=click.Choice(["a", "b", "c", "custom"]),
              default="c", help="Source scenario (table 2).")
@click.option("--sample-sizes", default="100,200,500,1500,5000,10000",
              help="Comma-separated sample sizes (table 2).")
@click.option("--threshold", type=float, default=0.01,
              help="Deviation threshold for a bad estimate.")
@click.option("--seed", type=int, default=0, help="Master seed.")
@click.option("--full", is_flag=True, help="Use 10000 trials.")
@click.option("--plot", is_flag=True, help="Also render a chart PNG.")
@click.option("--out", default=None,
              help="Output CSV (default table1.csv / table2.csv).")
@_config_option
@click.pass_context
def table(ctx, **params):
    """Reproduce a full Monte Carlo table (1: rules at d=2; 2: d=5 vs N)."""
    p = _merge_config(ctx, params)
    _apply_full(ctx, p)
    dist_source = ctx.get_parameter_source("dist")
    explicit_dist = dist_source not in (
        click.core.ParameterSource.DEFAULT,
        click.core.ParameterSource.DEFAULT_MAP) or p["dist"] != "bimod:-0.4,2"
    labels = (_split_labels(p["dist"]) if explicit_dist
              else harness.TABLE1_DISTRIBUTIONS)
    common = dict(
        mixing=p["mixing"], mixing_seed=p["mixing_seed"],
        nls=_split(p["nl"]), n=p["n"], trials=p["trials"],
        threshold=p["threshold"], seed=p["seed"], method=p["method"],
        nodes=p["nodes"],
    )
    if p["which"] == "1":
        config = ExperimentConfig(
            distributions=labels, d=p["d"],
            rules=tuple(parse_rule(r) for r in _split(p["rules"])), **common)
        rows = harness.table1(config)
        out = p["out"] or "table1.csv"
        harness.table1_csv(out, rows)
        _report_csv(out, sum(len(r.rules) for r in rows))
        if p["plot"]:
            base = out if out != "-" else "table1.csv"
            click.echo(f"wrote {_plot_table1(base, rows)}")
    else:
        if p["scenario"] == "custom" and not explicit_dist:
            raise click.UsageError("--scenario custom needs an explicit --dist")
        rules_source = ctx.get_parameter_source("rules")
        explicit_rules = rules_source not in (
            click.core.ParameterSource.DEFAULT,
            click.core.ParameterSource.DEFAULT_MAP) or p["rules"] != "1e-4,1e-6,1e-8,1e-4x10"
        rule = parse_rule(_split(p["rules"])[0]) if explicit_rules \
            else StoppingRule(1e-8)
        scenario_labels = (labels if p["scenario"] == "custom"
                           else harness.TABLE2_SCENARIOS[p["scenario"]])
        config = ExperimentConfig(
            distributions=scenario_labels, d=len(scenario_labels),
            rules=(rule,),
            sample_sizes=tuple(int(x) for x in _split(p["sample_sizes"])),
            **common)
        rows = harness.table2(config, scenario=p["scenario"], rule=rule)
        out = p["out"] or "table2.csv"
        harness.table2_csv(out, rows)
        _report_csv(out, len(rows))
        if p["plot"]:
            base = out if out != "-" else "table2.csv"
            click.echo(f"wrote {_plot_table2(base, rows)}")


@cli.command()
@_model_options
@_engine_options
@click.option("--nl", default="pow5", help=f"Nonlinearity: {BUILTIN_NAMES}.")
@click.option("--grid", type=int, default=1001,
              help="Grid points on [0, pi].")
@click.option("--out", default="figure1.csv", help="Output CSV.")
@click.option("--plot/--no-plot", default=True,
              help="Render the curves to a PNG next to the CSV.")
@_config_option
@click.pass_context
def figure1(ctx, **params):
    """Half-circle curves: ||phi||, ||f'||, and the contrast J (d = 2)."""
    p = _merge_config(ctx, params)
    model = _build_model(p["dist"], 2, p["mixing"], p["mixing_seed"])
    engine = make_engine(model, method=p["method"], nodes=p["nodes"])
    nl = builtin(p["nl"])
    rows = harness.figure1_data(model, engine, nl, grid=p["grid"])
    harness.figure1_csv(p["out"], rows)
    _report_csv(p["out"], len(rows))
    if p["plot"]:
        base = p["out"] if p["out"] != "-" else "figure1.csv"
        png = _plot_figure1(base, rows, model, engine, nl)
        click.echo(f"wrote {png}")


def _split(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _split_labels(text: str) -> tuple:
    """Split a comma-separated label list, keeping commas inside labels.

    A purely numeric fragment continues the previous parametrized label,
    so "uniform,bimod:-0.4,2" parses as ("uniform", "bimod:-0.4,2").
    """
    merged = []
    for part in _split(text):
        if merged and _is_number(part) and ":" in merged[-1]:
            merged[-1] += "," + part
        else:
            merged.append(part)
    return tuple(merged)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _png_path(csv_path: str) -> str:
    return str(Path(csv_path).with_suffix(".png"))


def _plot_figure1(csv_path, rows, model, engine, nl) -> str:
    plt = _pyplot()
    theta = [r.theta for r in rows]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 8))
    axes[0].plot(theta, [r.phi_norm for r in rows], lw=1.2)
    axes[0].set_ylabel(r"$\|\varphi(w(\theta))\|$")
    axes[1].plot(theta, [r.fprime_norm for r in rows], lw=1.2)
    axes[1].axhline(1.0, color="gray", ls=":", lw=1)
    axes[1].set_ylabel(r"$\|f'(w(\theta))\|$")
    axes[2].plot(theta, [r.contrast for r in rows], lw=1.2)
    axes[2].set_ylabel(r"$J(w(\theta))$")
    axes[2].set_xlabel(r"$\theta$")
    try:
        points = scan_circle(model, engine, nl)
    except Exception:
        points = []
    for record in points:
        for ax in axes:
            ax.axvline(record.theta, color="crimson", ls="--", lw=0.6,
                       alpha=0.6)
    ticks = [0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi]
    axes[2].set_xticks(ticks)
    axes[2].set_xticklabels(["0", r"$\pi/4$", r"$\pi/2$", r"$3\pi/4$",
                             r"$\pi$"])
    fig.align_ylabels(axes)
    fig.tight_layout()
    png = _png_path(csv_path)
    fig.savefig(png, dpi=150)
    plt.close(fig)
    return png


def _plot_cells(csv_path, rows) -> str:
    plt = _pyplot()
    labels = [f"{r.nl}\n{r.rule}" for r in rows]
    rates = [r.spurious / r.trials for r in rows]
    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(rows)), 4))
    ax.bar(range(len(rows)), rates, color="steelblue")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("spurious rate")
    fig.tight_layout()
    png = _png_path(csv_path)
    fig.savefig(png, dpi=150)
    plt.close(fig)
    return png


def _plot_table1(csv_path, rows) -> str:
    plt = _pyplot()
    dists = list(dict.fromkeys(r.dist for r in rows))
    nls = list(dict.fromkeys(r.nl for r in rows))
    rule_labels = rows[0].rules if rows else ()
    fig, axes = plt.subplots(len(rule_labels), 1, sharex=True,
                             figsize=(max(7, 1.1 * len(dists)),
                                      2.4 * max(1, len(rule_labels))))
    if len(rule_labels) == 1:
        axes = [axes]
    width = 0.8 / max(1, len(nls))
    for ax, (k, rule) in zip(axes, enumerate(rule_labels)):
        for j, nl in enumerate(nls):
            rates = []
            for dist in dists:
                row = next(r for r in rows if r.dist == dist and r.nl == nl)
                rates.append(row.spurious[k] / row.trials)
            ax.bar([i + j * width for i in range(len(dists))], rates,
                   width=width, label=nl)
        ax.set_ylabel(f"rate @ {rule}", fontsize=8)
    axes[0].legend(fontsize=8)
    axes[-1].set_xticks([i + 0.4 for i in range(len(dists))])
    axes[-1].set_xticklabels(dists, rotation=30, ha="right", fontsize=8)
    fig.tight_layout()
    png = _png_path(csv_path)
    fig.savefig(png, dpi=150)
    plt.close(fig)
    return png


def _plot_table2(csv_path, rows) -> str:
    plt = _pyplot()
    nls = list(dict.fromkeys(r.nl for r in rows))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for nl in nls:
        pts = sorted((r.n, r.bad / r.trials) for r in rows if r.nl == nl)
        ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o",
                label=nl)
    ax.set_xscale("log")
    ax.set_xlabel("sample size N")
    ax.set_ylabel("bad-estimate rate")
    ax.legend()
    fig.tight_layout()
    png = _png_path(csv_path)
    fig.savefig(png, dpi=150)
    plt.close(fig)
    return png


_CLI_ERRORS = (ParameterError, UnsupportedOperationError, ConfigurationError,
               NotAFixedPointError, NumericFailureError,
               AssumptionViolationError, ValueError)


def _wrap_errors(group):
    """Turn domain errors into clean CLI failures (exit code 1)."""
    original = group.invoke

    def invoke(ctx):
        try:
            return original(ctx)
        except click.ClickException:
            raise
        except _CLI_ERRORS as exc:
            raise click.ClickException(str(exc))

    group.invoke = invoke
    return group


_wrap_errors(cli)


if __name__ == "__main__":
    main(sys.argv[1:])

"""Configuration-driven Monte Carlo experiments and CSV emission.

Three experiment families:

* spurious-solution counts per (source law, nonlinearity, stopping rule)
  at fixed sample size, together with the population ``||f'||`` at the
  two-source diagonal fixed point (a1+a2)/sqrt(2);
* bad-estimate counts versus sample size for d = 5 mixed-source scenarios;
* curve data over the half-circle w(theta) = cos(theta) a1 + sin(theta) a2:
  ||phi||, ||f'||, and the contrast J, for external plotting.

All randomness derives from a master seed through per-trial seed tuples
(seed, row, column, trial), so any single trial is reproducible in
isolation and output CSVs are byte-identical across runs.
"""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .distributions import parse_distribution
from .empirical import (
    DEVIATION_THRESHOLD,
    StoppingRule,
    empirical_f,
    generate_sample,
    whiten,
)
from .fixed_points import classify
from .nonlinearity import Nonlinearity, builtin
from .population import (
    AssumptionViolationError,
    ConfigurationError,
    ExpectationEngine,
    MixingModel,
    contrast,
    f_jacobian,
    make_engine,
    phi,
    spectral_norm,
)

__all__ = [
    "ExperimentConfig",
    "TableRow",
    "ScalingRow",
    "CellRow",
    "CurveRow",
    "TABLE1_DISTRIBUTIONS",
    "TABLE2_SCENARIOS",
    "DEFAULT_RULES",
    "build_model",
    "table1",
    "table2",
    "monte_carlo_cells",
    "figure1_data",
    "summarize",
    "parse_config",
    "parse_rule",
    "write_csv",
]

#: row order of the d=2 spurious-count experiment
TABLE1_DISTRIBUTIONS = (
    "sinus",
    "uniform",
    "gg:3",
    "laplace",
    "gg:0.5",
    "bimod:0.9",
    "bpsk",
    "bimod:-0.4,2",
    "bimod:-0.3,3",
)

#: d=5 scenarios with one, two, and three asymmetric bimodal sources
TABLE2_SCENARIOS = {
    "a": ("uniform", "laplace", "gg:2", "gg:3", "bimod:-0.4,2"),
    "b": ("uniform", "laplace", "gg:3", "bimod:-0.4,2", "bimod:-0.4,2"),
    "c": ("uniform", "laplace", "bimod:-0.4,2", "bimod:-0.4,2", "bimod:-0.4,2"),
}

DEFAULT_NLS = ("gauss", "tanh", "kurtosis")

DEFAULT_RULES = (
    StoppingRule(1e-4, 1),
    StoppingRule(1e-6, 1),
    StoppingRule(1e-8, 1),
    StoppingRule(1e-4, 10),
)

DEFAULT_SAMPLE_SIZES = (100, 200, 500, 1500, 5000, 10000)


def parse_rule(text: str) -> StoppingRule:
    """Parse "1e-4" or "1e-4x10" into a stopping rule."""
    text = text.strip()
    if "x" in text:
        eps_text, _, min_text = text.partition("x")
        return StoppingRule(epsilon=float(eps_text),
                            min_iterations=int(min_text))
    return StoppingRule(epsilon=float(text))


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of a Monte Carlo experiment.

    ``distributions`` is one label per source (a single label is repeated
    to dimension d).  For the per-law table experiment each entry instead
    names one row's iid law.  ``mixing`` is "identity" or "random"
    (seeded orthogonal).  Per-trial seeds derive from
    (seed, row, column, trial).
    """

    distributions: tuple = TABLE1_DISTRIBUTIONS
    d: int = 2
    mixing: str = "identity"
    mixing_seed: int = 0
    nls: tuple = DEFAULT_NLS
    n: int = 5000
    trials: int = 2000
    rules: tuple = DEFAULT_RULES
    sample_sizes: tuple = DEFAULT_SAMPLE_SIZES
    threshold: float = DEVIATION_THRESHOLD
    seed: int = 0
    method: str | None = None
    nodes: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.d < 2:
            raise ConfigurationError("need d >= 2")
        if self.mixing not in ("identity", "random"):
            raise ConfigurationError("mixing must be identity or random")
        for name in self.nls:
            builtin(name)
        for label in self.distributions:
            parse_distribution(label)


def build_model(config: ExperimentConfig, labels=None) -> MixingModel:
    """Resolve labels (or config.distributions) into a mixing model."""
    labels = tuple(labels if labels is not None else config.distributions)
    if len(labels) == 1:
        labels = labels * config.d
    if len(labels) != config.d:
        raise ConfigurationError(
            f"got {len(labels)} distribution labels for d={config.d}"
        )
    sources = [parse_distribution(lb) for lb in labels]
    if config.mixing == "identity":
        return MixingModel.identity(sources)
    return MixingModel.random(sources, seed=config.mixing_seed)


@dataclass(frozen=True)
class TableRow:
    """One (law, nonlinearity) cell of the spurious-count experiment.

    ``spurious`` and ``failures`` are aligned with ``rules``.
    """

    dist: str
    nl: str
    fprime_norm: float
    trials: int
    rules: tuple
    spurious: tuple
    failures: tuple


@dataclass(frozen=True)
class ScalingRow:
    """One (N, nonlinearity) cell of the sample-size experiment."""

    scenario: str
    n: int
    nl: str
    trials: int
    bad: int
    failures: int


@dataclass(frozen=True)
class CellRow:
    """One (nonlinearity, rule) cell of a free-form experiment."""

    nl: str
    rule: str
    trials: int
    spurious: int
    failures: int


@dataclass(frozen=True)
class CurveRow:
    """One grid point of the half-circle curves."""

    theta: float
    phi_norm: float
    fprime_norm: float
    contrast: float


def _iterate_all_rules(sm, nl: Nonlinearity, w0, rules):
    """Drive one trajectory, halting each rule at its own stopping time.

    The iterate sequence does not depend on the rule, so all rules share
    one trajectory.  Returns per-rule (w_final, halted_by) tuples.
    """
    out = [None] * len(rules)
    pending = set(range(len(rules)))
    cap = max(r.max_iterations for r in rules)
    w = w0
    for n in range(1, cap + 1):
        try:
            w_new = empirical_f(sm, nl, w)
        except AssumptionViolationError:
            for i in pending:
                out[i] = (w, "error")
            return out
        delta = 1.0 - abs(float(w_new @ w))
        for i in tuple(pending):
            rule = rules[i]
            if delta < rule.epsilon and n >= rule.min_iterations:
                out[i] = (w_new, "criterion")
                pending.discard(i)
            elif n >= rule.max_iterations:
                out[i] = (w_new, "max_iter")
                pending.discard(i)
        if not pending:
            break
        w = w_new
    return out


def _cell_counts(model: MixingModel, nl: Nonlinearity, config: ExperimentConfig,
                 row: int, col: int, n: int):
    """Monte Carlo counts of bad outcomes per rule for one cell."""
    rules = config.rules
    spurious = [0] * len(rules)
    failures = [0] * len(rules)
    for trial in range(config.trials):
        rng = np.random.default_rng(
            np.random.SeedSequence((config.seed, row, col, trial))
        )
        sm = whiten(generate_sample(model, n, rng))
        # uniform in a centered cube, then normalized: the direction density
        # favors diagonals over axes, and the spurious counts depend on that
        # anisotropy, so it is part of the protocol rather than a convenience
        w0 = rng.uniform(-0.5, 0.5, model.d)
        w0 /= np.linalg.norm(w0)
        for i, (w, halted_by) in enumerate(
                _iterate_all_rules(sm, nl, w0, rules)):
            if halted_by == "error":
                failures[i] += 1
                continue
            deviation = 1.0 - float(np.max(np.abs(model.A.T @ w)))
            if deviation > config.threshold:
                spurious[i] += 1
    return tuple(spurious), tuple(failures)


def _diagonal_fprime(model: MixingModel, engine: ExpectationEngine,
                     nl: Nonlinearity) -> float:
    """||f'|| at the diagonal fixed-point pair (a1 +- a2)/sqrt(2).

    Demixing directions carry no sign, so the diagonal is a sign class of
    two points on the half-circle; both are exact fixed points for iid
    sources and odd g.  They coincide in law for symmetric sources but
    differ for asymmetric ones, and the member with the smaller ||f'|| is
    the potential trap, so that one is reported.
    """
    a1, a2 = model.A[:, 0], model.A[:, 1]
    return min(
        classify(model, engine, nl, (a1 + a2) / math.sqrt(2.0)).fprime_norm,
        classify(model, engine, nl, (a1 - a2) / math.sqrt(2.0)).fprime_norm,
    )


def table1(config: ExperimentConfig):
    """Spurious-solution counts per (iid law, nonlinearity, rule) at d=2.

    Also evaluates the population ||f'|| at (a1+a2)/sqrt(2) for each cell;
    that column is pure quadrature and independent of the seed.
    """
    if config.d not in (2, 3, 5):
        raise ConfigurationError("table rows use d in {2, 3, 5}")
    rows = []
    for r, label in enumerate(config.distributions):
        model = build_model(config, (label,))
        engine = make_engine(model, method=config.method, nodes=config.nodes)
        for c, nl_name in enumerate(config.nls):
            nl = builtin(nl_name)
            fprime = _diagonal_fprime(model, engine, nl)
            spurious, failures = _cell_counts(model, nl, config, r, c,
                                              config.n)
            rows.append(TableRow(
                dist=label, nl=nl_name, fprime_norm=fprime,
                trials=config.trials,
                rules=tuple(rule.label() for rule in config.rules),
                spurious=spurious, failures=failures,
            ))
    return rows


def table2(config: ExperimentConfig, scenario: str = "c",
           rule: StoppingRule | None = None):
    """Bad-estimate counts versus sample size for a d=5 scenario.

    Scenario labels "a"/"b"/"c" select the preset source lists; any other
    value uses config.distributions directly.  The stopping rule is fixed
    at epsilon = 1e-8 unless overridden; it is part of the experiment
    definition and deliberately independent of config.rules.
    """
    labels = TABLE2_SCENARIOS.get(scenario)
    if labels is None:
        scenario, labels = "custom", config.distributions
    cfg = ExperimentConfig(
        distributions=labels, d=len(labels), mixing=config.mixing,
        mixing_seed=config.mixing_seed, nls=config.nls, trials=config.trials,
        rules=(rule or StoppingRule(1e-8),), threshold=config.threshold,
        seed=config.seed, method=config.method, nodes=config.nodes,
    )
    model = build_model(cfg)
    rows = []
    for r, n in enumerate(config.sample_sizes):
        for c, nl_name in enumerate(cfg.nls):
            spurious, failures = _cell_counts(model, builtin(nl_name), cfg,
                                              r, c, n)
            rows.append(ScalingRow(scenario=scenario, n=n, nl=nl_name,
                                   trials=cfg.trials, bad=spurious[0],
                                   failures=failures[0]))
    return rows


def monte_carlo_cells(config: ExperimentConfig):
    """Free-form Monte Carlo over one model: counts per (nl, rule)."""
    model = build_model(config)
    rows = []
    for c, nl_name in enumerate(config.nls):
        spurious, failures = _cell_counts(model, builtin(nl_name), config,
                                          0, c, config.n)
        for rule, s, f in zip(config.rules, spurious, failures):
            rows.append(CellRow(nl=nl_name, rule=rule.label(),
                                trials=config.trials, spurious=s,
                                failures=f))
    return rows


def figure1_data(model: MixingModel, engine: ExpectationEngine,
                 nl: Nonlinearity, grid: int = 1001):
    """Curves theta -> (||phi||, ||f'||, J) over [0, pi] at d=2.

    ||f'|| is the spectral norm of the full Jacobian of the normalized
    map, defined wherever h does not vanish; grid points where it does
    get NaN.
    """
    if model.d != 2:
        raise ConfigurationError("curve data needs a two-dimensional model")
    if grid < 2:
        raise ConfigurationError("need at least two grid points")
    rows = []
    for theta in np.linspace(0.0, math.pi, grid):
        w = model.A @ np.array([math.cos(theta), math.sin(theta)])
        phi_norm = float(np.linalg.norm(phi(model, engine, nl, w)))
        try:
            fprime = spectral_norm(f_jacobian(model, engine, nl, w))
        except AssumptionViolationError:
            fprime = math.nan
        rows.append(CurveRow(theta=float(theta), phi_norm=phi_norm,
                             fprime_norm=fprime,
                             contrast=contrast(model, engine, nl, w)))
    return rows


def _format_cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        text = format(value, ".12g")
        return "0" if text == "-0" else text
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write rows as UTF-8 CSV with \\n endings and .12g float format.

    Path "-" emits to stdout instead of a file.
    """
    if path == "-":
        _emit_csv(sys.stdout, header, rows)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _emit_csv(fh, header, rows)


def _emit_csv(fh, header, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(x) for x in row])


TABLE1_HEADER = ("dist", "nl", "fprime_norm", "rule", "trials", "spurious",
                 "failures")
TABLE2_HEADER = ("scenario", "n", "nl", "trials", "bad", "failures")
CELLS_HEADER = ("nl", "rule", "trials", "spurious", "failures")
CURVE_HEADER = ("theta", "phi_norm", "fprime_norm", "contrast")


def table1_csv(path, rows) -> None:
    """One long-format line per (dist, nl, rule)."""
    flat = []
    for row in rows:
        for rule, s, f in zip(row.rules, row.spurious, row.failures):
            flat.append((row.dist, row.nl, row.fprime_norm, rule,
                         row.trials, s, f))
    write_csv(path, TABLE1_HEADER, flat)


def table2_csv(path, rows) -> None:
    write_csv(path, TABLE2_HEADER,
              [(r.scenario, r.n, r.nl, r.trials, r.bad, r.failures)
               for r in rows])


def cells_csv(path, rows) -> None:
    write_csv(path, CELLS_HEADER,
              [(r.nl, r.rule, r.trials, r.spurious, r.failures)
               for r in rows])


def figure1_csv(path, rows) -> None:
    write_csv(path, CURVE_HEADER,
              [(r.theta, r.phi_norm, r.fprime_norm, r.contrast)
               for r in rows])


#: count columns summarize() recognizes, in priority order
_COUNT_COLUMNS = ("spurious", "bad")


def summarize(path):
    """Per-row rates with binomial 95% intervals from a counts CSV.

    Needs a ``trials`` column and a ``spurious`` or ``bad`` column.  A
    normal-approximation interval p +- 1.96 sqrt(p(1-p)/trials) is used;
    zero counts get the one-sided interval [0, 1 - 0.025**(1/trials)].
    Empty count cells are flagged missing rather than treated as zero.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        count_col = next((c for c in _COUNT_COLUMNS
                          if c in reader.fieldnames), None)
        if count_col is None or "trials" not in reader.fieldnames:
            raise ValueError(
                f"{path}: need columns 'trials' and one of {_COUNT_COLUMNS}"
            )
        key_cols = [c for c in reader.fieldnames
                    if c not in ("trials", count_col, "failures")]
        out = []
        for record in reader:
            keys = {c: record[c] for c in key_cols}
            raw = (record[count_col] or "").strip()
            if not raw:
                out.append({**keys, "missing": True, "rate": math.nan,
                            "lo": math.nan, "hi": math.nan})
                continue
            count, trials = int(raw), int(record["trials"])
            rate = count / trials
            if count == 0:
                lo, hi = 0.0, 1.0 - 0.025 ** (1.0 / trials)
            else:
                half = 1.96 * math.sqrt(rate * (1.0 - rate) / trials)
                lo, hi = max(0.0, rate - half), min(1.0, rate + half)
            out.append({**keys, "missing": False, "rate": rate,
                        "lo": lo, "hi": hi})
        return out


def parse_config(path) -> dict:
    """Read a flat key = value file; '#' starts a comment; keys lowercase.

    Values stay raw strings; comma-splitting is up to the consumer.
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            key, sep, value = text.partition("=")
            if not sep or not key.strip():
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip().lower()] = value.strip()
    return out

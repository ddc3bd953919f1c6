"""The practical one-unit FastICA algorithm on finite samples.

Pipeline: draw x(t) = A s(t), center and whiten empirically, then iterate

    h_hat(w) = (1/N) sum_t [ g'(w'x~(t)) w - g(w'x~(t)) x~(t) ],
    w <- h_hat(w) / ||h_hat(w)||,

halting when 1 - |w_new'w_old| < epsilon (once a minimum iteration count
has been reached) or at an iteration cap.  The whitened data x~ appears in
both terms of h_hat, matching the population map on whitened inputs.

Also here: the false-convergence radius around an unattractive fixed
point, the saddle-point check on estimated pairs, the deviation index
against the true mixing matrix, and the three-step pipeline that reruns
the algorithm with the score function of the (known) source family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import UnsupportedOperationError
from .nonlinearity import Nonlinearity
from .population import (
    AssumptionViolationError,
    ExpectationEngine,
    MixingModel,
    as_unit,
    f_map,
)

__all__ = [
    "SampleMatrix",
    "StoppingRule",
    "RunResult",
    "generate_sample",
    "whiten",
    "empirical_f",
    "run",
    "iterate_population",
    "false_convergence_radius",
    "deviation_index",
    "saddle_check",
    "optimal_pipeline",
    "PipelineResult",
    "DegenerateSampleError",
    "ExtractionFailureError",
    "DEVIATION_THRESHOLD",
]

#: estimates deviating more than this from every +-a_i count as bad
DEVIATION_THRESHOLD = 0.01


class DegenerateSampleError(ValueError):
    """Sample covariance is singular; whitening is impossible."""


class ExtractionFailureError(RuntimeError):
    """Deflation failed to collect d distinct estimates within budget."""


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """N x d observation matrix with its generating context."""

    X: np.ndarray
    model: MixingModel = field(repr=False, default=None)
    seed: object = None
    is_whitened: bool = False

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class StoppingRule:
    """Halting parameters of the iteration loop.

    The criterion 1 - |w_new'w_old| < epsilon fires only once
    ``min_iterations`` steps have run; ``max_iterations`` is a hard cap.
    """

    epsilon: float = 1e-8
    min_iterations: int = 1
    max_iterations: int = 1000

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (1 <= self.min_iterations <= self.max_iterations):
            raise ValueError("need 1 <= min_iterations <= max_iterations")

    def label(self) -> str:
        mant, _, exp = f"{self.epsilon:e}".partition("e")
        mant = mant.rstrip("0").rstrip(".")
        text = f"{mant}e{int(exp)}" if int(exp) else mant
        if self.min_iterations > 1:
            return f"{text}x{self.min_iterations}"
        return text


@dataclass(frozen=True, eq=False)
class RunResult:
    """Outcome of one iteration run.

    ``halted_by`` is "criterion", "max_iter", or "error" (a degenerate
    h_hat was hit mid-run; the failure text is in ``failure``).
    ``convergence_mode`` distinguishes strict convergence (w_new'w_old > 0
    at the halt) from the sign-flipping mode (< 0); "none" means the
    criterion never fired.  ``deviation`` is 1 - max_i |w'a_i| against the
    true mixing matrix, and ``matched_source`` is the best index when the
    deviation is within threshold.
    """

    w_final: np.ndarray
    iterations: int
    halted_by: str
    trace: list | None
    deviation: float
    matched_source: int | None
    convergence_mode: str
    failure: str | None = None


def generate_sample(model: MixingModel, n: int, seed) -> SampleMatrix:
    """Draw n rows of x = A s; deterministic for a fixed seed."""
    if n < model.d + 1:
        raise ValueError(f"need at least d+1 = {model.d + 1} rows")
    rng = np.random.default_rng(seed)
    S = np.empty((n, model.d))
    for k, spec in enumerate(model.sources):
        S[:, k] = spec.sample(n, rng)
    return SampleMatrix(X=S @ model.A.T, model=model, seed=seed)


def whiten(sm: SampleMatrix) -> SampleMatrix:
    """Empirically center and whiten: x~ = C^(-1/2) (x - mean).

    Uses the symmetric inverse square root from the eigendecomposition of
    the sample covariance (normalized by N).
    """
    X = np.asarray(sm.X, dtype=float)
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / X.shape[0]
    lam, V = np.linalg.eigh(C)
    if lam[0] <= 1e-12 * lam[-1]:
        raise DegenerateSampleError("sample covariance is (near) singular")
    W = (V / np.sqrt(lam)) @ V.T
    return SampleMatrix(X=Xc @ W, model=sm.model, seed=sm.seed, is_whitened=True)


def empirical_f(sm: SampleMatrix, nl: Nonlinearity, w) -> np.ndarray:
    """One empirical FastICA step at w; requires whitened data.

    Raises
    ------
    AssumptionViolationError
        If ||h_hat(w)|| < 1e-12 (empirically degenerate direction).
    """
    if not sm.is_whitened:
        raise ValueError("empirical_f needs whitened data; call whiten() first")
    w = np.asarray(w, dtype=float)
    y = sm.X @ w
    h = np.mean(nl.gprime(y)) * w - sm.X.T @ nl.g(y) / sm.n
    norm = np.linalg.norm(h)
    if norm < 1e-12:
        raise AssumptionViolationError("h_hat(w) vanishes")
    return h / norm


def _iterate(step, w0, rule: StoppingRule, want_trace: bool):
    """Shared stopping loop; returns (w, iterations, halted_by, mode, trace, failure)."""
    w = as_unit(w0)
    trace = [(0, w.copy(), math.nan)] if want_trace else None
    for n in range(1, rule.max_iterations + 1):
        try:
            w_new = step(w)
        except AssumptionViolationError as exc:
            return w, n, "error", "none", trace, str(exc)
        dot = float(w_new @ w)
        delta = 1.0 - abs(dot)
        if want_trace:
            trace.append((n, w_new.copy(), delta))
        if delta < rule.epsilon and n >= rule.min_iterations:
            mode = "sign_flipping" if dot < 0.0 else "strict"
            return w_new, n, "criterion", mode, trace, None
        w = w_new
    return w, rule.max_iterations, "max_iter", "none", trace, None


def deviation_index(w, A) -> float:
    """1 - max_i |w'a_i|: distance of w from the nearest demixing vector."""
    return 1.0 - float(np.max(np.abs(np.asarray(A).T @ np.asarray(w))))


def _finish(w, iters, halted_by, mode, trace, failure, model,
            threshold: float) -> RunResult:
    if model is not None:
        overlaps = np.abs(model.A.T @ w)
        deviation = 1.0 - float(np.max(overlaps))
        matched = int(np.argmax(overlaps)) if deviation <= threshold else None
    else:
        deviation, matched = math.nan, None
    return RunResult(w_final=w, iterations=iters, halted_by=halted_by,
                     trace=trace, deviation=deviation, matched_source=matched,
                     convergence_mode=mode, failure=failure)


def run(sm: SampleMatrix, nl: Nonlinearity, w0, rule: StoppingRule,
        trace: bool = False, threshold: float = DEVIATION_THRESHOLD) -> RunResult:
    """Iterate the empirical map from w0 until the stopping rule fires.

    Data is whitened on entry if it is not already.  A degenerate h_hat
    mid-run is reported through the result, not raised.
    """
    if not sm.is_whitened:
        sm = whiten(sm)
    out = _iterate(lambda w: empirical_f(sm, nl, w), w0, rule, trace)
    return _finish(*out, model=sm.model, threshold=threshold)


def iterate_population(model: MixingModel, engine: ExpectationEngine,
                       nl: Nonlinearity, w0, rule: StoppingRule,
                       trace: bool = False,
                       threshold: float = DEVIATION_THRESHOLD) -> RunResult:
    """Run the same stopping loop on the exact population map."""
    out = _iterate(lambda w: f_map(model, engine, nl, w), w0, rule, trace)
    return _finish(*out, model=model, threshold=threshold)


def false_convergence_radius(epsilon: float, fprime_norm: float) -> float:
    """Radius sqrt(2 eps)/(1 + ||f'(v)||) around an unattractive fixed point.

    Starting within this distance of v, the very first iteration already
    meets the criterion 1 - |w_new'w_old| < epsilon, so a rule without a
    minimum iteration count halts immediately at a spurious location.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return math.sqrt(2.0 * epsilon) / (1.0 + fprime_norm)


_GH_NODES_G0 = 201


def _gaussian_contrast_level(nl: Nonlinearity) -> float:
    t, w = np.polynomial.hermite.hermgauss(_GH_NODES_G0)
    return float(w @ np.asarray(nl.G(math.sqrt(2.0) * t)) / math.sqrt(math.pi))


def saddle_check(sm: SampleMatrix, nl: Nonlinearity, estimates) -> list:
    """Rotation test on estimate pairs: keep whichever of {(u_i, u_j),
    ((u_i+u_j)/sqrt2, (u_i-u_j)/sqrt2)} is jointly less Gaussian.

    Non-Gaussianity of u is measured by |J_hat(u) - G0| with
    G0 = E[G(Z)], Z standard normal.

    Raises
    ------
    ValueError
        If some pair overlaps by more than 0.1 (estimates must be
        near-orthogonal for the rotation to make sense).
    """
    if not sm.is_whitened:
        sm = whiten(sm)
    estimates = [as_unit(u) for u in estimates]
    for a in range(len(estimates)):
        for b in range(a + 1, len(estimates)):
            if abs(float(estimates[a] @ estimates[b])) > 0.1:
                raise ValueError(
                    f"estimates {a} and {b} overlap by more than 0.1"
                )
    g0 = _gaussian_contrast_level(nl)

    def index(u):
        return abs(float(np.mean(nl.G(sm.X @ u))) - g0)

    out = [u.copy() for u in estimates]
    for a in range(len(out)):
        for b in range(a + 1, len(out)):
            u, v = out[a], out[b]
            plus = (u + v) / np.linalg.norm(u + v)
            minus = (u - v) / np.linalg.norm(u - v)
            if index(plus) + index(minus) > index(u) + index(v):
                out[a], out[b] = plus, minus
    return out


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Outputs of the three-step optimal-nonlinearity pipeline."""

    step1: list
    step3: list
    g_opt: Nonlinearity


def optimal_pipeline(model: MixingModel, n: int, seed,
                     first_nl: Nonlinearity,
                     rule: StoppingRule | None = None,
                     budget: int = 50,
                     overlap: float = 0.9) -> PipelineResult:
    """Estimate all d sources, then re-estimate with the score function.

    Step 1 runs the algorithm with ``first_nl`` from random starts,
    deflating by rejecting any candidate whose overlap with an accepted
    estimate exceeds ``overlap``.  Step 2 builds the score nonlinearity of
    the (known, shared) source family.  Step 3 reruns from each accepted
    estimate with the score nonlinearity.

    Raises
    ------
    ExtractionFailureError
        If step 1 cannot collect d distinct estimates within budget.
    """
    labels = {s.label for s in model.sources}
    if len(labels) != 1:
        raise ValueError("pipeline expects identically distributed sources")
    if model.sources[0].is_discrete:
        raise UnsupportedOperationError("discrete sources have no score function")
    if rule is None:
        rule = StoppingRule()
    seed = int(seed)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    sm = whiten(generate_sample(model, n, np.random.SeedSequence((seed, 1))))
    accepted: list[RunResult] = []
    for _ in range(model.d):
        for _attempt in range(budget):
            w0 = rng.standard_normal(model.d)
            w0 /= np.linalg.norm(w0)
            res = run(sm, first_nl, w0, rule)
            if res.halted_by == "error":
                continue
            if all(abs(float(res.w_final @ prev.w_final)) <= overlap
                   for prev in accepted):
                accepted.append(res)
                break
        else:
            raise ExtractionFailureError(
                f"only {len(accepted)} of {model.d} estimates found "
                f"within {budget} restarts each"
            )
    g_opt = model.sources[0].score_function()
    final = [run(sm, g_opt, res.w_final, rule) for res in accepted]
    return PipelineResult(step1=accepted, step3=final, g_opt=g_opt)

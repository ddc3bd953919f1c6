"""Location and classification of the fixed points of the FastICA map.

A unit vector v is a (generalized) fixed point when the tangential
component phi(v) vanishes, i.e. f(v) = +-v.  Fixed points split into

    demixing                v matches a column of A up to sign
    spurious_attractive     ||f'(v)|| < 1 but v is no demixing vector
    spurious_unattractive   ||f'(v)|| >= 1

For d = 2 the full set is found by scanning the angle parametrization
w(theta) = cos(theta) a_1 + sin(theta) a_2 over [0, pi] and root-finding
the scalar tangential component.  For d >= 3 fixed points are obtained
constructively: on the geodesic between two demixing directions whose
alpha values share a sign (`between_pair_fixed_point`), or by carrying a
2-D point into a higher-dimensional model with two matching sources
(`lift_to_dimension`).  Under the kurtosis nonlinearity everything is
available in closed form (`kurtosis_closed_form`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .distributions import NumericFailureError
from .nonlinearity import Nonlinearity
from .population import (
    AssumptionViolationError,
    ConfigurationError,
    ExpectationEngine,
    MixingModel,
    alpha as population_alpha,
    as_unit,
    f_prime_fixed,
    make_engine,
    phi as population_phi,
    spectral_norm,
)

__all__ = [
    "FixedPointRecord",
    "classify",
    "scan_circle",
    "between_pair_fixed_point",
    "lift_to_dimension",
    "kurtosis_closed_form",
    "NotAFixedPointError",
    "PreconditionError",
    "DEMIXING_TOL",
]

#: a point within this distance of some +-a_i is classified as demixing
DEMIXING_TOL = 1e-6

#: residual ||phi(v)|| above which a vector is rejected as a fixed point
RESIDUAL_TOL = 1e-8

#: roots closer than this (radians) are merged as duplicates
MERGE_TOL = 1e-6


class NotAFixedPointError(ValueError):
    """The supplied vector does not satisfy the fixed-point residual bound."""


class PreconditionError(ValueError):
    """A constructive operation was invoked outside its guarantee."""


@dataclass(frozen=True, eq=False)
class FixedPointRecord:
    """A classified fixed point of the FastICA map.

    ``theta`` is the angle of the defining geodesic parametrization when one
    exists (always for d = 2); ``residual`` is ||phi(v)|| after refinement.
    """

    v: np.ndarray
    theta: float | None
    alpha: float
    fprime_norm: float
    cls: str
    residual: float
    model: MixingModel = field(repr=False, compare=False, default=None)
    nl: Nonlinearity = field(repr=False, compare=False, default=None)

    def csv_row(self) -> dict:
        row = {"theta": self.theta}
        for k, vk in enumerate(self.v, start=1):
            row[f"v{k}"] = float(vk)
        row["alpha"] = self.alpha
        row["fprime_norm"] = self.fprime_norm
        row["class"] = self.cls
        row["residual"] = self.residual
        return row


def _is_demixing(model: MixingModel, v: np.ndarray) -> bool:
    dist = np.minimum(
        np.linalg.norm(model.A - v[:, None], axis=0),
        np.linalg.norm(model.A + v[:, None], axis=0),
    )
    return bool(np.min(dist) <= DEMIXING_TOL)


def classify(model: MixingModel, engine: ExpectationEngine, nl: Nonlinearity,
             v, theta: float | None = None) -> FixedPointRecord:
    """Fill alpha, ||f'||, class and residual for a located fixed point.

    Raises
    ------
    NotAFixedPointError
        If ||phi(v)|| exceeds 1e-8.
    """
    v = as_unit(v)
    residual = float(np.linalg.norm(population_phi(model, engine, nl, v)))
    if residual > RESIDUAL_TOL:
        raise NotAFixedPointError(
            f"||phi(v)|| = {residual:.3e} > {RESIDUAL_TOL:g}; not a fixed point"
        )
    a = population_alpha(model, engine, nl, v)
    if _is_demixing(model, v):
        cls = "demixing"
    else:
        cls = None
    norm = spectral_norm(f_prime_fixed(model, engine, nl, v))
    if cls is None:
        cls = "spurious_attractive" if norm < 1.0 else "spurious_unattractive"
    if theta is None and model.d == 2:
        c = model.source_coordinates(v)
        theta = math.atan2(c[1], c[0]) % math.pi
    return FixedPointRecord(v=v, theta=theta, alpha=a, fprime_norm=norm,
                            cls=cls, residual=residual, model=model, nl=nl)


def _tangential(model, engine, nl, theta: float) -> float:
    """Scalar tangential component of E[g(w'x) x] at w(theta), d = 2."""
    c = np.array([math.cos(theta), math.sin(theta)])
    k = engine.kernels(model.sources, nl, c)
    return -math.sin(theta) * k.r[0] + math.cos(theta) * k.r[1]


def scan_circle(model: MixingModel, engine: ExpectationEngine, nl: Nonlinearity,
                grid: int = 3600) -> list[FixedPointRecord]:
    """All fixed points of a d = 2 model, scanned over theta in [0, pi].

    The tangential component tau(theta) is evaluated on a uniform grid;
    sign changes are refined by bracketed root-finding and grid points with
    |tau| <= 1e-12 (exact zeros such as the demixing angles) are accepted
    directly.  The [pi, 2*pi) half of the circle holds only antipodal
    copies and is not reported; both endpoints 0 and pi are.

    Raises
    ------
    ConfigurationError
        If d != 2 or ``grid`` < 360 (brackets could be missed).
    """
    if model.d != 2:
        raise ConfigurationError("scan_circle requires a 2-dimensional model")
    if grid < 360:
        raise ConfigurationError("grid must be at least 360")
    thetas = np.linspace(0.0, math.pi, grid + 1)
    tau = np.array([_tangential(model, engine, nl, t) for t in thetas])
    if np.max(np.abs(tau)) < 1e-9:
        raise ConfigurationError(
            "tangential component vanishes identically; degenerate model"
        )
    roots: list[float] = []
    for i, t in enumerate(thetas):
        if abs(tau[i]) <= 1e-12:
            roots.append(float(t))
    for i in range(len(thetas) - 1):
        if tau[i] * tau[i + 1] < 0.0:
            root = brentq(lambda t: _tangential(model, engine, nl, t),
                          thetas[i], thetas[i + 1], xtol=1e-13, rtol=8.9e-16)
            roots.append(float(root))
    roots.sort()
    merged: list[float] = []
    for t in roots:
        if not merged or t - merged[-1] > MERGE_TOL:
            merged.append(t)
    records = []
    for t in merged:
        w = model.A @ np.array([math.cos(t), math.sin(t)])
        records.append(classify(model, engine, nl, w, theta=t))
    return records


def between_pair_fixed_point(model: MixingModel, engine: ExpectationEngine,
                             nl: Nonlinearity, i: int, j: int) -> FixedPointRecord:
    """Fixed point c a_i + sqrt(1-c^2) a_j strictly between two axes.

    Existence is guaranteed when alpha(a_i) and alpha(a_j) share a sign;
    for identically distributed sources the root lands at c = 1/sqrt(2).

    Raises
    ------
    PreconditionError
        If the alpha values have opposite signs (no guarantee applies).
    """
    if i == j:
        raise PreconditionError("need two distinct source indices")
    a_i = population_alpha(model, engine, nl, model.A[:, i])
    a_j = population_alpha(model, engine, nl, model.A[:, j])
    if a_i * a_j <= 0.0:
        raise PreconditionError(
            f"alpha signs differ (alpha_i={a_i:.4g}, alpha_j={a_j:.4g}); "
            "no between-pair fixed point is guaranteed"
        )

    def tau(theta: float) -> float:
        c = np.zeros(model.d)
        c[i] = math.cos(theta)
        c[j] = math.sin(theta)
        k = engine.kernels(model.sources, nl, c)
        return -math.sin(theta) * k.r[i] + math.cos(theta) * k.r[j]

    lo, hi = 1e-3, math.pi / 2.0 - 1e-3
    if tau(lo) * tau(hi) < 0.0:
        bracket = (lo, hi)
    else:
        # unusual alpha profile: locate a sign change on a finer grid
        ts = np.linspace(lo, hi, 201)
        vals = [tau(t) for t in ts]
        bracket = None
        for k in range(len(ts) - 1):
            if vals[k] * vals[k + 1] < 0.0:
                bracket = (ts[k], ts[k + 1])
                break
        if bracket is None:
            raise NumericFailureError("no sign change found on the geodesic")
    theta = brentq(tau, *bracket, xtol=1e-13, rtol=8.9e-16)
    w = math.cos(theta) * model.A[:, i] + math.sin(theta) * model.A[:, j]
    return classify(model, engine, nl, w, theta=float(theta))


def lift_to_dimension(record2d: FixedPointRecord, model_nd: MixingModel,
                      i: int, j: int,
                      engine: ExpectationEngine | None = None) -> FixedPointRecord:
    """Carry a 2-D spurious fixed point into a higher-dimensional model.

    The n-dimensional model must hold, at positions ``i`` and ``j``, the
    same two source laws as the 2-D model the record came from.  The lifted
    point keeps alpha, ||f'|| and its class; both are recomputed in the
    large model and verified.

    Raises
    ------
    PreconditionError
        On a demixing record (nothing to lift) or mismatched sources.
    """
    if record2d.cls == "demixing":
        raise PreconditionError("demixing records do not lift")
    if record2d.model is None or record2d.model.d != 2 or record2d.theta is None:
        raise PreconditionError("record must come from a 2-dimensional analysis")
    c, s = math.cos(record2d.theta), math.sin(record2d.theta)
    if min(abs(c), abs(s)) <= 1e-9:
        raise PreconditionError("coefficients on the axes do not lift")
    src = record2d.model.sources
    if model_nd.sources[i] != src[0] or model_nd.sources[j] != src[1]:
        raise PreconditionError(
            "target model sources at (i, j) differ from the 2-D model's"
        )
    if engine is None:
        engine = make_engine(model_nd)
    v = c * model_nd.A[:, i] + s * model_nd.A[:, j]
    record = classify(model_nd, engine, nl=record2d.nl, v=v, theta=record2d.theta)
    if abs(record.fprime_norm - record2d.fprime_norm) > 1e-8:
        raise NumericFailureError(
            f"lifted ||f'|| = {record.fprime_norm!r} deviates from 2-D value "
            f"{record2d.fprime_norm!r} by more than 1e-8"
        )
    if record.cls != record2d.cls:
        raise NumericFailureError(
            f"lifted class {record.cls} != 2-D class {record2d.cls}"
        )
    return record


def kurtosis_closed_form(model: MixingModel, v) -> tuple[float, float, bool]:
    """Exact alpha and ||f'|| of a kurtosis-nonlinearity fixed point.

    In source coordinates c = A'v a fixed point has support
    c_i^2 = kappa_i^(-1) / sum_j kappa_j^(-1) over the nonzero coordinates;
    then alpha(v) = -sum_i c_i^4 kappa_i, and ||f'(v)|| is 0 on a demixing
    vector and exactly 3 otherwise.

    Returns
    -------
    (alpha, fprime_norm, is_demixing)

    Raises
    ------
    AssumptionViolationError
        If some supported coordinate has zero excess kurtosis.
    NotAFixedPointError
        If v violates the support equation by more than 1e-8.
    """
    v = as_unit(v)
    c = model.source_coordinates(v)
    support = np.flatnonzero(np.abs(c) > 1e-6)
    if support.size == 0:
        raise NotAFixedPointError("zero vector")
    kappa = np.array([model.sources[k].excess_kurtosis for k in support])
    if np.any(kappa == 0.0):
        raise AssumptionViolationError(
            "zero-kurtosis source on the support: alpha would vanish"
        )
    a = -float(np.sum(c[support] ** 4 * kappa))
    if support.size == 1:
        if abs(abs(c[support[0]]) - 1.0) > 1e-8:
            raise NotAFixedPointError("support equation violated")
        return a, 0.0, True
    inv = 1.0 / kappa
    targets = inv / np.sum(inv)
    if np.max(np.abs(c[support] ** 2 - targets)) > 1e-8:
        raise NotAFixedPointError(
            "support equation violated: not a kurtosis fixed point"
        )
    return a, 3.0, False

"""Population-level analysis of the one-unit FastICA map.

For data x = A s with orthogonal A and independent standardized sources,
the iteration map is f(w) = h(w)/||h(w)|| with

    h(w) = E[g'(w'x) w - g(w'x) x].

This module evaluates h, f, the split h(w) = alpha(w) w + phi(w), the
Jacobian of f (both the general form and the reduced form valid at fixed
points), the contrast J(w) = E[G(w'x)] and its sphere-restricted Hessian
parts.  All expectations reduce to the source coordinates c = A'w, where
w'x = c's is a weighted sum of independent scalars; three interchangeable
evaluation engines are provided:

    gauss_hermite_mixture   exact conditioning for finite Gaussian-mixture
                            sources (gaussian, bimodal, bpsk)
    tensor_quadrature       per-law tensor rules, up to 3 active coordinates
    quasi_monte_carlo       scrambled Sobol points through each law's ppf

Every engine first drops coordinates with |c_k| below 1e-9: independent
sources that do not enter w'x contribute analytically, which keeps the
effective integration dimension equal to the number of active coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .distributions import DistributionSpec
from .nonlinearity import Nonlinearity

__all__ = [
    "MixingModel",
    "ExpectationEngine",
    "Kernels",
    "make_engine",
    "random_orthogonal",
    "as_unit",
    "h_map",
    "f_map",
    "alpha",
    "phi",
    "f_jacobian",
    "f_prime_fixed",
    "contrast",
    "contrast_hessian_parts",
    "expect_scalar",
    "spectral_norm",
    "AssumptionViolationError",
    "ConfigurationError",
]

_ACTIVE_TOL = 1e-9


class AssumptionViolationError(ArithmeticError):
    """The map degenerates at this point: h(w) vanishes (alpha ~ 0)."""


class ConfigurationError(ValueError):
    """Unsupported engine/model combination or invalid option."""


def random_orthogonal(d: int, seed) -> np.ndarray:
    """Haar-ish random orthogonal matrix with positive-diagonal convention."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def as_unit(w, tol: float = 1e-12) -> np.ndarray:
    """Validate and return w as a float vector with ||w|| = 1 within tol."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if abs(np.linalg.norm(w) - 1.0) > tol:
        raise ValueError(f"not a unit vector: ||w|| = {np.linalg.norm(w)!r}")
    return w


class MixingModel:
    """Orthogonal mixing of d >= 2 independent standardized sources.

    Parameters
    ----------
    A : (d, d) array
        Orthogonal mixing matrix (columns are the demixing directions).
    sources : sequence of DistributionSpec
        One standardized law per coordinate; at most one may be Gaussian.
    """

    def __init__(self, A, sources):
        A = np.asarray(A, dtype=float)
        sources = tuple(sources)
        d = len(sources)
        if d < 2:
            raise ConfigurationError("model needs dimension >= 2")
        if A.shape != (d, d):
            raise ConfigurationError(f"mixing matrix shape {A.shape} != ({d}, {d})")
        if np.max(np.abs(A.T @ A - np.eye(d))) > 1e-12:
            raise ConfigurationError("mixing matrix is not orthogonal")
        n_gauss = sum(s.is_gaussian for s in sources)
        if n_gauss > 1:
            raise ConfigurationError(f"{n_gauss} Gaussian sources; at most one allowed")
        self.A = A
        self.sources = sources
        self.d = d

    @classmethod
    def identity(cls, sources) -> "MixingModel":
        return cls(np.eye(len(tuple(sources))), sources)

    @classmethod
    def random(cls, sources, seed) -> "MixingModel":
        sources = tuple(sources)
        return cls(random_orthogonal(len(sources), seed), sources)

    def source_coordinates(self, w) -> np.ndarray:
        return self.A.T @ np.asarray(w, dtype=float)

    def __repr__(self):
        labels = ",".join(s.label for s in self.sources)
        return f"MixingModel(d={self.d}, sources=[{labels}])"


@dataclass(frozen=True)
class Kernels:
    """Source-coordinate expectations at a fixed direction c = A'w.

    With y = c's:  e_G = E[G(y)], e0 = E[g'(y)], r_j = E[g(y) s_j],
    m1_j = E[g''(y) s_j], M_jk = E[g'(y) s_j s_k].
    """

    e_G: float
    e0: float
    r: np.ndarray
    m1: np.ndarray
    M: np.ndarray


class ExpectationEngine:
    """Configured evaluator of population expectations over a model.

    Use :func:`make_engine` for the recommended defaults.  A named method
    is always used as configured; the "auto" method picks per evaluation
    based on the active coordinates (those with |c_k| above tolerance),
    since expectations reduce to an integral of that dimension: an exact
    mixture/Gauss-Hermite rule when every active source is a finite
    Gaussian mixture, tensor quadrature up to 3 active coordinates, and
    scrambled quasi-Monte Carlo beyond.  Instances cache quadrature nodes;
    they are logically immutable and safe to share.
    """

    METHODS = ("gauss_hermite_mixture", "tensor_quadrature", "quasi_monte_carlo")

    _DEFAULT_NODES = {
        "gauss_hermite_mixture": 64,
        "tensor_quadrature": 256,
        "quasi_monte_carlo": 1 << 20,
    }

    def __init__(self, method: str, nodes: int | None = None, seed: int = 0):
        if method not in self.METHODS + ("auto",):
            raise ConfigurationError(f"unknown engine method {method!r}")
        if nodes is not None and nodes < 2:
            raise ConfigurationError("engine needs at least 2 nodes")
        self.method = method
        self.nodes = None if nodes is None else int(nodes)
        self.seed = int(seed)
        self._rule_cache: dict = {}

    def __repr__(self):
        return f"ExpectationEngine({self.method!r}, nodes={self.nodes})"

    def _dispatch(self, specs_a):
        """Resolve (method, nodes) for one active source subset."""
        if self.method != "auto":
            method = self.method
        elif all(s.gaussian_components() is not None for s in specs_a):
            method = "gauss_hermite_mixture"
        elif len(specs_a) <= 3:
            method = "tensor_quadrature"
        else:
            method = "quasi_monte_carlo"
        nodes = self.nodes if self.nodes is not None \
            else self._DEFAULT_NODES[method]
        return method, nodes

    # -- public kernel evaluation -------------------------------------------

    def kernels(self, sources, nl: Nonlinearity, c) -> Kernels:
        """All source-space expectations needed by the population maps."""
        c = np.asarray(c, dtype=float)
        d = len(sources)
        active = np.flatnonzero(np.abs(c) > _ACTIVE_TOL)
        if active.size == 0:
            # w'x degenerates to the constant 0
            g0 = float(nl.gprime(0.0))
            return Kernels(float(nl.G(0.0)), g0, np.zeros(d), np.zeros(d),
                           g0 * np.eye(d))
        specs_a = [sources[k] for k in active]
        ca = c[active]
        method, nodes = self._dispatch(specs_a)
        if method == "gauss_hermite_mixture":
            parts = self._kernels_gh(specs_a, nl, ca, nodes)
        elif method == "tensor_quadrature":
            parts = self._kernels_tensor(specs_a, nl, ca, nodes)
        else:
            parts = self._kernels_qmc(specs_a, nl, ca, nodes)
        e_G, e0, r_a, m1_a, M_a = parts
        r = np.zeros(d)
        m1 = np.zeros(d)
        M = e0 * np.eye(d)  # inactive coords: E[g'(y) s_j s_k] = e0 * delta_jk
        r[active] = r_a
        m1[active] = m1_a
        M[np.ix_(active, active)] = M_a
        return Kernels(float(e_G), float(e0), r, m1, M)

    def expect_scalar_c(self, sources, psi, c) -> float:
        """E[psi(c's)] for a scalar function psi."""
        c = np.asarray(c, dtype=float)
        active = np.flatnonzero(np.abs(c) > _ACTIVE_TOL)
        if active.size == 0:
            return float(np.asarray(psi(0.0)))
        specs_a = [sources[k] for k in active]
        ca = c[active]
        total = 0.0
        for y, wts in self._y_nodes(specs_a, ca):
            total += float(np.dot(wts, np.asarray(psi(y), dtype=float)))
        return total

    # -- gauss_hermite_mixture ----------------------------------------------

    def _gh_nodes(self, nodes):
        key = ("gh", nodes)
        if key not in self._rule_cache:
            t, w = np.polynomial.hermite.hermgauss(nodes)
            self._rule_cache[key] = (t * math.sqrt(2.0), w / math.sqrt(math.pi))
        return self._rule_cache[key]

    def _mixture_combos(self, specs_a, ca):
        """Yield (weight, m_y, v_y, mu_z, sig2_z) per mixture component combo."""
        comps = []
        for spec in specs_a:
            parts = spec.gaussian_components()
            if parts is None:
                raise ConfigurationError(
                    f"{spec.label} is not a finite Gaussian mixture; "
                    "use tensor_quadrature or quasi_monte_carlo"
                )
            comps.append(parts)
        for combo in itertools.product(*[range(len(p[0])) for p in comps]):
            wz = 1.0
            mu = np.empty(len(specs_a))
            sig2 = np.empty(len(specs_a))
            for k, (zi, (pw, pm, ps)) in enumerate(zip(combo, comps)):
                wz *= pw[zi]
                mu[k] = pm[zi]
                sig2[k] = ps[zi] ** 2
            m_y = float(ca @ mu)
            v_y = float(ca**2 @ sig2)
            yield wz, m_y, v_y, mu, sig2

    def _kernels_gh(self, specs_a, nl, ca, nodes):
        da = len(ca)
        t, base_w = self._gh_nodes(nodes)
        e_G = e0 = 0.0
        r = np.zeros(da)
        m1 = np.zeros(da)
        M = np.zeros((da, da))
        for wz, m_y, v_y, mu, sig2 in self._mixture_combos(specs_a, ca):
            if v_y > 1e-300:
                y = m_y + math.sqrt(v_y) * t
                wt = base_w
                beta = ca * sig2 / v_y
            else:
                y = np.array([m_y])
                wt = np.array([1.0])
                beta = np.zeros(da)
            gy = np.asarray(nl.g(y), dtype=float)
            gpy = np.asarray(nl.gprime(y), dtype=float)
            gsy = np.asarray(nl.gsecond(y), dtype=float)
            Gy = np.asarray(nl.G(y), dtype=float)
            # conditionally on the combo, (y, s_j) is bivariate Gaussian:
            # E[s_j | y] is linear in y and Cov(s_j, s_k | y) is constant
            mc = mu[:, None] + beta[:, None] * (y - m_y)[None, :]
            covc = np.diag(sig2) - np.outer(beta, beta) * v_y
            e0_z = float(wt @ gpy)
            e_G += wz * float(wt @ Gy)
            e0 += wz * e0_z
            r += wz * (mc @ (wt * gy))
            m1 += wz * (mc @ (wt * gsy))
            M += wz * ((mc * (wt * gpy)) @ mc.T + e0_z * covc)
        return e_G, e0, r, m1, M

    # -- tensor_quadrature ----------------------------------------------------

    def _axis_rule(self, spec, nodes):
        key = ("axis", spec.label, nodes)
        if key not in self._rule_cache:
            self._rule_cache[key] = spec.quad_rule(nodes)
        return self._rule_cache[key]

    def _tensor_chunks(self, specs_a, ca, nodes, chunk=1 << 19):
        """Yield (S, W) blocks of the tensor-product rule, memory-bounded."""
        rules = [self._axis_rule(s, nodes) for s in specs_a]
        sizes = [len(x) for x, _ in rules]
        total = int(np.prod(sizes))
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total))
            S = np.empty((idx.size, len(specs_a)))
            W = np.ones(idx.size)
            rem = idx
            for k in range(len(specs_a) - 1, -1, -1):
                x, w = rules[k]
                sub = rem % sizes[k]
                rem = rem // sizes[k]
                S[:, k] = x[sub]
                W *= w[sub]
            yield S, W

    def _kernels_tensor(self, specs_a, nl, ca, nodes):
        da = len(ca)
        if da > 3:
            raise ConfigurationError(
                f"tensor_quadrature supports at most 3 active coordinates, got {da}"
            )
        e_G = e0 = 0.0
        r = np.zeros(da)
        m1 = np.zeros(da)
        M = np.zeros((da, da))
        for S, W in self._tensor_chunks(specs_a, ca, nodes):
            y = S @ ca
            gy = np.asarray(nl.g(y), dtype=float)
            gpy = np.asarray(nl.gprime(y), dtype=float)
            gsy = np.asarray(nl.gsecond(y), dtype=float)
            Gy = np.asarray(nl.G(y), dtype=float)
            e_G += float(W @ Gy)
            e0 += float(W @ gpy)
            r += S.T @ (W * gy)
            m1 += S.T @ (W * gsy)
            M += (S * (W * gpy)[:, None]).T @ S
        return e_G, e0, r, m1, M

    # -- quasi_monte_carlo ----------------------------------------------------

    def _qmc_points(self, specs_a, nodes):
        m = max(4, round(math.log2(nodes)))
        key = ("qmc", tuple(s.label for s in specs_a), m)
        if key not in self._rule_cache:
            da = len(specs_a)
            rng = np.random.default_rng(np.random.SeedSequence((self.seed, da, 2161)))
            sob = qmc.Sobol(d=da, scramble=True, seed=rng)
            u = sob.random_base2(m)
            S = np.empty_like(u)
            for k, spec in enumerate(specs_a):
                S[:, k] = spec.ppf(u[:, k])
            self._rule_cache[key] = S
        return self._rule_cache[key]

    def _kernels_qmc(self, specs_a, nl, ca, nodes):
        S = self._qmc_points(specs_a, nodes)
        P = S.shape[0]
        y = S @ ca
        gy = np.asarray(nl.g(y), dtype=float)
        gpy = np.asarray(nl.gprime(y), dtype=float)
        gsy = np.asarray(nl.gsecond(y), dtype=float)
        Gy = np.asarray(nl.G(y), dtype=float)
        e_G = float(np.mean(Gy))
        e0 = float(np.mean(gpy))
        r = S.T @ gy / P
        m1 = S.T @ gsy / P
        M = (S * gpy[:, None]).T @ S / P
        return e_G, e0, r, m1, M

    # -- shared scalar-expectation node streams --------------------------------

    def _y_nodes(self, specs_a, ca):
        """Yield (y, weights) node batches representing the law of c's."""
        method, nodes = self._dispatch(specs_a)
        if method == "gauss_hermite_mixture":
            t, base_w = self._gh_nodes(nodes)
            for wz, m_y, v_y, _, _ in self._mixture_combos(specs_a, ca):
                if v_y > 1e-300:
                    yield m_y + math.sqrt(v_y) * t, wz * base_w
                else:
                    yield np.array([m_y]), np.array([wz])
        elif method == "tensor_quadrature":
            if len(ca) > 3:
                raise ConfigurationError(
                    f"tensor_quadrature supports at most 3 active coordinates, got {len(ca)}"
                )
            for S, W in self._tensor_chunks(specs_a, ca, nodes):
                yield S @ ca, W
        else:
            S = self._qmc_points(specs_a, nodes)
            yield S @ ca, np.full(S.shape[0], 1.0 / S.shape[0])


def make_engine(model: MixingModel, method: str | None = None,
                nodes: int | None = None, seed: int = 0) -> ExpectationEngine:
    """Engine with recommended defaults for the given model.

    With no method named, evaluations dispatch on the active coordinate
    subset: finite Gaussian-mixture subsets get the exact-conditioning
    rule with 64 nodes, up to 3 active coordinates get tensor quadrature
    with 256 nodes per axis, and anything wider gets scrambled
    quasi-Monte Carlo with 2^20 points.  A named method is always used as
    given; explicit ``nodes`` apply to whichever rule runs.
    """
    if method == "gauss_hermite_mixture":
        for s in model.sources:
            if s.gaussian_components() is None:
                raise ConfigurationError(
                    f"{s.label} is not a finite Gaussian mixture; "
                    "gauss_hermite_mixture cannot handle this model"
                )
    return ExpectationEngine(method if method is not None else "auto",
                             nodes, seed)


# -- population maps ---------------------------------------------------------


def _kern(model, engine, nl, w):
    c = model.source_coordinates(w)
    return c, engine.kernels(model.sources, nl, c)


def h_map(model, engine, nl, w) -> np.ndarray:
    """h(w) = E[g'(w'x) w - g(w'x) x].

    Raises
    ------
    AssumptionViolationError
        If ||h(w)|| < 1e-10 (the iteration direction is undefined there).
    """
    c, k = _kern(model, engine, nl, w)
    h = model.A @ (k.e0 * c - k.r)
    if np.linalg.norm(h) < 1e-10:
        raise AssumptionViolationError(f"h(w) vanishes at w={w}")
    return h


def f_map(model, engine, nl, w) -> np.ndarray:
    """One FastICA step f(w) = h(w)/||h(w)||.

    Defined in a neighborhood of the sphere (w need not be exactly unit),
    which lets finite differences of f validate the analytic Jacobian.
    """
    h = h_map(model, engine, nl, w)
    return h / np.linalg.norm(h)


def alpha(model, engine, nl, w) -> float:
    """Radial coefficient alpha(w) = E[g'(w'x) - g(w'x) w'x]."""
    c, k = _kern(model, engine, nl, w)
    return k.e0 - float(c @ k.r)


def phi(model, engine, nl, w) -> np.ndarray:
    """Tangential component phi(w) = (I - ww') E[g(w'x) x]."""
    c, k = _kern(model, engine, nl, w)
    return model.A @ (k.r - c * float(c @ k.r))


def f_jacobian(model, engine, nl, w) -> np.ndarray:
    """Jacobian of f at w (general position):

        f'(w) = (||h||^2 I - h h') h'(w) / ||h||^3,
        h'(w) = E[g''(w'x) w x' + g'(w'x) I - g'(w'x) x x'].
    """
    c, k = _kern(model, engine, nl, w)
    A = model.A
    h = A @ (k.e0 * c - k.r)
    hn = np.linalg.norm(h)
    if hn < 1e-10:
        raise AssumptionViolationError(f"h(w) vanishes at w={w}")
    hp = A @ (np.outer(c, k.m1) + k.e0 * np.eye(model.d) - k.M) @ A.T
    return (hn**2 * np.eye(model.d) - np.outer(h, h)) @ hp / hn**3


def f_prime_fixed(model, engine, nl, v) -> np.ndarray:
    """Jacobian of f at a fixed point v, reduced form:

        f'(v) = (I - vv') E[g'(v'x)(I - x x')] / |alpha(v)|.
    """
    c, k = _kern(model, engine, nl, v)
    a = k.e0 - float(c @ k.r)
    if abs(a) < 1e-10:
        raise AssumptionViolationError(f"alpha(v) ~ 0 at v={v}")
    proj = np.eye(len(c)) - np.outer(c, c)
    return model.A @ (proj @ (k.e0 * np.eye(len(c)) - k.M)) @ model.A.T / abs(a)


def contrast(model, engine, nl, w) -> float:
    """Contrast value J(w) = E[G(w'x)]."""
    _, k = _kern(model, engine, nl, w)
    return k.e_G


def contrast_hessian_parts(model, engine, nl, v):
    """Matrices (K, L) and alpha of the sphere-restricted expansion at v:

        J(w) - J(v) ~ sign convention with K(v) = alpha(v) I + L(v),
        L(v) = (I - vv') E[g'(v'x)(x x' - I)] (I - vv').
    """
    c, k = _kern(model, engine, nl, v)
    a = k.e0 - float(c @ k.r)
    proj = np.eye(len(c)) - np.outer(c, c)
    L = model.A @ (proj @ (k.M - k.e0 * np.eye(len(c))) @ proj) @ model.A.T
    K = a * np.eye(model.d) + L
    return K, L, a


def expect_scalar(model, engine, w, psi) -> float:
    """E[psi(w'x)] for a scalar function psi."""
    return engine.expect_scalar_c(model.sources, psi, model.source_coordinates(w))


def spectral_norm(M, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Largest singular value via power iteration on M'M.

    The start is a fixed seeded dense draw: a basis vector can sit inside
    a non-dominant invariant block of an exactly reducible M'M, but a
    dense vector overlaps every block.  The result is never below the
    largest column norm of M.
    """
    M = np.asarray(M, dtype=float)
    B = M.T @ M
    diag = np.diag(B).copy()
    if not np.any(diag > 0):
        return 0.0
    x = np.random.default_rng(0).standard_normal(B.shape[0])
    x /= np.linalg.norm(x)
    lam = float(x @ B @ x)
    for _ in range(max_iter):
        y = B @ x
        yn = np.linalg.norm(y)
        if yn == 0.0:
            break  # x in the nullspace; dominant eigenvalue already bracketed
        x = y / yn
        lam_new = float(x @ B @ x)
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return math.sqrt(max(lam, float(np.max(diag))))

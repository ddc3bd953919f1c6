"""Standardized source distributions for ICA experiments.

Every law shipped here has zero mean and unit variance by construction, so
a vector of independent sources can be mixed by an orthogonal matrix without
further preprocessing.  Available families:

    uniform                 uniform on (-sqrt(3), sqrt(3))
    laplace                 Laplace with scale 1/sqrt(2)
    gg:alpha                generalized Gaussian with shape alpha
    bimod:mu                symmetric two-mode Gaussian mixture (modes +-mu)
    bimod:mu1,mu2           asymmetric two-mode Gaussian mixture
    bpsk                    discrete, equiprobable on {-1, +1}
    sinus                   law of sqrt(2)*sin(U), U uniform on (0, 2*pi)
    gaussian                standard normal

Each distribution knows how to sample itself, evaluate its density and the
density derivative, expose analytic moments, produce 1-D quadrature rules
used by the population expectation engines, and (for continuous laws) build
its score function -p'/p as a :class:`~icafix.nonlinearity.Nonlinearity`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.special import gammaincinv

from .nonlinearity import Nonlinearity

__all__ = [
    "DistributionSpec",
    "MomentSet",
    "Uniform",
    "Laplace",
    "GeneralizedGaussian",
    "Bimodal",
    "Bpsk",
    "Sinus",
    "Gaussian",
    "parse_distribution",
    "ParameterError",
    "UnsupportedOperationError",
    "NumericFailureError",
]

_SQRT3 = math.sqrt(3.0)
_SQRT2 = math.sqrt(2.0)


class ParameterError(ValueError):
    """Distribution parameters outside their admissible range."""


class UnsupportedOperationError(TypeError):
    """Operation undefined for this law (e.g. density of a discrete law)."""


class NumericFailureError(ArithmeticError):
    """A required expectation failed to converge or is not integrable."""


@dataclass(frozen=True)
class MomentSet:
    """Moments of a standardized law relevant to contrast analysis.

    Attributes
    ----------
    fourth_moment : float
        E[s^4].
    excess_kurtosis : float
        E[s^4] - 3.
    gee_gap : float
        E[g'(s) - s g(s)] for the nonlinearity the set was built with.
        This is the value of alpha at a demixing vector.
    """

    fourth_moment: float
    excess_kurtosis: float
    gee_gap: float


class DistributionSpec:
    """Base class for standardized (zero-mean, unit-variance) source laws.

    Subclasses must provide sampling, quadrature and (when continuous)
    density evaluation.  All instances are immutable value objects.
    """

    #: canonical literal accepted by :func:`parse_distribution`
    label: str = ""
    is_discrete: bool = False
    is_symmetric: bool = True

    # -- sampling ----------------------------------------------------------

    def sample(self, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` i.i.d. values; deterministic for a fixed seed.

        ``seed`` may be an int, a numpy Generator, or None.
        """
        if n < 1:
            raise ParameterError("sample size must be >= 1")
        rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
        return self._sample(n, rng)

    def _sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    # -- density -----------------------------------------------------------

    def pdf(self, x):
        raise UnsupportedOperationError(f"{self.label} has no density")

    def pdf_derivative(self, x):
        raise UnsupportedOperationError(f"{self.label} has no density")

    def ppf(self, u):
        """Quantile function, used by the quasi-Monte Carlo engine."""
        raise NotImplementedError

    # -- analytic moments ----------------------------------------------------

    def fourth_moment(self) -> float:
        raise NotImplementedError

    @property
    def excess_kurtosis(self) -> float:
        return self.fourth_moment() - 3.0

    @property
    def is_gaussian(self) -> bool:
        return False

    # -- expectation utilities ----------------------------------------------

    def expect(self, psi) -> float:
        """Adaptive-quadrature (or exact-sum) expectation E[psi(s)].

        Absolute accuracy about 1e-10 for the smooth integrands used here.
        """
        raise NotImplementedError

    def quad_rule(self, nodes: int) -> tuple[np.ndarray, np.ndarray]:
        """Return points x and weights w with sum(w * psi(x)) ~ E[psi(s)].

        The rule is specific to the law so that smooth integrands are
        integrated to near machine accuracy with a few hundred nodes.
        """
        raise NotImplementedError

    def gaussian_components(self):
        """Mixture representation (weights, means, sigmas) or None.

        Only laws expressible as finite Gaussian mixtures (point masses
        allowed, sigma = 0) return a value; others return None.
        """
        return None

    def score_function(self) -> Nonlinearity:
        """Score nonlinearity g_opt = -p'/p with analytic derivatives."""
        raise UnsupportedOperationError(f"{self.label} has no score function")

    # -- misc ---------------------------------------------------------------

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r})"

    def __eq__(self, other):
        return type(self) is type(other) and self.label == other.label

    def __hash__(self):
        return hash((type(self).__name__, self.label))


def _quad(fun, a, b, points=None) -> float:
    val, err = integrate.quad(fun, a, b, points=points, limit=400,
                              epsabs=1e-12, epsrel=1e-11)
    if not np.isfinite(val) or err > 1e-7:
        raise NumericFailureError(f"quadrature failed (err={err:g})")
    return val


def _gauss_legendre_panel(a: float, b: float, n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (b - a) * t + 0.5 * (b + a)
    return x, 0.5 * (b - a) * w


def _geometric_panels(total: float, n_panels: int, ratio: float = 0.5):
    """Breakpoints of [0, total] graded geometrically toward 0."""
    edges = [total * ratio ** k for k in range(n_panels)]
    edges.append(0.0)
    return edges[::-1]


class Uniform(DistributionSpec):
    """Uniform law on (-sqrt(3), sqrt(3)); kurtosis excess -1.2."""

    label = "uniform"

    def _sample(self, n, rng):
        return rng.uniform(-_SQRT3, _SQRT3, size=n)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) < _SQRT3, 1.0 / (2.0 * _SQRT3), 0.0)

    def pdf_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x)

    def ppf(self, u):
        return _SQRT3 * (2.0 * np.asarray(u, dtype=float) - 1.0)

    def fourth_moment(self):
        return 9.0 / 5.0

    def expect(self, psi):
        return _quad(lambda x: psi(x) / (2.0 * _SQRT3), -_SQRT3, _SQRT3)

    def quad_rule(self, nodes):
        x, w = _gauss_legendre_panel(-_SQRT3, _SQRT3, nodes)
        return x, w / (2.0 * _SQRT3)

    def score_function(self):
        # flat density: the score vanishes inside the support and carries
        # no information, so estimation with it is impossible
        raise UnsupportedOperationError(
            "uniform has a degenerate (identically zero) score function"
        )


#: half-width used to smear the sign score's point-mass derivative
_SCORE_BANDWIDTH = 0.25


def _sign_score(name: str) -> Nonlinearity:
    # the derivative of sign is a point mass at zero, invisible to any
    # pointwise evaluation; a central difference at fixed bandwidth makes
    # the sample mean of g' a consistent estimate of that mass, and since
    # the g'-weighted second-moment kernel uses the same function, the
    # demixing vectors stay attractive under the empirical update
    h = _SCORE_BANDWIDTH

    def g(x):
        return _SQRT2 * np.sign(np.asarray(x, dtype=float))

    def gprime(x):
        x = np.asarray(x, dtype=float)
        return (np.sign(x + h) - np.sign(x - h)) * (_SQRT2 / (2.0 * h))

    def gsecond(x):
        x = np.asarray(x, dtype=float)
        jump = np.sign(x + h) - 2.0 * np.sign(x) + np.sign(x - h)
        return jump * (_SQRT2 / h**2)

    def big_g(x):
        return _SQRT2 * np.abs(np.asarray(x, dtype=float))

    return Nonlinearity(name, big_g, g, gprime, gsecond)


class _ExponentialPower(DistributionSpec):
    """Shared machinery for laplace and generalized Gaussian laws.

    Density c * exp(-(beta*|x|)^alpha) with beta chosen for unit variance.
    """

    alpha: float

    def __init__(self):
        a = self.alpha
        self.beta = math.sqrt(special.gamma(3.0 / a) / special.gamma(1.0 / a))
        self.norm = a * self.beta / (2.0 * special.gamma(1.0 / a))
        # integrand support cutoff: exp(-45) ~ 3e-20 leaves no visible tail
        self.cutoff = 45.0 ** (1.0 / a) / self.beta

    def _sample(self, n, rng):
        # |X| = T^(1/alpha)/beta with T ~ Gamma(1/alpha, 1)
        t = rng.gamma(1.0 / self.alpha, 1.0, size=n)
        sign = rng.integers(0, 2, size=n) * 2 - 1
        return sign * t ** (1.0 / self.alpha) / self.beta

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.norm * np.exp(-((self.beta * np.abs(x)) ** self.alpha))

    def pdf_derivative(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            grad = -self.alpha * self.beta**self.alpha * ax ** (self.alpha - 1.0)
        grad = np.where(ax > 0, grad, 0.0 if self.alpha > 1 else np.nan)
        return self.pdf(x) * grad * np.sign(x)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        tail = np.abs(2.0 * u - 1.0)
        t = gammaincinv(1.0 / self.alpha, tail)
        return np.sign(u - 0.5) * t ** (1.0 / self.alpha) / self.beta

    def fourth_moment(self):
        a = self.alpha
        g = special.gamma
        return g(5.0 / a) * g(1.0 / a) / g(3.0 / a) ** 2

    def expect(self, psi):
        f = lambda x: psi(x) * self.norm * math.exp(-((self.beta * abs(x)) ** self.alpha))
        return _quad(f, -self.cutoff, 0.0) + _quad(f, 0.0, self.cutoff)

    def quad_rule(self, nodes):
        a = self.alpha
        half = max(nodes // 2, 4)
        if a <= 1.0 and half <= 256:
            # substituting u = (beta*x)^alpha turns each half-line into a
            # generalized Gauss-Laguerre integral with weight u^(1/a-1)e^-u,
            # absorbing both the cusp at 0 and the heavy tail; moments of
            # order 2k become degree-2k/a polynomials, integrated exactly
            # (root finding is unstable past 256 nodes, hence the cap)
            u, v = special.roots_genlaguerre(half, 1.0 / a - 1.0)
            x = u ** (1.0 / a) / self.beta
            w = v / (2.0 * special.gamma(1.0 / a))
            return np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w])
        # composite Gauss-Legendre; grade panels toward 0 while the density
        # still has a rough derivative there (a < 2), uniform panels once it
        # is smooth and the shoulder near the cutoff dominates the error
        n_panels = 16
        per_panel = max(half // n_panels, 2)
        if a < 2.0:
            edges = _geometric_panels(self.cutoff, n_panels)
        else:
            edges = list(np.linspace(0.0, self.cutoff, n_panels + 1))
        xs, ws = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            x, w = _gauss_legendre_panel(lo, hi, per_panel)
            xs.append(x)
            ws.append(w)
        x = np.concatenate(xs)
        w = np.concatenate(ws) * self.pdf(x)
        return np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w])

    def score_function(self):
        a, b = self.alpha, self.beta
        if a == 1.0:
            return _sign_score(f"score:{self.label}")
        c = a * b**a

        def g(x):
            x = np.asarray(x, dtype=float)
            return c * np.abs(x) ** (a - 1.0) * np.sign(x)

        def gprime(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return c * (a - 1.0) * np.abs(x) ** (a - 2.0)

        def gsecond(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = c * (a - 1.0) * (a - 2.0) * np.abs(x) ** (a - 3.0) * np.sign(x)
            return np.where(x != 0, out, 0.0)

        def big_g(x):
            x = np.asarray(x, dtype=float)
            return (b * np.abs(x)) ** a

        return Nonlinearity(f"score:{self.label}", big_g, g, gprime, gsecond)


class Laplace(_ExponentialPower):
    """Laplace law with scale 1/sqrt(2); kurtosis excess +3."""

    label = "laplace"
    alpha = 1.0

    def __init__(self):
        super().__init__()

    def fourth_moment(self):
        return 6.0

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u < 0.5,
                        np.log(np.maximum(2.0 * u, 1e-320)) / _SQRT2,
                        -np.log(np.maximum(2.0 * (1.0 - u), 1e-320)) / _SQRT2)

    def score_function(self):
        return _sign_score("score:laplace")


class GeneralizedGaussian(_ExponentialPower):
    """Generalized Gaussian with shape alpha: density ~ exp(-(beta|x|)^alpha)."""

    def __init__(self, alpha: float):
        if not (0.25 < alpha <= 8.0):
            raise ParameterError(f"gg shape must lie in (0.25, 8], got {alpha}")
        self.alpha = float(alpha)
        super().__init__()
        self.label = f"gg:{alpha:g}"

    @property
    def is_gaussian(self):
        return self.alpha == 2.0

    def gaussian_components(self):
        if self.alpha == 2.0:
            return (np.array([1.0]), np.array([0.0]), np.array([1.0]))
        return None


class Bimodal(DistributionSpec):
    """Two-mode Gaussian mixture standardized to zero mean, unit variance.

    Modes mu1, mu2 must have opposite signs with |mu1*mu2| < 1.  Weight
    p = |mu2|/(|mu1|+|mu2|) and shared component variance 1 - |mu1*mu2|
    give exactly zero mean and unit variance, so no further affine
    correction is applied.
    """

    def __init__(self, mu1: float, mu2: float):
        if mu1 == 0 or mu2 == 0 or mu1 * mu2 > 0:
            raise ParameterError("bimodal modes must be nonzero with opposite signs")
        prod = abs(mu1 * mu2)
        if prod > 1:
            raise ParameterError(f"|mu1*mu2| = {prod:g} > 1 leaves no variance budget")
        self.mu1 = float(mu1)
        self.mu2 = float(mu2)
        self.p = abs(mu2) / (abs(mu1) + abs(mu2))
        self.sigma2 = 1.0 - prod
        self.sigma = math.sqrt(self.sigma2)
        if self.sigma2 == 0.0 and not (abs(mu1) == 1 and abs(mu2) == 1):
            raise ParameterError("degenerate mixture: sigma^2 = 0")
        mean = self.p * mu1 + (1 - self.p) * mu2
        var = self.sigma2 + self.p * mu1**2 + (1 - self.p) * mu2**2
        assert abs(mean) < 1e-14 and abs(var - 1.0) < 1e-14
        self.is_symmetric = abs(mu1 + mu2) < 1e-15
        if self.is_symmetric:
            self.label = f"bimod:{abs(mu1):g}"
        else:
            self.label = f"bimod:{mu1:g},{mu2:g}"

    def _sample(self, n, rng):
        pick = rng.random(n) < self.p
        mu = np.where(pick, self.mu1, self.mu2)
        if self.sigma == 0.0:
            return mu.astype(float)
        return mu + self.sigma * rng.standard_normal(n)

    def _component_pdfs(self, x):
        if self.sigma == 0.0:
            raise UnsupportedOperationError("degenerate bimodal has no density")
        x = np.asarray(x, dtype=float)
        z1 = (x - self.mu1) / self.sigma
        z2 = (x - self.mu2) / self.sigma
        c = 1.0 / (self.sigma * math.sqrt(2.0 * math.pi))
        return c * np.exp(-0.5 * z1**2), c * np.exp(-0.5 * z2**2)

    def pdf(self, x):
        f1, f2 = self._component_pdfs(x)
        return self.p * f1 + (1 - self.p) * f2

    def pdf_derivative(self, x):
        x = np.asarray(x, dtype=float)
        f1, f2 = self._component_pdfs(x)
        d1 = -(x - self.mu1) / self.sigma2 * f1
        d2 = -(x - self.mu2) / self.sigma2 * f2
        return self.p * d1 + (1 - self.p) * d2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z1 = (x - self.mu1) / self.sigma
        z2 = (x - self.mu2) / self.sigma
        return self.p * special.ndtr(z1) + (1 - self.p) * special.ndtr(z2)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        lo = np.full(u.shape, min(self.mu1, self.mu2) - 12.0 * self.sigma)
        hi = np.full(u.shape, max(self.mu1, self.mu2) + 12.0 * self.sigma)
        for _ in range(90):  # plain bisection: 90 halvings reach ~1e-14
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def fourth_moment(self):
        m4 = lambda mu: mu**4 + 6.0 * mu**2 * self.sigma2 + 3.0 * self.sigma2**2
        return self.p * m4(self.mu1) + (1 - self.p) * m4(self.mu2)

    def expect(self, psi):
        lo = min(self.mu1, self.mu2) - 12.0 * self.sigma
        hi = max(self.mu1, self.mu2) + 12.0 * self.sigma
        return _quad(lambda x: psi(x) * self.pdf(x), lo, hi,
                     points=[self.mu1, self.mu2])

    def quad_rule(self, nodes):
        # one Gauss-Hermite rule per mixture component
        per = max(nodes // 2, 2)
        t, w = np.polynomial.hermite.hermgauss(per)
        x1 = self.mu1 + self.sigma * _SQRT2 * t
        x2 = self.mu2 + self.sigma * _SQRT2 * t
        wn = w / math.sqrt(math.pi)
        return (np.concatenate([x1, x2]),
                np.concatenate([self.p * wn, (1 - self.p) * wn]))

    def gaussian_components(self):
        return (np.array([self.p, 1 - self.p]),
                np.array([self.mu1, self.mu2]),
                np.array([self.sigma, self.sigma]))

    def score_function(self):
        mu1, mu2, s2 = self.mu1, self.mu2, self.sigma2
        p = self.p
        dmu = mu1 - mu2
        c = dmu / s2
        logit0 = math.log(p / (1 - p)) + (mu2**2 - mu1**2) / (2.0 * s2)

        def r1(x):
            return special.expit(logit0 + c * np.asarray(x, dtype=float))

        def g(x):
            x = np.asarray(x, dtype=float)
            m = mu2 + r1(x) * dmu
            return (x - m) / s2

        def gprime(x):
            r = r1(x)
            return (1.0 - r * (1.0 - r) * dmu**2 / s2) / s2

        def gsecond(x):
            r = r1(x)
            return -(c**2) * dmu * r * (1.0 - r) * (1.0 - 2.0 * r) / s2

        def big_g(x):
            return -np.log(self.pdf(x))

        return Nonlinearity(f"score:{self.label}", big_g, g, gprime, gsecond)


class Bpsk(DistributionSpec):
    """Discrete law, equiprobable on {-1, +1}; kurtosis excess -2."""

    label = "bpsk"
    is_discrete = True

    def _sample(self, n, rng):
        return (rng.integers(0, 2, size=n) * 2 - 1).astype(float)

    def ppf(self, u):
        return np.where(np.asarray(u, dtype=float) < 0.5, -1.0, 1.0)

    def fourth_moment(self):
        return 1.0

    def expect(self, psi):
        return 0.5 * (float(np.asarray(psi(-1.0))) + float(np.asarray(psi(1.0))))

    def quad_rule(self, nodes):
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])

    def gaussian_components(self):
        return (np.array([0.5, 0.5]), np.array([-1.0, 1.0]), np.array([0.0, 0.0]))


class Sinus(DistributionSpec):
    """Law of sqrt(2)*sin(U) with U uniform on (0, 2*pi).

    Density 1/(pi*sqrt(2 - x^2)) on (-sqrt(2), sqrt(2)); kurtosis -1.5.
    """

    label = "sinus"

    def _sample(self, n, rng):
        return _SQRT2 * np.sin(rng.uniform(0.0, 2.0 * math.pi, size=n))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < _SQRT2
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 1.0 / (math.pi * np.sqrt(2.0 - x**2))
        return np.where(inside, val, 0.0)

    def pdf_derivative(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < _SQRT2
        with np.errstate(divide="ignore", invalid="ignore"):
            val = x / (math.pi * (2.0 - x**2) ** 1.5)
        return np.where(inside, val, 0.0)

    def ppf(self, u):
        return _SQRT2 * np.sin(math.pi * (np.asarray(u, dtype=float) - 0.5))

    def fourth_moment(self):
        return 1.5

    def expect(self, psi):
        # substitute x = sqrt(2) sin(t): the integrand becomes smooth
        return _quad(lambda t: psi(_SQRT2 * math.sin(t)) / math.pi,
                     -math.pi / 2.0, math.pi / 2.0)

    def quad_rule(self, nodes):
        # Gauss-Chebyshev: the density is exactly the Chebyshev weight
        k = np.arange(1, nodes + 1)
        t = np.cos((2.0 * k - 1.0) * math.pi / (2.0 * nodes))
        return _SQRT2 * t, np.full(nodes, 1.0 / nodes)

    def score_function(self):
        def g(x):
            x = np.asarray(x, dtype=float)
            return -x / (2.0 - x**2)

        def gprime(x):
            x = np.asarray(x, dtype=float)
            return -(2.0 + x**2) / (2.0 - x**2) ** 2

        def gsecond(x):
            x = np.asarray(x, dtype=float)
            return -x * (x**2 + 10.0) / (2.0 - x**2) ** 3

        def big_g(x):
            x = np.asarray(x, dtype=float)
            return 0.5 * np.log(2.0 - x**2)

        return Nonlinearity("score:sinus", big_g, g, gprime, gsecond)


class Gaussian(DistributionSpec):
    """Standard normal; the benchmark of zero excess kurtosis."""

    label = "gaussian"

    def _sample(self, n, rng):
        return rng.standard_normal(n)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x**2) / math.sqrt(2.0 * math.pi)

    def pdf_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -x * self.pdf(x)

    def ppf(self, u):
        return special.ndtri(np.asarray(u, dtype=float))

    def fourth_moment(self):
        return 3.0

    @property
    def is_gaussian(self):
        return True

    def expect(self, psi):
        return _quad(lambda x: psi(x) * self.pdf(x), -12.0, 12.0, points=[0.0])

    def quad_rule(self, nodes):
        t, w = np.polynomial.hermite.hermgauss(nodes)
        return _SQRT2 * t, w / math.sqrt(math.pi)

    def gaussian_components(self):
        return (np.array([1.0]), np.array([0.0]), np.array([1.0]))

    def score_function(self):
        one = lambda x: np.ones_like(np.asarray(x, dtype=float))
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
        return Nonlinearity(
            "score:gaussian",
            lambda x: 0.5 * np.asarray(x, dtype=float) ** 2,
            lambda x: np.asarray(x, dtype=float),
            one,
            zero,
        )


def moments(spec: DistributionSpec, nl: Nonlinearity) -> MomentSet:
    """Fourth moment, excess kurtosis and E[g'(s) - s g(s)] for ``spec``.

    Continuous laws are integrated adaptively, bpsk is summed exactly.
    """
    m4 = spec.fourth_moment()
    gap = spec.expect(lambda x: nl.gprime(x) - x * nl.g(x))
    return MomentSet(fourth_moment=m4, excess_kurtosis=m4 - 3.0, gee_gap=gap)


@lru_cache(maxsize=None)
def _parse_cached(text: str) -> DistributionSpec:
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name == "uniform":
        spec = Uniform()
    elif name == "laplace":
        spec = Laplace()
    elif name == "gaussian":
        spec = Gaussian()
    elif name == "bpsk":
        spec = Bpsk()
    elif name == "sinus":
        spec = Sinus()
    elif name == "gg":
        if not arg:
            raise ParameterError("gg needs a shape parameter, e.g. gg:3")
        spec = GeneralizedGaussian(float(arg))
    elif name == "bimod":
        if not arg:
            raise ParameterError("bimod needs mode locations, e.g. bimod:0.9")
        parts = [float(p) for p in arg.split(",")]
        if len(parts) == 1:
            spec = Bimodal(parts[0], -parts[0])
        elif len(parts) == 2:
            spec = Bimodal(parts[0], parts[1])
        else:
            raise ParameterError(f"bimod takes 1 or 2 parameters, got {len(parts)}")
    else:
        raise ParameterError(f"unknown distribution {text!r}")
    if name in ("uniform", "laplace", "gaussian", "bpsk", "sinus") and arg:
        raise ParameterError(f"{name} takes no parameter")
    return spec


def parse_distribution(text: str) -> DistributionSpec:
    """Build a spec from a literal such as ``uniform``, ``gg:3``, ``bimod:-0.4,2``."""
    try:
        return _parse_cached(text.strip())
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"cannot parse distribution {text!r}: {exc}") from exc

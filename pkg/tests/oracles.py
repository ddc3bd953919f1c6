"""Independent numeric references for the test suite.

Everything here is computed with scipy's adaptive integrators straight
from textbook formulas, bypassing the package's quadrature rules,
samplers and kernel assembly.  Slow but trustworthy: tests freeze the
expensive values as literals and cite the generating call in a comment;
the cheap ones are evaluated live.
"""

import math

import numpy as np
from scipy import integrate, special

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)


# --- scalar laws, all zero mean and unit variance ---

def _gg_beta(alpha):
    return math.sqrt(special.gamma(3.0 / alpha) / special.gamma(1.0 / alpha))


def _bimod_params(mu1, mu2):
    p = abs(mu2) / (abs(mu1) + abs(mu2))
    sigma = math.sqrt(1.0 - abs(mu1 * mu2))
    return p, sigma


def law_expect(label, fn):
    """E[fn(s)] by adaptive quadrature (or exact summation) for one law."""
    if label == "bpsk":
        return 0.5 * (fn(1.0) + fn(-1.0))
    if label == "uniform":
        val, _ = integrate.quad(lambda x: fn(x) / (2.0 * SQRT3),
                                -SQRT3, SQRT3, limit=200)
        return val
    if label == "sinus":
        # s = sqrt(2) sin(u) with u uniform on [-pi, pi]; integrating in u
        # avoids the arcsine pdf's endpoint singularities
        val, _ = integrate.quad(
            lambda u: fn(SQRT2 * math.sin(u)) / (2.0 * math.pi),
            -math.pi, math.pi, limit=200)
        return val
    if label in ("gauss", "gaussian"):
        val, _ = integrate.quad(
            lambda x: fn(x) * math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi),
            -np.inf, np.inf, limit=200)
        return val
    if label == "laplace":
        label = "gg:1"
    if label.startswith("gg:"):
        alpha = float(label.partition(":")[2])
        beta = _gg_beta(alpha)
        norm = alpha * beta / (2.0 * special.gamma(1.0 / alpha))

        def half(sign):
            # split at 1 so the cusp at 0 (alpha < 1) and the tail are
            # handled by separate adaptive runs
            f = lambda x: fn(sign * x) * norm * math.exp(-(beta * x) ** alpha)
            a, _ = integrate.quad(f, 0.0, 1.0, limit=200)
            b, _ = integrate.quad(f, 1.0, np.inf, limit=200)
            return a + b

        return half(1.0) + half(-1.0)
    if label.startswith("bimod:"):
        parts = [float(t) for t in label.partition(":")[2].split(",")]
        mu1 = parts[0]
        mu2 = parts[1] if len(parts) == 2 else -parts[0]
        p, sigma = _bimod_params(mu1, mu2)

        def component(mu, weight):
            val, _ = integrate.quad(
                lambda x: fn(x) * weight
                * math.exp(-0.5 * ((x - mu) / sigma) ** 2)
                / (sigma * math.sqrt(2 * math.pi)),
                mu - 12 * sigma, mu + 12 * sigma, limit=200)
            return val

        return component(mu1, p) + component(mu2, 1.0 - p)
    raise ValueError(f"no oracle for law {label!r}")


def pair_expect(label, fn2):
    """E[fn2(s1, s2)] for an iid pair, by nested adaptive quadrature."""
    if label == "bpsk":
        return 0.25 * sum(fn2(a, b) for a in (1.0, -1.0) for b in (1.0, -1.0))
    return law_expect(label, lambda a: law_expect(label, lambda b: fn2(a, b)))


# --- nonlinearities, written out rather than imported ---

def nl_pair(name):
    """(g, gprime) for the builtin contrast derivatives."""
    if name == "kurtosis":
        return (lambda y: y ** 3, lambda y: 3.0 * y ** 2)
    if name == "gauss":
        return (lambda y: y * math.exp(-0.5 * y * y),
                lambda y: (1.0 - y * y) * math.exp(-0.5 * y * y))
    if name == "tanh":
        return (math.tanh, lambda y: 1.0 - math.tanh(y) ** 2)
    if name == "pow5":
        return (lambda y: y ** 5, lambda y: 5.0 * y ** 4)
    raise ValueError(f"no oracle for nonlinearity {name!r}")


def diagonal_fprime(label, nl_name, sign=1.0):
    """||f'|| at v = (a1 + sign*a2)/sqrt(2) for two iid sources, A = I.

    Assembles the Jacobian at a fixed point from its definition:
    (I - cc^T)(e0 I - M) / |alpha| with c the source-space coordinates,
    e0 = E[g'(y)], M_jk = E[g'(y) s_j s_k], alpha = e0 - c^T r,
    r_j = E[g(y) s_j], y = c^T s.
    """
    g, gp = nl_pair(nl_name)
    c = np.array([1.0, sign]) / SQRT2
    y = lambda a, b: c[0] * a + c[1] * b
    e0 = pair_expect(label, lambda a, b: gp(y(a, b)))
    r = np.array([pair_expect(label, lambda a, b: g(y(a, b)) * a),
                  pair_expect(label, lambda a, b: g(y(a, b)) * b)])
    M = np.empty((2, 2))
    M[0, 0] = pair_expect(label, lambda a, b: gp(y(a, b)) * a * a)
    M[0, 1] = pair_expect(label, lambda a, b: gp(y(a, b)) * a * b)
    M[1, 0] = M[0, 1]
    M[1, 1] = pair_expect(label, lambda a, b: gp(y(a, b)) * b * b)
    alpha = e0 - c @ r
    proj = np.eye(2) - np.outer(c, c)
    return float(np.linalg.norm(proj @ (e0 * np.eye(2) - M), 2) / abs(alpha))


def tangent_residual(label, nl_name, theta):
    """Fixed-point residual on the circle: r1 sin(theta) - r2 cos(theta).

    Zero exactly at the fixed-point angles of the d = 2 identity model
    with iid sources, since h - (w^T h) w is tangent with this length.
    """
    g, _ = nl_pair(nl_name)
    ct, st = math.cos(theta), math.sin(theta)
    r1 = pair_expect(label, lambda a, b: g(ct * a + st * b) * a)
    r2 = pair_expect(label, lambda a, b: g(ct * a + st * b) * b)
    return r1 * st - r2 * ct

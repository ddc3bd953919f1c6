"""Contrast nonlinearities: a function G with derivatives g, g', g''.

The contrast J(w) = E[G(w'x)] is optimized on the unit sphere; the
iteration map and all its derivatives are built from the quadruple
(G, g, g', g'').  Built-in choices:

    kurtosis    G(x) = x^4/4
    gauss       G(x) = -exp(-x^2/2)
    tanh        G(x) = log cosh(x)
    pow5        G(x) = x^6/6   (g(x) = x^5)
    pow7        G(x) = x^8/8   (g(x) = x^7)

All built-ins are even in G, hence g is odd, g' even, g'' odd.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["Nonlinearity", "builtin", "negate", "BUILTIN_NAMES"]


@dataclass(frozen=True)
class Nonlinearity:
    """Immutable bundle (G, g, g', g'') of vectorized callables."""

    name: str
    G: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    gprime: Callable[[np.ndarray], np.ndarray]
    gsecond: Callable[[np.ndarray], np.ndarray]

    def __repr__(self):
        return f"Nonlinearity({self.name!r})"


def _logcosh(x):
    # |x| + log((1 + exp(-2|x|))/2) never overflows, unlike log(cosh(x))
    ax = np.abs(np.asarray(x, dtype=float))
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


def _tanh_pair(x):
    t = np.tanh(np.asarray(x, dtype=float))
    return t, 1.0 - t * t


_BUILTINS = {
    "kurtosis": Nonlinearity(
        "kurtosis",
        lambda x: np.asarray(x, dtype=float) ** 4 / 4.0,
        lambda x: np.asarray(x, dtype=float) ** 3,
        lambda x: 3.0 * np.asarray(x, dtype=float) ** 2,
        lambda x: 6.0 * np.asarray(x, dtype=float),
    ),
    "gauss": Nonlinearity(
        "gauss",
        lambda x: -np.exp(-0.5 * np.asarray(x, dtype=float) ** 2),
        lambda x: np.asarray(x, dtype=float) * np.exp(-0.5 * np.asarray(x, dtype=float) ** 2),
        lambda x: (1.0 - np.asarray(x, dtype=float) ** 2)
        * np.exp(-0.5 * np.asarray(x, dtype=float) ** 2),
        lambda x: (np.asarray(x, dtype=float) ** 3 - 3.0 * np.asarray(x, dtype=float))
        * np.exp(-0.5 * np.asarray(x, dtype=float) ** 2),
    ),
    "tanh": Nonlinearity(
        "tanh",
        _logcosh,
        lambda x: np.tanh(np.asarray(x, dtype=float)),
        lambda x: _tanh_pair(x)[1],
        lambda x: -2.0 * _tanh_pair(x)[0] * _tanh_pair(x)[1],
    ),
    "pow5": Nonlinearity(
        "pow5",
        lambda x: np.asarray(x, dtype=float) ** 6 / 6.0,
        lambda x: np.asarray(x, dtype=float) ** 5,
        lambda x: 5.0 * np.asarray(x, dtype=float) ** 4,
        lambda x: 20.0 * np.asarray(x, dtype=float) ** 3,
    ),
    "pow7": Nonlinearity(
        "pow7",
        lambda x: np.asarray(x, dtype=float) ** 8 / 8.0,
        lambda x: np.asarray(x, dtype=float) ** 7,
        lambda x: 7.0 * np.asarray(x, dtype=float) ** 6,
        lambda x: 42.0 * np.asarray(x, dtype=float) ** 5,
    ),
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name: str) -> Nonlinearity:
    """Look up a built-in nonlinearity by CLI name.

    Raises
    ------
    KeyError
        If the name is not one of ``BUILTIN_NAMES``.
    """
    try:
        return _BUILTINS[name]
    except KeyError:
        raise KeyError(
            f"unknown nonlinearity {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
        ) from None


def negate(nl: Nonlinearity) -> Nonlinearity:
    """Sign-flip all four maps; negate(negate(nl)) acts like nl pointwise."""
    return Nonlinearity(
        f"neg:{nl.name}" if not nl.name.startswith("neg:") else nl.name[4:],
        lambda x: -nl.G(x),
        lambda x: -nl.g(x),
        lambda x: -nl.gprime(x),
        lambda x: -nl.gsecond(x),
    )

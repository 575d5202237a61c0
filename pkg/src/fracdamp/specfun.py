"""Special functions: gamma, regularized incomplete beta and Mittag-Leffler."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special


class AccuracyError(ArithmeticError):
    """A series or quadrature did not reach its tolerance.

    The best value computed before giving up is kept in :attr:`estimate`.
    """

    def __init__(self, message: str, estimate: float = math.nan) -> None:
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class SeriesAccuracy:
    abs_tol: float = 1.0e-17
    """Summation stops once a (decreasing) term falls below this magnitude."""
    max_terms: int = 2000

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive: {self.abs_tol}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1: {self.max_terms}")


def _is_pole(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gamma_fn(x: float) -> float:
    """Gamma function for real arguments away from the poles."""
    x = float(x)
    if _is_pole(x):
        raise ValueError(f"Gamma has a pole at x = {x}")

    return math.gamma(x)


def rgamma(x: float) -> float:
    """Reciprocal gamma, extended by zero at the poles."""
    return float(special.rgamma(x))


def incomplete_beta(x: float, p: float, q: float) -> float:
    r"""Regularized incomplete beta function :math:`I_x(p, q)`."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1]: {x}")
    if not (p > 0 and q > 0):
        raise ValueError(f"p and q must be positive: p={p}, q={q}")

    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    return float(special.betainc(p, q, x))


def incomplete_beta_increment(
    p: float, q: float, x0: np.ndarray, x1: np.ndarray
) -> np.ndarray:
    """Evaluate ``I_{x1}(p, q) - I_{x0}(p, q)`` elementwise.

    Pairs lying in the upper half are differenced through the complement
    ``I_{1-x}(q, p)`` so that short intervals next to ``x = 1`` keep their
    relative accuracy.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)

    upper = x0 >= 0.5
    out = np.empty(np.broadcast(x0, x1).shape)
    out[~upper] = special.betainc(p, q, x1[~upper]) - special.betainc(p, q, x0[~upper])
    out[upper] = special.betainc(q, p, 1.0 - x0[upper]) - special.betainc(
        q, p, 1.0 - x1[upper]
    )
    return out


def mittag_leffler(
    a: float, b: float, z: float, acc: SeriesAccuracy | None = None
) -> float:
    r"""Two-parameter Mittag-Leffler function by direct summation.

    .. math::

        E_{a, b}(z) = \sum_{k = 0}^\infty \frac{z^k}{\Gamma(a k + b)}.

    Only moderate :math:`|z|` is supported: for large negative arguments the
    alternating series loses all significant digits to cancellation.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"a and b must be positive: a={a}, b={b}")
    if acc is None:
        acc = SeriesAccuracy()

    if z == 0:
        return 1.0 / math.gamma(b)

    logz = math.log(abs(z))
    sign = -1.0 if z < 0 else 1.0

    terms = []
    prev = math.inf
    for k in range(acc.max_terms):
        # a*k + b > 0, so Gamma is positive and lgamma gives its log directly
        mag = math.exp(k * logz - math.lgamma(a * k + b))
        terms.append(sign**k * mag)
        if mag < acc.abs_tol and mag <= prev:
            return math.fsum(terms)
        prev = mag

    raise AccuracyError(
        f"Mittag-Leffler series E_{{{a}, {b}}}({z}) did not converge "
        f"in {acc.max_terms} terms",
        estimate=math.fsum(terms),
    )

r"""Cutoff test functions and the integral estimates built on them.

The unit-scale profile is

.. math::

    \Phi(u) = \begin{cases}
        1, & u \le 1/2, \\
        s(2u - 1)^\lambda, & 1/2 < u < 1, \\
        0, & u \ge 1,
    \end{cases}
    \qquad s(v) = 1 - 3 v^2 + 2 v^3 = (1 - v)^2 (1 + 2 v),

and the scaled test function is :math:`\varphi(t) = \Phi(t / T)`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate, optimize

from fracdamp.fracops import QuadratureBudget, rl_right_integral_at
from fracdamp.specfun import AccuracyError


@dataclass(frozen=True)
class CutoffProfile:
    lam: int
    """Smoothness power applied to the cubic base profile."""
    p: float = 0.0
    """Exponent of the denominator in the ratio :math:`|\\Phi'| / \\Phi^p`."""

    def __post_init__(self) -> None:
        if int(self.lam) != self.lam or self.lam < 1:
            raise ValueError(f"lambda must be a positive integer: {self.lam}")
        if not 0 <= self.p < 1:
            raise ValueError(f"p must lie in [0, 1): {self.p}")
        if 2 * self.lam * (1 - self.p) < 1:
            raise ValueError(
                f"|Phi'|/Phi^p is unbounded near u = 1 unless 2 lambda (1 - p) >= 1: "
                f"lambda = {self.lam}, p = {self.p}"
            )

    @property
    def ratio_exponent(self) -> float:
        return self.lam * (1.0 - self.p) - 1.0


@dataclass(frozen=True)
class LemmaBoundResult:
    lhs: float
    rhs: float
    exponent: float
    """Power of :math:`T` in the closed-form bound."""

    @property
    def holds(self) -> bool:
        return 0 <= self.lhs <= self.rhs


def profile_eval(prof: CutoffProfile, u: float) -> tuple[float, float]:
    """Value and derivative of the unit profile at *u*."""
    if u < 0:
        raise ValueError(f"u must be nonnegative: {u}")
    if u <= 0.5 or u >= 1.0:
        return (1.0 if u <= 0.5 else 0.0), 0.0

    v = 2.0 * u - 1.0
    s = (1.0 - v) ** 2 * (1.0 + 2.0 * v)
    ds = -6.0 * v * (1.0 - v)
    lam = prof.lam
    return s**lam, 2.0 * lam * s ** (lam - 1) * ds


def profile_ratio(prof: CutoffProfile, u: np.ndarray) -> np.ndarray:
    r"""Vectorized :math:`|\Phi'(u)| / \Phi(u)^p`, zero outside :math:`(1/2, 1]`.

    Written as :math:`12 \lambda v (1 - v)^{1 + 2e} (1 + 2v)^e` with
    :math:`e = \lambda (1 - p) - 1`, which stays finite up to :math:`u = 1`.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.clip(2.0 * u - 1.0, 0.0, 1.0)
    e = prof.ratio_exponent

    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.power(1.0 - v, 1.0 + 2.0 * e)
    # 0^0 = 1 at the support boundary in the borderline case 2 lambda (1 - p) = 1
    tail = np.where(v >= 1.0, 1.0 if 1.0 + 2.0 * e == 0 else 0.0, tail)

    out = 12.0 * prof.lam * v * tail * (1.0 + 2.0 * v) ** e
    return np.where((u > 0.5) & (u <= 1.0), out, 0.0)


def choose_lambda(m: float) -> int:
    """Smallest safe smoothness power for the ratio with ``p = 1/m``."""
    if not m > 1:
        raise ValueError(f"m must exceed 1: {m}")
    return max(2, math.ceil(m / (m - 1.0)))


def k1_bound(prof: CutoffProfile, nsamples: int = 20_001) -> float:
    r"""Supremum of :math:`|\Phi'| / \Phi^p` over :math:`[1/2, 1)`.

    A dense scan locates the maximum, which is then polished by a bounded
    scalar search on the two neighbouring cells.
    """
    if nsamples < 10_001:
        raise ValueError(f"need at least 10001 samples: {nsamples}")

    u = np.linspace(0.5, 1.0, nsamples)
    r = profile_ratio(prof, u)
    i = int(np.argmax(r))
    best = float(r[i])

    lo, hi = u[max(i - 1, 0)], u[min(i + 1, nsamples - 1)]
    res = optimize.minimize_scalar(
        lambda x: -float(profile_ratio(prof, np.array(x))),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1.0e-13},
    )
    return max(best, -float(res.fun))


def _inner_bound(alpha: float, k1: float, T: float) -> float:
    # I_{T-}^{1-alpha} of a function bounded by k1/T, evaluated at t >= T/2
    return k1 / T * (T / 2.0) ** (1.0 - alpha) / math.gamma(2.0 - alpha)


def lemma8_integral(
    alpha: float,
    m: float,
    prof: CutoffProfile,
    T: float,
    budget: QuadratureBudget | None = None,
) -> float:
    r"""Evaluate

    .. math::

        I(T) = \int_{T/2}^T \left(
            I^{1 - \alpha}_{T-} \frac{|\varphi'|}{\varphi^p}
        \right)^m (t) \,\mathrm{d}t

    with :math:`\varphi(t) = \Phi(t / T)`.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1): {alpha}")
    if not m > 0:
        raise ValueError(f"m must be positive: {m}")
    if not T > 0:
        raise ValueError(f"T must be positive: {T}")
    if budget is None:
        budget = QuadratureBudget()

    # split the error budget so that the m-th power of the inner value
    # contributes at most a tenth of the outer tolerance
    jmax = _inner_bound(alpha, k1_bound(prof), T)
    lipschitz = max(1.0, m * jmax ** (m - 1.0)) if m >= 1 else 1.0
    inner = QuadratureBudget(
        abs_tol=0.1 * budget.abs_tol / lipschitz / T,
        max_refinements=budget.max_refinements,
    )

    def g(s: np.ndarray) -> np.ndarray:
        return profile_ratio(prof, s / T) / T

    def integrand(t: float) -> float:
        if t >= T:
            return 0.0
        return rl_right_integral_at(1.0 - alpha, g, t, T, inner) ** m

    value, err = integrate.quad(
        integrand, T / 2.0, T, epsabs=0.5 * budget.abs_tol, epsrel=1.0e-12, limit=200
    )
    if err > budget.abs_tol * (1.0 + abs(value)):
        raise AccuracyError(
            f"outer quadrature error estimate {err:.3e} exceeds tolerance", estimate=value
        )
    return value


def lemma9_integral(
    m: float,
    prof: CutoffProfile,
    T: float,
    budget: QuadratureBudget | None = None,
) -> float:
    r"""Evaluate :math:`\int_{T/2}^T (|\varphi'| / \varphi^p)^m \,\mathrm{d}t`."""
    if not m > 0:
        raise ValueError(f"m must be positive: {m}")
    if not T > 0:
        raise ValueError(f"T must be positive: {T}")
    if budget is None:
        budget = QuadratureBudget()

    value, err = integrate.quad(
        lambda t: float(profile_ratio(prof, np.array(t / T))) ** m / T**m,
        T / 2.0,
        T,
        epsabs=0.5 * budget.abs_tol,
        epsrel=1.0e-12,
        limit=200,
    )
    if err > budget.abs_tol * (1.0 + abs(value)):
        raise AccuracyError(
            f"quadrature error estimate {err:.3e} exceeds tolerance", estimate=value
        )
    return value


def lemma8_constant(alpha: float, m: float, k1: float) -> float:
    q = m * (1.0 - alpha) + 1.0
    return k1**m / (2.0**q * math.gamma(2.0 - alpha) ** m * q)


def lemma_bound(
    kind: Literal["lemma8", "lemma9"],
    alpha: float,
    m: float,
    k1: float,
    T: float,
    lhs: float = math.nan,
) -> LemmaBoundResult:
    """Closed-form upper bound for the test-function integral at scale *T*.

    *lhs* is passed through so that a computed integral can be stored next to
    its bound.
    """
    if not k1 > 0:
        raise ValueError(f"K1 must be positive: {k1}")
    if not m > 0:
        raise ValueError(f"m must be positive: {m}")
    if not T > 0:
        raise ValueError(f"T must be positive: {T}")

    if kind == "lemma8":
        if not 0 < alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1): {alpha}")
        exponent = 1.0 - alpha * m
        rhs = lemma8_constant(alpha, m, k1) * T**exponent
    elif kind == "lemma9":
        if alpha != 1:
            raise ValueError(f"the first-order bound needs alpha = 1: {alpha}")
        exponent = 1.0 - m
        rhs = 0.5 * k1**m * T**exponent
    else:
        raise ValueError(f"unknown kind: {kind!r}")

    return LemmaBoundResult(lhs=lhs, rhs=rhs, exponent=exponent)


def check_lemma(
    alpha: float,
    m: float,
    T: float,
    prof: CutoffProfile | None = None,
    k1: float | None = None,
    budget: QuadratureBudget | None = None,
) -> LemmaBoundResult:
    """Compute the test-function integral and its bound side by side.

    ``alpha = 1`` selects the first-order estimate. The profile defaults to
    ``p = 1/m`` with :func:`choose_lambda`, and *k1* to :func:`k1_bound`.
    """
    if prof is None:
        prof = CutoffProfile(lam=choose_lambda(m), p=1.0 / m)
    if k1 is None:
        k1 = k1_bound(prof)

    if alpha == 1:
        lhs = lemma9_integral(m, prof, T, budget)
        return lemma_bound("lemma9", 1.0, m, k1, T, lhs=lhs)

    lhs = lemma8_integral(alpha, m, prof, T, budget)
    return lemma_bound("lemma8", alpha, m, k1, T, lhs=lhs)

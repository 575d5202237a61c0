"""Closed-form reference solutions and the blow-up threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass

from fracdamp.specfun import SeriesAccuracy, mittag_leffler


@dataclass(frozen=True)
class ThresholdSpec:
    gamma: float
    order_low: float
    """Lowest derivative order in the equation."""

    def __post_init__(self) -> None:
        if not 0 < self.order_low <= 1:
            raise ValueError(f"order_low must lie in (0, 1]: {self.order_low}")
        # gamma = -order_low is the (empty) boundary case m* = 1
        if self.gamma < -self.order_low:
            raise ValueError(
                f"gamma must be >= -order_low: gamma = {self.gamma}, "
                f"order_low = {self.order_low}"
            )


# {{{ classical ODEs


def power_ode_blowup_time(b: float, m: float) -> float:
    if not b > 0:
        raise ValueError(f"b must be positive: {b}")
    if not m > 1:
        raise ValueError(f"m must exceed 1: {m}")
    return b ** (1.0 - m) / (m - 1.0)


def power_ode(b: float, m: float, t: float) -> float:
    """Solution of ``y' = y^m``, ``y(0) = b``."""
    t_star = power_ode_blowup_time(b, m)
    if not t < t_star:
        raise ValueError(f"t = {t} is past the blow-up time {t_star}")

    c = b ** (1.0 - m) / (1.0 - m)
    return ((1.0 - m) * (t + c)) ** (1.0 / (1.0 - m))


def bernoulli_blowup_time(b: float, m: float) -> float:
    """Blow-up time of ``y' + y = y^m``, ``y(0) = b``; infinite for ``b <= 1``."""
    if not b > 0:
        raise ValueError(f"b must be positive: {b}")
    if not m > 1:
        raise ValueError(f"m must exceed 1: {m}")
    if b <= 1:
        return math.inf
    return math.log(1.0 - b ** (1.0 - m)) / (1.0 - m)


def bernoulli(b: float, m: float, t: float) -> float:
    """Solution of ``y' + y = y^m``, ``y(0) = b``."""
    if not t >= 0:
        raise ValueError(f"t must be nonnegative: {t}")
    t_star = bernoulli_blowup_time(b, m)
    if not t < t_star:
        raise ValueError(f"t = {t} is past the blow-up time {t_star}")

    base = 1.0 + (b ** (1.0 - m) - 1.0) * math.exp((m - 1.0) * t)
    return base ** (1.0 / (1.0 - m))


# }}}


def ml_linear(
    alpha: float,
    beta: float,
    b: float,
    t: float,
    acc: SeriesAccuracy | None = None,
) -> float:
    r"""Solution of :math:`D^\alpha y + D^\beta y = 0` with :math:`I^{1 - \alpha} y(0) = b`.

    .. math::

        y(t) = b t^{\alpha - 1} E_{\alpha - \beta, \alpha}(-t^{\alpha - \beta}).

    ``beta = 0`` is admitted and means the second term is ``y`` itself.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1]: {alpha}")
    if not 0 <= beta < alpha:
        raise ValueError(f"beta must lie in [0, alpha): {beta}")
    if not t > 0:
        raise ValueError(f"t must be positive: {t}")
    if b == 0:
        return 0.0

    d = alpha - beta
    return b * t ** (alpha - 1.0) * mittag_leffler(d, alpha, -(t**d), acc)


def threshold_m_star(th: ThresholdSpec) -> float:
    """Largest exponent of the nonexistence range ``(1, m*]``; ``inf`` at order 1."""
    if th.order_low == 1:
        return math.inf
    return (th.gamma + 1.0) / (1.0 - th.order_low)


def in_theorem_range(alpha: float, beta: float, gamma: float, m: float) -> bool:
    """Whether the nonexistence theorems cover the parameters ``(gamma, m)``.

    The range is controlled by the lowest derivative order ``beta``. The
    classical case ``alpha = beta = 1`` covers every ``gamma > -1`` and ``m > 1``.
    """
    if not 0 <= beta <= alpha <= 1:
        raise ValueError(f"need 0 <= beta <= alpha <= 1: alpha = {alpha}, beta = {beta}")
    if beta == 0 or not gamma > -beta or not m > 1:
        return False

    return m <= threshold_m_star(ThresholdSpec(gamma=gamma, order_low=beta))

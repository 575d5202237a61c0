r"""Two-term fractional initial value problem.

Solves

.. math::

    D^\alpha y + D^\beta y = f(t, y), \qquad I^{1 - \alpha} y(0) = b,

through the equivalent Volterra equation

.. math::

    y = \frac{b t^{\alpha - 1}}{\Gamma(\alpha)}
        - I^{\alpha - \beta}\Bigl[y - c_\beta t^{\alpha - 1}\Bigr]
        + I^\alpha f,

where :math:`c_\beta = b / \Gamma(\alpha)` when :math:`\alpha = \beta` (the
damping term is then the identity and its initial datum does not vanish) and
zero otherwise. The unknown is factored as :math:`y = t^{\alpha - 1} z` and
both convolutions are discretized by product integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import optimize

from fracdamp.fracops import (
    SingularGridFunction,
    differentiate_factored,
    product_weights,
    rl_left_derivative_grid,
)
from fracdamp.specfun import rgamma

Status = Literal["completed", "blowup", "stagnated"]
RhsMode = Literal["power_source", "zero", "manufactured"]

DEFAULT_CAP = 1.0e8

_FIXED_POINT_MAXIT = 50
_FIXED_POINT_RTOL = 1.0e-12


# {{{ problem description


@dataclass(frozen=True)
class ManufacturedTarget:
    r"""Exact solution :math:`y = c_1 t^{\alpha - 1} + c_2 t^\delta`."""

    c1: float
    c2: float
    delta: float

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ValueError(f"delta must be positive: {self.delta}")


@dataclass(frozen=True)
class ProblemSpec:
    alpha: float
    beta: float
    gamma: float = 0.0
    m: float = 2.0
    b: float = 1.0
    rhs_mode: RhsMode = "power_source"
    source_coeff: float = 1.0
    r"""Coefficient :math:`c` in :math:`f = c t^\gamma |y|^m`."""
    target: ManufacturedTarget | None = None

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1]: {self.alpha}")
        if not 0 <= self.beta <= self.alpha:
            raise ValueError(
                f"need 0 <= beta <= alpha: alpha = {self.alpha}, beta = {self.beta}"
            )
        if not self.m > 1:
            raise ValueError(f"m must exceed 1: {self.m}")
        if not self.b >= 0:
            raise ValueError(f"b must be nonnegative: {self.b}")
        if self.rhs_mode not in ("power_source", "zero", "manufactured"):
            raise ValueError(f"unknown rhs_mode: {self.rhs_mode!r}")

        if self.rhs_mode == "manufactured":
            if self.target is None:
                raise ValueError("manufactured mode needs a target")
            b = self.target.c1 * math.gamma(self.alpha)
            if not math.isclose(self.b, b, rel_tol=1.0e-14, abs_tol=1.0e-300):
                raise ValueError(f"b = {self.b} does not match the target datum {b}")

    @classmethod
    def manufactured(
        cls, alpha: float, beta: float, target: ManufacturedTarget
    ) -> ProblemSpec:
        return cls(
            alpha=alpha,
            beta=beta,
            b=target.c1 * math.gamma(alpha),
            rhs_mode="manufactured",
            target=target,
        )

    @property
    def m_prime(self) -> float:
        return self.m / (self.m - 1.0)

    @property
    def source_sigma(self) -> float:
        """Endpoint exponent of the power source in terms of the regular factor."""
        return self.gamma + self.m * (self.alpha - 1.0)


@dataclass(frozen=True)
class VolterraForm:
    forcing_coeff: float
    forcing_exponent: float
    damping_order: float
    source_order: float
    damping_shift: float = 0.0
    """Coefficient of ``t^(alpha - 1)`` removed from ``y`` inside the damping term."""

    def __post_init__(self) -> None:
        if self.damping_order < 0:
            raise ValueError(f"damping order must be nonnegative: {self.damping_order}")
        if not 0 < self.source_order <= 1:
            raise ValueError(f"source order must lie in (0, 1]: {self.source_order}")


def to_volterra(spec: ProblemSpec) -> VolterraForm:
    coeff = spec.b / math.gamma(spec.alpha)
    d = spec.alpha - spec.beta
    return VolterraForm(
        forcing_coeff=coeff,
        forcing_exponent=spec.alpha - 1.0,
        damping_order=d,
        source_order=spec.alpha,
        damping_shift=coeff if d == 0 else 0.0,
    )


# }}}


# {{{ manufactured solutions


def _derivative_coeff(mu: float, order: float) -> float:
    # D^order t^mu = coeff * t^(mu - order); rgamma vanishes at mu = order - 1
    if order == 0:
        return 1.0
    return math.gamma(mu + 1.0) * rgamma(mu + 1.0 - order)


def manufactured_terms(
    alpha: float, beta: float, c1: float, c2: float, delta: float
) -> list[tuple[float, float]]:
    """``(coefficient, power)`` pairs of ``D^alpha y + D^beta y`` for the target."""
    if not delta > 0:
        raise ValueError(f"delta must be positive: {delta}")
    if delta == alpha - 1:
        raise ValueError(f"delta must differ from alpha - 1: {delta}")
    for arg in (delta + 1.0 - alpha, delta + 1.0 - beta):
        if arg <= 0 and float(arg).is_integer():
            raise ValueError(f"Gamma pole at {arg}")

    terms = []
    for order in (alpha, beta):
        for c, mu in ((c1, alpha - 1.0), (c2, delta)):
            coeff = c * _derivative_coeff(mu, order)
            if coeff != 0:
                terms.append((coeff, mu - order))
    return terms


def manufactured_rhs(
    alpha: float, beta: float, c1: float, c2: float, delta: float
) -> Callable[[np.ndarray], np.ndarray]:
    """Forcing that makes ``c1 t^(alpha - 1) + c2 t^delta`` an exact solution."""
    terms = manufactured_terms(alpha, beta, c1, c2, delta)

    def f(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        for c, p in terms:
            out = out + c * t**p
        return out

    return f


def _sampled_forcing(spec: ProblemSpec, t: np.ndarray) -> tuple[float, np.ndarray]:
    """Forcing as ``t^sigma * z`` with a bounded regular factor ``z``."""
    tg = spec.target
    assert tg is not None
    terms = manufactured_terms(spec.alpha, spec.beta, tg.c1, tg.c2, tg.delta)
    if not terms:
        return 0.0, np.zeros_like(t)

    sigma = min(0.0, min(p for _, p in terms))
    z = np.zeros_like(t)
    for c, p in terms:
        z += c * t ** (p - sigma)
    return sigma, z


# }}}


# {{{ trajectory


@dataclass(frozen=True, eq=False)
class Trajectory:
    h: float
    sigma: float
    z: np.ndarray
    """Regular factor at the reported nodes ``0, ..., len(z) - 1``."""
    status: Status
    t_escape: float | None = None
    cap: float = DEFAULT_CAP
    t_end: float = math.nan
    """Requested horizon; larger than ``t[-1]`` unless the run completed."""

    def __post_init__(self) -> None:
        if (self.status == "blowup") != (self.t_escape is not None):
            raise ValueError("t_escape must be given exactly when status is 'blowup'")

        z = np.array(self.z, dtype=np.float64)
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def t(self) -> np.ndarray:
        return self.h * np.arange(self.z.size)

    @property
    def y(self) -> np.ndarray:
        """Solution values; the first entry is the endpoint limit (``inf`` if singular)."""
        if self.z.size < 2:
            y = np.full(self.z.size, np.nan)
            if self.z.size and self.sigma == 0:
                y[0] = self.z[0]
            return y
        return self.grid.values()

    @property
    def grid(self) -> SingularGridFunction:
        return SingularGridFunction(h=self.h, z=self.z, sigma=self.sigma)


def _solve_node(a: float, one_plus_d: float, s: float, m: float, z0: float) -> float | None:
    r"""Smallest-magnitude root of :math:`(1 + D) z = A + s |z|^m`.

    Returns ``None`` when no root exists, i.e. the discrete solution escapes
    between two nodes.
    """
    if s == 0:
        return a / one_plus_d

    z = float(z0)
    for _ in range(_FIXED_POINT_MAXIT):
        try:
            z_new = (a + s * abs(z) ** m) / one_plus_d
        except OverflowError:
            break
        if not math.isfinite(z_new):
            break
        if abs(z_new - z) <= _FIXED_POINT_RTOL * max(1.0, abs(z_new)):
            return z_new
        z = z_new

    def g(x: float) -> float:
        return one_plus_d * x - a - s * abs(x) ** m

    if a >= 0:
        z_peak = (one_plus_d / (s * m)) ** (1.0 / (m - 1.0))
        if g(z_peak) < 0:
            return None
        lo, hi = 0.0, z_peak
    else:
        lo, hi = a / one_plus_d, 0.0

    if g(lo) == 0:
        return lo
    return optimize.brentq(g, lo, hi, xtol=1.0e-300, rtol=4.0 * np.finfo(float).eps)


def _march(
    spec: ProblemSpec,
    t_end: float,
    n: int,
    cap: float,
    *,
    rhs_scale: float,
    damping: bool,
) -> Trajectory:
    if n < 16:
        raise ValueError(f"need at least 16 steps: n = {n}")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive: {t_end}")
    if not cap > spec.b:
        raise ValueError(f"cap must exceed b: cap = {cap}, b = {spec.b}")

    vf = to_volterra(spec)
    alpha = spec.alpha
    sigma_y = alpha - 1.0
    h = t_end / n
    t = h * np.arange(n + 1)
    z = np.zeros(n + 1)
    z[0] = vf.forcing_coeff

    d = vf.damping_order
    use_damping = damping and d > 0
    if use_damping:
        pw_d = product_weights(sigma_y, d, n)
        scale_d = h**d / math.gamma(d)

    # source: either |z|^m or a fixed sampled forcing, times t^sigma_f
    nonlinear = spec.rhs_mode == "power_source"
    if nonlinear:
        sigma_f = spec.source_sigma
        if not sigma_f > -1:
            raise ValueError(
                f"source t^gamma |y|^m is not integrable at t = 0: "
                f"gamma + m (alpha - 1) = {sigma_f}"
            )
        src = np.zeros(n + 1)
        src[0] = spec.source_coeff * abs(z[0]) ** spec.m
    elif spec.rhs_mode == "manufactured":
        sigma_f, src = _sampled_forcing(spec, t)
    else:
        sigma_f, src = 0.0, None

    if src is not None:
        pw_s = product_weights(sigma_f, alpha, n)
        scale_s = h ** (sigma_f + 1.0) / math.gamma(alpha)

    # the damping term is the identity when alpha = beta
    one_plus_d = 1.0
    a_const = vf.forcing_coeff
    if damping and d == 0:
        one_plus_d += 1.0
        a_const += vf.damping_shift

    def stop(nodes: int, status: Status, t_escape: float | None = None) -> Trajectory:
        return Trajectory(
            h=h,
            sigma=sigma_y,
            z=z[:nodes],
            status=status,
            t_escape=t_escape,
            cap=cap,
            t_end=t_end,
        )

    for j in range(1, n + 1):
        jfac = j ** (1.0 - alpha)
        a = a_const
        dd = one_plus_d

        if use_damping:
            w = pw_d.row(j)
            c = scale_d * jfac
            a -= c * (w[:j] @ z[:j])
            dd += c * w[j]

        s = 0.0
        if src is not None:
            w = pw_s.row(j)
            c = rhs_scale * scale_s * jfac
            a += c * (w[:j] @ src[:j])
            if nonlinear:
                s = c * w[j] * spec.source_coeff
            else:
                a += c * w[j] * src[j]

        try:
            zj = _solve_node(float(a), float(dd), float(s), spec.m, float(z[j - 1]))
        except (ValueError, RuntimeError, OverflowError, ZeroDivisionError):
            return stop(j, "stagnated")

        if zj is None:
            return stop(j, "blowup", float(t[j]))
        if not math.isfinite(zj):
            return stop(j, "stagnated")

        z[j] = zj
        if nonlinear:
            src[j] = spec.source_coeff * abs(zj) ** spec.m
        if t[j] ** sigma_y * abs(zj) > cap:
            return stop(j + 1, "blowup", float(t[j]))

    return stop(n + 1, "completed")


def solve(
    spec: ProblemSpec, t_end: float, n: int, cap: float = DEFAULT_CAP
) -> Trajectory:
    """March the Volterra equation over ``n`` uniform steps of ``[0, t_end]``.

    The run stops with status ``blowup`` at the first node where ``|y|``
    exceeds *cap*, or where the implicit nodal equation has no root.
    """
    return _march(spec, t_end, n, cap, rhs_scale=1.0, damping=True)


def solve_single_term(
    spec: ProblemSpec, t_end: float, n: int, cap: float = DEFAULT_CAP
) -> Trajectory:
    r"""Solve :math:`2 D^\alpha y = f` directly as :math:`y = b t^{\alpha-1}/\Gamma(\alpha) + \tfrac12 I^\alpha f`.

    Only defined for ``alpha == beta``; used to cross-check :func:`solve`.
    """
    if spec.alpha != spec.beta:
        raise ValueError(f"need alpha == beta: {spec.alpha} != {spec.beta}")
    return _march(spec, t_end, n, cap, rhs_scale=0.5, damping=False)


# }}}


# {{{ residual


def _derivative_values(order: float, y: SingularGridFunction) -> np.ndarray:
    if order == 0:
        return y.values()
    if order == 1:
        _, dz = differentiate_factored(0.0, y.values(), y.h)
        return dz
    return rl_left_derivative_grid(order, y).values()


def rhs_values(spec: ProblemSpec, t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Right-hand side ``f(t, y)`` at sample points."""
    if spec.rhs_mode == "zero":
        return np.zeros_like(t)
    if spec.rhs_mode == "manufactured":
        tg = spec.target
        assert tg is not None
        return manufactured_rhs(spec.alpha, spec.beta, tg.c1, tg.c2, tg.delta)(t)
    return spec.source_coeff * t**spec.gamma * np.abs(y) ** spec.m


def residual(spec: ProblemSpec, traj: Trajectory) -> SingularGridFunction:
    """``D^alpha y + D^beta y - f(t, y)`` on the grid; the first node is ``nan``."""
    if traj.status != "completed":
        raise ValueError(f"residual needs a completed trajectory: {traj.status}")

    y = traj.grid
    if spec.alpha == 1 and y.sigma != 0:
        raise ValueError("alpha = 1 trajectories must be regular")

    with np.errstate(invalid="ignore", divide="ignore"):
        r = _derivative_values(spec.alpha, y) + _derivative_values(spec.beta, y)
        r = r - rhs_values(spec, y.t, y.values())
    r[0] = np.nan
    return SingularGridFunction(h=y.h, z=r, sigma=0.0)


# }}}

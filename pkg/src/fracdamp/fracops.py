r"""Riemann-Liouville fractional integrals and derivatives.

Grid operators act on :class:`SingularGridFunction` values
:math:`f(t) = t^\sigma z(t)` and use product integration: :math:`z` is
interpolated piecewise linearly while the kernel :math:`(t - s)^{\mu - 1}`
and the endpoint weight :math:`s^\sigma` are integrated exactly. On the
uniform lattice the weights only depend on :math:`(j, k, \sigma, \mu)`, so
they are shared between step sizes and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy import special

from fracdamp.specfun import AccuracyError, incomplete_beta_increment, rgamma

# NOTE: intervals at least two cells away from both singular endpoints are
# integrated with 8-point Gauss-Legendre; the nearest singularity then sits
# outside a Bernstein ellipse with rho ~ 9.9, which puts the relative error
# below 1e-15.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

_GJ_NODES = 24

_ZERO_EXPONENT_TOL = 1.0e-14


@dataclass(frozen=True, eq=False)
class SingularGridFunction:
    r"""Uniform grid samples of :math:`f(t) = (t - t_0)^\sigma z(t)`.

    ``z[0]`` is the continuous extension of the regular factor at
    :math:`t_0`, so for :math:`\sigma < 0` it carries the leading coefficient
    of the endpoint singularity.
    """

    h: float
    z: np.ndarray
    sigma: float = 0.0
    t0: float = 0.0

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError(f"step must be positive: h = {self.h}")
        if not self.sigma > -1:
            raise ValueError(f"endpoint exponent must exceed -1: sigma = {self.sigma}")

        z = np.array(self.z, dtype=np.float64)
        if z.ndim != 1 or z.size < 2:
            raise ValueError("z must be a one-dimensional array with at least 2 samples")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.size - 1

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.z.size)

    @property
    def t_end(self) -> float:
        return self.t0 + self.h * self.n

    def values(self) -> np.ndarray:
        """Represented values; the left endpoint holds the analytic limit.

        That limit is ``+/-inf`` for a singular endpoint, and ``nan`` when it is
        indeterminate (``sigma < 0`` with ``z[0] == 0``).
        """
        if self.sigma == 0:
            return self.z.copy()

        dt = self.h * np.arange(self.z.size)
        out = np.empty_like(self.z)
        out[1:] = dt[1:] ** self.sigma * self.z[1:]
        if self.sigma > 0:
            out[0] = 0.0
        elif self.z[0] == 0:
            out[0] = np.nan
        else:
            out[0] = math.copysign(math.inf, self.z[0])
        return out

    def same_grid(self, other: SingularGridFunction) -> bool:
        return self.n == other.n and self.h == other.h and self.t0 == other.t0

    @classmethod
    def from_function(
        cls,
        z: Callable[[np.ndarray], np.ndarray],
        t_end: float,
        n: int,
        sigma: float = 0.0,
    ) -> SingularGridFunction:
        """Sample the regular factor *z* on ``n`` uniform steps of ``[0, t_end]``."""
        if n < 1:
            raise ValueError(f"need at least one step: n = {n}")
        t = np.linspace(0.0, t_end, n + 1)
        return cls(h=t_end / n, z=np.broadcast_to(z(t), t.shape), sigma=sigma)


@dataclass(frozen=True)
class QuadratureBudget:
    abs_tol: float = 1.0e-8
    max_refinements: int = 20

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive: {self.abs_tol}")
        if self.max_refinements < 1:
            raise ValueError(f"max_refinements must be >= 1: {self.max_refinements}")


# {{{ power rule


def rl_power_rule(
    kind: Literal["integral", "derivative"], order: float, mu: float, t: float
) -> float:
    r"""Exact Riemann-Liouville integral or derivative of :math:`t^\mu`."""
    if not mu > -1:
        raise ValueError(f"power must exceed -1: mu = {mu}")
    if not t > 0:
        raise ValueError(f"t must be positive: {t}")

    if kind == "integral":
        if order < 0:
            raise ValueError(f"integral order must be nonnegative: {order}")
        if order == 0:
            return t**mu
        return math.gamma(mu + 1) / math.gamma(mu + 1 + order) * t ** (mu + order)

    if kind == "derivative":
        if not 0 <= order <= 1:
            raise ValueError(f"derivative order must lie in [0, 1]: {order}")
        if mu == order - 1 and order > 0:
            return 0.0
        if not mu - order > -1:
            raise ValueError(
                f"derivative of t^{mu} of order {order} is not locally integrable"
            )
        return math.gamma(mu + 1) * rgamma(mu + 1 - order) * t ** (mu - order)

    raise ValueError(f"unknown kind: {kind!r}")


# }}}


# {{{ product integration weights


class ProductWeights:
    r"""Hat-function weights on the unit lattice.

    Row ``j`` holds

    .. math::

        W_{jk} = \int_0^j (j - u)^{\mu - 1} u^\sigma \ell_k(u) \,\mathrm{d}u,
        \qquad k = 0, \dots, j,

    where :math:`\ell_k` is the piecewise-linear hat centred at node ``k``.
    Cells touching either singular endpoint use incomplete beta moments.
    """

    def __init__(self, sigma: float, mu: float, n: int) -> None:
        if not sigma > -1:
            raise ValueError(f"sigma must exceed -1: {sigma}")
        if not mu > 0:
            raise ValueError(f"mu must be positive: {mu}")

        self.sigma = sigma
        self.mu = mu
        self.n = n

        k = np.arange(n + 1, dtype=np.float64)[:, None]
        a = (k + _GL_X) ** sigma * _GL_W
        self._a_left = a * (1.0 - _GL_X)
        self._a_right = a * _GL_X
        # row d <-> cell whose right end is d cells away from the kernel singularity
        self._b = (k + 1.0 - _GL_X) ** (mu - 1.0)

        self._near_start, self._near_k, self._near_left, self._near_right = (
            self._near_moments()
        )

    def _near_moments(self) -> tuple[np.ndarray, ...]:
        js, ks = [], []
        for j in range(1, self.n + 1):
            cells = sorted({0, 1, j - 2, j - 1} & set(range(j)))
            js.extend([j] * len(cells))
            ks.extend(cells)

        jj = np.array(js, dtype=np.float64)
        kk = np.array(ks, dtype=np.float64)
        x0, x1 = kk / jj, (kk + 1.0) / jj

        sigma, mu = self.sigma, self.mu
        p0 = (
            math.exp(special.betaln(sigma + 1, mu))
            * incomplete_beta_increment(sigma + 1, mu, x0, x1)
            * jj ** (sigma + mu)
        )
        p1 = (
            math.exp(special.betaln(sigma + 2, mu))
            * incomplete_beta_increment(sigma + 2, mu, x0, x1)
            * jj ** (sigma + mu + 1)
        )

        left = (kk + 1.0) * p0 - p1
        right = p1 - kk * p0

        # the two moments nearly cancel on the cell touching the kernel
        # singularity; there u^sigma is smooth (for j >= 2), so integrate
        # against the Jacobi weight v^(mu - 1) in v = j - u instead
        last = (kk == jj - 1.0) & (jj >= 2.0)
        x, w = special.roots_jacobi(_GJ_NODES, 0.0, mu - 1.0)
        v = 0.5 * (x + 1.0)
        w = 2.0 ** (-mu) * w
        smooth = (jj[last][:, None] - v) ** sigma * w
        left[last] = smooth @ v
        right[last] = smooth @ (1.0 - v)

        start = np.zeros(self.n + 2, dtype=np.int64)
        counts = np.bincount(np.array(js), minlength=self.n + 1)
        start[1:] = np.cumsum(counts)
        return start, np.array(ks, dtype=np.int64), left, right

    def row(self, j: int) -> np.ndarray:
        if not 1 <= j <= self.n:
            raise IndexError(f"row {j} outside 1..{self.n}")

        w = np.zeros(j + 1)
        if j >= 5:
            b = self._b[j - 3 : 1 : -1]
            w[2 : j - 2] += np.einsum("kq,kq->k", self._a_left[2 : j - 2], b)
            w[3 : j - 1] += np.einsum("kq,kq->k", self._a_right[2 : j - 2], b)

        s, e = self._near_start[j], self._near_start[j + 1]
        k = self._near_k[s:e]
        w[k] += self._near_left[s:e]
        w[k + 1] += self._near_right[s:e]
        return w


@lru_cache(maxsize=16)
def product_weights(sigma: float, mu: float, n: int) -> ProductWeights:
    return ProductWeights(sigma, mu, n)


def _left_regular(order: float, sigma: float, z: np.ndarray) -> np.ndarray:
    r"""Regular factor :math:`G` of :math:`I^\mu (t^\sigma z) = t^{\sigma + \mu} G`."""
    n = z.size - 1
    pw = product_weights(sigma, order, n)

    g = np.empty(n + 1)
    g[0] = z[0] * math.gamma(sigma + 1) / math.gamma(sigma + 1 + order)
    for j in range(1, n + 1):
        g[j] = pw.row(j) @ z[: j + 1]

    j = np.arange(1, n + 1, dtype=np.float64)
    g[1:] *= j ** (-(sigma + order)) / math.gamma(order)
    return g


# }}}


# {{{ left-sided grid operators


def _check_order(order: float, *, closed: bool) -> None:
    ok = 0 < order <= 1 if closed else 0 < order < 1
    if not ok:
        interval = "(0, 1]" if closed else "(0, 1)"
        raise ValueError(f"order must lie in {interval}: {order}")


def rl_left_integral_grid(
    order: float, f: SingularGridFunction, *, keep_singular: bool = False
) -> SingularGridFunction:
    """Left-sided fractional integral of *f* at every grid node.

    The result carries ``sigma = 0`` whenever ``f.sigma + order >= 0``, unless
    *keep_singular* asks for the factored form ``t^(f.sigma + order) G``.
    """
    _check_order(order, closed=True)
    if f.t0 != 0:
        raise ValueError(f"grid operators assume t0 = 0: {f.t0}")

    g = _left_regular(order, f.sigma, f.z)
    s_out = f.sigma + order
    if keep_singular or s_out < 0:
        return SingularGridFunction(h=f.h, z=g, sigma=s_out)

    t = f.t
    z = np.empty_like(g)
    z[1:] = t[1:] ** s_out * g[1:]
    z[0] = g[0] if abs(s_out) < _ZERO_EXPONENT_TOL else 0.0
    return SingularGridFunction(h=f.h, z=z, sigma=0.0)


def differentiate_factored(
    sigma: float, g: np.ndarray, h: float
) -> tuple[float, np.ndarray]:
    r"""Differentiate :math:`t^\sigma G(t)` sampled through its regular factor.

    The power is differentiated analytically and :math:`G` by second-order
    finite differences. Returns the exponent and regular factor of the result.
    """
    dg = np.gradient(g, h, edge_order=2)
    if abs(sigma) < _ZERO_EXPONENT_TOL:
        return 0.0, dg

    t = h * np.arange(g.size)
    return sigma - 1.0, sigma * g + t * dg


def rl_left_derivative_grid(order: float, f: SingularGridFunction) -> SingularGridFunction:
    r"""Left-sided Riemann-Liouville derivative as :math:`\frac{d}{dt} I^{1 - \alpha} f`."""
    _check_order(order, closed=False)
    if f.t0 != 0:
        raise ValueError(f"grid operators assume t0 = 0: {f.t0}")

    s_in = f.sigma + 1.0 - order
    if s_in < -_ZERO_EXPONENT_TOL:
        raise ValueError(
            f"I^(1 - {order}) f is unbounded at t = 0 (sigma = {f.sigma}); "
            "need sigma + 1 - order >= 0"
        )

    g = _left_regular(1.0 - order, f.sigma, f.z)
    sigma, z = differentiate_factored(s_in, g, f.h)
    return SingularGridFunction(h=f.h, z=z, sigma=sigma)


# }}}


# {{{ right-sided operators


@lru_cache(maxsize=64)
def _simpson_product_weights(m: int, mu: float) -> np.ndarray:
    r"""Weights for :math:`\int_0^m v^{\mu - 1} g(v) dv` with piecewise quadratics.

    Panels are ``[2p, 2p + 2]``; the first one uses closed-form moments and
    the rest are smooth enough for 10-point Gauss-Legendre.
    """
    assert m % 2 == 0
    w = np.zeros(m + 1)

    mom = [2.0 ** (mu + r) / (mu + r) for r in range(3)]
    w[0] += (mom[2] - 3.0 * mom[1] + 2.0 * mom[0]) / 2.0
    w[1] += -(mom[2] - 2.0 * mom[1])
    w[2] += (mom[2] - mom[1]) / 2.0

    npanels = m // 2
    if npanels > 1:
        x, gw = np.polynomial.legendre.leggauss(10)
        xi = x + 1.0  # local coordinate on [0, 2]
        p = np.arange(1, npanels, dtype=np.float64)[:, None]
        kern = (2.0 * p + xi) ** (mu - 1.0) * gw

        l0 = (xi - 1.0) * (xi - 2.0) / 2.0
        l1 = -xi * (xi - 2.0)
        l2 = xi * (xi - 1.0) / 2.0

        idx = 2 * np.arange(1, npanels)
        w[idx] += kern @ l0
        w[idx + 1] += kern @ l1
        w[idx + 2] += kern @ l2

    return w


def _eval(g: Callable, s: np.ndarray) -> np.ndarray:
    # accept both vectorized and scalar-only callables
    try:
        out = np.asarray(g(s), dtype=np.float64)
    except (TypeError, ValueError):
        out = None
    if out is None or out.shape != s.shape:
        out = np.array([g(float(si)) for si in s], dtype=np.float64)
    return out


def rl_right_integral_at(
    order: float,
    g: Callable[[np.ndarray], np.ndarray],
    t: float,
    b: float,
    budget: QuadratureBudget | None = None,
) -> float:
    r"""Right-sided integral :math:`I^\alpha_{b-} g` evaluated at a single point *t*.

    The mesh is doubled until two successive estimates agree to within
    ``budget.abs_tol``; the finer estimate is returned.
    """
    _check_order(order, closed=True)
    if not b > t:
        raise ValueError(f"need b > t: t = {t}, b = {b}")
    if budget is None:
        budget = QuadratureBudget()

    scale = 1.0 / math.gamma(order)

    def estimate(m: int) -> float:
        s = np.linspace(t, b, m + 1)
        s[-1] = b
        step = (b - t) / m
        return scale * step**order * float(_simpson_product_weights(m, order) @ _eval(g, s))

    m = 16
    prev = estimate(m)
    for _ in range(budget.max_refinements):
        m *= 2
        cur = estimate(m)
        if abs(cur - prev) <= budget.abs_tol:
            return cur
        prev = cur

    raise AccuracyError(
        f"right-sided integral did not reach abs_tol = {budget.abs_tol} "
        f"after {budget.max_refinements} refinements",
        estimate=prev,
    )


def _bounded_samples(f: SingularGridFunction, name: str) -> np.ndarray:
    if f.sigma < 0:
        raise ValueError(f"{name} must be bounded (sigma >= 0): sigma = {f.sigma}")
    return f.values()


def rl_right_integral_grid(order: float, f: SingularGridFunction) -> SingularGridFunction:
    """Right-sided integral at every node, by mirroring the left operator."""
    _check_order(order, closed=True)
    y = _bounded_samples(f, "f")

    g = _left_regular(order, 0.0, y[::-1])[::-1]
    dist = f.t_end - f.t
    return SingularGridFunction(h=f.h, z=dist**order * g, sigma=0.0, t0=f.t0)


def ibp_check(
    order: float, phi: SingularGridFunction, psi: SingularGridFunction
) -> tuple[float, float]:
    r"""Evaluate both sides of the fractional integration by parts formula.

    .. math::

        \int_a^b \varphi \, I^\alpha_a \psi \,\mathrm{d}t
        = \int_a^b \psi \, I^\alpha_{b-} \varphi \,\mathrm{d}t.

    Each side integrates the endpoint factor :math:`(t - a)^\alpha` or
    :math:`(b - t)^\alpha` of the fractional integral exactly, so the two
    composite rules differ by :math:`O(h^2)` for smooth inputs.
    """
    _check_order(order, closed=True)
    if not phi.same_grid(psi):
        raise ValueError("phi and psi must live on the same grid")

    p = _bounded_samples(phi, "phi")
    q = _bounded_samples(psi, "psi")
    n = phi.n
    outer = product_weights(order, 1.0, n).row(n)

    def side(u: np.ndarray, v: np.ndarray) -> float:
        # int_0^L u(s) s^order G_v(s) ds where I^order v = s^order G_v
        g = _left_regular(order, 0.0, v)
        return phi.h ** (order + 1.0) * float(outer @ (u * g))

    lhs = side(p, q)
    rhs = side(q[::-1], p[::-1])
    return lhs, rhs


# }}}

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from scipy import special

from fracdamp.fracops import (
    ProductWeights,
    QuadratureBudget,
    SingularGridFunction,
    ibp_check,
    rl_left_derivative_grid,
    rl_left_integral_grid,
    rl_power_rule,
    rl_right_integral_at,
    rl_right_integral_grid,
)
from fracdamp.specfun import AccuracyError


def grid(z, sigma: float = 0.0, n: int = 2048, t_end: float = 1.0) -> SingularGridFunction:
    return SingularGridFunction.from_function(z, t_end, n, sigma=sigma)


def ones(t: np.ndarray) -> np.ndarray:
    return np.ones_like(t)


# {{{ grid functions


def test_grid_function_invariants() -> None:
    with pytest.raises(ValueError):
        SingularGridFunction(h=0.0, z=np.ones(3))
    with pytest.raises(ValueError):
        SingularGridFunction(h=0.1, z=np.ones(3), sigma=-1.0)
    with pytest.raises(ValueError):
        SingularGridFunction(h=0.1, z=np.ones(1))

    f = SingularGridFunction(h=0.5, z=[1.0, 2.0, 3.0])
    assert f.n == 2
    assert f.t_end == 1.0
    with pytest.raises(ValueError):
        f.z[0] = 5.0


def test_grid_function_endpoint_sentinel() -> None:
    f = SingularGridFunction(h=0.25, z=[2.0, 1.0, 1.0], sigma=-0.5)
    v = f.values()
    assert v[0] == math.inf
    assert v[1] == pytest.approx(0.25**-0.5)

    g = SingularGridFunction(h=0.25, z=[0.0, 1.0, 1.0], sigma=-0.5)
    assert math.isnan(g.values()[0])
    assert SingularGridFunction(h=0.25, z=[3.0, 1.0, 1.0], sigma=0.5).values()[0] == 0.0


# }}}


# {{{ power rule


def test_power_rule_examples() -> None:
    assert rl_power_rule("integral", 0.5, 0.0, 1.0) == pytest.approx(
        1.0 / math.gamma(1.5), rel=1.0e-15
    )
    assert rl_power_rule("integral", 0.5, 0.0, 1.0) == pytest.approx(1.1283791671, rel=1.0e-10)
    for alpha in (0.3, 0.5, 0.9):
        assert rl_power_rule("derivative", alpha, alpha - 1.0, 2.0) == 0.0
    assert rl_power_rule("integral", 0.0, 1.7, 3.0) == 3.0**1.7


def test_power_rule_vs_quadrature() -> None:
    order, mu, t = 0.35, 1.25, 1.7
    # t - s = t w^(1/order) removes the kernel singularity
    with mpmath.workdps(30):
        ref = mpmath.quad(
            lambda w: t**order / order * (t * (1 - w ** (1 / mpmath.mpf(order)))) ** mu, [0, 1]
        ) / mpmath.gamma(order)
    assert rl_power_rule("integral", order, mu, t) == pytest.approx(float(ref), rel=1.0e-12)


def test_power_rule_domain() -> None:
    with pytest.raises(ValueError):
        rl_power_rule("integral", 0.5, -1.0, 1.0)
    with pytest.raises(ValueError):
        rl_power_rule("derivative", 0.5, -0.8, 1.0)
    with pytest.raises(ValueError):
        rl_power_rule("derivative", 1.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        rl_power_rule("other", 0.5, 1.0, 1.0)  # type: ignore[arg-type]


# }}}


# {{{ product weights


def _exact_row(sigma: float, mu: float, j: int) -> np.ndarray:
    """Row of hat-function weights from 40-digit incomplete beta moments."""
    ref = np.zeros(j + 1)
    with mpmath.workdps(40):
        for k in range(j):
            x0, x1 = mpmath.mpf(k) / j, mpmath.mpf(k + 1) / j
            p0 = mpmath.betainc(sigma + 1, mu, x0, x1) * mpmath.mpf(j) ** (sigma + mu)
            p1 = mpmath.betainc(sigma + 2, mu, x0, x1) * mpmath.mpf(j) ** (sigma + mu + 1)
            ref[k] += float((k + 1) * p0 - p1)
            ref[k + 1] += float(p1 - k * p0)
    return ref


@pytest.mark.parametrize(
    ("sigma", "mu"), [(-0.5, 0.3), (0.0, 0.5), (-0.1, 0.9), (0.7, 0.45), (-0.9, 0.05)]
)
def test_product_weights_vs_exact_moments(sigma: float, mu: float) -> None:
    pw = ProductWeights(sigma, mu, 64)
    for j in (1, 2, 3, 5, 17, 64):
        np.testing.assert_allclose(pw.row(j), _exact_row(sigma, mu, j), rtol=1.0e-11)


def test_product_weights_first_row_closed_form() -> None:
    sigma, mu = -0.5, 0.3
    row = ProductWeights(sigma, mu, 4).row(1)
    assert row[0] == pytest.approx(special.beta(sigma + 1, mu + 1), rel=1.0e-14)
    assert row[1] == pytest.approx(special.beta(sigma + 2, mu), rel=1.0e-14)


def test_product_weights_row_sum() -> None:
    # hats sum to one, so each row integrates u^sigma against the kernel
    sigma, mu = -0.3, 0.6
    pw = ProductWeights(sigma, mu, 300)
    for j in (1, 7, 300):
        ref = special.beta(sigma + 1, mu) * j ** (sigma + mu)
        assert pw.row(j).sum() == pytest.approx(ref, rel=1.0e-13)


# }}}


# {{{ left integral


def test_left_integral_running_integral() -> None:
    f = grid(ones)
    r = rl_left_integral_grid(1.0, f)
    np.testing.assert_allclose(r.values(), f.t, atol=1.0e-12)


def test_left_integral_singular_input() -> None:
    f = grid(ones, sigma=-0.5)
    r = rl_left_integral_grid(0.5, f)
    assert r.sigma == 0.0
    assert np.max(np.abs(r.values() - math.sqrt(math.pi))) <= 1.0e-6


def test_left_integral_linear_input() -> None:
    f = grid(lambda t: t)
    r = rl_left_integral_grid(0.5, f)
    exact = 1.0 / math.gamma(2.5) * f.t**1.5
    assert np.max(np.abs(r.values() - exact)) / np.max(exact) <= 1.0e-6
    assert r.values()[0] == 0.0


def test_left_integral_keep_singular() -> None:
    f = grid(ones, sigma=-0.2, n=128)
    r = rl_left_integral_grid(0.5, f, keep_singular=True)
    assert r.sigma == pytest.approx(0.3)
    np.testing.assert_allclose(r.z, math.gamma(0.8) / math.gamma(1.3), rtol=1.0e-12)


def test_left_integral_stays_singular() -> None:
    f = grid(ones, sigma=-0.8, n=64)
    r = rl_left_integral_grid(0.3, f)
    assert r.sigma == pytest.approx(-0.5)
    assert r.values()[0] == math.inf


def test_left_integral_order_domain() -> None:
    with pytest.raises(ValueError):
        rl_left_integral_grid(0.0, grid(ones, n=16))
    with pytest.raises(ValueError):
        rl_left_integral_grid(1.5, grid(ones, n=16))


def test_left_integral_vs_mpmath_smooth() -> None:
    """A non-polynomial regular factor against high-precision quadrature."""
    sigma, order = -0.4, 0.6
    f = grid(np.cos, sigma=sigma, n=1024)
    r = rl_left_integral_grid(order, f)

    for t in (0.25, 0.5, 1.0):
        ref = mpmath.quad(
            lambda s: (t - s) ** (order - 1) * s**sigma * mpmath.cos(s), [0, t / 2, t]
        ) / mpmath.gamma(order)
        j = round(t * f.n)
        assert r.values()[j] == pytest.approx(float(ref), rel=1.0e-6)


# }}}


# {{{ derivative


def test_derivative_annihilates_kernel_power() -> None:
    alpha = 0.6
    f = grid(ones, sigma=alpha - 1.0)
    d = rl_left_derivative_grid(alpha, f)
    assert np.max(np.abs(d.values()[1:])) <= 1.0e-6


def test_derivative_of_linear() -> None:
    f = grid(lambda t: t)
    d = rl_left_derivative_grid(0.5, f)
    exact = f.t**0.5 / math.gamma(1.5)
    assert np.max(np.abs(d.values()[1:] - exact[1:])) / np.max(exact) <= 1.0e-4


def test_derivative_of_constant() -> None:
    f = grid(ones)
    d = rl_left_derivative_grid(0.5, f)
    assert d.values()[0] == math.inf
    t = f.t
    mask = t >= 0.1
    exact = t[mask] ** -0.5 / math.gamma(0.5)
    assert np.max(np.abs(d.values()[mask] / exact - 1.0)) <= 1.0e-4


def test_derivative_domain() -> None:
    with pytest.raises(ValueError):
        rl_left_derivative_grid(1.0, grid(ones, n=16))
    with pytest.raises(ValueError):
        rl_left_derivative_grid(0.3, grid(ones, sigma=-0.8, n=16))


# }}}


# {{{ right integral


def test_right_integral_examples() -> None:
    assert rl_right_integral_at(1.0, ones, 0.0, 1.0) == pytest.approx(1.0, abs=1.0e-12)
    assert rl_right_integral_at(0.5, ones, 0.0, 1.0) == pytest.approx(
        2.0 / math.sqrt(math.pi), abs=1.0e-8
    )
    assert rl_right_integral_at(0.5, lambda s: 1.0 - s, 0.0, 1.0) == pytest.approx(
        1.0 / math.gamma(2.5), abs=1.0e-8
    )
    assert 1.0 / math.gamma(2.5) == pytest.approx(0.7522527781, abs=1.0e-10)


def test_right_integral_scalar_callable() -> None:
    val = rl_right_integral_at(0.5, lambda s: math.exp(-s), 0.2, 1.5)
    ref = mpmath.quad(lambda s: (s - 0.2) ** -0.5 * mpmath.exp(-s), [0.2, 1.5]) / mpmath.gamma(0.5)
    assert val == pytest.approx(float(ref), abs=1.0e-8)


def test_right_integral_budget_exhausted() -> None:
    budget = QuadratureBudget(abs_tol=1.0e-15, max_refinements=1)
    with pytest.raises(AccuracyError) as exc:
        rl_right_integral_at(0.5, lambda s: np.sqrt(np.abs(s - 0.3)), 0.0, 1.0, budget)
    assert exc.value.estimate == pytest.approx(
        rl_right_integral_at(0.5, lambda s: np.sqrt(np.abs(s - 0.3)), 0.0, 1.0), abs=1.0e-3
    )


def test_right_integral_grid_mirror() -> None:
    f = grid(lambda t: 1.0 - t, n=1024)
    r = rl_right_integral_grid(0.5, f)
    # mirror of the left power rule: I_{1-}^{1/2}(1 - s)(t) = (1 - t)^{3/2} / Gamma(5/2)
    np.testing.assert_allclose(r.values(), (1.0 - f.t) ** 1.5 / math.gamma(2.5), atol=1.0e-12)


def test_budget_validation() -> None:
    with pytest.raises(ValueError):
        QuadratureBudget(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureBudget(max_refinements=0)


# }}}


# {{{ integration by parts


def test_ibp_symmetric_inputs() -> None:
    # identical, mirror-symmetric inputs give the same discrete sums on both sides
    f = grid(lambda t: np.exp(-((t - 0.5) ** 2)) * (1 + t * (1 - t)), n=256)
    lhs, rhs = ibp_check(0.4, f, f)
    assert lhs == pytest.approx(rhs, rel=1.0e-14)


def test_ibp_identical_inputs() -> None:
    f = grid(lambda t: np.exp(-t) * (1 + t**2))
    lhs, rhs = ibp_check(0.4, f, f)
    assert abs(lhs - rhs) <= 1.0e-6


def test_ibp_constant() -> None:
    f = grid(ones)
    lhs, rhs = ibp_check(0.5, f, f)
    expected = (2.0 / 3.0) / math.gamma(1.5)
    assert lhs == pytest.approx(expected, abs=1.0e-12)
    assert rhs == pytest.approx(expected, abs=1.0e-12)


def test_ibp_pair() -> None:
    phi, psi = grid(lambda t: 1.0 - t), grid(lambda t: t)
    lhs, rhs = ibp_check(0.5, phi, psi)
    assert abs(lhs - rhs) <= 1.0e-6

    # phi * I^{1/2} psi = (1 - t) t^{3/2} / Gamma(5/2)
    ref = (1.0 / 2.5 - 1.0 / 3.5) / math.gamma(2.5)
    assert lhs == pytest.approx(ref, abs=1.0e-7)


def test_ibp_discrepancy_decreases() -> None:
    def gap(n: int) -> float:
        phi = grid(lambda t: np.cos(2 * t), n=n)
        psi = grid(lambda t: np.exp(t) + t**2, n=n)
        lhs, rhs = ibp_check(0.3, phi, psi)
        return abs(lhs - rhs)

    coarse, fine = gap(64), gap(128)
    assert fine <= coarse / 2.0


def test_ibp_mismatched_grids() -> None:
    with pytest.raises(ValueError, match="same grid"):
        ibp_check(0.5, grid(ones, n=16), grid(ones, n=32))
    with pytest.raises(ValueError):
        ibp_check(0.5, grid(ones, sigma=-0.5, n=16), grid(ones, n=16))


# }}}

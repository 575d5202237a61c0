from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from fracdamp.fracops import QuadratureBudget
from fracdamp.testfn import (
    CutoffProfile,
    check_lemma,
    choose_lambda,
    k1_bound,
    lemma8_integral,
    lemma9_integral,
    lemma_bound,
    profile_eval,
    profile_ratio,
)


def brute_force_k1(prof: CutoffProfile, n: int = 1_000_001) -> float:
    u = np.linspace(0.5, 1.0, n)
    return float(np.max(profile_ratio(prof, u)))


def gauss_lemma8(alpha: float, m: float, prof: CutoffProfile, T: float) -> float:
    """Fixed-mesh oracle at unit scale: Gauss-Jacobi inside, Gauss-Legendre outside."""
    xj, wj = special.roots_jacobi(200, 0.0, -alpha)
    xl, wl = np.polynomial.legendre.leggauss(200)

    def inner(u: float) -> float:
        # int_u^1 (r - u)^(-alpha) R(r) dr with r = u + (1 - u)(x + 1)/2
        half = 0.5 * (1.0 - u)
        r = u + half * (xj + 1.0)
        return half ** (1.0 - alpha) * float(wj @ profile_ratio(prof, r)) / math.gamma(1.0 - alpha)

    # the inner integral has a kink at the plateau edge only, so split there
    total = 0.0
    for a, b in ((0.5, 0.75), (0.75, 1.0)):
        u = a + (b - a) * 0.5 * (xl + 1.0)
        vals = np.array([inner(x) for x in u]) ** m
        total += 0.5 * (b - a) * float(wl @ vals)
    return T ** (1.0 - alpha * m) * total


# {{{ profile


def test_profile_examples() -> None:
    for lam in (1, 2, 5):
        prof = CutoffProfile(lam=lam)
        assert profile_eval(prof, 0.25) == (1.0, 0.0)
        assert profile_eval(prof, 1.0) == (0.0, 0.0)
        assert profile_eval(prof, 3.0) == (0.0, 0.0)

    value, deriv = profile_eval(CutoffProfile(lam=1), 0.75)
    assert value == pytest.approx(0.5, abs=1.0e-15)
    assert deriv == pytest.approx(-3.0, abs=1.0e-15)


def test_profile_domain() -> None:
    with pytest.raises(ValueError):
        profile_eval(CutoffProfile(lam=2), -0.1)
    with pytest.raises(ValueError):
        CutoffProfile(lam=1, p=0.6)
    with pytest.raises(ValueError):
        CutoffProfile(lam=0)
    with pytest.raises(ValueError):
        CutoffProfile(lam=2, p=1.0)


def test_profile_monotone_and_bounded() -> None:
    prof = CutoffProfile(lam=3, p=0.5)
    u = np.linspace(0.0, 1.5, 3001)
    vals = np.array([profile_eval(prof, x) for x in u])
    assert np.all((vals[:, 0] >= 0) & (vals[:, 0] <= 1))
    assert np.all(vals[:, 1] <= 0)
    assert np.all(np.diff(vals[:, 0]) <= 0)


def test_profile_derivative_finite_difference() -> None:
    rng = np.random.default_rng(seed=7)
    eps = 1.0e-6
    for lam in (1, 2, 3):
        prof = CutoffProfile(lam=lam)
        for u in rng.uniform(eps, 1.3, 1000):
            fd = (profile_eval(prof, u + eps)[0] - profile_eval(prof, u - eps)[0]) / (2 * eps)
            assert profile_eval(prof, u)[1] == pytest.approx(fd, abs=1.0e-6)


def test_profile_ratio_matches_definition() -> None:
    prof = CutoffProfile(lam=3, p=2.0 / 3.0)
    for u in np.linspace(0.51, 0.99, 25):
        value, deriv = profile_eval(prof, u)
        assert profile_ratio(prof, np.array(u)) == pytest.approx(
            abs(deriv) / value**prof.p, rel=1.0e-12
        )


# }}}


# {{{ K1


@pytest.mark.parametrize(("m", "lam"), [(2.0, 2), (1.5, 3), (3.0, 2), (1.1, 11)])
def test_choose_lambda(m: float, lam: int) -> None:
    assert choose_lambda(m) == lam
    assert 2 * lam * (1 - 1 / m) >= 1


def test_choose_lambda_domain() -> None:
    with pytest.raises(ValueError):
        choose_lambda(1.0)


def test_k1_examples() -> None:
    assert k1_bound(CutoffProfile(lam=1, p=0.0)) == pytest.approx(3.0, abs=1.0e-12)
    for lam, p in ((2, 0.5), (3, 2.0 / 3.0)):
        prof = CutoffProfile(lam=lam, p=p)
        assert k1_bound(prof) == pytest.approx(brute_force_k1(prof), abs=1.0e-6)


def test_k1_borderline_profile() -> None:
    # 2 lambda (1 - p) = 1: the ratio stays bounded and peaks at the support edge
    prof = CutoffProfile(lam=1, p=0.5)
    assert k1_bound(prof) == pytest.approx(12.0 * 3.0**-0.5, rel=1.0e-12)


@pytest.mark.parametrize(("lam", "p"), [(2, 0.5), (3, 2.0 / 3.0), (2, 1.0 / 3.0), (1, 0.0)])
def test_k1_dominates_ratio(lam: int, p: float) -> None:
    prof = CutoffProfile(lam=lam, p=p)
    k1 = k1_bound(prof)
    u = np.random.default_rng(seed=3).uniform(0.5, 1.0, 100_000)
    assert np.all(profile_ratio(prof, u) <= k1 * (1 + 1.0e-9))


# }}}


# {{{ integrals and bounds


def test_lemma8_vs_gauss_oracle() -> None:
    prof = CutoffProfile(lam=2, p=0.5)
    value = lemma8_integral(0.5, 2.0, prof, 1.0, QuadratureBudget(abs_tol=1.0e-10))
    assert value == pytest.approx(gauss_lemma8(0.5, 2.0, prof, 1.0), abs=1.0e-6)


@pytest.mark.parametrize(("alpha", "m"), [(0.25, 3.0), (0.75, 1.5)])
def test_lemma8_vs_gauss_oracle_other_orders(alpha: float, m: float) -> None:
    prof = CutoffProfile(lam=choose_lambda(m), p=1.0 / m)
    assert lemma8_integral(alpha, m, prof, 10.0) == pytest.approx(
        gauss_lemma8(alpha, m, prof, 10.0), abs=1.0e-6
    )


def test_lemma8_scaling() -> None:
    budget = QuadratureBudget()
    alpha, m = 0.5, 3.0
    prof = CutoffProfile(lam=choose_lambda(m), p=1.0 / m)
    i1 = lemma8_integral(alpha, m, prof, 1.0, budget)
    i2 = lemma8_integral(alpha, m, prof, 2.0, budget)
    assert i2 / i1 == pytest.approx(2.0 ** (1.0 - alpha * m), abs=10 * budget.abs_tol)


def test_lemma8_nonnegative() -> None:
    prof = CutoffProfile(lam=2, p=0.5)
    for alpha in (0.1, 0.9):
        for T in (0.1, 5.0):
            assert lemma8_integral(alpha, 2.0, prof, T) >= 0


def test_lemma8_domain() -> None:
    prof = CutoffProfile(lam=2)
    with pytest.raises(ValueError):
        lemma8_integral(1.0, 2.0, prof, 1.0)
    with pytest.raises(ValueError):
        lemma8_integral(0.5, 2.0, prof, 0.0)


def test_lemma9_closed_form_at_lambda_one() -> None:
    # p = 0, m = 1: the integral is the total variation of the profile, Phi(1/2) - Phi(1) = 1
    prof = CutoffProfile(lam=1, p=0.0)
    assert lemma9_integral(1.0, prof, 4.0) == pytest.approx(1.0, abs=1.0e-12)


def test_lemma_bound_examples() -> None:
    # 2^2 Gamma(3/2)^2 [2 (1 - 1/2) + 1] = 4 (pi / 4) 2 = 2 pi
    r = lemma_bound("lemma8", 0.5, 2.0, 1.0, 1.0)
    assert r.rhs == pytest.approx(1.0 / (2.0 * math.pi), rel=1.0e-14)
    assert r.exponent == 0.0

    r = lemma_bound("lemma9", 1.0, 2.0, 3.0, 10.0)
    assert r.rhs == pytest.approx(0.45, rel=1.0e-14)
    assert r.exponent == -1.0

    # at T = 1 the bound is the constant itself
    for alpha, m in ((0.25, 1.5), (0.75, 3.0)):
        q = m * (1 - alpha) + 1
        k = 2.0**m / (2**q * math.gamma(2 - alpha) ** m * q)
        assert lemma_bound("lemma8", alpha, m, 2.0, 1.0).rhs == pytest.approx(k, rel=1.0e-14)


def test_lemma_bound_domain() -> None:
    with pytest.raises(ValueError):
        lemma_bound("lemma8", 0.5, 2.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        lemma_bound("lemma9", 0.5, 2.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        lemma_bound("lemma8", 1.0, 2.0, 1.0, 1.0)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_lemma9_bound_and_slope(m: float) -> None:
    Ts = np.array([1.0, 10.0, 100.0])
    results = [check_lemma(1.0, m, T) for T in Ts]
    assert all(r.holds for r in results)
    slope = np.polyfit(np.log(Ts), np.log([r.lhs for r in results]), 1)[0]
    assert slope == pytest.approx(1.0 - m, abs=0.02)


def test_check_lemma_fails_with_small_constant() -> None:
    r = check_lemma(0.5, 2.0, 1.0, k1=0.1)
    assert not r.holds


# }}}

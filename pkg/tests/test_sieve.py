from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhlab.primes import build_tables
from dhlab.sieve import (
    build_weight_table,
    m_range,
    power_range,
    psi,
    rho,
    rho_interval_sum,
    rho_value,
    z_of_p,
)

T = build_tables(10 ** 5, spf_limit=10 ** 5)


def test_psi_examples():
    assert psi(35, 5, T) == 1
    assert psi(35, 6, T) == 0
    assert psi(1, 1e9, T) == 1


def test_z_branches():
    X = 2.0 ** 42
    assert z_of_p(101, X) == 101
    assert z_of_p(37, X) == pytest.approx(2 ** 7.5 / math.sqrt(37), rel=1e-14)
    assert z_of_p(37, X) == pytest.approx(29.7594, abs=1e-4)
    assert z_of_p(1021, X) == pytest.approx(2 ** 15 / 1021, rel=1e-14)
    assert z_of_p(1021, X) == pytest.approx(32.0940, abs=1e-4)


@pytest.mark.parametrize("X", [1e6, 2.0 ** 42, 1e9])
def test_z_one_sided_limits(X):
    # the outer branches jump down to X^(3/28) and X^(1/7) at the two breaks
    p1, p2 = X ** (1 / 7), X ** (3 / 14)
    assert z_of_p(p1 * (1 - 1e-12), X) == pytest.approx(X ** (3 / 28), rel=1e-9)
    assert z_of_p(p1, X) == pytest.approx(p1)
    assert z_of_p(p2, X) == pytest.approx(p2)
    assert z_of_p(p2 * (1 + 1e-12), X) == pytest.approx(X ** (1 / 7), rel=1e-9)


@given(st.floats(1e4, 1e12), st.floats(0.0, 1.0))
def test_z_never_exceeds_p(X, t):
    p = X ** (5 / 42 + t * (1 / 4 - 5 / 42))
    assert z_of_p(p, X) <= p * (1 + 1e-12)


def test_rho_even_number_1e8():
    # 20014 lies outside the 1e8 window, so evaluate without the range check
    assert rho_value(20014, 1e8, T) == 0
    assert 2 < 1e8 ** (5 / 42)


def test_rho_outside_range():
    with pytest.raises(ValueError):
        rho(5, 1e8, T)


def test_rho_oracle_1e8():
    """Exhaustive: rho <= 1 on primes, rho <= 0 on composites, rho = 1 on primes."""
    tab = build_weight_table(1e8, Fraction(1, 100), T)
    isp = np.array([T.is_prime(int(m)) for m in tab.m])
    assert np.all(tab.rho[isp] == 1)
    assert np.all(tab.rho[~isp] <= 0)


def brute_rho(m, X):
    """Direct transcription with trial division."""
    def factors(n):
        out, d = [], 2
        while d * d <= n:
            while n % d == 0:
                out.append(d)
                n //= d
            d += 1
        if n > 1:
            out.append(n)
        return out

    def ps(n, z):
        return 1 if n == 1 else int(min(factors(n)) >= z)

    v = ps(m, X ** (5 / 42))
    for p in sorted(set(factors(m))):
        if X ** (5 / 42) <= p < X ** 0.25:
            v -= ps(m // p, z_of_p(p, X))
    return v


@settings(max_examples=60, deadline=None)
@given(st.floats(1e6, 1e10))
def test_rho_matches_brute(X):
    lo, hi = m_range(X, Fraction(1, 100))
    rng = np.random.default_rng(int(X) % 2 ** 32)
    for m in rng.integers(lo, hi + 1, size=30):
        assert rho(int(m), X, T) == brute_rho(int(m), X)


def test_regression_1e8():
    tab = build_weight_table(1e8, Fraction(1, 100), T)
    assert (tab.m_lo, tab.m_hi) == (1000, 10000)
    assert int(tab.rho.sum()) == 901
    assert tab.ell_hat == pytest.approx(1.8439099378, rel=1e-9)


def test_interval_sums():
    tab = build_weight_table(1e8, Fraction(1, 100), T)
    assert rho_interval_sum(1009, 1009, tab)[0] == 1
    total, ratio = rho_interval_sum(tab.m_lo, tab.m_hi, tab)
    assert ratio == pytest.approx(tab.ell_hat)
    assert ratio > 0
    edges = np.linspace(tab.m_lo, tab.m_hi + 1, 9).astype(int)
    for a, b in zip(edges[:-1], edges[1:]):
        r = rho_interval_sum(int(a), int(b) - 1, tab)[1]
        assert abs(r / tab.ell_hat - 1) <= 0.25


def test_power_range_closed_open():
    assert power_range(4, 100, 2) == (2, 10)
    assert power_range(4, 100, 2, closed=False) == (3, 9)
    first, last = power_range(10.0, 1000.0, 1.05)
    assert first ** 1.05 >= 10 and (first - 1) ** 1.05 < 10
    assert last ** 1.05 <= 1000 and (last + 1) ** 1.05 > 1000

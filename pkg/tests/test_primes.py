from __future__ import annotations

import math

import numpy as np
import pytest

from dhlab.primes import (
    TableError,
    build_tables,
    load_cached_primes,
    selberg_integral,
    theta,
)


def trial_primes(n):
    return [p for p in range(2, n + 1) if all(p % d for d in range(2, math.isqrt(p) + 1))]


def test_small_limits():
    assert build_tables(10).primes.tolist() == [2, 3, 5, 7]
    assert build_tables(2).primes.tolist() == [2]


def test_prime_count_1e6():
    assert len(build_tables(10 ** 6).primes) == 78498


def test_trial_division_oracle_1e4():
    assert build_tables(10 ** 4).primes.tolist() == trial_primes(10 ** 4)


def test_spf_factorisation():
    t = build_tables(10 ** 5, spf_limit=10 ** 5)
    for m in (2, 97, 360, 9973 * 7, 65536, 99991):
        f = t.factorize(m)
        assert math.prod(f) == m and f == sorted(f)
        assert all(t.is_prime(p) for p in f)


def test_theta_values():
    t = build_tables(100)
    assert theta(1, t) == 0.0
    assert theta(2, t) == pytest.approx(math.log(2))
    assert theta(10, t) == pytest.approx(5.34710753, abs=1e-8)
    assert theta(10, t) == pytest.approx(sum(math.log(p) for p in (2, 3, 5, 7)))


def test_theta_beyond_table():
    with pytest.raises(TableError):
        theta(200, build_tables(100))


def test_cache_roundtrip(tmp_path):
    path = str(tmp_path / "primes.bin")
    a = build_tables(10 ** 5, cache=path)
    b = load_cached_primes(path, 5 * 10 ** 4)
    assert b is not None and b.tolist() == a.primes[a.primes <= 5 * 10 ** 4].tolist()
    assert load_cached_primes(path, 10 ** 6) is None


def test_selberg_zero_h():
    assert selberg_integral(1e4, 0.0, 1.05, build_tables(10 ** 5)) == 0.0


def test_selberg_midpoint_oracle():
    X, h = 1e3, 100.0
    t = build_tables(3000)
    step = 1e-2
    x = X + step * (np.arange(int(X / step)) + 0.5)
    diff = theta(x + h, t) - theta(x, t) - h
    mid = float(np.sum(diff ** 2) * step)
    assert selberg_integral(X, h, 1.0, t) == pytest.approx(mid, rel=5e-3)


def test_selberg_positive_k11():
    X = 1e4
    t = build_tables(int((2 * X + X ** 0.7) ** (1 / 1.1)) + 10)
    v = selberg_integral(X, X ** 0.7, 1.1, t)
    assert v > 0 and math.isfinite(v)

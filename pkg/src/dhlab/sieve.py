"""Lower-bound sieve weight rho(m) built from rough-number indicators.

    rho(m) = psi(m, X^{5/42}) - sum_{X^{5/42} <= p < X^{1/4}, p | m} psi(m/p, z(p))

with psi(m, z) = 1 when every prime factor of m is >= z.  Since z(p) <= p for
all p >= X^{5/42}, rho(m) never exceeds the prime indicator on [X^{1/4}, X^{1/2}].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .primes import PrimeTables, build_tables


def power_range(lo: float, hi: float, k: float, *, closed: bool = True) -> tuple[int, int]:
    """Integers n >= 1 with lo <= n^k <= hi (closed) or lo < n^k < hi (open).

    Returned as (first, last); empty when first > last.
    """
    def inside_lo(n: int) -> bool:
        v = _ipow(n, k)
        return v >= lo if closed else v > lo

    def inside_hi(n: int) -> bool:
        v = _ipow(n, k)
        return v <= hi if closed else v < hi

    first = max(1, int(math.floor(max(lo, 0.0) ** (1.0 / k))) - 1)
    while not inside_lo(first):
        first += 1
    while first > 1 and inside_lo(first - 1):
        first -= 1
    last = max(0, int(math.floor(max(hi, 0.0) ** (1.0 / k))) + 1)
    while last >= 1 and not inside_hi(last):
        last -= 1
    while inside_hi(last + 1):
        last += 1
    return first, last


def _ipow(n: int, k: float):
    if float(k).is_integer():
        return n ** int(k)
    return float(n) ** k


def psi(m: int, z: float, tables: PrimeTables) -> int:
    """1 if every prime factor of m is >= z (vacuously true for m = 1)."""
    if m < 1:
        raise ValueError("psi needs m >= 1")
    if m == 1:
        return 1
    f = tables.factorize(m)
    return int(f[0] >= z)


def z_of_p(p: float, X: float) -> float:
    """Second argument of psi in the subtracted terms (continuous in p)."""
    if p < X ** (1.0 / 7.0):
        return X ** (5.0 / 28.0) * p ** -0.5
    if p <= X ** (3.0 / 14.0):
        return float(p)
    return X ** (5.0 / 14.0) / p


def rho_value(m: int, X: float, tables: PrimeTables) -> int:
    """rho(m) without the window check (divisor-restricted subtracted sum)."""
    factors = tables.factorize(m)
    if not factors:
        return 1
    z0 = X ** (5.0 / 42.0)
    z1 = X ** 0.25
    val = int(factors[0] >= z0)
    for p in sorted(set(factors)):
        if p >= z1:
            break
        if p < z0:
            continue
        rest = list(factors)
        rest.remove(p)
        if not rest or rest[0] >= z_of_p(p, X):
            val -= 1
    return val


def m_range(X: float, delta: Union[float, Fraction]) -> tuple[int, int]:
    """(ceil sqrt(delta X), floor sqrt X): the support of the weighted square sum."""
    return power_range(float(delta) * X, X, 2)


def rho(m: int, X: float, tables: PrimeTables, delta: Union[float, Fraction] = Fraction(1, 100)) -> int:
    lo, hi = m_range(X, delta)
    if not (lo <= m <= hi):
        raise ValueError(f"m={m} outside [{lo}, {hi}] for X={X}, delta={delta}")
    return rho_value(m, X, tables)


@dataclass(frozen=True, eq=False)
class SieveWeightTable:
    X: float
    delta: float
    m_lo: int
    m_hi: int
    rho: np.ndarray
    ell_hat: float

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.m_lo, self.m_hi + 1, dtype=np.int64)

    def at(self, m: int) -> int:
        if not (self.m_lo <= m <= self.m_hi):
            raise ValueError(f"m={m} outside [{self.m_lo}, {self.m_hi}]")
        return int(self.rho[m - self.m_lo])

    @property
    def abs_sum(self) -> int:
        return int(np.abs(self.rho).sum())

    def summary(self) -> dict:
        return {"X": self.X, "m_lo": self.m_lo, "m_hi": self.m_hi,
                "sum_rho": int(self.rho.sum()), "ell_hat": self.ell_hat}


def build_weight_table(X: float, delta: Union[float, Fraction] = Fraction(1, 100),
                       tables: Optional[PrimeTables] = None) -> SieveWeightTable:
    lo, hi = m_range(X, delta)
    if lo > hi:
        raise ValueError(f"empty m-range for X={X}, delta={delta}")
    if tables is None or tables.spf_limit < hi:
        tables = build_tables(max(hi, 2), spf_limit=max(hi, 2))
    vals = np.fromiter((rho_value(m, X, tables) for m in range(lo, hi + 1)),
                       dtype=np.int64, count=hi - lo + 1)
    ell = float(vals.sum()) * math.log(X) / len(vals)
    return SieveWeightTable(X=float(X), delta=float(delta), m_lo=lo, m_hi=hi, rho=vals, ell_hat=ell)


def rho_interval_sum(lo: int, hi: int, table: SieveWeightTable) -> tuple[float, float]:
    """(sum of rho over [lo, hi], sum * log X / |I|)."""
    if hi < lo:
        raise ValueError("empty interval")
    if lo < table.m_lo or hi > table.m_hi:
        raise ValueError(f"[{lo}, {hi}] not inside [{table.m_lo}, {table.m_hi}]")
    s = float(table.rho[lo - table.m_lo: hi - table.m_lo + 1].sum())
    return s, s * math.log(table.X) / (hi - lo + 1)

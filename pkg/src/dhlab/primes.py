"""Prime tables: enumeration, log weights, Chebyshev theta, smallest prime factors.

Also the mean-square prime fluctuation integral over short windows on the
k-th power scale (a generalised Selberg integral).
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

#: default memory budget for table construction, in bytes
DEFAULT_MEMORY_CAP = 2 * 1024 ** 3

CACHE_MAGIC = b"DHLPRIME"
CACHE_VERSION = 1
_HEADER = struct.Struct("<8sIQQ")


class TableError(ValueError):
    pass


def _small_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p::2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def sieve_primes(limit: int, segment: int = 1 << 24) -> np.ndarray:
    """All primes <= limit, by an odd-only segmented sieve."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    if limit < segment:
        return _small_sieve(limit)
    base = _small_sieve(math.isqrt(limit) + 1)[1:]  # odd base primes
    out = [np.array([2], dtype=np.int64)]
    lo = 3
    while lo <= limit:
        hi = min(lo + 2 * segment, limit + 1)  # odd numbers lo, lo+2, ..., < hi
        n = (hi - lo + 1) // 2
        mask = np.ones(n, dtype=bool)
        for p in base:
            pp = int(p) * int(p)
            if pp >= hi:
                break
            start = max(pp, ((lo + p - 1) // p) * p)
            if start % 2 == 0:
                start += p
            if start < hi:
                mask[(start - lo) // 2::p] = False
        idx = np.flatnonzero(mask)
        out.append(lo + 2 * idx.astype(np.int64))
        lo = hi if hi % 2 == 1 else hi + 1
    primes = np.concatenate(out)
    return primes[primes <= limit]


def spf_table(n: int) -> np.ndarray:
    """spf[m] = smallest prime factor of m for 2 <= m <= n (spf[0]=spf[1]=0)."""
    spf = np.zeros(n + 1, dtype=np.int32 if n < 2 ** 31 else np.int64)
    for p in _small_sieve(math.isqrt(n)):
        view = spf[p * p::p]
        view[view == 0] = p
    idx = np.arange(n + 1, dtype=spf.dtype)
    zero = spf == 0
    spf[zero] = idx[zero]
    spf[:2] = 0
    return spf


@dataclass(frozen=True, eq=False)
class PrimeTables:
    limit: int
    primes: np.ndarray
    log_p: np.ndarray
    theta_cum: np.ndarray
    spf: np.ndarray

    @property
    def spf_limit(self) -> int:
        return len(self.spf) - 1

    def primes_between(self, lo: float, hi: float, *, closed: bool = True) -> np.ndarray:
        """Primes p with lo <= p <= hi (closed) or lo < p < hi (open)."""
        if hi > self.limit:
            raise TableError(f"tables cover primes <= {self.limit}, need {hi}")
        if closed:
            i = np.searchsorted(self.primes, lo, side="left")
            j = np.searchsorted(self.primes, hi, side="right")
        else:
            i = np.searchsorted(self.primes, lo, side="right")
            j = np.searchsorted(self.primes, hi, side="left")
        return self.primes[i:j]

    def factorize(self, m: int) -> list[int]:
        """Prime factors of m with multiplicity, ascending."""
        m = int(m)
        out = []
        if m <= self.spf_limit:
            while m > 1:
                p = int(self.spf[m])
                out.append(p)
                m //= p
            return out
        for p in self.primes:
            p = int(p)
            if p * p > m:
                break
            while m % p == 0:
                out.append(p)
                m //= p
        else:
            if m > 1 and self.primes[-1] ** 2 < m:
                raise TableError(f"cannot factor {m}: tables too small")
        if m > 1:
            out.append(m)
        return out

    def is_prime(self, m: int) -> bool:
        if m <= self.limit:
            i = np.searchsorted(self.primes, m)
            return bool(i < len(self.primes) and self.primes[i] == m)
        f = self.factorize(m)
        return len(f) == 1


def estimate_bytes(limit: int, spf_limit: int) -> int:
    n_primes = 1.26 * limit / max(math.log(max(limit, 3)), 1.0)
    sieve = min(limit, 1 << 24) // 2
    spf_bytes = 4 * (spf_limit + 1) * 2  # table plus a temporary index
    return int(sieve + 3 * 8 * n_primes + spf_bytes)


def build_tables(limit: int, spf_limit: Optional[int] = None, *,
                 memory_cap: int = DEFAULT_MEMORY_CAP,
                 cache: Optional[str] = None) -> PrimeTables:
    """Primes up to ``limit`` plus smallest-prime-factor table up to ``spf_limit``."""
    limit = int(limit)
    if limit < 2:
        raise TableError(f"limit={limit} must be >= 2")
    if limit > 10 ** 9:
        raise TableError(f"limit={limit} exceeds 10^9")
    if spf_limit is None:
        spf_limit = min(limit, 10 ** 6)
    spf_limit = int(spf_limit)
    if spf_limit > 10 ** 8:
        raise TableError(f"spf_limit={spf_limit} exceeds 10^8")
    need = estimate_bytes(limit, spf_limit)
    if need > memory_cap:
        raise TableError(
            f"tables for limit={limit}, spf_limit={spf_limit} need ~{need / 2**20:.0f} MiB, "
            f"over the {memory_cap / 2**20:.0f} MiB cap"
        )
    primes = None
    if cache:
        primes = load_cached_primes(cache, limit)
    if primes is None:
        primes = sieve_primes(limit)
        if cache:
            save_cached_primes(cache, limit, primes)
    log_p = np.log(primes.astype(np.float64))
    theta_cum = np.cumsum(log_p)
    return PrimeTables(limit=limit, primes=primes, log_p=log_p, theta_cum=theta_cum,
                       spf=spf_table(spf_limit))


def save_cached_primes(path: str, limit: int, primes: np.ndarray) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    dtype = np.uint32 if limit < 2 ** 32 else np.uint64
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, limit, len(primes)))
        fh.write(primes.astype(dtype).tobytes())
    os.replace(tmp, path)


def load_cached_primes(path: str, limit: int) -> Optional[np.ndarray]:
    """Primes <= limit from a cache file covering at least ``limit``, else None."""
    if not os.path.exists(path):
        return None
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            return None
        magic, version, cached_limit, count = _HEADER.unpack(head)
        if magic != CACHE_MAGIC or version != CACHE_VERSION or cached_limit < limit:
            return None
        dtype = np.uint32 if cached_limit < 2 ** 32 else np.uint64
        data = np.frombuffer(fh.read(), dtype=dtype)
    if len(data) != count:
        return None
    primes = data.astype(np.int64)
    return primes[: np.searchsorted(primes, limit, side="right")]


def theta(x, tables: PrimeTables):
    """Chebyshev theta(x) = sum of log p over p <= x (x may be an array)."""
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa > tables.limit):
        raise TableError(f"theta needs primes up to {float(np.max(xa))}, tables stop at {tables.limit}")
    idx = np.searchsorted(tables.primes, np.floor(xa), side="right")
    cum = np.concatenate(([0.0], tables.theta_cum))
    out = cum[idx]
    return float(out) if np.ndim(x) == 0 else out


def _window_gain(x: np.ndarray, h: float, inv_k: float) -> np.ndarray:
    # (x+h)^(1/k) - x^(1/k) without cancellation
    return x ** inv_k * np.expm1(inv_k * np.log1p(h / x))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


def selberg_integral(X: float, h: float, k: float, tables: PrimeTables) -> float:
    r"""Integral over [X, 2X] of (theta((x+h)^{1/k}) - theta(x^{1/k}) - ((x+h)^{1/k} - x^{1/k}))^2.

    Between consecutive jump points (x = p^k and x = p^k - h) the prime part
    is constant and the smooth part is analytic with variation scale X, so a
    6-point Gauss rule per piece is exact to rounding.
    """
    if X < 2:
        raise ValueError("X must be >= 2")
    if not (0 <= h <= X):
        raise ValueError("need 0 <= h <= X")
    if k < 1:
        raise ValueError("k must be >= 1")
    if h == 0:
        return 0.0
    inv_k = 1.0 / k
    top = (2 * X + h) ** inv_k
    if top > tables.limit:
        raise TableError(f"selberg_integral needs primes up to {top:.0f}")
    lo, hi = X, 2.0 * X
    pk = tables.primes.astype(np.float64) ** k
    jumps = np.concatenate((pk, pk - h))
    jumps = jumps[(jumps > lo) & (jumps < hi)]
    edges = np.unique(np.concatenate(([lo, hi], jumps)))
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    # prime part constant on each piece: evaluate at midpoints
    cum = np.concatenate(([0.0], tables.theta_cum))
    pk_sorted = pk  # ascending
    i_lo = np.searchsorted(pk_sorted, mid, side="right")
    i_hi = np.searchsorted(pk_sorted, mid + h, side="right")
    jump = cum[i_hi] - cum[i_lo]
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    resid = jump[:, None] - _window_gain(x, h, inv_k)
    per_piece = half * (resid ** 2 @ _GL_WEIGHTS)
    return float(math.fsum(per_piece))

"""Compensated phase reduction and trigonometric-sum kernels.

A phase lam*alpha*f is formed as an unevaluated double-double product and
reduced mod 1 before the exponential, so large products keep ~1e-10
absolute phase accuracy.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
_SPLITTER = 134217729.0  # 2^27 + 1


def dd_from_exact(x) -> tuple[float, float]:
    """(hi, lo) doubles with hi + lo = x to ~2^-106 relative."""
    from .model import real_bounds

    lo_b, hi_b = real_bounds(x, 200) if not isinstance(x, (int, float)) else (Fraction(x), Fraction(x))
    mid = (lo_b + hi_b) / 2
    hi = float(mid)
    lo = float(mid - Fraction(hi))
    return hi, lo


@njit(cache=True, inline="always")
def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True, inline="always")
def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


@njit(cache=True, inline="always")
def two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


@njit(cache=True, inline="always")
def frac_dd_times(ahi, alo, f):
    """(ahi + alo) * f mod 1, in [-1/2, 1/2]."""
    p, e = two_prod(ahi, f)
    r = p - np.rint(p)
    t = r + (e + alo * f)
    return t - np.rint(t)


@njit(cache=True, inline="always")
def dd_mul(ahi, alo, b):
    """Double-double (ahi, alo) times double b, renormalised."""
    p, e = two_prod(ahi, b)
    e += alo * b
    return two_sum(p, e)


@njit(cache=True)
def frac_phases(ahi, alo, freqs):
    out = np.empty(freqs.shape[0])
    for j in range(freqs.shape[0]):
        out[j] = frac_dd_times(ahi, alo, freqs[j])
    return out


@njit(cache=True)
def trig_sum_points(alphas, lam_hi, lam_lo, freqs, weights):
    """sum_j w_j e(lam * alpha * f_j) for each alpha (compensated phases)."""
    n = alphas.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        a_hi, a_lo = dd_mul(lam_hi, lam_lo, alphas[i])
        sr = 0.0
        si = 0.0
        for j in range(freqs.shape[0]):
            t = TWO_PI * frac_dd_times(a_hi, a_lo, freqs[j])
            sr += weights[j] * math.cos(t)
            si += weights[j] * math.sin(t)
        out[i] = complex(sr, si)
    return out


@njit(cache=True, fastmath=True)
def _rotate_block(zr, zi, rr, ri, out, i, stop):
    # plain complex arithmetic only: safe to reassociate
    m = zr.shape[0]
    while i < stop:
        sr = 0.0
        si = 0.0
        for j in range(np.uint64(m)):
            a = zr[j]
            b = zi[j]
            sr += a
            si += b
            zr[j] = a * rr[j] - b * ri[j]
            zi[j] = a * ri[j] + b * rr[j]
        out[i] = complex(sr, si)
        i += 1


@njit(cache=True)
def trig_sum_uniform(alpha0, h, n, lam_hi, lam_lo, freqs, weights, anchor):
    """Same sum on the grid alpha0 + i*h, i < n, by phase rotation.

    Exact compensated phases are recomputed every ``anchor`` points, so the
    rotation drift stays below ~anchor * 1e-16.
    """
    m = freqs.shape[0]
    out = np.empty(n, dtype=np.complex128)
    zr = np.empty(m)
    zi = np.empty(m)
    rr = np.empty(m)
    ri = np.empty(m)
    s_hi, s_lo = dd_mul(lam_hi, lam_lo, h)
    for j in range(m):
        t = TWO_PI * frac_dd_times(s_hi, s_lo, freqs[j])
        rr[j] = math.cos(t)
        ri[j] = math.sin(t)
    i = 0
    while i < n:
        a = alpha0 + i * h
        a_hi, a_lo = dd_mul(lam_hi, lam_lo, a)
        for j in range(m):
            t = TWO_PI * frac_dd_times(a_hi, a_lo, freqs[j])
            zr[j] = weights[j] * math.cos(t)
            zi[j] = weights[j] * math.sin(t)
        stop = min(n, i + anchor)
        _rotate_block(zr, zi, rr, ri, out, i, stop)
        i = stop
    return out


@njit(cache=True, fastmath=True)
def _rotate_sum(zr, zi, rr, ri, lo, hi):
    """Sum of terms lo..hi-1, then advance each by its rotation.

    Unsigned bounds let the compiler drop negative-index handling and
    vectorise the loop.
    """
    sr = 0.0
    si = 0.0
    for j in range(np.uint64(lo), np.uint64(hi)):
        a = zr[j]
        b = zi[j]
        sr += a
        si += b
        zr[j] = a * rr[j] - b * ri[j]
        zi[j] = a * ri[j] + b * rr[j]
    return sr, si


@njit(cache=True)
def product_trapezoid(n0, n1, N, h, major_n, minor_n, freqs, weights, lam_hi, lam_lo, seg,
                      om_hi, om_lo, eta, anchor, keep_every, samples):
    """Trapezoid sums of prod_k S_k(alpha) K_eta(alpha) e(-omega alpha) over grid
    points alpha = n h, n0 <= n <= n1, for the rule on [-N h, N h].

    Term j belongs to factor k when seg[k] <= j < seg[k+1] and has phase
    lam_j * f_j * alpha.  Returns (fine[3], coarse[3], abs_sum) where region 0
    is |n| <= major_n, 1 is |n| <= minor_n, 2 the rest; ``coarse`` uses step
    2h on even n.  Every keep_every-th point's (alpha, |F|) goes to samples.
    """
    m = freqs.shape[0]
    nf = seg.shape[0] - 1
    zr = np.empty(m)
    zi = np.empty(m)
    rr = np.empty(m)
    ri = np.empty(m)
    for j in range(m):
        s_hi, s_lo = dd_mul(lam_hi[j], lam_lo[j], h)
        t = TWO_PI * frac_dd_times(s_hi, s_lo, freqs[j])
        rr[j] = math.cos(t)
        ri[j] = math.sin(t)
    fine = np.zeros(3, dtype=np.complex128)
    coarse = np.zeros(3, dtype=np.complex128)
    abs_sum = 0.0
    use_omega = om_hi != 0.0 or om_lo != 0.0
    n = n0
    while n <= n1:
        a0 = n * h
        for j in range(m):
            a_hi, a_lo = dd_mul(lam_hi[j], lam_lo[j], a0)
            t = TWO_PI * frac_dd_times(a_hi, a_lo, freqs[j])
            zr[j] = weights[j] * math.cos(t)
            zi[j] = weights[j] * math.sin(t)
        stop = min(n1 + 1, n + anchor)
        while n < stop:
            val = complex(1.0, 0.0)
            for k in range(nf):
                sr, si = _rotate_sum(zr, zi, rr, ri, seg[k], seg[k + 1])
                val *= complex(sr, si)
            alpha = n * h
            x = math.pi * alpha * eta
            if x == 0.0:
                kv = eta * eta
            else:
                kv = math.sin(x) / (math.pi * alpha)
                kv = min(kv * kv, eta * eta)
            val *= kv
            if use_omega:
                t = -TWO_PI * frac_dd_times(om_hi, om_lo, alpha)
                val *= complex(math.cos(t), math.sin(t))
            an = abs(n)
            r = 0 if an <= major_n else (1 if an <= minor_n else 2)
            w = h
            w2 = 2.0 * h if n % 2 == 0 else 0.0
            if an == N:
                w *= 0.5
                w2 *= 0.5
            fine[r] += w * val
            coarse[r] += w2 * val
            av = abs(val)
            abs_sum += w * av
            if keep_every > 0 and (n - n0) % keep_every == 0:
                idx = (n - n0) // keep_every
                if idx < samples.shape[0]:
                    samples[idx, 0] = alpha
                    samples[idx, 1] = av
            n += 1
    return fine, coarse, abs_sum

"""Exponential sums over prime powers, integer powers and sieve-weighted squares,
the oscillatory integral T_k, and the Fejer kernel pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .phases import TWO_PI, dd_from_exact, frac_dd_times, trig_sum_points, trig_sum_uniform
from .primes import PrimeTables, TableError
from .sieve import SieveWeightTable, power_range

Lam = Union[float, tuple, object]


def _lam_dd(lam) -> tuple[float, float]:
    if isinstance(lam, tuple):
        return float(lam[0]), float(lam[1])
    if isinstance(lam, (int, float, np.floating)):
        return float(lam), 0.0
    return dd_from_exact(lam)


@dataclass(frozen=True, eq=False)
class TrigSum:
    """A finite sum sum_j w_j e(f_j * alpha)."""

    freqs: np.ndarray
    weights: np.ndarray
    kind: str

    def __len__(self) -> int:
        return len(self.freqs)

    @property
    def at_zero(self) -> float:
        return float(self.weights.sum())

    @property
    def abs_weight(self) -> float:
        return float(np.abs(self.weights).sum())

    @property
    def max_freq(self) -> float:
        return float(np.abs(self.freqs).max()) if len(self.freqs) else 0.0

    def __call__(self, alpha, lam: Lam = 1.0):
        hi, lo = _lam_dd(lam)
        a = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
        if len(self.freqs) == 0:
            out = np.zeros(a.shape, dtype=np.complex128)
        else:
            out = trig_sum_points(a.ravel(), hi, lo, self.freqs, self.weights).reshape(a.shape)
        return complex(out[0]) if np.ndim(alpha) == 0 else out

    def on_grid(self, alpha0: float, h: float, n: int, lam: Lam = 1.0, anchor: int = 128) -> np.ndarray:
        hi, lo = _lam_dd(lam)
        if len(self.freqs) == 0:
            return np.zeros(n, dtype=np.complex128)
        return trig_sum_uniform(float(alpha0), float(h), int(n), hi, lo, self.freqs, self.weights, anchor)

    def mean_square_bound(self, lam: float = 1.0) -> float:
        """Upper bound for the integral of |sum(lam*alpha)|^2 over any unit alpha-interval.

        Uses |int_n^{n+1} e(d alpha) d alpha| <= min(1, 1/(pi |d|)) for each pair.
        """
        f = np.abs(lam) * self.freqs
        w = np.abs(self.weights)
        order = np.argsort(f)
        f, w = f[order], w[order]
        total = 0.0
        chunk = max(1, 4_000_000 // max(len(f), 1))
        for i in range(0, len(f), chunk):
            d = np.abs(f[i:i + chunk, None] - f[None, :])
            with np.errstate(divide="ignore"):
                g = np.minimum(1.0, 1.0 / (math.pi * d))
            total += float(w[i:i + chunk] @ g @ w)
        return total


def prime_power_sum(k: float, X: float, delta: float, tables: PrimeTables) -> TrigSum:
    """S_k: log p weights at frequencies p^k with delta X <= p^k <= X."""
    first, last = power_range(delta * X, X, k)
    if last > tables.limit:
        raise TableError(f"S_k needs primes up to {last}, tables stop at {tables.limit}")
    p = tables.primes_between(first, last)
    freqs = p.astype(np.float64) ** k if not float(k).is_integer() else (p ** int(k)).astype(np.float64)
    return TrigSum(freqs, np.log(p.astype(np.float64)), "S_k")


def integer_power_sum(k: float, X: float, delta: float) -> TrigSum:
    """U_k: unit weights at n^k with delta X <= n^k <= X."""
    first, last = power_range(delta * X, X, k)
    n = np.arange(first, last + 1, dtype=np.int64)
    freqs = n.astype(np.float64) ** k if not float(k).is_integer() else (n ** int(k)).astype(np.float64)
    return TrigSum(freqs, np.ones(len(n)), "U_k")


def weighted_square_sum(table: SieveWeightTable) -> TrigSum:
    """S~_2: rho(m) weights at m^2 (zero weights dropped)."""
    keep = table.rho != 0
    m = table.m[keep]
    return TrigSum((m * m).astype(np.float64), table.rho[keep].astype(np.float64), "S2_tilde")


def eval_S_k(alpha, k: float, X: float, delta: float, tables: PrimeTables, lam: Lam = 1.0):
    return prime_power_sum(k, X, delta, tables)(alpha, lam)


def eval_U_k(alpha, k: float, X: float, delta: float, lam: Lam = 1.0):
    return integer_power_sum(k, X, delta)(alpha, lam)


def eval_S2_tilde(alpha, X: float, delta: float, weight_table: SieveWeightTable, lam: Lam = 1.0):
    if abs(weight_table.X - X) > 1e-9 * X or abs(weight_table.delta - delta) > 1e-12:
        raise ValueError(f"weight table built for X={weight_table.X}, delta={weight_table.delta}")
    return weighted_square_sum(weight_table)(alpha, lam)


# ---------------------------------------------------------------------------
# T_k
# ---------------------------------------------------------------------------

class AccuracyError(RuntimeError):
    def __init__(self, message: str, estimate: complex, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


_GL15 = np.polynomial.legendre.leggauss(15)
#: switch to the endpoint expansion once 2 pi |alpha| delta X exceeds this
ASYMPTOTIC_THRESHOLD = 40.0


def _e_frac(alpha: float, u: float) -> complex:
    t = TWO_PI * frac_dd_times(alpha, 0.0, u)
    return complex(math.cos(t), math.sin(t))


def _t_endpoint_series(alpha: float, a: float, b: float, s: float, rtol: float):
    """int_a^b u^(s-1) e(alpha u) du by repeated integration by parts (alpha > 0)."""
    omega = TWO_PI * alpha
    ea, eb = _e_frac(alpha, a), _e_frac(alpha, b)
    total = 0j
    coef = 1.0  # (s-1)(s-2)...(s-j)
    iw = 1j * omega
    denom = iw
    best = None
    for j in range(60):
        pa = coef * a ** (s - 1 - j)
        pb = coef * b ** (s - 1 - j)
        term = ((-1) ** j) * (pb * eb - pa * ea) / denom
        total += term
        c_next = coef * (s - 1 - j)
        if c_next == 0:
            return total, 0.0  # amplitude is a polynomial: the expansion terminates
        # remainder: int |g^(j+1)| / omega^(j+1), g^(j+1) has constant sign
        rem = abs(coef) * abs(a ** (s - 1 - j) - b ** (s - 1 - j)) / omega ** (j + 1)
        if best is None or rem < best[1]:
            best = (total, rem)
        if rem <= rtol * abs(total):
            return total, rem
        if best is not None and rem > 10 * best[1]:
            break
        coef = c_next
        denom *= iw
    return best


def _gl_panels(alpha: float, edges: np.ndarray, s: float) -> complex:
    x, w = _GL15
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    u = mid[:, None] + half[:, None] * x[None, :]
    # alpha*u stays below ~ASYMPTOTIC_THRESHOLD/delta here, so plain reduction is accurate
    ph = TWO_PI * ((alpha * u) % 1.0)
    vals = u ** (s - 1) * np.exp(1j * ph)
    return complex(np.sum(half * (vals @ w)))


def _panel_edges(a: float, b: float, alpha: float, refine: int) -> np.ndarray:
    # geometric panels for the amplitude, then at most half a period each
    n_geo = max(1, math.ceil(math.log(b / a) / math.log(1.5)))
    geo = a * (b / a) ** (np.arange(n_geo + 1) / n_geo)
    pieces = []
    for lo, hi in zip(geo[:-1], geo[1:]):
        n = max(1, math.ceil((hi - lo) * 2.0 * abs(alpha))) * refine
        pieces.append(np.linspace(lo, hi, n + 1)[:-1])
    pieces.append(np.array([b]))
    return np.concatenate(pieces)


def t_k_with_error(alpha: float, k: float, X: float, delta: float, *, rtol: float = 1e-8,
                   max_panels: int = 2_000_000) -> tuple[complex, float]:
    """(T_k(alpha), error estimate) with T_k = int_{(dX)^(1/k)}^{X^(1/k)} e(alpha t^k) dt."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s = 1.0 / k
    a, b = delta * X, X
    if alpha == 0:
        return complex(b ** s - a ** s), 0.0
    if alpha < 0:
        v, err = t_k_with_error(-alpha, k, X, delta, rtol=rtol, max_panels=max_panels)
        return v.conjugate(), err
    if TWO_PI * alpha * a >= ASYMPTOTIC_THRESHOLD:
        val, err = _t_endpoint_series(alpha, a, b, s, rtol)
        val, err = val * s, err * s
        if err <= rtol * abs(val) + 1e-300:
            return val, err
    refine = 1
    coarse, err = 0j, math.inf
    while True:
        coarse_edges = _panel_edges(a, b, alpha, refine)
        if 2 * len(coarse_edges) > max_panels:
            raise AccuracyError(f"T_k panel budget exceeded at alpha={alpha}", coarse, err)
        coarse = s * _gl_panels(alpha, coarse_edges, s)
        fine = s * _gl_panels(alpha, _panel_edges(a, b, alpha, 2 * refine), s)
        err = abs(fine - coarse)
        if err <= rtol * abs(fine) or err < 1e-14 * (b ** s):
            return fine, err
        refine *= 4


def eval_T_k(alpha, k: float, X: float, delta: float, lam: float = 1.0, rtol: float = 1e-8):
    if np.ndim(alpha) == 0:
        return t_k_with_error(float(lam) * float(alpha), k, X, delta, rtol=rtol)[0]
    a = np.asarray(alpha, dtype=np.float64)
    return np.array([t_k_with_error(float(lam) * x, k, X, delta, rtol=rtol)[0] for x in a.ravel()]).reshape(a.shape)


def t_k_abs_bound(alpha, k: float, X: float, delta: float) -> np.ndarray:
    """Rigorous |T_k(alpha)| <= min(length, 2*sqrt(2)*max amplitude / (2 pi |alpha|))."""
    s = 1.0 / k
    a = delta * X
    length = X ** s - a ** s
    amp = s * a ** (s - 1)
    al = np.abs(np.asarray(alpha, dtype=np.float64))
    with np.errstate(divide="ignore"):
        decay = 2.0 * math.sqrt(2.0) * amp / (TWO_PI * al)
    return np.minimum(length, decay)


# ---------------------------------------------------------------------------
# kernel pair
# ---------------------------------------------------------------------------

def kernel_K(alpha, eta: float):
    """(sin(pi alpha eta)/(pi alpha))^2 with the value eta^2 at 0."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    a = np.asarray(alpha, dtype=np.float64)
    out = eta * eta * np.sinc(a * eta) ** 2
    out = np.minimum(out, eta * eta)
    return float(out) if np.ndim(alpha) == 0 else out


def kernel_Khat(v, eta: float):
    """max(0, eta - |v|)."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    out = np.maximum(0.0, eta - np.abs(np.asarray(v, dtype=np.float64)))
    return float(out) if np.ndim(v) == 0 else out


def kernel_integral(eta: float, A: Optional[float] = None, nodes_per_period: int = 1) -> tuple[float, float]:
    """Quadrature of K_eta over [-A, A] and the tail bound 2/(pi^2 A)."""
    if A is None:
        A = 1e6 / eta
    period = 1.0 / eta
    n = int(math.ceil(A / period)) * nodes_per_period
    x, w = _GL15
    edges = np.linspace(0.0, A, n + 1)
    total = 0.0
    for i in range(0, n, 100_000):
        lo, hi = edges[i:i + 100_000], edges[i + 1:i + 100_001]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        pts = mid[:, None] + half[:, None] * x[None, :]
        total += float(np.sum(half * (kernel_K(pts, eta) @ w)))
    return 2.0 * total, 2.0 / (math.pi ** 2 * A)


@dataclass(frozen=True)
class AlphaGrid:
    start: float
    stop: float
    step: float
    policy: str = "uniform"

    @property
    def n(self) -> int:
        return int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n)

    def integration_grade(self, X: float, lambdas) -> bool:
        return self.step <= 0.1 / (X * max(abs(float(l)) for l in lambdas)) * (1 + 1e-12)


def integration_step(X: float, lambdas) -> float:
    return 0.1 / (X * max(abs(float(l)) for l in lambdas))

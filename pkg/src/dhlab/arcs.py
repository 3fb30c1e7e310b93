"""Arc partition of the alpha-line, region integrals of the circle-method integrand,
the direct quadruple-sum oracle, the main-term volume and level-set diagnostics.

The integrand is

    F(alpha) = S~_2(l1 a) S_2(l2 a) S_2(l3 a) S_k(l4 a) K_eta(a) e(-omega a).

Its Fourier transform is supported in a bounded band, so the trapezoid rule on
a uniform grid fine enough to avoid aliasing is exact for the truncated
integral up to endpoint effects; the refinement estimate compares step h
with step 2h.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .expsums import (
    AlphaGrid,
    TrigSum,
    integration_step,
    kernel_K,
    prime_power_sum,
    t_k_abs_bound,
    t_k_with_error,
    weighted_square_sum,
)
from .model import ConfigError, ProblemInstance, WindowParams
from .phases import dd_from_exact, product_trapezoid
from .primes import PrimeTables, build_tables
from .rational import RationalApproxWitness, best_rational_test
from .sieve import SieveWeightTable, build_weight_table, power_range

REGIONS = ("major", "minor", "trivial")

#: grid points evaluated per chunk
CHUNK = 1 << 20
#: phase-rotation steps between exact re-anchoring
ANCHOR = 512


@dataclass(frozen=True)
class ArcPartition:
    major_end: float
    R: float
    window: WindowParams

    def region_of(self, alpha) -> np.ndarray:
        """0 = major, 1 = minor, 2 = trivial, for each alpha."""
        a = np.abs(np.asarray(alpha, dtype=np.float64))
        return np.where(a <= self.major_end, 0, np.where(a <= self.R, 1, 2))

    def tag_of(self, alpha: float) -> str:
        return REGIONS[int(self.region_of(alpha))]

    def bounds(self, region: str) -> tuple[float, float]:
        """|alpha| range of a region (lo exclusive except for the major arc)."""
        if region == "major":
            return 0.0, self.major_end
        if region == "minor":
            return self.major_end, self.R
        if region == "trivial":
            return self.R, math.inf
        raise ValueError(f"unknown region {region!r}")


def partition(window: WindowParams) -> ArcPartition:
    if not window.major_end < window.R:
        raise ConfigError(f"empty minor arc: P/X={window.major_end} >= R={window.R}; use a larger q",
                          code="empty_minor_arc", X=window.X)
    return ArcPartition(major_end=window.major_end, R=window.R, window=window)


@dataclass
class IntegralReport:
    region: str
    value: complex
    quad_error: float
    truncation_bound: float
    grid: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"tag": self.region, "value_re": self.value.real, "value_im": self.value.imag,
                "err": self.quad_error, "tail": self.truncation_bound, "grid": self.grid}


# ---------------------------------------------------------------------------
# the integrand
# ---------------------------------------------------------------------------

class Integrand:
    """Holds the four exponential sums and evaluates F on uniform grids."""

    def __init__(self, instance: ProblemInstance, window: WindowParams,
                 tables: Optional[PrimeTables] = None,
                 weight_table: Optional[SieveWeightTable] = None):
        X, d, k = window.X, instance.delta, instance.k
        if tables is None:
            top = max(power_range(d * X, X, k)[1], math.isqrt(int(X)) + 1, 2)
            tables = build_tables(top, spf_limit=math.isqrt(int(X)) + 1)
        if weight_table is None:
            weight_table = build_weight_table(X, instance.delta_exact, tables)
        self.instance = instance
        self.window = window
        self.eta = window.eta
        self.sums = (
            weighted_square_sum(weight_table),
            prime_power_sum(2, X, d, tables),
            prime_power_sum(2, X, d, tables),
            prime_power_sum(k, X, d, tables),
        )
        self.lams = tuple(dd_from_exact(l) for l in instance.lambda_specs)
        self.omega_dd = dd_from_exact(instance.omega_exact)
        self._omega_sum = TrigSum(np.array([1.0]), np.array([1.0]), "phase")

    def packed(self):
        """Concatenated (freqs, weights, lam_hi, lam_lo, segment offsets) for the fused kernel."""
        if not hasattr(self, "_packed"):
            freqs = np.concatenate([s.freqs for s in self.sums])
            weights = np.concatenate([s.weights for s in self.sums])
            lhi = np.concatenate([np.full(len(s), l[0]) for s, l in zip(self.sums, self.lams)])
            llo = np.concatenate([np.full(len(s), l[1]) for s, l in zip(self.sums, self.lams)])
            seg = np.concatenate(([0], np.cumsum([len(s) for s in self.sums]))).astype(np.int64)
            self._packed = (freqs, weights, lhi, llo, seg)
        return self._packed

    @property
    def terms(self) -> int:
        return sum(len(s) for s in self.sums)

    @property
    def band(self) -> tuple[float, float]:
        """Support of the Fourier transform of F."""
        lo = hi = -float(self.instance.omega)
        for s, (l, _) in zip(self.sums, self.lams):
            v = l * s.freqs
            lo += float(v.min()) if len(v) else 0.0
            hi += float(v.max()) if len(v) else 0.0
        return lo - self.eta, hi + self.eta

    def __call__(self, alpha) -> np.ndarray:
        a = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
        out = np.ones(a.shape, dtype=np.complex128)
        for s, lam in zip(self.sums, self.lams):
            out *= s(a, lam)
        out *= self._omega_sum(a, (-self.omega_dd[0], -self.omega_dd[1]))
        out *= kernel_K(a, self.eta)
        return out

    def on_grid(self, alpha0: float, h: float, n: int) -> np.ndarray:
        out = np.ones(n, dtype=np.complex128)
        for s, lam in zip(self.sums, self.lams):
            out *= s.on_grid(alpha0, h, n, lam)
        out *= self._omega_sum.on_grid(alpha0, h, n, (-self.omega_dd[0], -self.omega_dd[1]))
        out *= kernel_K(alpha0 + h * np.arange(n), self.eta)
        return out

    # tail bounds -----------------------------------------------------------

    def sup_bound(self) -> float:
        return float(np.prod([s.abs_weight for s in self.sums]))

    def mean_square_constant(self) -> float:
        """min over pairings of sqrt(M_A M_B), M = unit-interval mean-square bound of a pair product."""
        if not hasattr(self, "_ms_const"):
            best = math.inf
            for (i, j), (a, b) in (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))):
                ma = _pair_sum(self.sums[i], self.lams[i][0], self.sums[j], self.lams[j][0]).mean_square_bound()
                mb = _pair_sum(self.sums[a], self.lams[a][0], self.sums[b], self.lams[b][0]).mean_square_bound()
                best = min(best, math.sqrt(ma * mb))
            self._ms_const = best
        return self._ms_const

    def tail_bound(self, A: float, *, mean_square: bool = True) -> float:
        """Proved bound on the integral of |F| over |alpha| > A.

        Sup form: sup|F| * 2/(pi^2 A).  Mean-square form: K <= (pi alpha)^-2
        on [n, n+1] and Cauchy-Schwarz on the two pair products give
        2 sqrt(M_A M_B) / (pi^2 (floor A - 1)).
        """
        if A <= 0:
            return math.inf
        sup = self.sup_bound() * 2.0 / (math.pi ** 2 * A)
        if not mean_square or A < 3:
            return sup
        ms = 2.0 * self.mean_square_constant() / (math.pi ** 2 * (math.floor(A) - 1))
        return min(sup, ms)

    def cutoff_for(self, target: float, A_max: float) -> float:
        """Smallest integer A <= A_max whose tail bound is <= target (A_max if none)."""
        sup_A = self.sup_bound() * 2.0 / (math.pi ** 2 * target) if target > 0 else math.inf
        ms_A = 2.0 * self.mean_square_constant() / (math.pi ** 2 * target) + 2 if target > 0 else math.inf
        return float(min(A_max, math.ceil(min(sup_A, ms_A))))


def _pair_sum(s1: TrigSum, l1: float, s2: TrigSum, l2: float) -> TrigSum:
    f = (l1 * s1.freqs)[:, None] + (l2 * s2.freqs)[None, :]
    w = s1.weights[:, None] * s2.weights[None, :]
    return TrigSum(f.ravel(), w.ravel(), "pair")


# ---------------------------------------------------------------------------
# region integrals
# ---------------------------------------------------------------------------

@dataclass
class _Accum:
    fine: np.ndarray
    coarse: np.ndarray
    abs_sum: float
    samples: list


def _index_cut(x: float, h: float) -> int:
    """Largest n with n*h <= x (as evaluated in floating point)."""
    if not math.isfinite(x):
        return 1 << 62
    n = int(math.floor(x / h))
    while (n + 1) * h <= x:
        n += 1
    while n * h > x:
        n -= 1
    return n


def _integrate_span(F: Integrand, part: ArcPartition, h: float, N: int, threads: int,
                    keep_every: int) -> _Accum:
    """Trapezoid sums over n in [-N, N] (N even), split by region, for steps h and 2h."""
    freqs, weights, lhi, llo, seg = F.packed()
    om_hi, om_lo = F.omega_dd
    major_n = _index_cut(part.major_end, h)
    minor_n = _index_cut(part.R, h)
    starts = list(range(-N, N + 1, CHUNK))

    def work(i0: int):
        i1 = min(i0 + CHUNK - 1, N)
        n_keep = (i1 - i0) // keep_every + 1
        samples = np.zeros((n_keep, 2))
        fine, coarse, abs_sum = product_trapezoid(i0, i1, N, h, major_n, minor_n, freqs, weights,
                                                  lhi, llo, seg, om_hi, om_lo, F.eta, ANCHOR,
                                                  keep_every, samples)
        return fine, coarse, abs_sum, samples

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, starts))
    else:
        parts = [work(i0) for i0 in starts]
    # fixed-order reduction
    fine = np.zeros(3, dtype=np.complex128)
    coarse = np.zeros(3, dtype=np.complex128)
    abs_sum = 0.0
    samples = []
    for f, c, a, s in parts:
        fine += f
        coarse += c
        abs_sum += a
        samples.append(s)
    return _Accum(fine, coarse, abs_sum, samples)


@dataclass
class RealLineIntegral:
    """All three region reports for one grid, plus the truncated-line total."""

    regions: dict
    total: IntegralReport
    A: float
    h: float
    samples: np.ndarray

    def __getitem__(self, region: str) -> IntegralReport:
        if region in ("real", "full"):
            return self.total
        return self.regions[region]


def integrate_all(instance: ProblemInstance, window: WindowParams, *,
                  grid: Optional[AlphaGrid] = None, A: Optional[float] = None,
                  tail_fraction: float = 0.01, max_points: int = 600_000_000,
                  tables: Optional[PrimeTables] = None,
                  weight_table: Optional[SieveWeightTable] = None,
                  integrand: Optional[Integrand] = None,
                  threads: int = 1, keep_samples: int = 20000,
                  check_tail: bool = True) -> RealLineIntegral:
    """Integrate F over [-A, A] on one uniform grid and split by region.

    Without an explicit A (or grid), A is the smallest integer whose proved
    tail bound is at most ``tail_fraction`` of |I(major arc)|.
    """
    F = integrand or Integrand(instance, window, tables, weight_table)
    part = partition(window)
    lams = instance.lambdas
    if grid is not None:
        if not grid.integration_grade(window.X, lams):
            raise ValueError(f"grid step {grid.step} is not integration-grade for X={window.X}")
        h = grid.step
        A = max(abs(grid.start), abs(grid.stop))
    else:
        h = integration_step(window.X, lams)
    lo, hi = F.band
    if 1.0 / (2 * h) <= max(abs(lo), abs(hi)):
        raise ValueError("grid step too coarse for alias-free trapezoid at step 2h")
    if A is None:
        Nm = 2 * math.ceil(part.major_end / h / 2)
        major = _integrate_span(F, part, h, Nm, threads, 1 << 30)
        ref = abs(major.fine[0])
        A = F.cutoff_for(tail_fraction * ref, max_points * h / 2)
    N = 2 * math.ceil(A / h / 2)
    A = N * h
    if 2 * N + 1 > max_points:
        raise ValueError(f"{2 * N + 1} grid points exceed the budget {max_points}")
    keep_every = max(1, (2 * N + 1) // max(keep_samples, 1))
    acc = _integrate_span(F, part, h, N, threads, keep_every)
    tail = F.tail_bound(A)
    meta = {"h": h, "A": A, "points": 2 * N + 1, "terms": F.terms,
            "sup_tail": F.tail_bound(A, mean_square=False), "tail": tail}
    # floating-point floor: rotation drift and summation rounding, relative to int |F|
    floor = acc.abs_sum * (F.terms * ANCHOR + 64) * np.finfo(float).eps
    meta["rounding_floor"] = floor
    regions = {}
    for r, tag in enumerate(REGIONS):
        lo_r, hi_r = part.bounds(tag)
        trunc = tail if hi_r > A else 0.0
        regions[tag] = IntegralReport(tag, complex(acc.fine[r]),
                                      float(abs(acc.fine[r] - acc.coarse[r])) + floor, trunc, dict(meta))
    total = IntegralReport("real", complex(acc.fine.sum()),
                           float(abs(acc.fine.sum() - acc.coarse.sum())) + floor, tail, dict(meta))
    if check_tail and tail > 0.1 * abs(total.value):
        raise ValueError(f"truncation bound {tail:.3g} exceeds 10% of |I| = {abs(total.value):.3g}; raise A")
    return RealLineIntegral(regions, total, A, h, np.concatenate(acc.samples))


def integrate_I(instance: ProblemInstance, window: WindowParams, region: str = "real",
                grid: Optional[AlphaGrid] = None, **kwargs) -> IntegralReport:
    """I(eta, omega, region) for region in {major, minor, trivial, real}."""
    if region not in REGIONS + ("real", "full"):
        raise ValueError(f"unknown region {region!r}")
    return integrate_all(instance, window, grid=grid, **kwargs)[region]


# ---------------------------------------------------------------------------
# direct quadruple sum (the Fourier-identity oracle)
# ---------------------------------------------------------------------------

def _pair_values(s1: TrigSum, l1: float, s2: TrigSum, l2: float, shift: float = 0.0):
    v = ((l1 * s1.freqs)[:, None] + (l2 * s2.freqs)[None, :]).ravel() - shift
    w = (s1.weights[:, None] * s2.weights[None, :]).ravel()
    return v, w


def direct_sum_I(instance: ProblemInstance, window: WindowParams, *,
                 tables: Optional[PrimeTables] = None,
                 weight_table: Optional[SieveWeightTable] = None,
                 integrand: Optional[Integrand] = None,
                 budget: int = 50_000_000, count_positive: bool = False):
    """Sum of rho(m1) log p2 log p3 log p4 Khat(l1 m1^2 + l2 p2^2 + l3 p3^2 + l4 p4^k - omega).

    With ``count_positive`` also returns the number of quadruples with
    rho(m1) = 1 and a positive Khat term.
    """
    if window.X > 1e5:
        raise ValueError(f"X={window.X} too large for direct enumeration (limit 1e5)")
    F = integrand or Integrand(instance, window, tables, weight_table)
    s = F.sums
    (l1, _), (l2, _), (l3, _), (l4, _) = F.lams
    n12, n34 = len(s[0]) * len(s[1]), len(s[2]) * len(s[3])
    if n12 + n34 > budget:
        raise ValueError(f"pair lists of size {n12 + n34} exceed the budget {budget}")
    eta = F.eta
    v12, w12 = _pair_values(s[0], l1, s[1], l2)
    one = (s[0].weights[:, None] == 1.0) & np.ones((1, len(s[1])), dtype=bool)
    one = one.ravel()
    v34, w34 = _pair_values(s[2], l3, s[3], l4, float(instance.omega))
    order = np.argsort(v34, kind="stable")
    v34, w34 = v34[order], w34[order]
    lo = np.searchsorted(v34, -v12 - eta, side="right")
    hi = np.searchsorted(v34, -v12 + eta, side="left")
    cnt = hi - lo
    total_pairs = int(cnt.sum())
    if total_pairs > budget:
        raise ValueError(f"{total_pairs} matching quadruples exceed the budget {budget}")
    rows = np.repeat(np.arange(len(v12)), cnt)
    offs = np.arange(total_pairs) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    cols = np.repeat(lo, cnt) + offs
    kh = np.maximum(0.0, eta - np.abs(v12[rows] + v34[cols]))
    terms = w12[rows] * w34[cols] * kh
    value = math.fsum(terms.tolist())
    if count_positive:
        n_pos = int(np.count_nonzero((kh > 0) & one[rows]))
        return value, n_pos
    return value


# ---------------------------------------------------------------------------
# pure T-product integrand and the main-term volume
# ---------------------------------------------------------------------------

def _t_values(alpha: np.ndarray, k: float, X: float, delta: float, lam: float) -> np.ndarray:
    return np.array([t_k_with_error(lam * a, k, X, delta, rtol=1e-9)[0] for a in alpha])


def t_product(alpha, instance: ProblemInstance, window: WindowParams) -> np.ndarray:
    """T_2(l1 a) T_2(l2 a) T_2(l3 a) T_k(l4 a) K_eta(a) e(-omega a)."""
    a = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
    X, d = window.X, instance.delta
    l1, l2, l3, l4 = instance.lambdas
    out = (_t_values(a, 2.0, X, d, l1) * _t_values(a, 2.0, X, d, l2)
           * _t_values(a, 2.0, X, d, l3) * _t_values(a, instance.k, X, d, l4))
    return out * kernel_K(a, window.eta) * np.exp(-2j * np.pi * ((instance.omega * a) % 1.0))


def t_product_tail_bound(alpha0: float, instance: ProblemInstance, window: WindowParams) -> float:
    """Proved bound on the integral of |T-product| over |alpha| > alpha0.

    Each |T| <= c_i/|alpha| and K <= (pi alpha)^-2, so the tail is at most
    2 prod(c_i) / (5 pi^2 alpha0^5).
    """
    X, d = window.X, instance.delta
    cs = []
    for lam, k in zip(instance.lambdas, (2.0, 2.0, 2.0, instance.k)):
        cs.append(float(t_k_abs_bound(1.0, k, X, d) ) / abs(lam))
    return 2.0 * float(np.prod(cs)) / (5.0 * math.pi ** 2 * alpha0 ** 5)


@dataclass
class TProductReport:
    major: complex
    outside: complex
    outside_abs: float
    outside_tail: float
    alpha_cut: float
    points: int

    @property
    def dominance_ratio(self) -> float:
        return self.major.real / (self.outside_abs + self.outside_tail)


def integrate_T_product(instance: ProblemInstance, window: WindowParams, *,
                        step: Optional[float] = None, tail_rel: float = 1e-3,
                        max_points: int = 400_000) -> TProductReport:
    """Integrals of the T-product over the major arc and over |alpha| > P/X.

    Uses H(-a) = conj H(a): both integrals are 2 Re of the half-line value.
    Beyond alpha_cut only the proved decay bound is used.
    """
    h = step or integration_step(window.X, instance.lambdas)
    m_end = window.major_end
    n_major = max(2, 2 * math.ceil(m_end / h / 2))
    hm = m_end / n_major
    am = hm * np.arange(n_major + 1)
    vm = t_product(am, instance, window)
    wm = np.full(n_major + 1, hm)
    wm[[0, -1]] = hm / 2
    major = 2.0 * float(np.real(np.sum(wm * vm)))
    # cut where the decay bound is negligible next to the major arc
    cut = m_end
    while t_product_tail_bound(cut, instance, window) > tail_rel * abs(major):
        cut *= 1.25
    n_out = max(2, 2 * math.ceil((cut - m_end) / h / 2))
    if n_out > max_points:
        raise ValueError(f"{n_out} points needed beyond the major arc (budget {max_points})")
    ho = (cut - m_end) / n_out
    ao = m_end + ho * np.arange(n_out + 1)
    vo = t_product(ao, instance, window)
    wo = np.full(n_out + 1, ho)
    wo[[0, -1]] = ho / 2
    outside = 2.0 * float(np.real(np.sum(wo * vo)))
    outside_abs = 2.0 * float(np.sum(wo * np.abs(vo)))
    tail = 2.0 * t_product_tail_bound(cut, instance, window)
    return TProductReport(complex(major), complex(outside), outside_abs, tail, cut,
                          n_major + n_out + 2)


@dataclass
class MainTermEstimate:
    value: float
    mc_error: float
    samples: int
    hit_fraction: float
    diagnostic: str = ""


def _inner_t4(c: np.ndarray, lam4: float, k: float, a4: float, b4: float, eta: float) -> np.ndarray:
    """Integral over t in [a4, b4] of max(0, eta - |c + lam4 t^k|), in closed form.

    With s = c + lam4 t^k, t(s) = ((s - c)/lam4)^(1/k); on each side of s = 0
    the weight is linear in s and one integration by parts leaves
    int t(s) ds = lam4 ((s - c)/lam4)^(1 + 1/k) / (1 + 1/k).
    """
    inv = 1.0 / k
    sa = c + lam4 * a4 ** k
    sb = c + lam4 * b4 ** k
    s_lo = np.minimum(sa, sb)
    s_hi = np.maximum(sa, sb)

    def t_of(s):
        return np.maximum((s - c) / lam4, 0.0) ** inv

    def big_t(s):
        return lam4 * np.maximum((s - c) / lam4, 0.0) ** (1 + inv) / (1 + inv)

    total = np.zeros_like(c)
    for sigma, lo_p, hi_p in ((-1.0, -eta, 0.0), (1.0, 0.0, eta)):
        s1 = np.clip(s_lo, lo_p, hi_p)
        s2 = np.clip(s_hi, lo_p, hi_p)
        # weight eta - |s| = eta + s on [-eta, 0] (sigma=-1), eta - s on [0, eta]
        g1 = eta - sigma * s1
        g2 = eta - sigma * s2
        piece = (g2 * t_of(s2) - g1 * t_of(s1)) + sigma * (big_t(s2) - big_t(s1))
        total += np.abs(np.where(s2 > s1, piece, 0.0))
    return total


def main_term_volume(instance: ProblemInstance, window: WindowParams, samples: int = 100_000,
                     *, seed: int = 0, eta: Optional[float] = None) -> MainTermEstimate:
    """Monte Carlo estimate of the 4-fold volume integral of max(0, eta - |form - omega|).

    t1, t2, t3 are sampled; the t4 integral is done exactly, which removes
    most of the variance.
    """
    if samples < 10_000:
        raise ValueError("main_term_volume needs at least 1e4 samples")
    X, d, k = window.X, instance.delta, instance.k
    eta = window.eta if eta is None else eta
    l1, l2, l3, l4 = instance.lambdas
    lo2, hi2 = math.sqrt(d * X), math.sqrt(X)
    a4, b4 = (d * X) ** (1 / k), X ** (1 / k)
    rng = np.random.default_rng(seed)
    vol3 = (hi2 - lo2) ** 3
    acc = []
    left = samples
    while left > 0:
        n = min(left, 1 << 20)
        t = rng.uniform(lo2, hi2, size=(n, 3))
        c = l1 * t[:, 0] ** 2 + l2 * t[:, 1] ** 2 + l3 * t[:, 2] ** 2 - instance.omega
        acc.append(_inner_t4(c, l4, k, a4, b4, eta))
        left -= n
    vals = np.concatenate(acc) * vol3
    hit = float(np.mean(vals > 0))
    mean = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(samples))
    diag = "" if hit > 0 else "no sample reached the acceptance region; value is a lower bound"
    return MainTermEstimate(mean, err, samples, hit, diag)


# ---------------------------------------------------------------------------
# minor-arc level sets
# ---------------------------------------------------------------------------

@dataclass
class LevelSetHit:
    alpha: float
    s1: float
    s2: float
    witness1: Optional[RationalApproxWitness]
    witness2: Optional[RationalApproxWitness]


@dataclass
class LevelSetReport:
    Z1: float
    Z2: float
    y: float
    measure: float
    lemma_bound: float
    samples: int
    hits: list
    fitted_constant: float
    band_in_minor_arc: bool

    @property
    def ratio(self) -> float:
        return self.measure / self.lemma_bound

    @property
    def witnesses_ok(self) -> bool:
        return all(h.witness1 is not None and h.witness2 is not None
                   and h.witness1.a * h.witness2.a != 0 for h in self.hits)

    def to_record(self) -> dict:
        return {"Z1": self.Z1, "Z2": self.Z2, "y": self.y, "measure": self.measure,
                "lemma_bound": self.lemma_bound, "ratio": self.ratio, "samples": self.samples,
                "hits": len(self.hits), "witnesses_ok": self.witnesses_ok,
                "band_in_minor_arc": self.band_in_minor_arc}


def level_set_bound(window: WindowParams, Z1: float, Z2: float, y: float, eps: float) -> float:
    X, u = window.X, window.u
    return y * X ** (2 + 8 * u + 3 * eps) * Z1 ** -4 * Z2 ** -4


def level_set_diagnostic(instance: ProblemInstance, window: WindowParams, Z1: float, Z2: float,
                         sample_count: int, *, y: Optional[float] = None, seed: int = 0,
                         weight_table: Optional[SieveWeightTable] = None,
                         enforce_window: bool = False, C: float = 1.0,
                         check_floor: bool = True) -> LevelSetReport:
    """Sampled measure of {y < |alpha| <= 2y : Z_i < |S~_2(l_i alpha)| <= 2 Z_i} against the lemma bound.

    With ``enforce_window`` the dyadic band must lie inside the minor arc
    [P/X, R]; otherwise only y >= P/X is required.
    """
    if sample_count < 1000:
        raise ValueError("level_set_diagnostic needs at least 1e3 samples")
    X, eps, u = window.X, instance.epsilon, window.u
    floor_z = X ** (0.5 - u + eps)
    if check_floor and min(Z1, Z2) < floor_z * (1 - 1e-12):
        raise ValueError(f"Z must be >= X^(1/2-u+eps) = {floor_z}")
    part = partition(window)
    y = 10 * part.major_end if y is None else y
    if y < part.major_end * (1 - 1e-12):
        raise ValueError(f"y={y} below P/X={part.major_end}")
    inside = 2 * y <= part.R
    if enforce_window and not inside:
        raise ValueError(f"band [{y}, {2 * y}] leaves the minor arc (R={part.R})")
    if weight_table is None:
        weight_table = build_weight_table(X, instance.delta_exact)
    S = weighted_square_sum(weight_table)
    lam1, lam2 = (dd_from_exact(l) for l in instance.lambda_specs[:2])
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(y, 2 * y, size=sample_count)
    v1 = np.abs(S(alpha, lam1))
    v2 = np.abs(S(alpha, lam2))
    hit = (v1 > Z1) & (v1 <= 2 * Z1) & (v2 > Z2) & (v2 <= 2 * Z2)
    # |S~_2| is even in alpha: the band on both signs has length 2y
    measure = float(hit.mean()) * 2 * y
    bound = level_set_bound(window, Z1, Z2, y, eps)
    hits = []
    l1, l2 = instance.lambdas[:2]
    for a, s1, s2 in zip(alpha[hit], v1[hit], v2[hit]):
        w1 = best_rational_test(l1 * a, Z1, X, eps=eps, C=C, u=u, check_window=False)
        w2 = best_rational_test(l2 * a, Z2, X, eps=eps, C=C, u=u, check_window=False)
        hits.append(LevelSetHit(float(a), float(s1), float(s2), w1, w2))
    return LevelSetReport(Z1, Z2, y, measure, bound, sample_count, hits,
                          measure / bound, inside)

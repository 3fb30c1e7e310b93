"""Search for prime quadruples with |l1 p1^2 + l2 p2^2 + l3 p3^2 + l4 p4^k - omega| <= (max p)^(-w+eps).

Meet in the middle: the (p1, p2) values are sorted once, the (p3, p4) values
are streamed in p4-chunks and matched by binary search against a tolerance
eta_max valid for every quadruple of the window; each candidate is then
checked against its own eta.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Optional

import mpmath
import numpy as np

from .model import ApproxDecimal, ProblemInstance, Surd, real_bounds
from .primes import PrimeTables, build_tables
from .sieve import power_range

#: candidates whose residual is this close to eta are re-decided with mpmath
AMBIGUITY = 1e-6
#: mpmath working precision (decimal digits) for the extended-precision check
EXTENDED_DPS = 40


@dataclass(frozen=True)
class SolutionRecord:
    p1: int
    p2: int
    p3: int
    p4: int
    form_value: float
    eta_used: float
    residual: float

    def to_record(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "p3": self.p3, "p4": self.p4,
                "value": self.form_value, "residual": self.residual, "eta": self.eta_used}

    @property
    def key(self) -> tuple[int, int, int, int]:
        return (self.p4, self.p3, self.p2, self.p1)


@dataclass
class SearchSummary:
    X: float
    count: int
    predicted_order: float
    params: dict
    stats: dict = field(default_factory=dict)
    complete: bool = True
    status: str = "ok"
    diagnostic: str = ""

    def to_record(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# window and exact checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadrupleWindow:
    """Primes with delta X < p^2 < X (p1, p2, p3) and delta X < p4^k < X."""

    X: float
    sq: np.ndarray
    p4: np.ndarray

    @property
    def empty(self) -> bool:
        return len(self.sq) == 0 or len(self.p4) == 0


def quadruple_window(instance: ProblemInstance, X: float,
                     tables: Optional[PrimeTables] = None) -> QuadrupleWindow:
    d, k = instance.delta, instance.k
    lo2, hi2 = power_range(d * X, X, 2, closed=False)
    lo4, hi4 = power_range(d * X, X, k, closed=False)
    top = max(hi2, hi4, 2)
    if tables is None or tables.limit < top:
        tables = build_tables(top, spf_limit=min(top, 10 ** 6))
    return QuadrupleWindow(float(X), tables.primes_between(lo2, hi2), tables.primes_between(lo4, hi4))


def _mp(x) -> mpmath.mpf:
    if isinstance(x, (Surd, ApproxDecimal)):
        lo, hi = real_bounds(x, 200)
        m = (lo + hi) / 2
        return mpmath.mpf(m.numerator) / m.denominator
    from fractions import Fraction
    f = Fraction(x)
    return mpmath.mpf(f.numerator) / f.denominator


def exact_check(instance: ProblemInstance, p1: int, p2: int, p3: int, p4: int):
    """(form value, eta, residual <= eta) recomputed with 40-digit arithmetic."""
    with mpmath.workdps(EXTENDED_DPS):
        l1, l2, l3, l4 = (_mp(l) for l in instance.lambda_specs)
        k = _mp(instance.k_exact)
        v = l1 * p1 ** 2 + l2 * p2 ** 2 + l3 * p3 ** 2 + l4 * mpmath.power(p4, k) - _mp(instance.omega_exact)
        expo = -(7 - 6 * k) / (14 * k) + _mp(instance.epsilon_exact)
        eta = mpmath.power(max(p1, p2, p3, p4), expo)
        return v, eta, abs(v) <= eta


def exact_check_many(instance: ProblemInstance, records) -> list:
    """Records whose residual fails the 40-digit recomputation (empty when all are sound)."""
    bad = []
    with mpmath.workdps(EXTENDED_DPS):
        l1, l2, l3, l4 = (_mp(l) for l in instance.lambda_specs)
        k = _mp(instance.k_exact)
        om = _mp(instance.omega_exact)
        expo = -(7 - 6 * k) / (14 * k) + _mp(instance.epsilon_exact)
        pk, eta = {}, {}
        for r in records:
            if r.p4 not in pk:
                pk[r.p4] = mpmath.power(r.p4, k)
            mx = max(r.p1, r.p2, r.p3, r.p4)
            if mx not in eta:
                eta[mx] = mpmath.power(mx, expo)
            v = l1 * r.p1 ** 2 + l2 * r.p2 ** 2 + l3 * r.p3 ** 2 + l4 * pk[r.p4] - om
            if abs(v) > eta[mx]:
                bad.append(r)
    return bad


def predicted_count(instance: ProblemInstance, X: float) -> float:
    """eta X^(1/k + 1/2) / (log X)^4 with eta = X^(-w+eps): an order of magnitude only."""
    eta = X ** instance.eta_exponent()
    return eta * X ** (1.0 / instance.k + 0.5) / math.log(X) ** 4


# ---------------------------------------------------------------------------
# meet in the middle
# ---------------------------------------------------------------------------

def _decide(instance, p1, p2, p3, p4, value, eta_exp) -> Optional[SolutionRecord]:
    mx = max(p1, p2, p3, p4)
    eta = float(mx) ** eta_exp
    r = abs(value)
    if abs(r - eta) <= AMBIGUITY:
        v, e, ok = exact_check(instance, p1, p2, p3, p4)
        if not ok:
            return None
        return SolutionRecord(int(p1), int(p2), int(p3), int(p4), float(v), float(e), float(abs(v)))
    if r <= eta:
        return SolutionRecord(int(p1), int(p2), int(p3), int(p4), float(value), eta, r)
    return None


def enumerate_solutions(instance: ProblemInstance, X: float, budget: int = 10 ** 10, *,
                        tables: Optional[PrimeTables] = None,
                        chunk_pairs: int = 1 << 22) -> tuple[list[SolutionRecord], SearchSummary]:
    """All quadruples in the window satisfying the per-quadruple inequality.

    ``budget`` caps the number of pair values formed (both sides); when it
    runs out the summary is flagged incomplete and holds what was found.
    """
    if X > 1e8:
        raise ValueError(f"X={X} above the supported 1e8")
    win = quadruple_window(instance, X, tables)
    params = {"delta": str(instance.delta_exact), "epsilon": str(instance.epsilon_exact),
              "k": str(instance.k_exact), "lambda": instance.to_record()["lambda"],
              "omega": instance.to_record()["omega"]}
    pred = predicted_count(instance, X)
    stats = {"n_sq": int(len(win.sq)), "n_p4": int(len(win.p4)), "pairs": 0, "candidates": 0}
    if win.empty:
        return [], SearchSummary(X, 0, pred, params, stats, True, "empty",
                                 "window contains no admissible prime squares or k-th powers")
    l1, l2, l3, l4 = instance.lambdas
    om = instance.omega
    k = instance.k
    eta_exp = instance.eta_exponent()
    sq = win.sq
    sqf = sq.astype(np.float64) ** 2
    max_lo = max(int(sq[0]), int(win.p4[0]))
    max_hi = max(int(sq[-1]), int(win.p4[-1]))
    eta_max = float(max_lo) ** eta_exp
    eta_min = float(max_hi) ** eta_exp
    stats.update(eta_max=eta_max, eta_min=eta_min)
    n12 = len(sq) ** 2
    if n12 > budget:
        return [], SearchSummary(X, 0, pred, params, stats, False, "incomplete", "budget exceeded")
    used = n12
    v12 = (l1 * sqf[:, None] + l2 * sqf[None, :]).ravel()
    order = np.argsort(v12, kind="stable")
    v12s = v12[order]
    i1s, i2s = np.divmod(order, len(sq))
    # float slack for the coarse window: values are O(X), rounding ~ X * 1e-15
    slack = eta_max + 64 * np.finfo(float).eps * (abs(l1) + abs(l2) + abs(l3) + abs(l4)) * X + 1e-9
    p4f = win.p4.astype(np.float64) ** k
    records: list[SolutionRecord] = []
    complete = True
    step = max(1, chunk_pairs // len(sq))
    for s in range(0, len(win.p4), step):
        p4c = win.p4[s:s + step]
        n34 = len(p4c) * len(sq)
        if used + n34 > budget:
            complete = False
            break
        used += n34
        v34 = (l4 * p4f[s:s + step][:, None] + l3 * sqf[None, :]).ravel() - om
        target = -v34
        lo = np.searchsorted(v12s, target - slack, side="left")
        hi = np.searchsorted(v12s, target + slack, side="right")
        cnt = hi - lo
        tot = int(cnt.sum())
        if tot == 0:
            continue
        stats["candidates"] += tot
        rows = np.repeat(np.arange(len(v34)), cnt)
        offs = np.arange(tot) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        cols = np.repeat(lo, cnt) + offs
        vals = v12s[cols] + v34[rows]
        i4, i3 = np.divmod(rows, len(sq))
        P1 = sq[i1s[cols]]
        P2 = sq[i2s[cols]]
        P3 = sq[i3]
        P4 = p4c[i4]
        mx = np.maximum(np.maximum(P1, P2), np.maximum(P3, P4)).astype(np.float64)
        eta = mx ** eta_exp
        near = np.abs(vals) <= eta + AMBIGUITY
        for a, b, c, d, v in zip(P1[near], P2[near], P3[near], P4[near], vals[near]):
            rec = _decide(instance, int(a), int(b), int(c), int(d), float(v), eta_exp)
            if rec is not None:
                records.append(rec)
    stats["pairs"] = int(used)
    records.sort(key=lambda r: r.key)
    status = "ok" if complete else "incomplete"
    return records, SearchSummary(X, len(records), pred, params, stats, complete, status,
                                  "" if complete else "budget exceeded")


def exhaustive_solutions(instance: ProblemInstance, X: float,
                         tables: Optional[PrimeTables] = None, limit: int = 10 ** 9) -> list[SolutionRecord]:
    """Brute force over every quadruple of the window (the oracle for small X)."""
    win = quadruple_window(instance, X, tables)
    if win.empty:
        return []
    n = len(win.sq) ** 3 * len(win.p4)
    if n > limit:
        raise ValueError(f"{n} quadruples exceed the exhaustive limit {limit}")
    l1, l2, l3, l4 = instance.lambdas
    eta_exp = instance.eta_exponent()
    sqf = win.sq.astype(np.float64) ** 2
    out = []
    for p4 in win.p4:
        base = l4 * float(p4) ** instance.k - instance.omega
        v = (base + l1 * sqf[:, None, None] + l2 * sqf[None, :, None] + l3 * sqf[None, None, :])
        mx = np.maximum(np.maximum.outer(np.maximum.outer(win.sq, win.sq), win.sq), p4).astype(np.float64)
        eta = mx ** eta_exp
        for i, j, m in zip(*np.nonzero(np.abs(v) <= eta + AMBIGUITY)):
            rec = _decide(instance, int(win.sq[i]), int(win.sq[j]), int(win.sq[m]), int(p4),
                          float(v[i, j, m]), eta_exp)
            if rec is not None:
                out.append(rec)
    out.sort(key=lambda r: r.key)
    return out


def rejected_sample(instance: ProblemInstance, X: float, count: int, seed: int = 0,
                    tables: Optional[PrimeTables] = None) -> list[tuple[int, int, int, int, float]]:
    """Random quadruples not emitted by the search, with their |form| (completeness spot-check)."""
    win = quadruple_window(instance, X, tables)
    rng = np.random.default_rng(seed)
    l1, l2, l3, l4 = instance.lambdas
    out = []
    for _ in range(count):
        a, b, c = (int(x) for x in rng.choice(win.sq, 3))
        d = int(rng.choice(win.p4))
        v = l1 * a * a + l2 * b * b + l3 * c * c + l4 * float(d) ** instance.k - instance.omega
        out.append((a, b, c, d, abs(v)))
    return out


def window_sweep(instance: ProblemInstance, windows, budget: int = 10 ** 10, *,
                 floor: float = 1e4, tables: Optional[PrimeTables] = None) -> list[SearchSummary]:
    """Search each window; X below ``floor`` or with an empty prime window is skipped.

    A window at or above the floor with no solution gets status "failed".
    """
    out = []
    for w in windows:
        X = getattr(w, "X", w)
        if X < floor:
            out.append(SearchSummary(X, 0, predicted_count(instance, X) if X > 1 else 0.0, {}, {},
                                     True, "skipped", f"X={X:.4g} below the floor {floor:g}"))
            continue
        if budget <= 0:
            out.append(SearchSummary(X, 0, predicted_count(instance, X), {}, {}, False,
                                     "incomplete", "budget exhausted"))
            continue
        _, summ = enumerate_solutions(instance, X, budget, tables=tables)
        if summ.status == "empty":
            summ.status = "skipped"
        elif summ.complete and summ.count == 0:
            summ.status = "failed"
            summ.diagnostic = f"no solution in window X={X:.6g}"
        out.append(summ)
    return out


def trend_nondecreasing(summaries) -> bool:
    counts = [s.count for s in summaries if s.status == "ok"]
    return all(a <= b for a, b in zip(counts, counts[1:]))

"""Self-checks shared by the ``verify`` command and the acceptance suite.

Each check returns a CheckResult; scales are parameters so the command can
run quick versions while the acceptance suite runs the full ones.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from .arcs import Integrand, direct_sum_I, integrate_all, level_set_diagnostic, partition
from .expsums import integer_power_sum, kernel_K, kernel_integral, t_k_with_error
from .lp import binding_analysis, paper_program, solve
from .model import ProblemInstance, default_instance, parse_number, real_bounds, window_at
from .primes import build_tables, selberg_integral
from .rational import continued_fraction, plan_windows
from .search import enumerate_solutions, exact_check, exhaustive_solutions, trend_nondecreasing
from .sieve import build_weight_table


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_record(self) -> dict:
        return {"check": self.name, "passed": bool(self.passed), "seconds": round(self.seconds, 3),
                "detail": _jsonable(self.detail)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def timed(name: str, fn: Callable[[], tuple[bool, dict]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


# 1 -------------------------------------------------------------------------

def lp_reproduction() -> tuple[bool, dict]:
    prog = paper_program()
    sol = solve(prog)
    bind = binding_analysis(prog, sol)
    w_k = sol.w_at_k(Fraction(21, 20))
    k = Fraction(11, 10)
    ok = (sol.u_star == Fraction(1, 14)
          and sol.w_of_x.coef == Fraction(1, 2) and sol.w_of_x.const == Fraction(-3, 7)
          and sol.k_interval == (Fraction(1), Fraction(7, 6)) and sol.x_open == (True, True)
          and sol.w_at_k(k) == (7 - 6 * k) / (14 * k)
          and w_k == Fraction(1, 21)
          and "minor_arc" in bind.binding and bind.slack["minor_arc_2"] == Fraction(1, 28))
    return ok, {**sol.to_record(), "w(21/20)": w_k, "slack_minor_arc_2": bind.slack["minor_arc_2"]}


# 2 -------------------------------------------------------------------------

def sieve_lower_bound(X: float, delta=Fraction(1, 100)) -> tuple[bool, dict]:
    tab = build_weight_table(X, delta)
    m = tab.m
    limit = int(m[-1])
    tables = build_tables(max(limit, 2), spf_limit=2)
    is_p = np.zeros(len(m), dtype=bool)
    ps = tables.primes_between(int(m[0]), limit)
    is_p[ps - tab.m_lo] = True
    ok_upper = bool(np.all(tab.rho <= is_p.astype(np.int64)))
    ok_primes = bool(np.all(tab.rho[is_p] == 1))
    total = int(tab.rho.sum())
    return ok_upper and ok_primes and total > 0, {
        "X": X, "m_range": [tab.m_lo, tab.m_hi], "rho_le_prime": ok_upper,
        "rho_one_on_primes": ok_primes, "sum_rho": total, "min_rho": int(tab.rho.min()),
        "ell_hat": tab.ell_hat}


# 3 -------------------------------------------------------------------------

def parseval_instance() -> ProblemInstance:
    return default_instance(k="11/10", delta="1/10", omega="0")


def parseval_oracle(X: float, *, eta: float = 1.0, tail_fraction: float = 0.01,
                    max_rel: float = 0.05, instance: Optional[ProblemInstance] = None) -> tuple[bool, dict]:
    inst = instance or parseval_instance()
    w = window_at(inst, X, eta=eta)
    F = Integrand(inst, w)
    direct = direct_sum_I(inst, w, integrand=F)
    res = integrate_all(inst, w, integrand=F, tail_fraction=tail_fraction)
    tot = res.total
    diff = abs(tot.value - direct)
    bound = tot.quad_error + tot.truncation_bound
    parts = sum(res[r].value for r in ("major", "minor", "trivial"))
    additive = abs(parts - tot.value) <= sum(res[r].quad_error for r in ("major", "minor", "trivial")) + 1e-9
    ok = diff <= bound and bound <= max_rel * abs(direct) and abs(tot.value.imag) <= tot.quad_error and additive
    return ok, {"X": X, "direct": direct, "integral": tot.value, "diff": diff, "quad_error": tot.quad_error,
                "truncation_bound": tot.truncation_bound, "rel_bound": bound / abs(direct),
                "A": res.A, "points": tot.grid["points"],
                "regions": {r: res[r].value for r in ("major", "minor", "trivial")},
                "additive": additive}


# 4 -------------------------------------------------------------------------

def kernel_identities(eta: float = 1.0) -> tuple[bool, dict]:
    quad, tail = kernel_integral(eta)
    rel = abs(quad - eta) / eta
    ok_int = rel + tail / eta <= 1e-6
    a = np.geomspace(1e-8, 1e8, 10_000)
    a = np.concatenate((-a[::-1], a))
    kv = kernel_K(a, eta)
    ok_bound = bool(np.all(kv <= np.minimum(eta * eta, (np.pi * a) ** -2.0)))
    ok_zero = kernel_K(0.0, eta) == eta * eta
    return ok_int and ok_bound and ok_zero, {"eta": eta, "quadrature": quad, "tail_bound": tail,
                                              "rel_error": rel, "pointwise_bound": ok_bound, "K0": kernel_K(0.0, eta)}


# 5 -------------------------------------------------------------------------

def euler_profile(X: float, k: float, delta: float = 0.01, n: int = 1000) -> tuple[float, float]:
    """sup |T_k - U_k| / (1 + |alpha| X) on a fixed design in beta = alpha X, and its argmax beta.

    Points: 600 uniform in (0, 3] (where boundary terms dominate) and 400
    logarithmic in [3, X/2].
    """
    n_lin = int(0.6 * n)
    beta = np.concatenate([np.linspace(0.0, 3.0, n_lin + 1)[1:], np.geomspace(3.0, 0.5 * X, n - n_lin)])
    al = beta / X
    U = integer_power_sum(k, X, delta)(al)
    T = np.array([t_k_with_error(a, k, X, delta)[0] for a in al])
    r = np.abs(T - U) / (1.0 + beta)
    i = int(np.argmax(r))
    return float(r[i]), float(beta[i])


def euler_stability(ks: Sequence[float] = (1.05, 1.1), X_fit: float = 1e4,
                    Xs: Sequence[float] = (1e5, 1e6), factor: float = 2.0) -> tuple[bool, dict]:
    out, ok = {}, True
    for k in ks:
        c_fit, b_fit = euler_profile(X_fit, k)
        rows = {"fit": {"X": X_fit, "sup": c_fit, "beta": b_fit}}
        for X in Xs:
            c, b = euler_profile(X, k)
            ratio = c / c_fit
            good = 1.0 / factor <= ratio <= factor
            ok &= good
            rows[f"{X:g}"] = {"sup": c, "beta": b, "ratio": ratio, "within": good}
        out[str(k)] = rows
    return ok, out


def euler_bound(ks: Sequence[float] = (1.05, 1.1), Xs: Sequence[float] = (1e4, 1e5),
                delta: float = 0.01) -> tuple[bool, dict]:
    """|T_k - U_k| <= 1 + pi |alpha| X (1 - delta): the explicit Euler-summation constant."""
    out, ok = {}, True
    for k in ks:
        for X in Xs:
            c, b = euler_profile(X, k, delta)
            lim = max(1.0, math.pi * (1 - delta))
            out[f"{k}@{X:g}"] = {"sup": c, "limit": lim}
            ok &= c <= lim
    return ok, out


# 6 -------------------------------------------------------------------------

def legendre_check(x, q_max: int = 10_000, dps: int = 60) -> tuple[bool, dict]:
    """Each convergent a/q (q <= q_max) beats every q' < q: |q x - a| < min_a' |q' x - a'|."""
    convs = [c for c in continued_fraction(x, 60) if c.q <= q_max]
    with mpmath.workdps(dps):
        lo, hi = real_bounds(x, dps * 4)
        xv = (mpmath.mpf(lo.numerator) / lo.denominator + mpmath.mpf(hi.numerator) / hi.denominator) / 2
        bad = []
        for c in convs:
            d = abs(c.q * xv - c.a)
            for qp in range(1, c.q):
                ap = mpmath.nint(qp * xv)
                if not d < abs(qp * xv - ap):
                    bad.append((c.q, qp))
                    break
        recur = all(abs(b.a * a.q - a.a * b.q) == 1 for a, b in zip(convs, convs[1:]))
    return not bad and recur, {"convergents": len(convs), "violations": bad[:5], "recurrence": recur}


def convergents_and_windows(q_max: int = 10_000) -> tuple[bool, dict]:
    sqrt2 = parse_number("sqrt(2)")
    dens = [c.q for c in continued_fraction(sqrt2, 6)]
    ok_dens = dens == [1, 2, 5, 12, 29, 70]
    ok_leg, leg = legendre_check(sqrt2, q_max)
    inst = default_instance()
    wins = plan_windows(inst, 6)
    exact = (Fraction(7, 3) * (1 - 8 * Fraction(1, 14))) == 1
    worst = max(abs(w.q - w.X ** (1 - 8 / 14)) / w.q for w in wins)
    ok = ok_dens and ok_leg and exact and worst < 1e-12
    return ok, {"denominators": dens, "legendre": leg, "exponent_identity": exact,
                "coupling_rel_defect": worst, "window_q": [w.q for w in wins]}


# 7 -------------------------------------------------------------------------

def search_oracle(X: float = 1e4, instance: Optional[ProblemInstance] = None) -> tuple[bool, dict]:
    inst = instance or default_instance()
    recs, summ = enumerate_solutions(inst, X)
    oracle = exhaustive_solutions(inst, X)
    same = [r.key for r in recs] == [r.key for r in oracle]
    sound = all(bool(exact_check(inst, r.p1, r.p2, r.p3, r.p4)[2]) for r in recs)
    return same and sound, {"X": X, "count": summ.count, "oracle_count": len(oracle),
                            "identical": same, "sound": sound}


def search_trend(Xs: Sequence[float] = (1e5, 1e6, 1e7),
                 instance: Optional[ProblemInstance] = None) -> tuple[bool, dict]:
    inst = instance or default_instance()
    summaries = []
    for X in Xs:
        _, s = enumerate_solutions(inst, X)
        summaries.append(s)
    counts = {f"{s.X:g}": s.count for s in summaries}
    at_1e6 = next((s.count for s in summaries if s.X == 1e6), None)
    ok = trend_nondecreasing(summaries) and all(s.complete for s in summaries) \
        and (at_1e6 is None or at_1e6 >= 1)
    return ok, {"counts": counts, "predicted": {f"{s.X:g}": s.predicted_order for s in summaries}}


# 8 -------------------------------------------------------------------------

def minor_arc_diagnostics(X: float = 1e6, bands: int = 3, samples: int = 20_000,
                          factor: float = 10.0, seed: int = 0) -> tuple[bool, dict]:
    inst = default_instance()
    w = window_at(inst, X)
    eps = inst.epsilon
    Z = X ** (0.5 - 1 / 14 + 2 * eps)
    table = build_weight_table(X, inst.delta_exact)
    part = partition(w)
    rows, ok = [], True
    for b in range(bands):
        y = 10 * part.major_end * 2 ** b
        rep = level_set_diagnostic(inst, w, Z, Z, samples, y=y, seed=seed + b, weight_table=table)
        good = rep.measure <= factor * rep.lemma_bound and rep.witnesses_ok
        ok &= good
        rows.append({**rep.to_record(), "passed": good})
    return ok, {"X": X, "Z": Z, "sup_abs_S2": float(np.abs(table.rho).sum()), "bands": rows}


# 9 -------------------------------------------------------------------------

def selberg_property(ks: Sequence[float] = (1.05, 1.1), X_lo: float = 1e4, X_hi: float = 1e6,
                     factor: float = 2.0) -> tuple[bool, dict]:
    top = int((2 * X_hi + X_hi ** 0.9) ** (1 / min(ks))) + 10
    tables = build_tables(top, spf_limit=2)
    out, ok = {}, True
    for k in ks:
        norm = [selberg_integral(X, X ** 0.9, k, tables) / (X ** 1.8 * X ** (2 / k - 1)) for X in (X_lo, X_hi)]
        good = norm[1] <= factor * norm[0]
        ok &= good
        out[str(k)] = {"normalised": norm, "ratio": norm[1] / norm[0], "passed": good}
    return ok, out


def quick_suite(instance: Optional[ProblemInstance] = None) -> list[CheckResult]:
    """The ``verify`` pipeline at desk-friendly scales."""
    inst = instance or default_instance()
    return [
        timed("sieve_weight", lambda: sieve_lower_bound(1e6, inst.delta_exact)),
        timed("kernel_plancherel", lambda: kernel_identities(1.0)),
        timed("parseval_oracle", lambda: parseval_oracle(400.0)),
        timed("tk_uk_bound", lambda: euler_bound((inst.k,), (1e4, 1e5), inst.delta)),
        timed("lp_reproduction", lp_reproduction),
        timed("cf_legendre", lambda: convergents_and_windows(10_000)),
        timed("search_oracle", lambda: search_oracle(1e4, inst)),
    ]

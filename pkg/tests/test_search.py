from __future__ import annotations

import math

import mpmath
import pytest

from dhlab.model import default_instance, window_at
from dhlab.search import (
    enumerate_solutions,
    exact_check,
    exhaustive_solutions,
    predicted_count,
    quadruple_window,
    rejected_sample,
    trend_nondecreasing,
    window_sweep,
)


def test_planted_solution():
    p = 83  # smallest prime with both p^2 and p^(21/20) in (100, 10^4)
    with mpmath.workdps(60):
        om = mpmath.sqrt(2) * p * p - mpmath.power(p, mpmath.mpf(21) / 20)
        text = mpmath.nstr(om, 45)
    inst = default_instance(omega=text)
    win = quadruple_window(inst, 1e4)
    assert p in win.sq and p in win.p4
    recs, summ = enumerate_solutions(inst, 1e4)
    hit = [r for r in recs if (r.p1, r.p2, r.p3, r.p4) == (p, p, p, p)]
    assert len(hit) == 1 and hit[0].residual < 1e-9
    assert summ.complete


def test_matches_exhaustive_1e4():
    inst = default_instance()
    recs, summ = enumerate_solutions(inst, 1e4)
    oracle = exhaustive_solutions(inst, 1e4)
    assert [r.key for r in recs] == [r.key for r in oracle]
    assert summ.count == 673


def test_soundness_extended_precision():
    inst = default_instance()
    recs, _ = enumerate_solutions(inst, 1e4)
    expo = -(7 - 6 * mpmath.mpf(21) / 20) / (14 * mpmath.mpf(21) / 20) + mpmath.mpf(1) / 1000
    with mpmath.workdps(40):
        s2 = mpmath.sqrt(2)
        for r in recs:
            v = r.p1 ** 2 + s2 * r.p2 ** 2 - r.p3 ** 2 - mpmath.power(r.p4, mpmath.mpf(21) / 20)
            assert abs(v) <= mpmath.power(max(r.p1, r.p2, r.p3, r.p4), expo)
            assert bool(exact_check(inst, r.p1, r.p2, r.p3, r.p4)[2])


def test_rejected_quadruples_fail_inequality():
    inst = default_instance()
    recs, _ = enumerate_solutions(inst, 1e4)
    found = {(r.p1, r.p2, r.p3, r.p4) for r in recs}
    for a, b, c, d, v in rejected_sample(inst, 1e4, 500, seed=3):
        if (a, b, c, d) not in found:
            assert v > max(a, b, c, d) ** inst.eta_exponent() * (1 - 1e-9)


def test_empty_window():
    inst = default_instance(delta="1/5")
    # (0.7, 3.5) holds no prime square
    recs, summ = enumerate_solutions(inst, 3.5)
    assert recs == [] and summ.count == 0 and summ.status == "empty"


def test_budget_zero():
    inst = default_instance()
    _, summ = enumerate_solutions(inst, 1e4, budget=0)
    assert not summ.complete and summ.status == "incomplete"
    out = window_sweep(inst, [1e5, 1e6], budget=0)
    assert all(s.status == "incomplete" for s in out)


def test_prediction_doubling():
    inst = default_instance()
    X = 1e6
    ratio = predicted_count(inst, 2 * X) / predicted_count(inst, X)
    expect = 2 ** (1 / inst.k + 0.5) * 2 ** inst.eta_exponent() * (math.log(X) / math.log(2 * X)) ** 4
    assert ratio == pytest.approx(expect, rel=1e-12)


def test_prediction_near_seven_sixths():
    inst = default_instance(k="1166/1000", epsilon="1/1000000")
    assert abs(inst.eta_exponent()) < 1e-3
    X = 1e8
    base = X ** (1 / inst.k + 0.5) / math.log(X) ** 4
    assert predicted_count(inst, X) == pytest.approx(base, rel=0.02)


def test_prediction_order_1e6():
    inst = default_instance()
    _, summ = enumerate_solutions(inst, 1e6)
    assert summ.count >= 1
    assert summ.predicted_order / 100 <= summ.count <= 100 * summ.predicted_order


def test_convergent_windows_skipped():
    inst = default_instance()
    wins = [window_at(inst, q ** (7 / 3), q=q) for q in (2, 5, 12)]
    out = window_sweep(inst, wins)
    assert [s.status for s in out] == ["skipped"] * 3
    assert all(s.diagnostic for s in out)


def test_trend_1e5_1e6():
    inst = default_instance()
    out = window_sweep(inst, [1e5, 1e6])
    assert [s.status for s in out] == ["ok", "ok"]
    assert trend_nondecreasing(out)
    assert out[0].count == 6959 and out[1].count == 84638

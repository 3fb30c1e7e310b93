from __future__ import annotations

import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from dhlab.arcs import (
    Integrand,
    direct_sum_I,
    integrate_all,
    integrate_I,
    integrate_T_product,
    level_set_bound,
    level_set_diagnostic,
    main_term_volume,
    partition,
)
from dhlab.expsums import AlphaGrid
from dhlab.model import ConfigError, default_instance, window_at
from dhlab.primes import build_tables
from dhlab.sieve import build_weight_table, rho_value
from dhlab.verify import parseval_instance


# ---------------------------------------------------------------------------
# partition
# ---------------------------------------------------------------------------

def test_partition_endpoints():
    inst = default_instance()
    w = window_at(inst, 1e6)
    part = partition(w)
    assert part.major_end == pytest.approx(1e6 ** (-2 / 3 - 1e-3))
    eta = 1e6 ** inst.eta_exponent()
    assert part.R == pytest.approx(1e6 ** (0.5 - 1 / (2 * inst.k)) * math.log(1e6) ** 4 / eta ** 2)


def test_partition_disjoint_cover():
    part = partition(window_at(default_instance(), 1e6))
    rng = np.random.default_rng(0)
    a = np.concatenate([rng.uniform(-2 * part.R, 2 * part.R, 1000),
                        rng.uniform(-2 * part.major_end, 2 * part.major_end, 1000)])
    tags = part.region_of(a)
    for t, x in zip(tags, a):
        lo, hi = part.bounds(part.tag_of(x))
        assert lo <= abs(x) <= hi
    assert set(np.unique(tags).tolist()) <= {0, 1, 2}


def test_empty_minor_arc_rejected():
    with pytest.raises(ConfigError):
        window_at(default_instance(), 400.0, eta=1e6)


# ---------------------------------------------------------------------------
# the Fourier identity on tiny windows
# ---------------------------------------------------------------------------

def brute_direct(X, delta, k, lams, eta, omega=0.0):
    """Quadruple loop with trial-division primality: independent of the library."""
    def isprime(n):
        return n > 1 and all(n % d for d in range(2, math.isqrt(n) + 1))

    tables = build_tables(1000, spf_limit=1000)
    ms = [m for m in range(1, 1000) if delta * X <= m * m <= X]
    sq = [p for p in range(2, 1000) if isprime(p) and delta * X <= p * p <= X]
    p4 = [p for p in range(2, 10 ** 4) if isprime(p) and delta * X <= p ** k <= X]
    total = 0.0
    for m in ms:
        r = rho_value(m, X, tables)
        if r == 0:
            continue
        for a in sq:
            for b in sq:
                for c in p4:
                    v = lams[0] * m * m + lams[1] * a * a + lams[2] * b * b + lams[3] * c ** k - omega
                    total += r * math.log(a) * math.log(b) * math.log(c) * max(0.0, eta - abs(v))
    return total


def test_direct_sum_regression_eta5():
    inst = parseval_instance()
    w = window_at(inst, 400.0, eta=5.0)
    v = direct_sum_I(inst, w)
    assert v > 0
    assert v == pytest.approx(5548.1377632221, rel=1e-11)
    assert v == pytest.approx(brute_direct(400.0, 0.1, 1.1, inst.lambdas, 5.0), rel=1e-11)


def test_direct_sum_large_eta():
    """With eta above every |form|, the sum is eta * prod(sums) minus the weighted |form|."""
    inst = parseval_instance()
    X, eta = 400.0, 1e6
    # such an eta leaves no minor arc, so adjust a valid window directly
    w = dataclasses.replace(window_at(inst, X, eta=1.0), eta=eta)
    F = Integrand(inst, w)
    s0, s1, s2, s3 = F.sums
    l = inst.lambdas
    v = (l[0] * s0.freqs[:, None, None, None] + l[1] * s1.freqs[None, :, None, None]
         + l[2] * s2.freqs[None, None, :, None] + l[3] * s3.freqs[None, None, None, :])
    wts = (s0.weights[:, None, None, None] * s1.weights[None, :, None, None]
           * s2.weights[None, None, :, None] * s3.weights[None, None, None, :])
    assert np.abs(v).max() < eta
    expect = eta * s0.at_zero * s1.at_zero * s2.at_zero * s3.at_zero - float(np.sum(wts * np.abs(v)))
    assert direct_sum_I(inst, w, integrand=F) == pytest.approx(expect, rel=1e-10)


def test_small_eta_limit():
    inst = parseval_instance()
    eta = 1e-6
    w = window_at(inst, 400.0, eta=eta)
    F = Integrand(inst, w)
    bound = eta * math.prod(s.abs_weight for s in F.sums)
    assert abs(direct_sum_I(inst, w, integrand=F)) <= bound


def test_same_sign_lambdas_give_zero():
    inst = dataclasses.replace(parseval_instance(), lambda_specs=(Fraction(1), Fraction(2), Fraction(1), Fraction(1)))
    w = window_at(inst, 400.0, eta=1.0)
    assert direct_sum_I(inst, w) == 0.0


def test_empty_window_direct_sum():
    inst = parseval_instance()
    w = window_at(inst, 3.5, eta=1.0)
    assert direct_sum_I(inst, w) == 0.0


def test_parseval_400():
    inst = parseval_instance()
    w = window_at(inst, 400.0, eta=1.0)
    F = Integrand(inst, w)
    d = direct_sum_I(inst, w, integrand=F)
    res = integrate_all(inst, w, integrand=F)
    tot = res.total
    assert abs(tot.value - d) <= tot.quad_error + tot.truncation_bound
    assert tot.quad_error + tot.truncation_bound <= 0.05 * abs(d)
    assert abs(tot.value.imag) <= tot.quad_error
    for r in ("major", "minor", "trivial"):
        assert abs(res[r].value.imag) <= res[r].quad_error
    assert sum(res[r].value for r in ("major", "minor", "trivial")) == pytest.approx(tot.value, abs=1e-9)


def test_integrand_pointwise():
    inst = parseval_instance()
    w = window_at(inst, 400.0, eta=1.0)
    F = Integrand(inst, w)
    a0, h, n = -0.013, 1.7e-4, 300
    on = F.on_grid(a0, h, n)
    pts = F(a0 + h * np.arange(n))
    assert np.allclose(on, pts, rtol=1e-9, atol=1e-9 * F.sup_bound())
    assert abs(F(0.0)[0]) == pytest.approx(F.sup_bound())


def test_tail_bounds_ordering():
    inst = parseval_instance()
    F = Integrand(inst, window_at(inst, 1600.0, eta=1.0))
    for A in (10.0, 100.0, 1000.0):
        assert F.tail_bound(A) <= F.tail_bound(A, mean_square=False)
    assert F.tail_bound(1000.0) < F.tail_bound(100.0)


def test_coarse_grid_rejected():
    inst = parseval_instance()
    w = window_at(inst, 400.0, eta=1.0)
    with pytest.raises(ValueError):
        integrate_I(inst, w, grid=AlphaGrid(-1.0, 1.0, 1e-2))


# ---------------------------------------------------------------------------
# main term
# ---------------------------------------------------------------------------

def nested_volume(lams, k, X, delta, omega, eta, panels=24, n12=6, n3=8, n4=8):
    """4-fold integral of max(0, eta - |form - omega|) by nested 1D Gauss rules.

    t1, t2: composite Gauss; t3: Gauss between the points where the t4 range
    endpoints cross s = -eta, 0, eta; t4: Gauss in s = c + l4 t^k on each side of 0.
    """
    l1, l2, l3, l4 = lams
    lo2, hi2 = math.sqrt(delta * X), math.sqrt(X)
    a4, b4 = (delta * X) ** (1 / k), X ** (1 / k)
    x12, w12 = leggauss(n12)
    edges = np.linspace(lo2, hi2, panels + 1)
    half = 0.5 * np.diff(edges)
    t = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x12).ravel()
    wt = (half[:, None] * w12).ravel()
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    W12 = np.outer(wt, wt).ravel()
    c0 = (l1 * T1 ** 2 + l2 * T2 ** 2 - omega).ravel()
    kinks = np.array([s - l4 * e for s in (-eta, 0.0, eta) for e in (a4 ** k, b4 ** k)])
    with np.errstate(invalid="ignore"):
        tk = np.sqrt((kinks[None, :] - c0[:, None]) / l3)
    tk = np.where(np.isfinite(tk), np.clip(tk, lo2, hi2), lo2)
    ends = np.full((len(c0), 1), lo2), np.full((len(c0), 1), hi2)
    br = np.sort(np.concatenate([ends[0], tk, ends[1]], axis=1), axis=1)
    x3, w3 = leggauss(n3)
    h3 = 0.5 * np.diff(br, axis=1)
    t3 = 0.5 * (br[:, :-1] + br[:, 1:])[:, :, None] + h3[:, :, None] * x3
    c = c0[:, None, None] + l3 * t3 ** 2
    xs, ws = leggauss(n4)
    sa, sb = c + l4 * a4 ** k, c + l4 * b4 ** k
    slo, shi = np.minimum(sa, sb), np.maximum(sa, sb)
    g = np.zeros_like(c)
    for p0, p1 in ((-eta, 0.0), (0.0, eta)):
        u0, u1 = np.clip(slo, p0, p1), np.clip(shi, p0, p1)
        h = 0.5 * (u1 - u0)
        s = 0.5 * (u0 + u1)[..., None] + h[..., None] * xs
        r = np.maximum((s - c[..., None]) / l4, 1e-300)
        g += np.sum(h[..., None] * ws * (eta - np.abs(s)) * r ** (1 / k - 1) / (k * abs(l4)), axis=-1)
    return float(np.sum(W12 * np.sum(h3[:, :, None] * w3 * g, axis=(1, 2))))


def test_main_term_vs_nested_oracle():
    inst = default_instance()
    w = window_at(inst, 1e4, eta=1.0)
    mc = main_term_volume(inst, w, 200_000, eta=1.0, seed=0)
    ref = nested_volume(inst.lambdas, inst.k, 1e4, inst.delta, 0.0, 1.0)
    assert abs(mc.value - ref) <= 3 * mc.mc_error
    assert mc.mc_error < 0.01 * ref


def test_main_term_eta_doubling():
    inst = default_instance()
    w = window_at(inst, 1e4, eta=1.0)
    v1 = main_term_volume(inst, w, 100_000, eta=1.0, seed=1).value
    v2 = main_term_volume(inst, w, 100_000, eta=2.0, seed=1).value
    assert v2 / v1 == pytest.approx(4.0, rel=0.1)


def test_main_term_needs_samples():
    inst = default_instance()
    with pytest.raises(ValueError):
        main_term_volume(inst, window_at(inst, 1e4), 100)


def test_t_product_dominates():
    inst = default_instance()
    rep = integrate_T_product(inst, window_at(inst, 1e4))
    assert rep.major.real > 0
    assert rep.dominance_ratio > 1
    mc = main_term_volume(inst, window_at(inst, 1e4), 100_000)
    total = rep.major.real + rep.outside.real
    assert abs(total - mc.value) <= 3 * mc.mc_error + rep.outside_tail + 1e-3 * abs(total)


# ---------------------------------------------------------------------------
# level sets
# ---------------------------------------------------------------------------

TAB6 = None


def table_1e6():
    global TAB6
    if TAB6 is None:
        TAB6 = build_weight_table(1e6, Fraction(1, 100))
    return TAB6


def test_level_set_maximal_z_empty():
    inst = default_instance()
    w = window_at(inst, 1e6)
    rep = level_set_diagnostic(inst, w, 1e3, 1e3, 5000, weight_table=table_1e6())
    assert rep.measure == 0.0 and rep.measure <= rep.lemma_bound


def test_level_set_floor_enforced():
    inst = default_instance()
    w = window_at(inst, 1e6)
    with pytest.raises(ValueError):
        level_set_diagnostic(inst, w, 10.0, 10.0, 5000, weight_table=table_1e6())


def test_level_set_measure_vs_dense_grid():
    """The sampled measure matches a dense uniform-grid count below the Z floor."""
    inst = default_instance()
    w = window_at(inst, 1e6)
    tab = table_1e6()
    Z = 20.0
    y = 10 * w.major_end
    rep = level_set_diagnostic(inst, w, Z, Z, 40_000, y=y, weight_table=tab, check_floor=False, seed=5)
    F = Integrand(inst, w, weight_table=tab)
    S = F.sums[0]
    a = np.linspace(y, 2 * y, 400_001)
    v1, v2 = np.abs(S(a, F.lams[0])), np.abs(S(a, F.lams[1]))
    frac = np.mean((v1 > Z) & (v1 <= 2 * Z) & (v2 > Z) & (v2 <= 2 * Z))
    assert frac > 0.005
    p = rep.measure / (2 * y)
    assert abs(p - frac) <= 4 * math.sqrt(frac * (1 - frac) / rep.samples)
    assert rep.lemma_bound == pytest.approx(level_set_bound(w, Z, Z, y, inst.epsilon))

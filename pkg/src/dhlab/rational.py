"""Continued fractions, convergents, rational-approximation witnesses and window planning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .model import (
    ApproxDecimal,
    ConfigError,
    ExactReal,
    ProblemInstance,
    Surd,
    WindowParams,
    derive_window,
    real_bounds,
)

#: fractional bits used when expanding surds and decimals
DEFAULT_BITS = 256


class PrecisionError(ValueError):
    pass


@dataclass(frozen=True)
class Convergent:
    a: int
    q: int
    index: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.a, self.q)


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def partial_quotients_interval(lo: Fraction, hi: Fraction, n: int) -> tuple[list[int], bool]:
    """Partial quotients shared by every real in [lo, hi].

    Returns (quotients, terminated); ``terminated`` means lo == hi is rational
    and its expansion ended.
    """
    out: list[int] = []
    while len(out) < n:
        a_lo, a_hi = _floor(lo), _floor(hi)
        if a_lo != a_hi:
            return out, False
        out.append(a_lo)
        flo, fhi = lo - a_lo, hi - a_lo
        if flo == 0 and fhi == 0:
            return out, True
        if flo == 0:
            # interval touches an integer: later quotients are undetermined
            return out, False
        lo, hi = 1 / fhi, 1 / flo
    return out, False


def _surd_quotients(x: Surd, n: int) -> list[int]:
    """Exact expansion of a + b*sqrt(d) with integer arithmetic.

    Writes x = (P + sqrt(D)) / Q with integers and iterates the classical
    recurrence, which never loses precision.
    """
    # x = (a + b sqrt d) ; bring to (P + sqrt(D))/Q with Q | D - P^2
    den = math.lcm(x.a.denominator, x.b.denominator)
    A = x.a * den
    B = x.b * den
    P, Q = int(A), den
    D = int(B * B) * x.d
    if B < 0:
        # (P - sqrt(D))/Q = (-P + sqrt(D))/(-Q)
        P, Q = -P, -Q
    if (D - P * P) % Q:
        D *= Q * Q
        P *= abs(Q)
        Q *= abs(Q)
    r = math.isqrt(D)
    out = []
    for _ in range(n):
        if Q > 0:
            a = (P + r) // Q
        else:
            a = (P + r + 1) // Q
        # exact floor check
        while Fraction(P - a * Q) < 0 and _surd_lt(P - a * Q, D, Q, 0):
            a -= 1
        while not _surd_lt(P - (a + 1) * Q, D, Q, 0):
            a += 1
        out.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    return out


def _surd_lt(p: int, D: int, q: int, c: int) -> bool:
    """(p + sqrt(D))/q < c, exactly."""
    # compare p + sqrt(D) with c*q, flipping for negative q
    lhs_sign = 1 if q > 0 else -1
    t = c * q - p  # want sqrt(D) < t (q>0) or sqrt(D) > t (q<0)
    if lhs_sign > 0:
        return t > 0 and D < t * t
    return t < 0 or D > t * t


def quotients_to_convergents(quots: list[int]) -> list[Convergent]:
    out = []
    a_prev, a_cur = 1, quots[0] if quots else 0
    q_prev, q_cur = 0, 1
    if not quots:
        return out
    out.append(Convergent(a_cur, q_cur, 0))
    for i, c in enumerate(quots[1:], start=1):
        a_prev, a_cur = a_cur, c * a_cur + a_prev
        q_prev, q_cur = q_cur, c * q_cur + q_prev
        out.append(Convergent(a_cur, q_cur, i))
    return out


def continued_fraction(x: Union[ExactReal, float, int], n: int, *, bits: int = DEFAULT_BITS) -> list[Convergent]:
    """First n convergents of x (fewer if x is rational and its expansion ends)."""
    if isinstance(x, bool):
        raise TypeError("bool is not a real")
    if isinstance(x, int):
        x = Fraction(x)
    if isinstance(x, float):
        x = Fraction(x)
    if isinstance(x, Fraction):
        quots, _ = partial_quotients_interval(x, x, n)
        return quotients_to_convergents(quots)
    if isinstance(x, Surd):
        if x.is_rational:
            v = x.a + x.b * math.isqrt(x.d)
            return continued_fraction(v, n)
        try:
            return quotients_to_convergents(_surd_quotients(x, n))
        except (ZeroDivisionError, ValueError):
            pass
    lo, hi = real_bounds(x, bits)
    quots, ended = partial_quotients_interval(lo, hi, n)
    if len(quots) < n and not ended:
        raise PrecisionError(
            f"input precision determines only {len(quots)} partial quotients, {n} requested"
        )
    return quotients_to_convergents(quots)


@dataclass(frozen=True)
class RationalApproxWitness:
    alpha: float
    a: int
    q: int
    defect: float
    q_bound: float
    defect_bound: float


def approximation_bounds(Z: float, X: float, eps: float, C: float = 1.0) -> tuple[float, float]:
    """(q bound, defect bound) = ((X^(1/2+eps)/Z)^4, C X^-1 (X^(1/2+eps)/Z)^4)."""
    qb = (X ** (0.5 + eps) / Z) ** 4
    return qb, C * qb / X


def best_rational_test(alpha: float, Z: float, X: float, *, eps: float = 1e-3, C: float = 1.0,
                       u: float = 1.0 / 14.0, check_window: bool = True) -> Optional[RationalApproxWitness]:
    """Smallest-q convergent (a, q) of alpha with q <= q_bound and |q alpha - a| <= defect bound."""
    if check_window and not (X ** (0.5 - u + eps) * (1 - 1e-12) <= Z <= X ** 0.5 * (1 + 1e-12)):
        raise ValueError(f"Z={Z} outside [X^(1/2-u+eps), X^(1/2)] for X={X}")
    qb, db = approximation_bounds(Z, X, eps, C)
    x = Fraction(alpha)
    q_prev, q = 0, 1
    a_prev, a = 1, _floor(x)
    rest = x - a
    cands = [(a, q)]
    while rest != 0 and q <= qb:
        rest = 1 / rest
        c = _floor(rest)
        rest -= c
        a_prev, a = a, c * a + a_prev
        q_prev, q = q, c * q + q_prev
        cands.append((a, q))
    for _, q in cands:
        if q > qb:
            break
        a_near = round(alpha * q)
        defect = abs(q * alpha - a_near)
        if defect <= db and math.gcd(a_near, q) == 1:
            return RationalApproxWitness(float(alpha), int(a_near), int(q), float(defect), qb, db)
    return None


def nearest_miss(alpha: float, Z: float, X: float, *, eps: float = 1e-3) -> tuple[int, int, float]:
    """Convergent with q <= q_bound minimising the defect (for near-miss reporting)."""
    qb, _ = approximation_bounds(Z, X, eps)
    best = (round(alpha), 1, abs(alpha - round(alpha)))
    for c in continued_fraction(Fraction(alpha), 64):
        if c.q > qb:
            break
        d = abs(c.q * alpha - round(c.q * alpha))
        if d < best[2]:
            best = (round(c.q * alpha), c.q, d)
    return best


def plan_windows(instance: ProblemInstance, count: int, u: Optional[float] = None, *,
                 acknowledge_unverified: bool = False) -> list[WindowParams]:
    """Windows X = q^(7/3) for the convergent denominators q >= 2 of lambda1/lambda2."""
    ratio = instance.lambda_ratio_spec
    if ratio.status == "rational":
        raise ConfigError("irrationality violated: lambda1/lambda2 is rational",
                          code="irrationality_violated", ratio=str(ratio.value))
    if ratio.status != "certified-irrational" and not acknowledge_unverified:
        raise ConfigError("irrationality of lambda1/lambda2 not certified; pass acknowledge_unverified",
                          code="irrationality_unverified")
    u = float(instance.u_exact) if u is None else u
    windows: list[WindowParams] = []
    n = count + 4
    seen = set()
    while True:
        convs = continued_fraction(ratio.value, n)
        qs = []
        for c in convs:
            if c.q >= 2 and c.q not in seen:
                qs.append(c.q)
                seen.add(c.q)
        for q in qs:
            if len(windows) == count:
                break
            windows.append(derive_window(instance, q, u))
        if len(windows) == count:
            return windows
        if len(convs) < n:
            raise PrecisionError(f"only {len(windows)} windows computable, {count} requested")
        seen.clear()
        windows.clear()
        n *= 2


def coupling_defect(window: WindowParams) -> float:
    """|q - X^(1-8u)|: zero when u = 1/14 and X = q^(7/3)."""
    if window.q is None:
        raise ValueError("window has no convergent denominator")
    return abs(window.q - window.X ** (1 - 8 * window.u))

"""Problem instances, run windows and exact parsing of numeric inputs.

Coefficients are accepted as exact rationals (``"p/q"``), quadratic surds
(``"a+b*sqrt(d)"``) or decimal strings.  Decimals are kept exactly but are
treated as approximations of an unknown real with an uncertainty of half a
unit in the last written digit; this matters for continued fractions.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Optional, Union

DEFAULT_EPSILON = Fraction(1, 1000)
DEFAULT_DELTA = Fraction(1, 100)
DEFAULT_U = Fraction(1, 14)

K_MIN = Fraction(1)
K_MAX = Fraction(7, 6)


class ConfigError(ValueError):
    """Raised when a configuration record violates the theorem hypotheses."""

    def __init__(self, message: str, code: str = "invalid_config", **context: Any):
        super().__init__(message)
        self.code = code
        self.context = context


# ---------------------------------------------------------------------------
# exact reals
# ---------------------------------------------------------------------------

def _sqrt_bounds(n: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    """Rational lo <= sqrt(n) <= hi with hi - lo <= 2**-bits (n >= 0)."""
    scale = 1 << (2 * bits)
    num = n.numerator * scale
    den = n.denominator
    # sqrt(num/den) = sqrt(num*den)/den
    r = math.isqrt(num * den)
    lo = Fraction(r, den) / (1 << bits)
    hi = Fraction(r + 1, den) / (1 << bits)
    return lo, hi


@dataclass(frozen=True)
class Surd:
    """The real number a + b*sqrt(d) with rational a, b and integer d > 0."""

    a: Fraction
    b: Fraction
    d: int

    @property
    def is_rational(self) -> bool:
        return self.b == 0 or math.isqrt(self.d) ** 2 == self.d

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def bounds(self, bits: int = 256) -> tuple[Fraction, Fraction]:
        lo, hi = _sqrt_bounds(Fraction(self.d), bits)
        if self.b >= 0:
            return self.a + self.b * lo, self.a + self.b * hi
        return self.a + self.b * hi, self.a + self.b * lo

    def sign(self) -> int:
        bits = 64
        while True:
            lo, hi = self.bounds(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            if lo == hi == 0:
                return 0
            if self.is_rational:
                v = self.a + self.b * math.isqrt(self.d)
                return (v > 0) - (v < 0)
            bits *= 2

    def __truediv__(self, other: "Surd") -> "Surd":
        if other.b != 0 and self.b != 0 and other.d != self.d:
            return NotImplemented
        d = self.d if self.b != 0 else other.d
        norm = other.a * other.a - other.b * other.b * d
        if norm == 0:
            raise ZeroDivisionError("division by zero surd")
        a = (self.a * other.a - self.b * other.b * d) / norm
        b = (self.b * other.a - self.a * other.b) / norm
        return Surd(a, b, d)

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        return f"{self.a}+{self.b}*sqrt({self.d})"


@dataclass(frozen=True)
class ApproxDecimal:
    """A decimal string read as an approximation: |x - value| <= radius."""

    value: Fraction
    radius: Fraction
    text: str

    def __float__(self) -> float:
        return float(self.value)

    def bounds(self, bits: int = 256) -> tuple[Fraction, Fraction]:
        return self.value - self.radius, self.value + self.radius

    def sign(self) -> int:
        if self.value - self.radius > 0:
            return 1
        if self.value + self.radius < 0:
            return -1
        return 0

    @property
    def significant_digits(self) -> int:
        digits = re.sub(r"[^0-9]", "", self.text.split("e")[0].split("E")[0]).lstrip("0")
        return len(digits)


ExactReal = Union[Fraction, Surd, ApproxDecimal]

_RAT = r"[+-]?\d+(?:/\d+)?"
_SURD_RE = re.compile(
    rf"^(?:(?P<a>{_RAT})(?=[+-]))?(?P<b>[+-]?(?:\d+(?:/\d+)?\*?)?)?sqrt\((?P<d>\d+)\)$"
)
_RATIONAL_RE = re.compile(r"^[+-]?\d+(?:/\d+)?$")
_DECIMAL_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def parse_number(text: Union[str, int, Fraction]) -> ExactReal:
    """Parse ``"p/q"``, ``"a+b*sqrt(d)"`` or a decimal string exactly."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise ConfigError("numeric inputs must be strings, not floats", code="usage")
    s = str(text).replace(" ", "")
    if not s:
        raise ConfigError("empty numeric string", code="usage")
    if _RATIONAL_RE.match(s):
        return Fraction(s)
    m = _SURD_RE.match(s)
    if m:
        a = Fraction(m.group("a")) if m.group("a") else Fraction(0)
        braw = (m.group("b") or "").rstrip("*")
        if braw in ("", "+"):
            b = Fraction(1)
        elif braw == "-":
            b = Fraction(-1)
        else:
            b = Fraction(braw)
        d = int(m.group("d"))
        if d <= 0:
            raise ConfigError(f"radicand must be positive in {text!r}", code="usage")
        r = math.isqrt(d)
        if r * r == d:
            return a + b * r
        return Surd(a, b, d)
    if _DECIMAL_RE.match(s):
        value = Fraction(s)
        mant, _, exp = s.lower().partition("e")
        decimals = len(mant.split(".")[1]) if "." in mant else 0
        radius = Fraction(1, 2) * Fraction(10) ** (-decimals + (int(exp) if exp else 0))
        if "." not in mant:
            # plain integers with exponent are exact
            return value
        return ApproxDecimal(value, radius, s)
    raise ConfigError(f"cannot parse number {text!r}", code="usage")


def real_bounds(x: ExactReal, bits: int = 256) -> tuple[Fraction, Fraction]:
    if isinstance(x, Fraction):
        return x, x
    return x.bounds(bits)


def real_sign(x: ExactReal) -> int:
    if isinstance(x, Fraction):
        return (x > 0) - (x < 0)
    return x.sign()


def as_fraction(x: ExactReal) -> Fraction:
    """Exact value for rationals and decimals (decimals taken at face value)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, ApproxDecimal):
        return x.value
    raise TypeError(f"{x} is not rational")


# ---------------------------------------------------------------------------
# ratio of the first two coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatioSpec:
    """lambda1/lambda2 as an exact object plus its irrationality status.

    ``status`` is one of ``"certified-irrational"``, ``"rational"`` or
    ``"unverified-irrational"``.
    """

    value: ExactReal
    status: str

    def bounds(self, bits: int = 256) -> tuple[Fraction, Fraction]:
        return real_bounds(self.value, bits)

    def __float__(self) -> float:
        return float(self.value)


def _as_surd(x: ExactReal) -> Optional[Surd]:
    if isinstance(x, Surd):
        return x
    if isinstance(x, Fraction):
        return Surd(x, Fraction(0), 1)
    return None


def lambda_ratio(l1: ExactReal, l2: ExactReal) -> RatioSpec:
    s1, s2 = _as_surd(l1), _as_surd(l2)
    if s1 is not None and s2 is not None:
        q = s1 / s2
        if q is not NotImplemented:
            if q.is_rational:
                v = q.a + (q.b * math.isqrt(q.d) if q.b else 0)
                return RatioSpec(Fraction(v), "rational")
            return RatioSpec(q, "certified-irrational")
    # mixed radicands or decimals: interval quotient, irrationality unknown
    lo1, hi1 = real_bounds(l1, 320)
    lo2, hi2 = real_bounds(l2, 320)
    cands = [lo1 / lo2, lo1 / hi2, hi1 / lo2, hi1 / hi2]
    lo, hi = min(cands), max(cands)
    mid = (lo + hi) / 2
    return RatioSpec(ApproxDecimal(mid, (hi - lo) / 2, str(float(mid))), "unverified-irrational")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

def theorem_exponent(k: Union[float, Fraction]) -> Union[float, Fraction]:
    """(7 - 6k)/(14k): the power saving in the theorem (before epsilon)."""
    return (7 - 6 * k) / (14 * k)


@dataclass(frozen=True)
class ProblemInstance:
    lambda_specs: tuple[ExactReal, ExactReal, ExactReal, ExactReal]
    k_exact: Fraction
    omega_exact: ExactReal
    epsilon_exact: Fraction
    delta_exact: Fraction
    lambda_ratio_spec: RatioSpec
    u_exact: Fraction = DEFAULT_U

    @property
    def lambdas(self) -> tuple[float, float, float, float]:
        return tuple(float(x) for x in self.lambda_specs)  # type: ignore[return-value]

    @property
    def k(self) -> float:
        return float(self.k_exact)

    @property
    def omega(self) -> float:
        return float(self.omega_exact)

    @property
    def epsilon(self) -> float:
        return float(self.epsilon_exact)

    @property
    def delta(self) -> float:
        return float(self.delta_exact)

    @property
    def u(self) -> float:
        return float(self.u_exact)

    @property
    def irrationality_certified(self) -> bool:
        return self.lambda_ratio_spec.status == "certified-irrational"

    def eta_exponent(self) -> float:
        """Exponent of X (or max p) in the theorem's eta, epsilon included."""
        return -float(theorem_exponent(self.k_exact)) + self.epsilon

    def eta_for(self, max_p: float) -> float:
        """Per-quadruple eta = (max p_j)^(-(7-6k)/(14k) + eps)."""
        return float(max_p) ** self.eta_exponent()

    def to_record(self) -> dict:
        return {
            "lambda": [str(x) if not isinstance(x, ApproxDecimal) else x.text for x in self.lambda_specs],
            "k": str(self.k_exact),
            "omega": str(self.omega_exact) if not isinstance(self.omega_exact, ApproxDecimal) else self.omega_exact.text,
            "epsilon": str(self.epsilon_exact),
            "delta": str(self.delta_exact),
            "u": str(self.u_exact),
        }


def _fraction_field(raw: Mapping[str, Any], key: str, default: Optional[Fraction]) -> Fraction:
    if key not in raw or raw[key] is None:
        if default is None:
            raise ConfigError(f"missing field {key!r}", code="usage", field=key)
        return default
    v = parse_number(raw[key])
    if isinstance(v, Surd):
        raise ConfigError(f"{key} must be rational or decimal", code="usage", field=key)
    return as_fraction(v)


def validate_instance(raw: Mapping[str, Any]) -> ProblemInstance:
    """Build a ProblemInstance from a parsed config record, checking hypotheses."""
    lams = raw.get("lambda")
    if not isinstance(lams, (list, tuple)) or len(lams) != 4:
        raise ConfigError("'lambda' must be a list of 4 numeric strings", code="usage", field="lambda")
    specs = tuple(parse_number(x) for x in lams)
    signs = [real_sign(x) for x in specs]
    if any(s == 0 for s in signs):
        raise ConfigError("every lambda_j must be non-zero", lambdas=[str(x) for x in lams])
    if len(set(signs)) == 1:
        raise ConfigError("lambda_j must not all have the same sign", lambdas=[str(x) for x in lams])

    k = _fraction_field(raw, "k", None)
    if not (K_MIN < k < K_MAX):
        raise ConfigError(f"k={k} outside (1, 7/6)", k=str(k))
    eps = _fraction_field(raw, "epsilon", DEFAULT_EPSILON)
    if not (0 < eps < Fraction(1, 100)):
        raise ConfigError(f"epsilon={eps} outside (0, 1/100)", epsilon=str(eps))
    delta = _fraction_field(raw, "delta", DEFAULT_DELTA)
    if not (0 < delta < Fraction(1, 4)):
        raise ConfigError(f"delta={delta} outside (0, 1/4)", delta=str(delta))
    u = _fraction_field(raw, "u", DEFAULT_U)
    if not (0 < u <= Fraction(1, 14)):
        raise ConfigError(f"u={u} outside (0, 1/14]", u=str(u))
    omega = parse_number(raw.get("omega", "0"))

    ratio = lambda_ratio(specs[0], specs[1])
    return ProblemInstance(
        lambda_specs=specs,  # type: ignore[arg-type]
        k_exact=k,
        omega_exact=omega,
        epsilon_exact=eps,
        delta_exact=delta,
        lambda_ratio_spec=ratio,
        u_exact=u,
    )


def load_config(path) -> ProblemInstance:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", code="usage", path=str(path)) from exc
    return validate_instance(raw)


DEFAULT_CONFIG = {
    "lambda": ["1", "sqrt(2)", "-1", "-1"],
    "k": "1.05",
    "omega": "0",
    "epsilon": "1/1000",
    "delta": "1/100",
}


def default_instance(**overrides: Any) -> ProblemInstance:
    raw = dict(DEFAULT_CONFIG)
    raw.update(overrides)
    return validate_instance(raw)


@dataclass(frozen=True)
class WindowParams:
    """Scale X with its arc cutoffs.

    ``q`` is the convergent denominator the window was derived from, or
    ``None`` for windows placed at an arbitrary X.
    """

    X: float
    P: float
    R: float
    eta: float
    u: float
    q: Optional[int] = None
    eta_source: str = field(default="X-form")

    @property
    def major_end(self) -> float:
        return self.P / self.X


def trivial_arc_start(X: float, k: float, eta: float) -> float:
    return X ** (0.5 - 1.0 / (2.0 * k)) * math.log(X) ** 4 / eta ** 2


def window_at(instance: ProblemInstance, X: float, *, eta: Optional[float] = None,
              u: Optional[float] = None, q: Optional[int] = None) -> WindowParams:
    """Window at scale X; eta defaults to the X-form X^(-(7-6k)/(14k)+eps)."""
    if X <= 1:
        raise ConfigError(f"X={X} must exceed 1", code="usage")
    u = instance.u if u is None else u
    if not (0 < u <= 1 / 14 + 1e-15):
        raise ConfigError(f"u={u} outside (0, 1/14]", code="usage")
    source = "X-form"
    if eta is None:
        eta = X ** instance.eta_exponent()
    else:
        source = "explicit"
    P = X ** (1.0 / 3.0 - instance.epsilon)
    R = trivial_arc_start(X, instance.k, eta)
    w = WindowParams(X=X, P=P, R=R, eta=eta, u=u, q=q, eta_source=source)
    if not (P / X < R):
        raise ConfigError(f"empty minor arc at X={X}: P/X={P / X} >= R={R}",
                          code="empty_minor_arc", X=X)
    return w


def derive_window(instance: ProblemInstance, q: int, u: Optional[float] = None) -> WindowParams:
    """Window for convergent denominator q: X = q^(7/3)."""
    if not isinstance(q, int) or q < 2:
        raise ConfigError(f"q={q} must be an integer >= 2", code="usage")
    u = float(DEFAULT_U) if u is None else float(u)
    if not (0 < u <= 1 / 14 + 1e-15):
        raise ConfigError(f"u={u} outside (0, 1/14]", code="usage")
    X = float(q) ** (7.0 / 3.0)
    return window_at(instance, X, u=u, q=q)

"""Exact solver for small parametric exponent programs.

Variables are optimised in exact rational arithmetic by enumerating the
vertices of the feasible polytope.  One variable (``x`` = 1/k by default) may
be declared a parameter: the optimum is then returned as a linear function
of it, valid on an interval of parameter values.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

Number = Fraction
#: box used to make vertex enumeration see free directions
BOX = Fraction(10 ** 9)


class LPError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    """sum(coeffs[v] * v) <= rhs."""

    coeffs: Mapping[str, Fraction]
    rhs: Fraction
    name: str = ""

    def value(self, point: Mapping[str, Fraction]) -> Fraction:
        return sum((c * point[v] for v, c in self.coeffs.items()), Fraction(0))

    def slack(self, point: Mapping[str, Fraction]) -> Fraction:
        return self.rhs - self.value(point)

    def __str__(self) -> str:
        terms = " + ".join(f"{c}*{v}" for v, c in self.coeffs.items() if c)
        return f"{terms or '0'} <= {self.rhs}"


@dataclass(frozen=True)
class ExponentProgram:
    variables: tuple[str, ...]
    constraints: tuple[Constraint, ...]
    objective: str = "w"
    parameter: Optional[str] = "x"

    def __post_init__(self):
        if len(self.variables) > 4:
            raise LPError("at most 4 variables")
        if len(self.constraints) > 8:
            raise LPError("at most 8 constraints")
        if self.objective not in self.variables:
            raise LPError(f"objective {self.objective!r} is not a variable")
        if self.parameter is not None and self.parameter not in self.variables:
            raise LPError(f"parameter {self.parameter!r} is not a variable")
        for c in self.constraints:
            for v, a in c.coeffs.items():
                if v not in self.variables:
                    raise LPError(f"constraint {c.name or c} uses unknown variable {v!r}")
                if not isinstance(a, Fraction):
                    raise LPError("coefficients must be exact rationals")

    @property
    def decision_vars(self) -> tuple[str, ...]:
        return tuple(v for v in self.variables if v != self.parameter)


def constraint(coeffs: Mapping[str, object], rhs: object, name: str = "") -> Constraint:
    return Constraint({v: Fraction(c) for v, c in coeffs.items()}, Fraction(rhs), name)


def paper_program() -> ExponentProgram:
    """The exponent system for (x, w, u), x = 1/k, maximising w.

        x <= 1,  w >= 0,  u <= 1/14,
        -w >= 1/2 - x/2 - u     (minor arc),
        -w >= 1/4 - x/2 + 2u    (second minor-arc condition)

    w is the power saving in eta; the program is solved for each fixed x.
    """
    h = Fraction(1, 2)
    cons = (
        constraint({"x": 1}, 1, "x_max"),
        constraint({"w": -1}, 0, "w_nonneg"),
        constraint({"u": 1}, Fraction(1, 14), "u_max"),
        constraint({"w": 1, "x": -h, "u": -1}, -h, "minor_arc"),
        constraint({"w": 1, "x": -h, "u": 2}, -Fraction(1, 4), "minor_arc_2"),
    )
    return ExponentProgram(("x", "w", "u"), cons, "w", "x")


# ---------------------------------------------------------------------------
# exact linear algebra
# ---------------------------------------------------------------------------

def _solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Optional[list[Fraction]]:
    """Gauss-Jordan over the rationals; None when singular."""
    n = len(rows)
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [v / p for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


@dataclass(frozen=True)
class LinearExpr:
    """const + coef * parameter."""

    const: Fraction
    coef: Fraction
    parameter: str = "x"

    def __call__(self, x) -> Fraction:
        return self.const + self.coef * Fraction(x)

    def __str__(self) -> str:
        if self.coef == 0:
            return str(self.const)
        c = "" if self.coef == 1 else ("-" if self.coef == -1 else f"{self.coef}*")
        if self.const == 0:
            return f"{c}{self.parameter}"
        sign = "+" if self.const > 0 else "-"
        return f"{c}{self.parameter} {sign} {abs(self.const)}"


def _optimise_fixed(program: ExponentProgram, x: Optional[Fraction]):
    """Maximise the objective with the parameter pinned to x.

    Returns (objective value, vertex, active constraint indices).
    """
    dv = program.decision_vars
    n = len(dv)
    # substitute the parameter; constraints become a_i . y <= b_i
    A, b = [], []
    for c in program.constraints:
        row = [c.coeffs.get(v, Fraction(0)) for v in dv]
        rhs = c.rhs - (c.coeffs.get(program.parameter, Fraction(0)) * x if program.parameter else 0)
        A.append(row)
        b.append(rhs)
    if any(all(a == 0 for a in row) and rhs < 0 for row, rhs in zip(A, b)):
        return None
    n_orig = len(A)
    # a large box guarantees vertices exist when some variable is free
    for i in range(n):
        A.append([Fraction(1) if j == i else Fraction(0) for j in range(n)])
        A.append([Fraction(-1) if j == i else Fraction(0) for j in range(n)])
        b += [BOX, BOX]
    best = None
    for idx in itertools.combinations(range(len(A)), n):
        sol = _solve([A[i] for i in idx], [b[i] for i in idx])
        if sol is None:
            continue
        if all(sum(a * s for a, s in zip(row, sol)) <= rhs for row, rhs in zip(A, b)):
            val = sol[dv.index(program.objective)]
            if best is None or val > best[0]:
                best = (val, sol)
    if best is None:
        return None
    val, sol = best
    # unboundedness: an improving direction d with A d <= 0
    obj = dv.index(program.objective)
    active = [i for i, (row, rhs) in enumerate(zip(A[:n_orig], b))
              if sum(a * s for a, s in zip(row, sol)) == rhs]
    if val >= BOX or _improving_ray(A[:n_orig], obj, n):
        raise LPError("unbounded objective")
    return val, dict(zip(dv, sol)), active


def _improving_ray(A, obj: int, n: int) -> bool:
    """Is there d with A d <= 0 and d[obj] > 0?  (cone extreme rays by enumeration)"""
    rows = [list(r) for r in A]
    # normalise d[obj] = 1 and look for a vertex of {A d <= 0, d_obj = 1, |d_i| <= 1e6 box}
    box = Fraction(10 ** 6)
    ext = rows + [[Fraction(1) if j == i else Fraction(0) for j in range(n)] for i in range(n)] \
        + [[Fraction(-1) if j == i else Fraction(0) for j in range(n)] for i in range(n)]
    rhs = [Fraction(0)] * len(rows) + [box] * (2 * n)
    eq = [Fraction(1) if j == obj else Fraction(0) for j in range(n)]
    for idx in itertools.combinations(range(len(ext)), n - 1):
        sol = _solve([ext[i] for i in idx] + [eq], [rhs[i] for i in idx] + [Fraction(1)])
        if sol is None:
            continue
        if all(sum(a * s for a, s in zip(r, sol)) <= c for r, c in zip(ext, rhs)):
            return True
    return False


@dataclass
class ExponentSolution:
    u_star: Optional[Fraction]
    w_of_x: LinearExpr
    x_interval: tuple[Fraction, Fraction]
    x_open: tuple[bool, bool]
    binding: list[str]
    vertex: dict = field(default_factory=dict)
    program: Optional[ExponentProgram] = None

    @property
    def k_interval(self) -> tuple[Fraction, Fraction]:
        lo, hi = self.x_interval
        return (1 / hi if hi else Fraction(0), 1 / lo if lo > 0 else None)

    def w_at_k(self, k) -> Fraction:
        return self.w_of_x(1 / Fraction(k))

    def to_record(self) -> dict:
        klo, khi = self.k_interval
        return {
            "u_star": str(self.u_star) if self.u_star is not None else None,
            "w_expr": str(self.w_of_x),
            "x_range": [str(self.x_interval[0]), str(self.x_interval[1])],
            "k_range": [str(klo), str(khi) if khi is not None else None],
            "k_range_open": [self.x_open[1], self.x_open[0]],
            "binding": self.binding,
        }


def _parametric_pieces(program: ExponentProgram):
    """Breakpoints in x where feasibility or the optimal basis can change."""
    p = program.parameter
    cons = program.constraints
    pts: set[Fraction] = set()
    vars_all = list(program.variables)
    n = len(vars_all)
    for idx in itertools.combinations(range(len(cons)), n):
        rows = [[cons[i].coeffs.get(v, Fraction(0)) for v in vars_all] for i in idx]
        sol = _solve(rows, [cons[i].rhs for i in idx])
        if sol is not None:
            pts.add(sol[vars_all.index(p)])
    return sorted(pts)


def solve(program: ExponentProgram, *, x_value=None) -> ExponentSolution:
    """Exact optimum.  With a parameter, w is returned as a function of it.

    The feasible parameter set is an interval; the optimal value is piecewise
    linear and concave in x.  This returns the linear piece that touches the
    right end of the interval (the region the exponent theory uses) together
    with the open/closed status of the strict-positivity part (w > 0).
    """
    if program.parameter is None or x_value is not None:
        x = None if x_value is None else Fraction(x_value)
        res = _optimise_fixed(program, x)
        if res is None:
            raise LPError("infeasible program")
        val, vertex, active = res
        names = [program.constraints[i].name or str(program.constraints[i]) for i in active]
        return ExponentSolution(vertex.get("u"), LinearExpr(val, Fraction(0)),
                                (x, x) if x is not None else (Fraction(0), Fraction(0)), (False, False),
                                names, vertex, program)
    bps = _parametric_pieces(program)
    if not bps:
        raise LPError("no vertices: infeasible or unbounded in the parameter")
    lo_cand, hi_cand = bps[0] - 1, bps[-1] + 1
    grid = sorted(set(bps + [lo_cand, hi_cand] + [(a + b) / 2 for a, b in zip(bps, bps[1:])]))
    feas = [(x, _optimise_fixed(program, x)) for x in grid]
    ok = [(x, r) for x, r in feas if r is not None]
    if not ok:
        raise LPError("infeasible program")
    # the feasible parameter interval is convex: its ends are breakpoints
    x_lo, x_hi = ok[0][0], ok[-1][0]
    if x_lo == lo_cand or x_hi == hi_cand:
        raise LPError("parameter range is unbounded")
    # linear piece through the top segment
    xs = [x for x, _ in ok]
    top_a, top_b = xs[-2], xs[-1]
    va, vb = ok[-2][1][0], ok[-1][1][0]
    coef = (vb - va) / (top_b - top_a)
    const = vb - coef * top_b
    # extend the piece left while it stays optimal
    piece_lo = top_b
    for x, r in reversed(ok):
        if r[0] == const + coef * x:
            piece_lo = x
        else:
            break
    w = LinearExpr(const, coef, program.parameter)
    # restrict to w > 0: positivity is what gives a power saving
    lo, lo_open = piece_lo, False
    if coef > 0 and w(piece_lo) <= 0:
        lo, lo_open = -const / coef, True
    # bounds on the parameter alone encode strict hypotheses (x <= 1 is k > 1)
    hi_open = any(set(c.coeffs) == {program.parameter} and c.coeffs[program.parameter] > 0
                  and c.rhs / c.coeffs[program.parameter] == top_b for c in program.constraints)
    mid = (lo + top_b) / 2 if lo < top_b else top_b
    _, vertex, active = _optimise_fixed(program, mid)
    names = [program.constraints[i].name or str(program.constraints[i]) for i in active]
    return ExponentSolution(vertex.get("u"), w, (lo, top_b), (lo_open, hi_open), names, vertex, program)


@dataclass
class BindingReport:
    x: Fraction
    binding: list[str]
    slack: dict

    def to_record(self) -> dict:
        return {"x": str(self.x), "binding": self.binding,
                "slack": {k: str(v) for k, v in self.slack.items()}}


def binding_analysis(program: ExponentProgram, solution: ExponentSolution,
                     x=None) -> BindingReport:
    """Active constraints and slacks at the optimal vertex for a parameter value."""
    if x is None:
        lo, hi = solution.x_interval
        x = (lo + hi) / 2
    x = Fraction(x)
    res = _optimise_fixed(program, x if program.parameter else None)
    if res is None:
        raise LPError(f"infeasible at x={x}")
    _, vertex, _ = res
    point = dict(vertex)
    if program.parameter:
        point[program.parameter] = x
    slack, binding = {}, []
    for i, c in enumerate(program.constraints):
        name = c.name or f"c{i}"
        s = c.slack(point)
        slack[name] = s
        if s == 0:
            binding.append(name)
    return BindingReport(x, binding, slack)


def pin(program: ExponentProgram, var: str, value) -> ExponentProgram:
    """Same program with ``var`` fixed (as two opposite inequalities)."""
    v = Fraction(value)
    extra = (constraint({var: 1}, v, f"{var}_pin_hi"), constraint({var: -1}, -v, f"{var}_pin_lo"))
    cons = tuple(c for c in program.constraints if not (set(c.coeffs) == {var}))
    return ExponentProgram(program.variables, cons + extra, program.objective, program.parameter)


def load_program(path) -> ExponentProgram:
    """JSON: {"variables": [...], "objective": "w", "parameter": "x",
    "constraints": [{"coeffs": {"w": "1", "x": "-1/2"}, "rhs": "-1/2", "name": "..."}]}"""
    with open(path) as fh:
        raw = json.load(fh)
    try:
        cons = tuple(constraint({k: Fraction(str(v)) for k, v in c["coeffs"].items()},
                                Fraction(str(c["rhs"])), c.get("name", f"c{i}"))
                     for i, c in enumerate(raw["constraints"]))
        return ExponentProgram(tuple(raw["variables"]), cons, raw.get("objective", "w"),
                               raw.get("parameter"))
    except (KeyError, TypeError, ValueError) as exc:
        raise LPError(f"malformed program file: {exc}") from exc


def theorem_eta_exponent(k) -> Fraction:
    """w(1/k) of the default system: (7 - 6k)/(14k)."""
    return solve(paper_program()).w_at_k(k)

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhlab.lp import (
    ExponentProgram,
    LPError,
    binding_analysis,
    constraint,
    load_program,
    paper_program,
    pin,
    solve,
    theorem_eta_exponent,
)


def test_paper_system():
    sol = solve(paper_program())
    assert sol.u_star == Fraction(1, 14)
    assert sol.k_interval == (Fraction(1), Fraction(7, 6))
    assert sol.x_open == (True, True)
    for k in (Fraction(21, 20), Fraction(11, 10), Fraction(8, 7)):
        assert sol.w_at_k(k) == (7 - 6 * k) / (14 * k)
        assert sol.w_at_k(k) == 1 / (2 * k) - Fraction(3, 7)


def test_paper_binding_and_slack():
    prog = paper_program()
    sol = solve(prog)
    rep = binding_analysis(prog, sol)
    assert "minor_arc" in rep.binding and "u_max" in rep.binding
    assert rep.slack["minor_arc_2"] == Fraction(1, 28)
    assert Fraction(12, 28) - Fraction(11, 28) == Fraction(1, 28)


def test_theorem_exponent():
    assert theorem_eta_exponent(Fraction(21, 20)) == Fraction(1, 21)


def test_single_constraint():
    prog = ExponentProgram(("w",), (constraint({"w": 1}, 5),), "w", None)
    sol = solve(prog)
    assert sol.w_of_x.const == 5


def test_unbounded_and_infeasible():
    with pytest.raises(LPError):
        solve(ExponentProgram(("w",), (constraint({"w": -1}, 5),), "w", None))
    with pytest.raises(LPError):
        solve(ExponentProgram(("w",), (constraint({"w": 1}, 1), constraint({"w": -1}, -2)), "w", None))


def test_duplicate_constraints_both_binding():
    prog = ExponentProgram(("w", "y"), (
        constraint({"w": 1, "y": 1}, 1, "a"),
        constraint({"w": 1, "y": 1}, 1, "b"),
        constraint({"y": -1}, 0, "y_nonneg"),
    ), "w", None)
    sol = solve(prog)
    assert sol.w_of_x.const == 1
    assert {"a", "b"} <= set(sol.binding)


def test_u_pinned():
    prog = pin(paper_program(), "u", Fraction(1, 20))
    sol = solve(prog)
    x = Fraction(20, 21)
    assert sol.w_of_x(x) == x / 2 - Fraction(1, 2) + Fraction(1, 20)
    assert sol.w_of_x(x) < solve(paper_program()).w_of_x(x)
    rep = binding_analysis(prog, sol, x)
    assert "minor_arc" in rep.binding and "u_max" not in rep.binding


def test_load_program(tmp_path):
    p = tmp_path / "prog.json"
    p.write_text(json.dumps({"variables": ["w", "y"], "objective": "w",
                             "constraints": [{"coeffs": {"w": "1", "y": "1"}, "rhs": "3/2"},
                                             {"coeffs": {"y": "-1"}, "rhs": "-1/4"}]}))
    assert solve(load_program(p)).w_of_x.const == Fraction(5, 4)
    p.write_text(json.dumps({"variables": ["w"]}))
    with pytest.raises(LPError):
        load_program(p)


def grid_optimum(cons, step=1e-4):
    """max w over a w-grid, checking y-feasibility exactly per grid value."""
    w = np.arange(-1.0, 1.0 + step / 2, step)
    lo = np.full_like(w, -np.inf)
    hi = np.full_like(w, np.inf)
    for aw, ay, b in cons:
        if ay > 0:
            hi = np.minimum(hi, (b - aw * w) / ay)
        elif ay < 0:
            lo = np.maximum(lo, (b - aw * w) / ay)
        else:
            bad = aw * w > b
            lo[bad], hi[bad] = np.inf, -np.inf
    ok = lo <= hi + 1e-12
    return w[ok].max()


coef = st.fractions(min_value=-3, max_value=3, max_denominator=12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coef, coef, st.fractions(0, 2, max_denominator=12)), min_size=1, max_size=4))
def test_random_programs_vs_grid(rows):
    box = [(1, 0, 1), (-1, 0, 1), (0, 1, 1), (0, -1, 1)]
    cons = box + [(Fraction(a), Fraction(b), Fraction(c)) for a, b, c in rows]
    prog = ExponentProgram(("w", "y"), tuple(constraint({"w": a, "y": b}, c, f"c{i}")
                                             for i, (a, b, c) in enumerate(cons)), "w", None)
    exact = float(solve(prog).w_of_x.const)
    grid = grid_optimum([(float(a), float(b), float(c)) for a, b, c in cons])
    assert grid <= exact + 1e-9
    assert exact - grid <= 1e-4 + 1e-9


def test_size_limits():
    with pytest.raises(LPError):
        ExponentProgram(tuple("abcde"), (), "a", None)

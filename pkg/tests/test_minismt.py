"""The bundled SMT-LIB solver: SAT core, order theory, server protocol."""

import itertools
import random
from fractions import Fraction

import pytest

from regrobust.minismt.sat import SatSolver, luby
from regrobust.minismt.theory import OrderTheory
from regrobust.smtlib import SolverProcess, parse_model


def test_luby_prefix():
    assert [luby(i) for i in range(15)] == [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]


def brute_sat(num_vars, clauses):
    for bits in itertools.product([False, True], repeat=num_vars):
        ok = True
        for clause in clauses:
            if not any(bits[abs(l) - 1] == (l > 0) for l in clause):
                ok = False
                break
        if ok:
            return True
    return False


def test_sat_simple():
    s = SatSolver()
    a, b = s.new_var(), s.new_var()
    s.add_clause([a, b])
    s.add_clause([-a])
    assert s.solve()
    assert s.model()[b] is True


def test_sat_pigeonhole_unsat():
    # 3 pigeons, 2 holes
    s = SatSolver()
    var = {(p, h): s.new_var() for p in range(3) for h in range(2)}
    for p in range(3):
        s.add_clause([var[(p, h)] for h in range(2)])
    for h in range(2):
        for p1 in range(3):
            for p2 in range(p1 + 1, 3):
                s.add_clause([-var[(p1, h)], -var[(p2, h)]])
    assert not s.solve()


def test_sat_random_against_brute_force():
    rng = random.Random(2024)
    for trial in range(120):
        num_vars = rng.randint(3, 8)
        num_clauses = rng.randint(2, 24)
        clauses = []
        for _ in range(num_clauses):
            width = rng.randint(1, 3)
            clause = [rng.choice([1, -1]) * rng.randint(1, num_vars) for _ in range(width)]
            clauses.append(clause)
        s = SatSolver()
        for _ in range(num_vars):
            s.new_var()
        ok = True
        for c in clauses:
            ok = s.add_clause(list(c)) and ok
        got = s.solve() if ok else False
        want = brute_sat(num_vars, clauses)
        assert got == want, (trial, clauses)
        if got:
            model = s.model()
            for c in clauses:
                assert any(model[abs(l)] == (l > 0) for l in c)


def test_sat_incremental_additions():
    s = SatSolver()
    a, b = s.new_var(), s.new_var()
    s.add_clause([a, b])
    assert s.solve()
    s.add_clause([-a])
    assert s.solve()
    assert s.model()[b]
    s.add_clause([-b])
    assert not s.solve()


# ------------------------------------------------------------------- theory

def term(name=None, off=0):
    return (name, Fraction(off))


def test_theory_feasible_chain():
    th = OrderTheory()
    ok, values = th.check([
        (term("x"), "<", term("y")),
        (term("y"), "<", term("z")),
        (term("z"), "<=", term(None, 10)),
        (term("x"), ">", term(None, 3)),
    ])
    assert ok
    assert 3 < values["x"] < values["y"] < values["z"] <= 10


def test_theory_conflict_core_is_a_cycle():
    th = OrderTheory()
    lits = [
        (term("a"), "<", term("b")),
        (term("b"), "<", term("c")),
        (term("c"), "<", term("a")),
        (term("a"), "<=", term(None, 100)),  # irrelevant
    ]
    ok, core = th.check(lits)
    assert not ok
    assert set(core) <= {0, 1, 2}
    assert len(core) == 3


def test_theory_equalities_and_strictness():
    th = OrderTheory()
    ok, values = th.check([
        (term("x"), "=", term("y")),
        (term("y"), "<=", term(None, 5)),
        (term("x"), ">=", term(None, 5)),
    ])
    assert ok and values["x"] == values["y"] == Fraction(5)
    ok, _core = th.check([
        (term("x"), "=", term("y")),
        (term("x"), "<", term("y")),
    ])
    assert not ok


def test_theory_disequality_dodge():
    th = OrderTheory()
    ok, values = th.check([
        (term("x"), ">=", term(None, 0)),
        (term("x"), "<=", term(None, 1)),
        (term("x"), "!=", term(None, 0)),
        (term("x"), "!=", term(None, 1)),
    ])
    assert ok
    assert 0 < values["x"] < 1 and values["x"] not in (0, 1)


def test_theory_offsets():
    th = OrderTheory()
    ok, values = th.check([
        (term("x"), "<", term("y", -3)),  # x < y - 3
        (term("y"), "<=", term(None, 0)),
    ])
    assert ok
    assert values["x"] < values["y"] - 3 and values["y"] <= 0


# ------------------------------------------------------------------- server

def test_server_end_to_end_arith():
    with SolverProcess() as s:
        s.send("(set-logic QF_LRA)")
        s.send("(declare-const x Real)(declare-const y Real)")
        s.send("(assert (< x y))(assert (<= y (/ 1 2)))(assert (> x (- 1)))")
        assert s.check_sat() == "sat"
        m = parse_model(s.get_model_text())
        assert -1 < m["x"] < m["y"] <= Fraction(1, 2)
        s.send("(assert (> x y))")
        assert s.check_sat() == "unsat"


def test_server_boolean_structure():
    with SolverProcess() as s:
        s.send("(declare-const a Bool)(declare-const b Bool)(declare-const c Bool)")
        s.send("(assert (=> a (and b c)))(assert (or a (not b)))(assert (= b true))")
        assert s.check_sat() == "sat"
        m = parse_model(s.get_model_text())
        assert m["b"] is True
        assert m["a"] is True and m["c"] is True


def test_server_push_pop():
    with SolverProcess() as s:
        s.send("(declare-const p Bool)")
        s.send("(assert p)")
        s.send("(push 1)")
        s.send("(assert (not p))")
        assert s.check_sat() == "unsat"
        s.send("(pop 1)")
        assert s.check_sat() == "sat"


def test_server_error_reply_keeps_serving():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "regrobust.minismt"],
        input="(frobnicate)\n(declare-const p Bool)\n(assert p)\n(check-sat)\n(exit)\n",
        capture_output=True,
        text=True,
        timeout=60,
    )
    lines = [l for l in proc.stdout.splitlines() if l.strip()]
    assert lines[0].startswith("(error")
    assert lines[1] == "sat"

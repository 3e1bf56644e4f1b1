"""Core automaton semantics: runs, determinism, completion, complement, splitting."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regrobust.automata import (
    Dra,
    MultipleEnabledTransitions,
    Transition,
    accepts,
    check_determinism,
    complement,
    complete,
    run,
    split_disequalities,
)
from regrobust.benchmarks import ground_truth
from regrobust.guards import CURR_OP, Assignment, GuardAtom, const, reg


def hhhl():
    return ground_truth("S9")


V_UPTREND = tuple(map(Fraction, (0, -1, 5, 3, 7, 9, 6, 8)))
V_REJECT = tuple(map(Fraction, (0, -1, 5, 3, 7, 9, 6, 3)))


def test_hhhl_accepts_uptrend_sequence():
    assert run(hhhl(), V_UPTREND).accepted


def test_hhhl_rejects_flipped_sequence_by_run_death():
    result = run(hhhl(), V_REJECT)
    assert not result.accepted
    assert result.died_at == 7  # r1=3 blocks the loop, r3=6 blocks the exit


def test_hhhl_trace_registers():
    result = run(hhhl(), V_UPTREND)
    final = result.final
    assert final.state == 3
    assert final.registers == (Fraction(6), Fraction(9), Fraction(8))


def test_empty_sequence_accepted_iff_initial_accepting():
    a = hhhl()
    assert not run(a, ()).accepted
    b = ground_truth("S1")
    assert run(b, ()).accepted


def test_trace_length_bounded():
    result = run(hhhl(), V_UPTREND)
    assert len(result.trace) == len(V_UPTREND) + 1


def test_run_rejects_nondeterministic_machine():
    bad = Dra(1, 0, 0, {0}, [
        Transition(0, (), Assignment(), 0),
        Transition(0, (), Assignment(), 0),
    ])
    with pytest.raises(MultipleEnabledTransitions):
        run(bad, (Fraction(1),))


def test_check_determinism_hhhl_clean():
    assert check_determinism(hhhl()) == []


def test_check_determinism_reports_top_overlap():
    bad = Dra(2, 0, 0, {0}, [
        Transition(0, (), Assignment(), 0),
        Transition(0, (), Assignment(), 1),
    ])
    violations = check_determinism(bad)
    assert len(violations) == 1
    assert violations[0].state == 0


def test_check_determinism_disjoint_halflines():
    a = Dra(2, 1, 0, {0}, [
        Transition(0, (GuardAtom(reg(0), "<", CURR_OP),), Assignment(), 0),
        Transition(0, (GuardAtom(reg(0), ">", CURR_OP),), Assignment(), 1),
    ])
    assert check_determinism(a) == []


def test_check_determinism_witness_is_real():
    # overlapping guards r1 <= curr and curr <= r1 (at equality)
    a = Dra(2, 1, 0, {0}, [
        Transition(0, (GuardAtom(reg(0), "<=", CURR_OP),), Assignment(), 0),
        Transition(0, (GuardAtom(CURR_OP, "<=", reg(0)),), Assignment(), 1),
    ])
    violations = check_determinism(a)
    assert violations
    v = violations[0]
    from regrobust.guards import Valuation, guard_holds

    val = Valuation(v.witness_registers, {"curr": v.witness_letter})
    assert guard_holds(v.first.guard, val) and guard_holds(v.second.guard, val)


GRID = [Fraction(x) for x in (-1, 0, 1, 2, 3)]


def _short_words(max_len, letters=GRID):
    for n in range(0, max_len + 1):
        yield from itertools.product(letters, repeat=n)


@pytest.mark.parametrize("bench", ["S1", "S9", "L1", "S5"])
def test_complement_partitions_exhaustively(bench):
    a = ground_truth(bench)
    comp = complement(a)
    for w in _short_words(4):
        assert accepts(a, w) != accepts(comp, w)


def test_complement_of_complement_matches_complete():
    a = hhhl()
    cc = complement(complement(a))
    total = complete(a)
    for w in _short_words(3):
        assert accepts(cc, w) == accepts(total, w)


@pytest.mark.parametrize("bench", ["S9", "L2", "S7"])
def test_completion_no_run_death(bench):
    total = complete(ground_truth(bench))
    for w in _short_words(4, letters=[Fraction(x) for x in (-1, 0, 2)]):
        assert run(total, w).died_at is None


def test_completion_preserves_language():
    a = hhhl()
    total = complete(a)
    for w in _short_words(4):
        assert accepts(a, w) == accepts(total, w)
    assert run(total, V_REJECT).accepted is False
    assert run(total, V_REJECT).died_at is None


def test_completion_single_equality_loop():
    a = Dra(1, 0, 0, {0}, [
        Transition(0, (GuardAtom(CURR_OP, "=", const(0)),), Assignment(), 0),
    ])
    total = complete(a)
    # the sink must catch curr < 0 and curr > 0
    assert run(total, (Fraction(1),)).final.state == 1
    assert run(total, (Fraction(-1),)).final.state == 1
    assert run(total, (Fraction(0),)).final.state == 0
    assert check_determinism(total) == []


def test_split_disequalities_basic():
    a = Dra(2, 1, 0, {1}, [
        Transition(0, (GuardAtom(reg(0), "!=", CURR_OP),), Assignment(), 1),
    ])
    s = split_disequalities(a)
    assert len(s.transitions) == 2
    ops = sorted(t.guard[0].op for t in s.transitions)
    assert ops == ["<", ">"]
    for w in _short_words(2):
        assert accepts(a, w) == accepts(s, w)
    assert check_determinism(s) == []


def test_split_disequalities_noop_when_clean():
    a = hhhl()
    assert split_disequalities(a).transitions == a.transitions


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=0, max_size=6))
def test_complement_partition_random(word):
    a = hhhl()
    comp = complement(a)
    w = tuple(Fraction(x) for x in word)
    assert accepts(a, w) != accepts(comp, w)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-2, 4), min_size=0, max_size=6))
def test_split_language_random(word):
    a = Dra(2, 1, 0, {1}, [
        Transition(0, (GuardAtom(reg(0), "!=", CURR_OP),), Assignment(((0, CURR_OP),)), 1),
        Transition(1, (GuardAtom(reg(0), "!=", CURR_OP),), Assignment(((0, CURR_OP),)), 0),
    ])
    s = split_disequalities(a)
    w = tuple(Fraction(x) for x in word)
    assert accepts(a, w) == accepts(s, w)

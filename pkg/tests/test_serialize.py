"""JSON round trips, schema shape, parse errors, rational parsing."""

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regrobust.benchmarks import BENCHMARK_IDS, ground_truth
from regrobust.raa import build_metric
from regrobust.rational import INF, ParseError, format_rational, parse_rational, parse_sequence
from regrobust.serialize import parse, serialize


def test_parse_rational_forms():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational("-2") == Fraction(-2)
    assert parse_rational("0.1") == Fraction(1, 10)  # exact decimal
    assert parse_rational("-1.25") == Fraction(-5, 4)
    assert parse_rational(7) == Fraction(7)


def test_parse_rational_rejects_bad_input():
    for bad in ("", "x", "1/0", "1//2"):
        with pytest.raises(ParseError):
            parse_rational(bad)
    with pytest.raises(ParseError):
        parse_rational(0.1)  # floats are refused, not silently approximated


def test_format_round_trip():
    for x in (Fraction(3, 4), Fraction(-7, 3), Fraction(0), Fraction(10)):
        assert parse_rational(format_rational(x)) == x


def test_parse_sequence():
    assert parse_sequence("0,-1,5,3/2") == (Fraction(0), Fraction(-1), Fraction(5), Fraction(3, 2))
    with pytest.raises(ParseError):
        parse_sequence("")


def test_infinity_semantics():
    assert INF > Fraction(10**9)
    assert not (INF < Fraction(1))
    assert INF + Fraction(3) is INF
    assert Fraction(3) + INF is INF
    assert INF == INF and INF >= INF


@pytest.mark.parametrize("bench", BENCHMARK_IDS)
def test_dra_round_trip(bench):
    dra = ground_truth(bench)
    assert parse(serialize(dra)) == dra


@pytest.mark.parametrize("kind", ["hamming", "manhattan", "edit", "dtw", "last_letter", "threshold_hamming"])
def test_raa_round_trip(kind):
    raa = build_metric(kind, c=Fraction(3, 2)) if kind == "threshold_hamming" else build_metric(kind)
    assert parse(serialize(raa)) == raa


def test_schema_shape():
    doc = json.loads(serialize(ground_truth("L1")))
    assert doc["kind"] == "dra"
    assert doc["states"] == 2 and doc["registers"] == 1 and doc["initial"] == 0
    t0 = doc["transitions"][0]
    assert set(t0) == {"from", "to", "guard", "assign"}
    atom = t0["guard"][0]
    assert atom["lhs"] == {"const": "0/1"}
    assert atom["op"] == "<="
    assert atom["rhs"] == {"curr": None}
    assert t0["assign"][0] == {"target": 0, "src": {"curr": None}}


def test_raa_schema_shape():
    doc = json.loads(serialize(build_metric("manhattan")))
    assert doc["kind"] == "raa"
    t = doc["transitions"][0]
    assert t["mov"] == "both"
    assert set(t["acc"]) == {"a1", "a2", "b"}
    kinds = {next(iter(a["lhs"])) for a in t["guard"]}
    assert kinds <= {"curr1", "curr2", "reg", "const"}


def test_parse_errors_carry_location():
    with pytest.raises(ParseError) as err:
        parse("{not json")
    assert "line" in str(err.value)
    with pytest.raises(ParseError):
        parse(json.dumps({"kind": "dfa"}))
    bad = json.loads(serialize(ground_truth("L1")))
    bad["transitions"][0]["guard"][0]["lhs"] = {"register": 0}
    with pytest.raises(ParseError) as err:
        parse(json.dumps(bad))
    assert "transitions[0]" in str(err.value)


@settings(max_examples=30, deadline=None)
@given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_rational_string_round_trip(num, den):
    x = Fraction(num, den)
    assert parse_rational(format_rational(x)) == x

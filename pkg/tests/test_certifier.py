"""Certifier: formula-pinned statistics, Algorithm-2 branches, transports,
extraction loop."""

import json
import sys
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import pytest

from regrobust.automata import Dra, Transition, run
from regrobust.benchmarks import build_sampler, ground_truth
from regrobust.certifier import (
    Accept,
    CertificationParams,
    ExtractionBudget,
    ExtractionBudgetExhausted,
    FunctionOracle,
    InProcessDraOracle,
    NonRobust,
    ProcessOracle,
    Refine,
    accept_bounds,
    d_max,
    extraction_loop,
    format_bound,
    run_certification,
    sample_size,
    stability_check,
)
from regrobust.guards import Assignment
from regrobust.learners.search import SampleSet, SearchConfig, SearchSpace, hill_climb
from regrobust.raa import build_metric, evaluate
from regrobust.rational import INF

ORACLE_SCRIPT = str(Path(__file__).resolve().parent / "oracle_stdio.py")


# -------------------------------------------------------- pinned statistics

def test_sample_size_reference_parameters():
    assert sample_size(Fraction(1, 20), Fraction(1, 20)) == 600


def test_sample_size_collapsed():
    # epsilon = 1/e is irrational; approximate the collapse with ln(4)/(2*(1/2)^2) style pins
    assert sample_size(Fraction(1, 100), Fraction(1, 10)) == 231


def test_sample_size_more_values():
    # ln(10) / (2 * 0.01) = 115.129...
    assert sample_size(Fraction(1, 10), Fraction(1, 10)) == 116


def test_d_max_values():
    assert d_max(600, Fraction(19, 20)) == 30
    assert d_max(600, 1) == 0
    assert d_max(0, Fraction(19, 20)) == 0


def test_accept_bounds_pinned_value():
    lam, tplus, tminus = accept_bounds(600, 300, 300, Fraction(1, 20))
    # independent recomputation: 1 - 0.05 ** (1/600)
    expected = Decimal(1) - Decimal("0.05") ** (Decimal(1) / Decimal(600))
    assert abs(lam - expected) < Decimal("1e-9")
    assert tplus == tminus
    assert format_bound(lam).startswith("0.00498")


def test_accept_bounds_zero_class_absent():
    lam, tplus, tminus = accept_bounds(10, 0, 10, Fraction(1, 20))
    assert tplus is None and tminus is not None


def test_accept_bounds_eta_one():
    lam, tplus, tminus = accept_bounds(5, 2, 3, Fraction(1, 1))
    assert lam == 0 and tplus is not None


def test_params_validation():
    with pytest.raises(ValueError):
        CertificationParams(p=Fraction(19, 20), epsilon=Fraction(1, 20),
                            gamma=Fraction(1, 10), delta=1)  # gamma > 1 - p
    params = CertificationParams(p=Fraction(19, 20), epsilon=Fraction(1, 20),
                                 gamma=Fraction(1, 20), delta=1)
    assert params.gamma == Fraction(1, 20)


# ------------------------------------------------------------ stability

def universal():
    return Dra(1, 0, 0, {0}, [Transition(0, (), Assignment(), 0)])


V_UPTREND = tuple(map(Fraction, (0, -1, 5, 3, 7, 9, 6, 8)))


def test_stability_hhhl_threshold():
    s9 = ground_truth("S9")
    ll = build_metric("last_letter")
    assert stability_check(s9, V_UPTREND, ll, Fraction(5)).stable
    res = stability_check(s9, V_UPTREND, ll, Fraction(6))
    assert not res.stable
    assert res.flip_witness[-1] <= 3


def test_stability_universal_always_stable():
    assert stability_check(universal(), (Fraction(1), Fraction(2)), build_metric("last_letter"), Fraction(100)).stable


# --------------------------------------------------------------- algorithm 2

def _small_params(**overrides):
    kwargs = dict(p=Fraction(9, 10), epsilon=Fraction(35, 100), gamma=Fraction(1, 10), delta=Fraction(1, 2))
    kwargs.update(overrides)
    return CertificationParams(**kwargs)


def test_certification_accept_self_oracle():
    dra = ground_truth("S2")
    sampler = build_sampler("S2", max_length=6, seed=3)
    params = _small_params()
    result = run_certification(InProcessDraOracle(dra), dra, sampler, build_metric("last_letter"), params)
    assert isinstance(result, Accept)
    assert result.m_plus > 0 and result.m_minus > 0
    assert result.agreement_lb == params.p - params.gamma
    assert result.n == sample_size(params.epsilon, params.gamma)


def test_certification_refine_on_heavy_disagreement():
    dra = ground_truth("S2")
    sampler = build_sampler("S2", max_length=6, seed=5)
    oracle = FunctionOracle(lambda seq: 0 if run(dra, seq).accepted else 1)  # total disagreement
    result = run_certification(oracle, dra, sampler, build_metric("last_letter"), _small_params())
    assert isinstance(result, Refine)
    n = sample_size(Fraction(35, 100), Fraction(1, 10))
    assert len(result.counterexamples) == d_max(n, Fraction(9, 10)) + 1


def test_certification_nonrobust_with_fragile_oracle():
    # hypothesis accepts everything, so it is stable; make it disagree nowhere
    # but pair it with a fragile hypothesis instead:
    dra = ground_truth("S2")
    truth = InProcessDraOracle(dra)
    # delta large enough that the hypothesis is unstable at sampled points;
    # the oracle flips exactly where the automaton flips, so the witness is genuine
    params = _small_params(delta=Fraction(3, 2))
    sampler = build_sampler("S2", max_length=6, seed=11)
    result = run_certification(truth, dra, sampler, build_metric("last_letter"), params)
    assert isinstance(result, NonRobust)
    assert run(dra, result.cex).accepted != run(dra, result.w).accepted
    assert result.distance < Fraction(3, 2)
    assert evaluate(build_metric("last_letter"), result.w, result.cex) == result.distance


def test_certification_spurious_refine():
    # hypothesis unstable at delta, oracle constant 1: flips are spurious
    dra = ground_truth("S2")
    oracle = FunctionOracle(lambda seq: 1 if run(dra, seq).accepted else 1)
    sampler = _positives_only_sampler()
    params = _small_params(delta=Fraction(3, 2))
    result = run_certification(oracle, dra, sampler, build_metric("last_letter"), params)
    assert isinstance(result, Refine)
    (cex, label), = result.counterexamples
    assert label == 1  # the oracle's label travels with the counterexample


def _positives_only_sampler():
    base = build_sampler("S2", noise=0, max_length=6, seed=21)
    return base


def test_transcript_determinism():
    dra = ground_truth("S1")
    params = _small_params()
    outs = []
    for _ in range(2):
        sampler = build_sampler("S1", max_length=6, seed=9)
        transcript = []
        run_certification(InProcessDraOracle(dra), dra, sampler, build_metric("last_letter"), params, transcript)
        outs.append(json.dumps(transcript, sort_keys=True))
    assert outs[0] == outs[1]


def test_process_oracle_round_trip():
    oracle = ProcessOracle([sys.executable, ORACLE_SCRIPT, "S1"])
    try:
        assert oracle.label((Fraction(1), Fraction(2))) == 1
        assert oracle.label((Fraction(2), Fraction(1))) == 0
        # cached: no extra query
        count = oracle.query_count
        oracle.label((Fraction(1), Fraction(2)))
        assert oracle.query_count == count
    finally:
        oracle.close()


def test_tcp_oracle_round_trip():
    import socket
    import threading

    from regrobust.certifier import TcpOracle

    dra = ground_truth("S1")
    server = socket.create_server(("127.0.0.1", 0))
    port = server.getsockname()[1]

    def serve_one():
        conn, _addr = server.accept()
        with conn:
            reader = conn.makefile("r")
            writer = conn.makefile("w")
            writer.write(json.dumps({"protocol": "regrobust-oracle/1"}) + "\n")
            writer.flush()
            for line in reader:
                doc = json.loads(line)
                from regrobust.rational import parse_rational

                seq = tuple(parse_rational(x) for x in doc["seq"])
                writer.write(json.dumps({"id": doc["id"], "label": int(run(dra, seq).accepted)}) + "\n")
                writer.flush()

    thread = threading.Thread(target=serve_one, daemon=True)
    thread.start()
    oracle = TcpOracle("127.0.0.1", port)
    try:
        assert oracle.label((Fraction(1), Fraction(3))) == 1
        assert oracle.label((Fraction(3), Fraction(1))) == 0
    finally:
        oracle.close()
        server.close()


# ----------------------------------------------------------- extraction loop

def _localsearch_learner(records):
    samples = SampleSet.from_records(records)
    space = SearchSpace(2, 1)
    cfg = SearchConfig(max_iterations=30_000, restarts=3, rng_seed=7)
    return hill_climb(samples, space, cfg).best


def test_extraction_loop_accepts_on_ground_truth():
    oracle = InProcessDraOracle(ground_truth("S2"))
    sampler = build_sampler("S2", max_length=6, seed=33)
    params = _small_params(delta=Fraction(1, 2))
    outcome = extraction_loop(
        _localsearch_learner, oracle, sampler, build_metric("last_letter"), params,
        ExtractionBudget(max_rounds=5, wall_seconds=600, seed_samples=60),
    )
    assert isinstance(outcome.result, Accept)
    assert outcome.rounds <= 5


def test_extraction_loop_zero_budget():
    oracle = InProcessDraOracle(ground_truth("S1"))
    sampler = build_sampler("S1", max_length=6, seed=3)
    with pytest.raises(ExtractionBudgetExhausted):
        extraction_loop(
            _localsearch_learner, oracle, sampler, build_metric("last_letter"), _small_params(),
            ExtractionBudget(max_rounds=0, wall_seconds=600, seed_samples=10),
        )


def test_accept_transcript_idempotent():
    # Accept implies zero instability events: re-running the stability check
    # over the recorded agreed samples finds no flip
    from regrobust.rational import parse_rational

    dra = ground_truth("S2")
    sampler = build_sampler("S2", max_length=6, seed=3)
    params = _small_params()
    transcript = []
    result = run_certification(InProcessDraOracle(dra), dra, sampler,
                               build_metric("last_letter"), params, transcript)
    assert isinstance(result, Accept)
    agreed = [
        tuple(parse_rational(x) for x in ev["seq"])
        for ev in transcript
        if ev.get("event") == "draw" and ev["a"] == ev["oracle"]
    ]
    assert agreed
    for w in agreed:
        assert stability_check(dra, w, build_metric("last_letter"), params.delta).stable

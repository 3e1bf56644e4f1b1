"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` (criteria 2, 3, 6 and 8 are
the long ones; the full suite takes roughly half an hour on two cores).
"""

import itertools
import multiprocessing
import random
import sys
import time
from decimal import Decimal
from fractions import Fraction

import pytest

from bruteforce import brute_min_flip_cost
from criterion2_worker import GRID, check_chunk
from regrobust.automata import Dra, Transition, check_determinism, run
from regrobust.benchmarks import build_sampler, generate, ground_truth
from regrobust.certifier import (
    Accept,
    CertificationParams,
    ExtractionBudget,
    FunctionOracle,
    InProcessDraOracle,
    NonRobust,
    Refine,
    accept_bounds,
    d_max,
    extraction_loop,
    run_certification,
    sample_size,
)
from regrobust.guards import Assignment
from regrobust.learners.search import SampleSet, SearchConfig, SearchSpace, hill_climb
from regrobust.learners.smt_learner import SynthesisBudget, synthesize, validate_consistency
from regrobust.raa import build_metric, evaluate
from regrobust.rational import INF
from regrobust.verifier import RobustnessQuery, check_robustness, min_flip_cost
from test_raa_metrics import (
    closed_hamming,
    closed_last_letter,
    closed_manhattan,
    closed_threshold_hamming,
)
from test_verifier import random_dra

V_UPTREND = tuple(map(Fraction, (0, -1, 5, 3, 7, 9, 6, 8)))


def report(criterion, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {criterion}] {status} - {detail}", file=sys.stderr, flush=True)
    assert ok, f"criterion {criterion}: {detail}"


# ---------------------------------------------------------------- criterion 1

def test_criterion_1_running_example_threshold():
    s9 = ground_truth("S9")
    ll = build_metric("last_letter")
    start = time.monotonic()
    robust5 = check_robustness(RobustnessQuery(s9, V_UPTREND, ll, Fraction(5)))
    nonrobust51 = check_robustness(RobustnessQuery(s9, V_UPTREND, ll, Fraction(51, 10)))
    cost = min_flip_cost(s9, V_UPTREND, ll)
    elapsed = time.monotonic() - start
    ok = (
        robust5.robust
        and not nonrobust51.robust
        and cost == Fraction(5)
        and nonrobust51.witness.sequence[-1] <= 3
        and elapsed < 1.0
    )
    report(1, ok, f"robust@5={robust5.robust} nonrobust@5.1={not nonrobust51.robust} "
                  f"min_flip_cost={cost} witness_last={nonrobust51.witness.sequence[-1]} "
                  f"runtime={elapsed:.3f}s")


# ---------------------------------------------------------------- criterion 2

@pytest.mark.slow
def test_criterion_2_distance_oracles_exhaustive():
    words = [()]
    for n in range(1, 7):
        words.extend(itertools.product(GRID, repeat=n))
    total_pairs = len(words) ** 2
    start = time.monotonic()
    results = {}
    for kind in ("edit", "dtw"):
        half = len(words) // 2
        chunks = [(kind, words[:half]), (kind, words[half:])]
        with multiprocessing.Pool(2) as pool:
            out = pool.map(check_chunk, chunks)
        pairs = sum(o[0] for o in out)
        mismatches = sum(o[1] for o in out)
        examples = [e for o in out for e in o[2]]
        results[kind] = (pairs, mismatches, examples)
    elapsed = time.monotonic() - start
    ok = all(p == total_pairs and m == 0 for p, m, _ in results.values())

    # closed forms on 1000 random pairs
    rng = random.Random(20240)
    metrics = {
        "hamming": (build_metric("hamming"), closed_hamming),
        "manhattan": (build_metric("manhattan"), closed_manhattan),
        "last_letter": (build_metric("last_letter"), closed_last_letter),
        "threshold_hamming": (
            build_metric("threshold_hamming", c=Fraction(3, 2)),
            lambda v, w: closed_threshold_hamming(v, w, Fraction(3, 2)),
        ),
    }
    closed_ok = True
    for _ in range(1000):
        n = rng.randint(1, 6)
        m = n if rng.random() < 0.85 else rng.randint(1, 6)
        v = tuple(Fraction(rng.randint(-8, 8), rng.choice((1, 2, 4))) for _ in range(n))
        w = tuple(Fraction(rng.randint(-8, 8), rng.choice((1, 2, 4))) for _ in range(m))
        for name, (raa, closed) in metrics.items():
            if evaluate(raa, v, w) != closed(v, w):
                closed_ok = False
    report(2, ok and closed_ok,
           f"edit pairs={results['edit'][0]} mismatches={results['edit'][1]}; "
           f"dtw pairs={results['dtw'][0]} mismatches={results['dtw'][1]}; "
           f"closed-form random pairs ok={closed_ok}; {elapsed/60:.1f} min")


# ---------------------------------------------------------------- criterion 3

@pytest.mark.slow
def test_criterion_3_bruteforce_oracle_agreement():
    metrics = ("hamming", "last_letter", "manhattan")
    checked = 0
    witnesses_verified = 0
    start = time.monotonic()
    for seed in range(50):
        rng = random.Random(1000 + seed)
        dra = random_dra(rng)
        assert check_determinism(dra) == []
        length = rng.randint(2, 4 if seed % 3 else 3)
        v = tuple(Fraction(rng.randint(-1, 3)) for _ in range(length))
        for kind in metrics:
            metric = build_metric(kind)
            oracle = brute_min_flip_cost(dra, v, kind)
            got = min_flip_cost(dra, v, metric)
            assert got == oracle, (seed, kind, v, got, oracle)
            checked += 1
            probes = [Fraction(1, 2), Fraction(1), Fraction(5, 2)]
            if oracle is not INF:
                probes += [oracle + Fraction(1, 4), oracle]
                if oracle > 0:
                    probes.append(oracle / 2)
            for delta in probes:
                if delta <= 0:
                    continue
                verdict = check_robustness(RobustnessQuery(dra, v, metric, delta))
                expected_robust = not (oracle is not INF and oracle < delta)
                assert verdict.robust == expected_robust, (seed, kind, v, delta)
                if not verdict.robust:
                    wit = verdict.witness
                    assert run(dra, wit.sequence).accepted != run(dra, v).accepted
                    cost = evaluate(metric, v, wit.sequence)
                    assert cost is not INF and cost < delta
                    witnesses_verified += 1
    report(3, True, f"50 seeded DRAs x {len(metrics)} metrics: {checked} min-cost agreements, "
                    f"{witnesses_verified} witnesses re-verified, {time.monotonic()-start:.0f}s")


# ---------------------------------------------------------------- criterion 4

def test_criterion_4_monotonicity_ladder():
    s9 = ground_truth("S9")
    ll = build_metric("last_letter")
    verdicts = {}
    for d in range(1, 11):
        verdicts[d] = check_robustness(RobustnessQuery(s9, V_UPTREND, ll, Fraction(d))).robust
    ok = all(verdicts[d] == (d <= 5) for d in range(1, 11))
    report(4, ok, f"robust exactly for delta <= 5: {verdicts}")


# ---------------------------------------------------------------- criterion 5

@pytest.mark.slow
def test_criterion_5_constraint_learner():
    lines = []
    ok = True
    for bench in ("L1", "S1", "S2"):
        sampler = build_sampler(bench, noise=Fraction(1, 2), max_length=8, seed=7)
        samples = SampleSet.from_records(generate(sampler, 25, 25))
        start = time.monotonic()
        dra = synthesize(
            samples,
            SynthesisBudget(wall_seconds=60),
            max_states=2,
            max_registers=1,
            max_constants=2,
        )
        elapsed = time.monotonic() - start
        good = validate_consistency(dra, samples) and check_determinism(dra) == []
        ok = ok and good and elapsed < 60
        lines.append(f"{bench}:{elapsed:.1f}s consistent+deterministic={good}")
    report(5, ok, "; ".join(lines))


# ---------------------------------------------------------------- criterion 6

@pytest.mark.slow
def test_criterion_6_local_search():
    lines = []
    ok = True
    for bench in ("S1", "S2", "S3", "S4"):
        sampler = build_sampler(bench, noise=Fraction(1, 2), max_length=8, seed=100)
        samples = SampleSet.from_records(generate(sampler, 250, 250))
        space = SearchSpace(num_states=2, num_registers=1, constants=(), max_cells=3)
        cfg = SearchConfig(max_iterations=100_000, restarts=5, rng_seed=42, stop_on_perfect=False)
        result = hill_climb(samples, space, cfg)
        good = sum(1 for s in result.restart_scores if s >= Fraction(95, 100))
        ok = ok and good >= 4
        lines.append(f"{bench}:{good}/5 restarts >= 0.95 (best {result.best_score})")
    report(6, ok, "; ".join(lines))


# ---------------------------------------------------------------- criterion 7

@pytest.mark.slow
def test_criterion_7_certifier_statistics():
    n = sample_size(Fraction(1, 20), Fraction(1, 20))
    dm = d_max(600, Fraction(19, 20))
    lam, _tp, _tm = accept_bounds(600, 300, 300, Fraction(1, 20))
    expected_lam = Decimal(1) - Decimal("0.05") ** (Decimal(1) / Decimal(600))
    formulas_ok = n == 600 and dm == 30 and abs(lam - expected_lam) < Decimal("1e-9")

    # Hoeffding simulation: a stable hypothesis, an oracle with true
    # disagreement 0.15, 200 seeded certification runs
    universal = Dra(1, 0, 0, {0}, [Transition(0, (), Assignment(), 0)])
    params = CertificationParams(
        p=Fraction(19, 20), epsilon=Fraction(1, 20), gamma=Fraction(1, 20), delta=Fraction(1, 2)
    )
    metric = build_metric("hamming")
    accepts = 0
    start = time.monotonic()
    for run_idx in range(200):
        rng = random.Random(31337 + run_idx)
        oracle = FunctionOracle(lambda seq, r=rng: 0 if r.random() < 0.15 else 1)
        sampler = build_sampler("S1", max_length=5, seed=500 + run_idx)
        result = run_certification(oracle, universal, sampler, metric, params)
        if isinstance(result, Accept):
            accepts += 1
    rate = accepts / 200
    ok = formulas_ok and rate <= 0.08
    report(7, ok, f"n=600({n==600}) d_max=30({dm==30}) lambda_ub ok({abs(lam-expected_lam) < Decimal('1e-9')}); "
                  f"Hoeffding accept rate {rate:.3f} <= 0.08 over 200 runs ({time.monotonic()-start:.0f}s)")


# ---------------------------------------------------------------- criterion 8

def _search_learner(constants=(), seed=7, states=2):
    def learn(records):
        samples = SampleSet.from_records(records)
        space = SearchSpace(states, 1, constants)
        cfg = SearchConfig(max_iterations=60_000, restarts=6, rng_seed=seed)
        return hill_climb(samples, space, cfg).best

    return learn


@pytest.mark.slow
def test_criterion_8_extraction_end_to_end():
    start = time.monotonic()
    params = CertificationParams(
        p=Fraction(19, 20), epsilon=Fraction(1, 20), gamma=Fraction(1, 20), delta=Fraction(1)
    )
    oracle = InProcessDraOracle(ground_truth("S2"))
    sampler = build_sampler("S2", max_length=8, seed=33)
    outcome = extraction_loop(
        _search_learner(), oracle, sampler, build_metric("last_letter"), params,
        ExtractionBudget(max_rounds=5, wall_seconds=600, seed_samples=80),
    )
    elapsed = time.monotonic() - start
    accept_ok = isinstance(outcome.result, Accept) and outcome.rounds <= 5 and elapsed < 600

    # fragile mock: ground truth S2 restricted to first letter <= 0; its
    # decision boundary crosses the sampled region, so a genuine witness exists
    s2 = ground_truth("S2")

    def fragile(seq):
        return 1 if (run(s2, seq).accepted and seq[0] <= 0) else 0

    oracle2 = FunctionOracle(fragile)
    sampler2 = build_sampler("S2", max_length=6, seed=44)
    outcome2 = None
    try:
        outcome2 = extraction_loop(
            _search_learner(constants=(Fraction(0),), seed=11), oracle2, sampler2,
            build_metric("last_letter"), params,
            ExtractionBudget(max_rounds=6, wall_seconds=600, seed_samples=120),
        )
        fragile_ok = isinstance(outcome2.result, NonRobust)
        if fragile_ok:
            r = outcome2.result
            flip = run(outcome2.dra, r.w).accepted != run(outcome2.dra, r.cex).accepted
            oracle_flip = fragile(r.w) != fragile(r.cex)
            fragile_ok = flip and oracle_flip and r.distance < params.delta
    except Exception as exc:  # budget exhaustion counts as failure
        fragile_ok = False
        print(f"fragile case error: {exc}", file=sys.stderr)
    report(8, accept_ok and fragile_ok,
           f"ground-truth S2 accept in {outcome.rounds} rounds ({elapsed:.0f}s); "
           f"fragile oracle non-robust={fragile_ok}"
           + (f" rounds={outcome2.rounds}" if outcome2 else ""))


# ---------------------------------------------------------------- criterion 9

@pytest.mark.slow
def test_criterion_9_full_pipeline_per_metric():
    # The full 18-language x 2-architecture x 4-metric grid at 50k samples
    # is explicitly out of scope at desk scale; the property suites above
    # substitute. Here: one full
    # certification pipeline per metric on {S1, S2, S9} against in-process
    # ground-truth oracles.
    params = CertificationParams(
        p=Fraction(9, 10), epsilon=Fraction(1, 10), gamma=Fraction(1, 10), delta=Fraction(1, 4)
    )
    lines = []
    ok = True
    start = time.monotonic()
    for kind in ("last_letter", "hamming", "manhattan", "edit"):
        metric = build_metric(kind)
        for bench in ("S1", "S2", "S9"):
            dra = ground_truth(bench)
            sampler = build_sampler(bench, max_length=6, seed=900)
            result = run_certification(InProcessDraOracle(dra), dra, sampler, metric, params)
            good = isinstance(result, Accept)
            ok = ok and good
            lines.append(f"{kind}/{bench}:{'accept' if good else type(result).__name__}")
    report(9, ok, "full experiment grid out of scope at desk scale; pipeline runs: "
                  + ", ".join(lines) + f" ({(time.monotonic()-start)/60:.1f} min)")

"""Command-line entry point: learn, certify, robust, distance, sample, eval.

Every command resolves its configuration (flags over an optional TOML file),
honours --seed, prints a machine-readable JSON result on stdout and a run
manifest on stderr. Exit codes: 0 success/positive verdict, 1 negative
verdict (NonRobust / Refine), 2 usage errors, 3 internal errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from fractions import Fraction

from .automata import run
from .benchmarks import BENCHMARK_IDS, build_sampler, generate, read_dataset, write_dataset
from .certifier import (
    Accept,
    CertificationParams,
    InProcessDraOracle,
    NonRobust,
    Refine,
    format_bound,
    open_oracle,
    run_certification,
)
from .learners.search import SampleSet, SearchConfig, SearchSpace, hill_climb, score
from .learners.smt_learner import SynthesisBudget, SynthesisParams, synthesize
from .raa import METRIC_KINDS, build_metric, evaluate
from .rational import INF, ParseError, format_cost, format_rational, parse_rational, parse_sequence
from .serialize import dump, load, serialize
from .verifier import RobustnessQuery, check_robustness, min_flip_cost

VERSION = "0.1.0"


class UsageError(ValueError):
    pass


def _read_toml(path):
    """Minimal flat TOML subset: [sections], key = value with strings,
    numbers and booleans. Enough to mirror the CLI flags."""
    values = {}
    section = ""
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {raw.rstrip()}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if section:
                key = f"{section}.{key}"
            value = value.split("#", 1)[0].strip()
            if value.startswith('"') and value.endswith('"'):
                parsed = value[1:-1]
            elif value in ("true", "false"):
                parsed = value == "true"
            else:
                try:
                    parsed = int(value)
                except ValueError:
                    try:
                        parsed = float(value)
                    except ValueError:
                        parsed = value
            values[key] = parsed
    return values


def _apply_config(args, parser):
    if not getattr(args, "config", None):
        return
    config = _read_toml(args.config)
    for key, value in config.items():
        short = key.split(".", 1)[-1]
        if hasattr(args, short) and parser.get_default(short) == getattr(args, short):
            setattr(args, short, value)


def _metric_from_args(args):
    kind = args.metric
    if kind not in METRIC_KINDS:
        raise UsageError(f"unknown metric {kind!r}; choose from {', '.join(METRIC_KINDS)}")
    params = {}
    if kind == "threshold_hamming":
        params["c"] = parse_rational(getattr(args, "threshold", "0") or "0")
    if kind == "edit":
        params["subst_cost"] = parse_rational(getattr(args, "subst_cost", "1") or "1")
        params["insdel_cost"] = parse_rational(getattr(args, "insdel_cost", "1") or "1")
    return build_metric(kind, **params)


def _emit(result: dict, manifest: dict, manifest_path=None):
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    manifest = dict(manifest)
    manifest["output_sha256"] = hashlib.sha256(text.encode()).hexdigest()
    line = json.dumps({"manifest": manifest}, sort_keys=True)
    print(line, file=sys.stderr)
    if manifest_path:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _manifest(args, command, started, seeds=None):
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    return {
        "command": command,
        "argv": sys.argv[1:],
        "config": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in resolved.items()},
        "seeds": seeds or {},
        "versions": {"regrobust": VERSION, "python": platform.python_version()},
        "elapsed_seconds": round(time.monotonic() - started, 6),
    }


# ----------------------------------------------------------------- commands

def cmd_robust(args, parser):
    started = time.monotonic()
    dra = load(args.dra)
    metric = _metric_from_args(args)
    v = parse_sequence(args.v)
    delta = parse_rational(args.delta)
    query = RobustnessQuery(dra, v, metric, delta, side=args.side)
    verdict = check_robustness(query, max_vertices=args.max_vertices)
    cost = min_flip_cost(dra, v, metric, side=args.side, max_vertices=args.max_vertices)
    result = {
        "robust": verdict.robust,
        "min_flip_cost": None if cost is INF else format_rational(cost),
        "witness": None
        if verdict.witness is None
        else [format_rational(x) for x in verdict.witness.sequence],
        "witness_cost": None if verdict.witness is None else format_rational(verdict.witness.cost),
        "graph_vertices": verdict.graph_vertices,
    }
    _emit(result, _manifest(args, "robust", started), args.manifest)
    return 0 if verdict.robust else 1


def cmd_distance(args, parser):
    started = time.monotonic()
    metric = _metric_from_args(args)
    v = parse_sequence(args.v)
    w = parse_sequence(args.w)
    cost = evaluate(metric, v, w)
    result = {"metric": args.metric, "distance": format_cost(cost)}
    _emit(result, _manifest(args, "distance", started), args.manifest)
    print(format_cost(cost), file=sys.stderr)
    return 0


def _generate_sharded(args):
    """Quota generation, optionally split across derived-seed shards; the
    concatenation order makes the dataset deterministic per (seed, jobs)."""
    jobs = max(1, args.jobs)
    shards = []
    for i in range(jobs):
        pos = args.pos // jobs + (1 if i < args.pos % jobs else 0)
        neg = args.neg // jobs + (1 if i < args.neg % jobs else 0)
        shards.append((i, pos, neg))
    out = []
    for i, pos, neg in shards:
        if pos == 0 and neg == 0:
            continue
        sampler = build_sampler(
            args.benchmark,
            noise=parse_rational(args.noise),
            max_length=args.max_len,
            seed=args.seed * 1000 + i if jobs > 1 else args.seed,
        )
        out.extend(generate(sampler, pos, neg))
    return out


def cmd_sample(args, parser):
    started = time.monotonic()
    if args.benchmark not in BENCHMARK_IDS:
        raise UsageError(f"unknown benchmark {args.benchmark!r}")
    records = _generate_sharded(args)
    write_dataset(records, args.out)
    result = {
        "benchmark": args.benchmark,
        "positives": args.pos,
        "negatives": args.neg,
        "out": args.out,
    }
    _emit(result, _manifest(args, "sample", started, {"seed": args.seed}), args.manifest)
    return 0


def cmd_learn(args, parser):
    started = time.monotonic()
    records = read_dataset(args.samples)
    samples = SampleSet.from_records(records)
    if args.method == "smt":
        base = SynthesisParams(n=1, max_out=args.max_out)
        dra = synthesize(
            samples,
            SynthesisBudget(wall_seconds=args.timeout),
            max_states=args.max_states,
            max_registers=args.max_registers,
            max_constants=args.max_constants,
            base_params=base,
        )
        extra = {"method": "smt"}
    elif args.method == "localsearch":
        constants = tuple(parse_sequence(args.constants)) if args.constants else ()
        space = SearchSpace(args.states, args.registers, constants)
        cfg = SearchConfig(
            max_iterations=args.max_iter,
            restarts=args.restarts,
            rng_seed=args.seed,
            max_time=args.timeout,
            jobs=args.jobs,
        )
        outcome = hill_climb(samples, space, cfg)
        dra = outcome.best
        extra = {
            "method": "localsearch",
            "score": str(outcome.best_score),
            "restart_scores": [str(s) for s in outcome.restart_scores],
            "iterations": outcome.iterations,
        }
    else:
        raise UsageError(f"unknown method {args.method!r}")
    if args.out:
        dump(dra, args.out)
    result = {
        "states": dra.num_states,
        "registers": dra.num_registers,
        "score": format_rational(score(dra, samples)),
        "automaton": None if args.out else json.loads(serialize(dra)),
        "out": args.out,
    }
    result.update(extra)
    _emit(result, _manifest(args, "learn", started, {"seed": args.seed}), args.manifest)
    return 0


def cmd_certify(args, parser):
    started = time.monotonic()
    dra = load(args.dra)
    metric = _metric_from_args(args)
    if args.oracle.startswith("dra:"):
        oracle = InProcessDraOracle(load(args.oracle[4:]))
    else:
        oracle = open_oracle(args.oracle, timeout=args.oracle_timeout)
    sampler = build_sampler(
        args.sampler, noise=parse_rational(args.noise), max_length=args.max_len, seed=args.seed
    )
    params = CertificationParams(
        p=parse_rational(args.p),
        epsilon=parse_rational(args.epsilon),
        gamma=parse_rational(args.gamma),
        delta=parse_rational(args.delta),
        eta=parse_rational(args.eta),
        stability_dedup=args.stability_dedup,
    )
    transcript = [] if args.transcript else None
    try:
        outcome = run_certification(oracle, dra, sampler, metric, params, transcript)
    finally:
        oracle.close()
    if isinstance(outcome, Accept):
        result = {
            "outcome": "accept",
            "n": outcome.n,
            "m_plus": outcome.m_plus,
            "m_minus": outcome.m_minus,
            "agreement_lb": str(outcome.agreement_lb),
            "lambda_ub": format_bound(outcome.lambda_ub),
            "theta_plus_ub": format_bound(outcome.theta_plus_ub),
            "theta_minus_ub": format_bound(outcome.theta_minus_ub),
        }
        code = 0
    elif isinstance(outcome, Refine):
        result = {
            "outcome": "refine",
            "counterexamples": [
                {"seq": [format_rational(x) for x in seq], "label": label}
                for seq, label in outcome.counterexamples
            ],
        }
        code = 1
    else:
        assert isinstance(outcome, NonRobust)
        result = {
            "outcome": "non_robust",
            "w": [format_rational(x) for x in outcome.w],
            "cex": [format_rational(x) for x in outcome.cex],
            "distance": format_rational(outcome.distance),
        }
        code = 1
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            json.dump(transcript, fh, indent=2, sort_keys=True)
    _emit(result, _manifest(args, "certify", started, {"seed": args.seed}), args.manifest)
    return code


def cmd_eval(args, parser):
    started = time.monotonic()
    dra = load(args.dra)
    samples = SampleSet.from_records(read_dataset(args.samples))
    value = score(dra, samples)
    result = {"score": format_rational(value), "samples": len(samples)}
    _emit(result, _manifest(args, "eval", started), args.manifest)
    print(format_rational(value), file=sys.stderr)
    return 0


# -------------------------------------------------------------------- parser

def _common(sub):
    sub.add_argument("--config", help="TOML config file; flags take precedence")
    sub.add_argument("--manifest", help="also write the run manifest to this path")
    sub.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="regrobust", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("robust", help="decide local robustness of a DRA at a sequence")
    sub.add_argument("--dra", required=True)
    sub.add_argument("--metric", required=True)
    sub.add_argument("--v", required=True)
    sub.add_argument("--delta", required=True)
    sub.add_argument("--side", default="auto", choices=["auto", "flip-to-reject", "flip-to-accept"])
    sub.add_argument("--threshold", help="c for threshold_hamming")
    sub.add_argument("--subst-cost", dest="subst_cost")
    sub.add_argument("--insdel-cost", dest="insdel_cost")
    sub.add_argument("--max-vertices", dest="max_vertices", type=int)
    _common(sub)
    sub.set_defaults(func=cmd_robust)

    sub = subs.add_parser("distance", help="evaluate a metric RAA on a pair of sequences")
    sub.add_argument("--metric", required=True)
    sub.add_argument("--v", required=True)
    sub.add_argument("--w", required=True)
    sub.add_argument("--threshold")
    sub.add_argument("--subst-cost", dest="subst_cost")
    sub.add_argument("--insdel-cost", dest="insdel_cost")
    _common(sub)
    sub.set_defaults(func=cmd_distance)

    sub = subs.add_parser("sample", help="generate a labelled dataset from a benchmark sampler")
    sub.add_argument("--benchmark", required=True)
    sub.add_argument("--pos", type=int, required=True)
    sub.add_argument("--neg", type=int, required=True)
    sub.add_argument("--max-len", dest="max_len", type=int, default=12)
    sub.add_argument("--noise", default="1/2")
    sub.add_argument("--out", required=True)
    sub.add_argument("--jobs", type=int, default=1)
    _common(sub)
    sub.set_defaults(func=cmd_sample)

    sub = subs.add_parser("learn", help="synthesize a DRA from a labelled dataset")
    sub.add_argument("--method", required=True, choices=["smt", "localsearch"])
    sub.add_argument("--samples", required=True)
    sub.add_argument("--out")
    sub.add_argument("--max-states", dest="max_states", type=int, default=2)
    sub.add_argument("--max-registers", dest="max_registers", type=int, default=1)
    sub.add_argument("--max-constants", dest="max_constants", type=int, default=2)
    sub.add_argument("--max-out", dest="max_out", type=int, default=3)
    sub.add_argument("--timeout", type=float, default=600.0)
    sub.add_argument("--states", type=int, default=2)
    sub.add_argument("--registers", type=int, default=1)
    sub.add_argument("--constants")
    sub.add_argument("--max-iter", dest="max_iter", type=int, default=100_000)
    sub.add_argument("--restarts", type=int, default=5)
    sub.add_argument("--jobs", type=int, default=1)
    _common(sub)
    sub.set_defaults(func=cmd_learn)

    sub = subs.add_parser("certify", help="statistically certify a DRA against an oracle")
    sub.add_argument("--dra", required=True)
    sub.add_argument("--oracle", required=True, help="command line, tcp:host:port, or dra:FILE")
    sub.add_argument("--sampler", required=True, help="benchmark id for the draw distribution")
    sub.add_argument("--metric", required=True)
    sub.add_argument("--delta", required=True)
    sub.add_argument("--p", default="0.95")
    sub.add_argument("--epsilon", default="0.05")
    sub.add_argument("--gamma", default="0.05")
    sub.add_argument("--eta", default="0.05")
    sub.add_argument("--noise", default="1/2")
    sub.add_argument("--max-len", dest="max_len", type=int, default=10)
    sub.add_argument("--threshold")
    sub.add_argument("--subst-cost", dest="subst_cost")
    sub.add_argument("--insdel-cost", dest="insdel_cost")
    sub.add_argument("--oracle-timeout", dest="oracle_timeout", type=float, default=30.0)
    sub.add_argument("--stability-dedup", dest="stability_dedup", action="store_true")
    sub.add_argument("--transcript", help="write the certification transcript to this path")
    _common(sub)
    sub.set_defaults(func=cmd_certify)

    sub = subs.add_parser("eval", help="score a DRA against a labelled dataset")
    sub.add_argument("--dra", required=True)
    sub.add_argument("--samples", required=True)
    _common(sub)
    sub.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args, parser)
        return args.func(args, parser)
    except (UsageError, ParseError) as exc:
        print(json.dumps({"error": "usage", "detail": str(exc)}), file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse's own usage failures
        code = exc.code if isinstance(exc.code, int) else 2
        return 2 if code else 0
    except KeyboardInterrupt:
        return 3
    except Exception as exc:
        print(
            json.dumps({"error": "internal", "type": type(exc).__name__, "detail": str(exc)}),
            file=sys.stderr,
        )
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Statistical equivalence + local-stability certification of a DRA against
a black-box oracle, and the extraction loop that drives a learner with the
certifier's counterexamples.

The certifier draws n = ceil(ln(1/eps) / (2 gamma^2)) samples, tolerates at
most floor(n (1-p)) disagreements, checks delta-stability on every agreed
sample, and triages stability counterexamples into spurious (returned to
the learner) and genuine (reported as network non-robustness). Acceptance
carries the distribution-level bounds: agreement at least p - gamma with
probability 1 - eps, instability mass at most 1 - eta^(1/n), and per-class
bounds 1 - (eta/2)^(1/m+-).
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
import time
from dataclasses import dataclass
from decimal import Decimal, getcontext
from fractions import Fraction
from typing import Callable, Optional

from .automata import Dra, run
from .raa import Raa, evaluate
from .rational import INF, format_rational
from .verifier import AUTO, RobustnessQuery, check_robustness

PROTOCOL = "regrobust-oracle/1"


class OracleUnavailable(RuntimeError):
    pass


class SamplerExhausted(RuntimeError):
    pass


# ------------------------------------------------------------- statistics

_PREC = 50


def _decimal_ln(x: Fraction) -> Decimal:
    getcontext().prec = _PREC
    return (Decimal(x.numerator) / Decimal(x.denominator)).ln()


def sample_size(epsilon, gamma) -> int:
    """ceil(ln(1/epsilon) / (2 gamma^2)), evaluated at 50 digits.

    The ceiling is taken with a guard-digit check: if the value sits within
    1e-30 of an integer the computation is repeated at doubled precision to
    rule out a misrounded boundary.
    """
    epsilon = Fraction(epsilon)
    gamma = Fraction(gamma)
    if not (0 < epsilon < 1 and 0 < gamma < 1):
        raise ValueError("epsilon and gamma must lie in (0, 1)")

    def compute(prec):
        getcontext().prec = prec
        ln_inv_eps = -(Decimal(epsilon.numerator) / Decimal(epsilon.denominator)).ln()
        denom = Decimal((2 * gamma * gamma).numerator) / Decimal((2 * gamma * gamma).denominator)
        return ln_inv_eps / denom

    value = compute(_PREC)
    nearest = value.to_integral_value()
    if abs(value - nearest) < Decimal(10) ** (-30):
        value2 = compute(2 * _PREC)
        if abs(value2 - nearest) < Decimal(10) ** (-60):
            value = value2  # genuine integer boundary (possible only for contrived inputs)
    ceil = int(value)
    if value > ceil:
        ceil += 1
    return max(ceil, 1)


def d_max(n: int, p) -> int:
    """floor(n (1 - p)); exact rational arithmetic."""
    if n <= 0:
        return 0
    p = Fraction(p)
    return int(Fraction(n) * (1 - p))


def accept_bounds(n: int, m_plus: int, m_minus: int, eta, eta_split=None):
    """(lambda_ub, theta_plus_ub, theta_minus_ub) as Decimals; per-class
    bounds are None when the class count is zero."""
    eta = Fraction(eta)
    if not (0 < eta <= 1):
        raise ValueError("eta must lie in (0, 1]")
    if eta_split is None:
        eta_plus = eta_minus = eta / 2
    else:
        eta_plus, eta_minus = (Fraction(x) for x in eta_split)
        if eta_plus + eta_minus != eta:
            raise ValueError("eta_split must sum to eta")
    getcontext().prec = _PREC

    def bound(confidence: Fraction, count: int):
        if count <= 0:
            return None
        ln_conf = _decimal_ln(confidence)
        return Decimal(1) - (ln_conf / Decimal(count)).exp()

    return bound(eta, n), bound(eta_plus, m_plus), bound(eta_minus, m_minus)


def format_bound(value: Optional[Decimal]) -> Optional[str]:
    if value is None:
        return None
    getcontext().prec = 12
    out = +value  # round to 12 significant digits
    getcontext().prec = _PREC
    return str(out)


# ------------------------------------------------------------------ oracles

class OracleHandle:
    """Black-box binary classifier of rational sequences; labels are cached
    per sequence so triage never double-queries inconsistently."""

    def __init__(self):
        self.query_count = 0
        self._cache = {}

    def label(self, seq) -> int:
        key = tuple(seq)
        cached = self._cache.get(key)
        if cached is None:
            cached = int(self._query(key))
            if cached not in (0, 1):
                raise OracleUnavailable(f"oracle produced label {cached!r}")
            self._cache[key] = cached
            self.query_count += 1
        return cached

    def _query(self, seq) -> int:
        raise NotImplementedError

    def close(self):
        pass


class InProcessDraOracle(OracleHandle):
    def __init__(self, dra: Dra):
        super().__init__()
        self.dra = dra

    def _query(self, seq):
        return 1 if run(self.dra, seq).accepted else 0


class FunctionOracle(OracleHandle):
    def __init__(self, fn: Callable):
        super().__init__()
        self.fn = fn

    def _query(self, seq):
        return self.fn(seq)


class _LineProtocolOracle(OracleHandle):
    """Shared request/response handling for stdio and TCP transports."""

    timeout: float = 30.0

    def __init__(self):
        super().__init__()
        self._next_id = 0

    def _handshake(self, line: str):
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise OracleUnavailable(f"bad handshake: {line!r}") from exc
        if doc.get("protocol") != PROTOCOL:
            raise OracleUnavailable(f"unexpected protocol {doc.get('protocol')!r}")

    def _query(self, seq):
        self._next_id += 1
        request = {"id": self._next_id, "seq": [format_rational(x) for x in seq]}
        self._send_line(json.dumps(request))
        deadline = time.monotonic() + self.timeout
        while True:
            if time.monotonic() > deadline:
                raise OracleUnavailable("oracle timed out")
            line = self._recv_line()
            if not line.strip():
                continue
            doc = json.loads(line)
            if "error" in doc:
                raise OracleUnavailable(f"oracle error: {doc['error']}")
            if doc.get("id") == self._next_id:
                return doc["label"]

    def _send_line(self, line):
        raise NotImplementedError

    def _recv_line(self):
        raise NotImplementedError


class ProcessOracle(_LineProtocolOracle):
    """Oracle behind a spawned process speaking the wire protocol on stdio."""

    def __init__(self, command, timeout: float = 30.0):
        super().__init__()
        self.timeout = timeout
        if isinstance(command, str):
            command = shlex.split(command)
        try:
            self.proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
            )
        except OSError as exc:
            raise OracleUnavailable(f"cannot spawn oracle: {exc}") from exc
        self._handshake(self._recv_line())

    def _send_line(self, line):
        if self.proc.poll() is not None:
            raise OracleUnavailable("oracle process exited")
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def _recv_line(self):
        line = self.proc.stdout.readline()
        if not line:
            raise OracleUnavailable("oracle process closed its output")
        return line

    def close(self):
        try:
            if self.proc.poll() is None:
                self.proc.terminate()
                self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()


class TcpOracle(_LineProtocolOracle):
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        super().__init__()
        self.timeout = timeout
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise OracleUnavailable(f"cannot connect to oracle: {exc}") from exc
        self.reader = self.sock.makefile("r")
        self.writer = self.sock.makefile("w")
        self._handshake(self._recv_line())

    def _send_line(self, line):
        self.writer.write(line + "\n")
        self.writer.flush()

    def _recv_line(self):
        line = self.reader.readline()
        if not line:
            raise OracleUnavailable("oracle connection closed")
        return line

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


def open_oracle(spec, timeout: float = 30.0) -> OracleHandle:
    """'tcp:host:port' or a shell command line for a stdio oracle."""
    if isinstance(spec, OracleHandle):
        return spec
    if isinstance(spec, Dra):
        return InProcessDraOracle(spec)
    if isinstance(spec, str) and spec.startswith("tcp:"):
        _, host, port = spec.split(":")
        return TcpOracle(host, int(port), timeout)
    return ProcessOracle(spec, timeout)


# -------------------------------------------------------------- certification

@dataclass(frozen=True)
class CertificationParams:
    p: Fraction
    epsilon: Fraction
    gamma: Fraction
    delta: Fraction
    eta: Fraction = Fraction(1, 20)
    eta_split: Optional[tuple] = None
    stability_dedup: bool = False

    def __post_init__(self):
        for name in ("p", "epsilon", "gamma", "delta", "eta"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        for name in ("p", "epsilon", "gamma", "eta"):
            value = getattr(self, name)
            if not (0 < value < 1):
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.gamma > 1 - self.p:
            # the equivalence guarantee needs room below the disagreement
            # threshold; equality (the reported experimental setting) is kept
            raise ValueError("gamma must not exceed 1 - p")
        if self.eta_split is not None:
            split = tuple(Fraction(x) for x in self.eta_split)
            if sum(split) != self.eta:
                raise ValueError("eta_split must sum to eta")
            object.__setattr__(self, "eta_split", split)


@dataclass(frozen=True)
class StabPredicateResult:
    stable: bool
    flip_witness: Optional[tuple] = None

    def __post_init__(self):
        assert self.stable == (self.flip_witness is None)


def stability_check(dra: Dra, w, metric: Raa, delta) -> StabPredicateResult:
    """Two-sided local stability: no label flip of the DRA within the ball.

    Delegates to the robustness verifier with the side chosen by the DRA's
    own label of w (complement for accepted w, the automaton itself for
    rejected w)."""
    verdict = check_robustness(RobustnessQuery(dra, tuple(w), metric, Fraction(delta), side=AUTO))
    if verdict.robust:
        return StabPredicateResult(True, None)
    return StabPredicateResult(False, verdict.witness.sequence)


@dataclass(frozen=True)
class Accept:
    n: int
    m_plus: int
    m_minus: int
    agreement_lb: Fraction
    lambda_ub: Optional[Decimal]
    theta_plus_ub: Optional[Decimal]
    theta_minus_ub: Optional[Decimal]

    kind = "accept"


@dataclass(frozen=True)
class Refine:
    counterexamples: tuple  # of (sequence, oracle label)

    kind = "refine"


@dataclass(frozen=True)
class NonRobust:
    w: tuple
    cex: tuple
    distance: Fraction

    kind = "non_robust"


CertResult = object  # Accept | Refine | NonRobust


def _draw_from(sampler):
    if callable(sampler):
        out = sampler()
    elif hasattr(sampler, "draw"):
        out = sampler.draw()
    else:
        raise SamplerExhausted(f"cannot draw from {sampler!r}")
    if out is None:
        raise SamplerExhausted("sampler returned no sequence")
    if isinstance(out, tuple) and len(out) == 2 and isinstance(out[1], int):
        return tuple(out[0])  # (sequence, label) samplers: the label is ignored
    return tuple(out)


def run_certification(
    oracle,
    dra: Dra,
    sampler,
    metric: Raa,
    params: CertificationParams,
    transcript: Optional[list] = None,
) -> CertResult:
    """Algorithm-2 certification round; samples processed strictly in draw
    order so early exits are reproducible."""
    oracle = open_oracle(oracle)
    n = sample_size(params.epsilon, params.gamma)
    dmax = d_max(n, params.p)
    cexs = []
    m_plus = m_minus = 0
    stable_seen = set()

    def record(event):
        if transcript is not None:
            transcript.append(event)

    record({"event": "begin", "n": n, "d_max": dmax})
    for i in range(1, n + 1):
        w = _draw_from(sampler)
        a_label = 1 if run(dra, w).accepted else 0
        n_label = oracle.label(w)
        record({"event": "draw", "i": i, "seq": [format_rational(x) for x in w],
                "a": a_label, "oracle": n_label})
        if n_label != a_label:
            cexs.append((w, n_label))
            if len(cexs) > dmax:
                record({"event": "refine", "disagreements": len(cexs)})
                return Refine(tuple(cexs))
            continue
        if params.stability_dedup and w in stable_seen:
            continue
        stab = stability_check(dra, w, metric, params.delta)
        if stab.stable:
            stable_seen.add(w)
            if a_label:
                m_plus += 1
            else:
                m_minus += 1
            continue
        cex = stab.flip_witness
        cex_label = oracle.label(cex)
        record({"event": "instability", "i": i, "cex": [format_rational(x) for x in cex],
                "oracle_cex": cex_label})
        if cex_label == n_label:
            # the automaton flips but the network does not: spurious, refine
            record({"event": "refine_spurious"})
            return Refine(((cex, cex_label),))
        distance = evaluate(metric, w, cex)
        assert distance is not INF and distance < params.delta
        record({"event": "non_robust"})
        return NonRobust(w, cex, distance)
    lam, tplus, tminus = accept_bounds(n, m_plus, m_minus, params.eta, params.eta_split)
    record({"event": "accept", "m_plus": m_plus, "m_minus": m_minus})
    return Accept(
        n=n,
        m_plus=m_plus,
        m_minus=m_minus,
        agreement_lb=params.p - params.gamma,
        lambda_ub=lam,
        theta_plus_ub=tplus,
        theta_minus_ub=tminus,
    )


# ---------------------------------------------------------- extraction loop

@dataclass
class ExtractionBudget:
    max_rounds: int = 10
    wall_seconds: float = 3600.0
    seed_samples: int = 100


class ExtractionBudgetExhausted(RuntimeError):
    def __init__(self, message, last_hypothesis=None):
        super().__init__(message)
        self.last_hypothesis = last_hypothesis


@dataclass
class ExtractionOutcome:
    dra: Dra
    result: CertResult
    rounds: int
    counterexamples_added: int


def extraction_loop(
    learner: Callable,
    oracle,
    sampler,
    metric: Raa,
    params: CertificationParams,
    budget: ExtractionBudget = None,
    transcript: Optional[list] = None,
) -> ExtractionOutcome:
    """Learn, certify, refine: learn from oracle-labelled samples, certify,
    feed counterexamples back, stop on Accept or a genuine witness.

    `learner` maps a list of (sequence, label) records to a Dra.
    """
    budget = budget or ExtractionBudget()
    oracle = open_oracle(oracle)
    deadline = time.monotonic() + budget.wall_seconds
    labelled = {}
    for _ in range(budget.seed_samples):
        seq = _draw_from(sampler)
        labelled[seq] = oracle.label(seq)
    added = 0
    dra = None
    for round_no in range(1, budget.max_rounds + 1):
        if time.monotonic() > deadline:
            raise ExtractionBudgetExhausted("extraction wall clock exhausted", dra)
        dra = learner(sorted(labelled.items()))
        result = run_certification(oracle, dra, sampler, metric, params, transcript)
        if isinstance(result, (Accept, NonRobust)):
            return ExtractionOutcome(dra, result, round_no, added)
        for seq, label in result.counterexamples:
            key = tuple(seq)
            if key not in labelled:
                added += 1
            labelled[key] = label
    raise ExtractionBudgetExhausted(
        f"no certification after {budget.max_rounds} refinement rounds", dra
    )

"""Passive DRA synthesis by constraint solving over an external SMT-LIB solver.

The encoding fixes a state count n, register count k, constant-slot count c
and a per-state transition-slot budget; each slot carries one-hot endpoint,
strictness, target and per-register source selectors over the interval-guard
lattice. Prefix reachability booleans, register provenance one-hots and the
acceptance constraints mirror the classic identification scheme: positive
prefixes reach exactly one state, runs are justified step by step, full
words are accepting iff positive. Determinism is enforced lazily: decoded
automata are checked symbolically and offending guard pairs are blocked
under the decoded constant ordering, then re-solved incrementally.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..automata import Dra, Transition, check_determinism
from ..smtlib import SolverProcess, SolverError, _frac_text, parse_model
from .lattice import (
    Endpoint,
    GuardShape,
    SourceShape,
    assignment_from_sources,
    enumerate_shapes,
    enumerate_sources,
)
from .search import SampleSet, _classify, _outgoing_map


class MalformedModel(RuntimeError):
    pass


class BudgetExhausted(RuntimeError):
    def __init__(self, message, last_hypothesis=None):
        super().__init__(message)
        self.last_hypothesis = last_hypothesis


@dataclass(frozen=True)
class SynthesisParams:
    n: int
    k: int = 0
    c: int = 0
    constant_pool: Optional[tuple] = None
    timeout: Optional[float] = None
    max_out: int = 3  # transition slots per state
    slot_bound: Fraction = Fraction(10**6)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one state")
        if self.constant_pool is not None:
            object.__setattr__(
                self, "constant_pool", tuple(Fraction(x) for x in self.constant_pool)
            )
            if len(self.constant_pool) != self.c:
                raise ValueError("constant_pool size must equal c")


class _PrefixTree:
    def __init__(self, samples: SampleSet):
        self.parents = [None]
        self.letters = [None]
        self.depths = [0]
        self.index = {(): 0}
        self.pos_words = []
        self.neg_words = []
        for seq in samples.positives:
            self.pos_words.append(self._insert(seq))
        for seq in samples.negatives:
            self.neg_words.append(self._insert(seq))
        self.pos_prefixes = set()
        for seq in samples.positives:
            for i in range(len(seq) + 1):
                self.pos_prefixes.add(self.index[tuple(seq[:i])])

    def _insert(self, seq):
        node = 0
        for i, letter in enumerate(seq):
            key = tuple(seq[: i + 1])
            node_id = self.index.get(key)
            if node_id is None:
                node_id = len(self.parents)
                self.index[key] = node_id
                self.parents.append(node)
                self.letters.append(letter)
                self.depths.append(i + 1)
            node = node_id
        return node

    def edges(self):
        """(child id, parent id, letter) for every non-root node."""
        for node in range(1, len(self.parents)):
            yield node, self.parents[node], self.letters[node]

    def __len__(self):
        return len(self.parents)


class Encoding:
    """SMT-LIB text plus the name maps needed to decode models."""

    def __init__(self, samples: SampleSet, params: SynthesisParams):
        self.samples = samples
        self.params = params
        self.tree = _PrefixTree(samples)
        self.shapes = enumerate_shapes(params.k, params.c)
        self.sources = [enumerate_sources(params.k, params.c, i) for i in range(params.k)]
        self.endpoints = [None] + [Endpoint("reg", i) for i in range(params.k)] + [
            Endpoint("slot", j) for j in range(params.c)
        ]
        self.bools = []
        self.lines = []
        self._build()

    # --------------------------------------------------------------- naming

    @staticmethod
    def _end_id(e: Optional[Endpoint]) -> str:
        if e is None:
            return "nil"
        return f"{e.kind[0]}{e.index}"

    def _bool(self, name):
        self.bools.append(name)
        return name

    def _clause(self, *lits):
        body = " ".join(lits)
        self.lines.append(f"(assert (or {body}))" if len(lits) > 1 else f"(assert {lits[0]})")

    @staticmethod
    def _neg(lit):
        return f"(not {lit})"

    def _exactly_one(self, names):
        self._clause(*names)
        for a, b in itertools.combinations(names, 2):
            self._clause(self._neg(a), self._neg(b))

    # ------------------------------------------------------------- variables

    def used(self, p, t):
        return f"u{p}s{t}"

    def lowk(self, p, t, e):
        return f"lo{p}s{t}e{self._end_id(e)}"

    def highk(self, p, t, e):
        return f"hi{p}s{t}e{self._end_id(e)}"

    def lows(self, p, t):
        return f"los{p}s{t}"

    def highs(self, p, t):
        return f"his{p}s{t}"

    def tgt(self, p, t, q):
        return f"tg{p}s{t}q{q}"

    def src(self, p, t, i, s: SourceShape):
        return f"sr{p}s{t}r{i}v{s.label()}"

    def acc(self, q):
        return f"f{q}"

    def x(self, u, q):
        return f"x{u}q{q}"

    def prov(self, u, i, o):
        return f"rp{u}r{i}o{o}"

    def slot(self, j):
        return f"cs{j}"

    # ------------------------------------------------------------ provenance

    def _prov_options(self, node):
        opts = ["z"]
        opts.extend(f"p{d}" for d in range(1, self.tree.depths[node] + 1))
        opts.extend(f"c{j}" for j in range(self.params.c))
        return opts

    def _prov_value(self, node, opt):
        """Concrete Fraction, or slot index for symbolic options."""
        if opt == "z":
            return Fraction(0)
        if opt.startswith("p"):
            depth = int(opt[1:])
            cur = node
            while self.tree.depths[cur] > depth:
                cur = self.tree.parents[cur]
            return self.tree.letters[cur]
        return ("slot", int(opt[1:]))

    # ----------------------------------------------------------------- build

    def _build(self):
        params = self.params
        n, k, c, T = params.n, params.k, params.c, params.max_out
        self.lines.append("(set-logic QF_LRA)")

        for j in range(c):
            self.lines.append(f"(declare-const {self.slot(j)} Real)")
            bound = _frac_text(params.slot_bound)
            self.lines.append(f"(assert (<= {self.slot(j)} {bound}))")
            self.lines.append(f"(assert (>= {self.slot(j)} (- {bound})))")
            if params.constant_pool is not None:
                self.lines.append(
                    f"(assert (= {self.slot(j)} {_frac_text(params.constant_pool[j])}))"
                )
        # symmetry breaking between free slots
        if params.constant_pool is None:
            for j in range(c - 1):
                self.lines.append(f"(assert (< {self.slot(j)} {self.slot(j + 1)}))")

        declare = []

        def B(name):
            declare.append(name)
            return name

        # structure selectors
        for p in range(n):
            for t in range(T):
                B(self.used(p, t))
                if t:
                    self._clause(self._neg(self.used(p, t)), self.used(p, t - 1))
                self._exactly_one([B(self.lowk(p, t, e)) for e in self.endpoints])
                self._exactly_one([B(self.highk(p, t, e)) for e in self.endpoints])
                B(self.lows(p, t))
                B(self.highs(p, t))
                self._exactly_one([B(self.tgt(p, t, q)) for q in range(n)])
                for i in range(k):
                    self._exactly_one([B(self.src(p, t, i, s)) for s in self.sources[i]])
                # degenerate strict interval with equal endpoints is empty
                for e in self.endpoints:
                    if e is None:
                        continue
                    self._clause(
                        self._neg(self.lowk(p, t, e)),
                        self._neg(self.highk(p, t, e)),
                        self._neg(self.lows(p, t)),
                    )
                    self._clause(
                        self._neg(self.lowk(p, t, e)),
                        self._neg(self.highk(p, t, e)),
                        self._neg(self.highs(p, t)),
                    )
        for q in range(self.params.n):
            B(self.acc(q))

        # reachability, provenance
        for u in range(len(self.tree)):
            xs = [B(self.x(u, q)) for q in range(n)]
            for a, b in itertools.combinations(xs, 2):
                self._clause(self._neg(a), self._neg(b))
            if u in self.tree.pos_prefixes:
                self._clause(*xs)
            for i in range(k):
                self._exactly_one([B(self.prov(u, i, o)) for o in self._prov_options(u)])
        self._clause(self.x(0, 0))
        for i in range(k):
            self._clause(self.prov(0, i, "z"))

        # per-edge machinery
        for node, parent, letter in self.tree.edges():
            self._encode_edge(B, node, parent, letter)

        # acceptance
        for w in self.tree.pos_words:
            for q in range(n):
                self._clause(self._neg(self.x(w, q)), self.acc(q))
        for w in self.tree.neg_words:
            for q in range(n):
                self._clause(self._neg(self.x(w, q)), self._neg(self.acc(q)))

        decls = "\n".join(f"(declare-const {name} Bool)" for name in declare)
        self.lines.insert(1, decls)

    def _cmp_term(self, node, endpoint: Endpoint, letter: Fraction, strict: bool, direction: str):
        """SMT term: value(endpoint at node) {<=,<,>=,>} letter."""
        op = {"low": ("<" if strict else "<="), "high": (">" if strict else ">=")}[direction]
        if endpoint.kind == "slot":
            return f"({op} {self.slot(endpoint.index)} {_frac_text(letter)})"
        # register endpoint: expand over provenance
        parts = []
        for o in self._prov_options(node):
            value = self._prov_value(node, o)
            p_lit = self.prov(node, endpoint.index, o)
            if isinstance(value, tuple):
                term = f"({op} {self.slot(value[1])} {_frac_text(letter)})"
                parts.append(f"(and {p_lit} {term})")
            else:
                holds = {
                    "<": value < letter,
                    "<=": value <= letter,
                    ">": value > letter,
                    ">=": value >= letter,
                }[op]
                if holds:
                    parts.append(p_lit)
        if not parts:
            return "false"
        return "(or " + " ".join(parts) + ")" if len(parts) > 1 else parts[0]

    def _encode_edge(self, B, node, parent, letter):
        n, k, T = self.params.n, self.params.k, self.params.max_out
        edge = node  # child id is unique per edge
        took = []
        for p in range(n):
            for t in range(T):
                en = B(f"en{edge}p{p}s{t}")
                # en <-> guard of slot (p,t) holds at (registers of parent, letter)
                for direction, kind_of, strict_of in (
                    ("low", self.lowk, self.lows),
                    ("high", self.highk, self.highs),
                ):
                    for e in self.endpoints:
                        sel = kind_of(p, t, e)
                        if e is None:
                            continue  # unbounded side never falsifies en
                        for strict in (False, True):
                            s_lit = strict_of(p, t) if strict else self._neg(strict_of(p, t))
                            term = self._cmp_term(parent, e, letter, strict, direction)
                            self.lines.append(
                                f"(assert (=> (and {sel} {s_lit} {en}) {term}))"
                            )
                # en is forced true when both sides hold: encode the converse
                low_ok = self._side_term(parent, p, t, letter, "low")
                high_ok = self._side_term(parent, p, t, letter, "high")
                self.lines.append(f"(assert (=> (and {low_ok} {high_ok}) {en}))")
                tk = B(f"tk{edge}p{p}s{t}")
                x_u = self.x(parent, p)
                u_lit = self.used(p, t)
                self._clause(self._neg(tk), x_u)
                self._clause(self._neg(tk), u_lit)
                self._clause(self._neg(tk), en)
                self._clause(tk, self._neg(x_u), self._neg(u_lit), self._neg(en))
                took.append((p, t, tk))
                for q in range(n):
                    self._clause(
                        self._neg(tk), self._neg(self.tgt(p, t, q)), self.x(node, q)
                    )
        # justification: any reached state needs a taken transition targeting it
        for q in range(n):
            lits = [self._neg(self.x(node, q))]
            for p, t, tk in took:
                jt = B(f"jt{edge}p{p}s{t}q{q}")
                self._clause(self._neg(jt), tk)
                self._clause(self._neg(jt), self.tgt(p, t, q))
                lits.append(jt)
            self._clause(*lits)
        # provenance propagation through the taken slot's sources
        for i in range(k):
            for p, t, tk in took:
                for s in self.sources[i]:
                    sel = self.src(p, t, i, s)
                    if s.kind == "curr":
                        self._clause(
                            self._neg(tk), self._neg(sel), self.prov(node, i, f"p{self.tree.depths[node]}")
                        )
                    elif s.kind == "slot":
                        self._clause(self._neg(tk), self._neg(sel), self.prov(node, i, f"c{s.index}"))
                    else:
                        origin = i if s.kind == "keep" else s.index
                        for o in self._prov_options(parent):
                            self._clause(
                                self._neg(tk),
                                self._neg(sel),
                                self._neg(self.prov(parent, origin, o)),
                                self.prov(node, i, o),
                            )

    def _side_term(self, node, p, t, letter, direction):
        kind_of = self.lowk if direction == "low" else self.highk
        strict_of = self.lows if direction == "low" else self.highs
        parts = []
        for e in self.endpoints:
            sel = kind_of(p, t, e)
            if e is None:
                parts.append(sel)
                continue
            strict_lit = strict_of(p, t)
            t_s = self._cmp_term(node, e, letter, True, direction)
            t_w = self._cmp_term(node, e, letter, False, direction)
            parts.append(f"(and {sel} (ite {strict_lit} {t_s} {t_w}))")
        return "(or " + " ".join(parts) + ")"

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    # ---------------------------------------------------------------- decode

    def _one_hot(self, model, names, what):
        hits = [name for name in names if model.get(name) is True]
        if len(hits) != 1:
            raise MalformedModel(f"{what}: expected one true selector, got {hits}")
        return hits[0]

    def decode(self, model) -> Dra:
        params = self.params
        slot_values = []
        for j in range(params.c):
            value = model.get(self.slot(j), Fraction(0))
            if isinstance(value, bool):
                raise MalformedModel(f"slot {j} has a boolean value")
            slot_values.append(Fraction(value))
        transitions = []
        self.slot_of_transition = {}
        for p in range(params.n):
            for t in range(params.max_out):
                if model.get(self.used(p, t)) is not True:
                    continue
                low = self._decode_endpoint(model, p, t, self.lowk)
                high = self._decode_endpoint(model, p, t, self.highk)
                shape = GuardShape(
                    low,
                    model.get(self.lows(p, t)) is True and low is not None,
                    high,
                    model.get(self.highs(p, t)) is True and high is not None,
                )
                target_name = self._one_hot(
                    model, [self.tgt(p, t, q) for q in range(params.n)], f"target {p}/{t}"
                )
                target = int(target_name.rsplit("q", 1)[1])
                sources = []
                for i in range(params.k):
                    name = self._one_hot(
                        model,
                        [self.src(p, t, i, s) for s in self.sources[i]],
                        f"source {p}/{t}/r{i}",
                    )
                    label = name.rsplit("v", 1)[1]
                    sources.append(next(s for s in self.sources[i] if s.label() == label))
                transition = Transition(
                    p,
                    shape.to_guard(slot_values),
                    assignment_from_sources(sources, slot_values),
                    target,
                )
                self.slot_of_transition[transition] = (p, t, shape)
                transitions.append(transition)
        accepting = frozenset(
            q for q in range(params.n) if model.get(self.acc(q)) is True
        )
        self.decoded_slots = tuple(slot_values)
        return Dra(params.n, params.k, 0, accepting, tuple(transitions))

    def _decode_endpoint(self, model, p, t, kind_of):
        name = self._one_hot(model, [kind_of(p, t, e) for e in self.endpoints], f"endpoint {p}/{t}")
        suffix = name.rsplit("e", 1)[1]
        if suffix == "nil":
            return None
        kind = "reg" if suffix[0] == "r" else "slot"
        return Endpoint(kind, int(suffix[1:]))

    # --------------------------------------------------- determinism blocking

    def _shape_lits(self, p, t, shape: GuardShape):
        lits = [
            self.lowk(p, t, shape.low),
            self.lows(p, t) if shape.low_strict else self._neg(self.lows(p, t)),
            self.highk(p, t, shape.high),
            self.highs(p, t) if shape.high_strict else self._neg(self.highs(p, t)),
        ]
        return lits

    def blocking_clauses(self, shape1: GuardShape, shape2: GuardShape):
        """Forbid the overlapping pair under the decoded slot ordering,
        for every state and slot pair (overlap is state-independent)."""
        order_lits = []
        values = getattr(self, "decoded_slots", ())
        for a, b in itertools.combinations(range(len(values)), 2):
            if values[a] < values[b]:
                order_lits.append(f"(< {self.slot(a)} {self.slot(b)})")
            elif values[a] == values[b]:
                order_lits.append(f"(= {self.slot(a)} {self.slot(b)})")
            else:
                order_lits.append(f"(> {self.slot(a)} {self.slot(b)})")
        clauses = []
        for p in range(self.params.n):
            for t1 in range(self.params.max_out):
                for t2 in range(self.params.max_out):
                    if t1 == t2:
                        continue
                    lits = [self.used(p, t1), self.used(p, t2)]
                    lits += self._shape_lits(p, t1, shape1)
                    lits += self._shape_lits(p, t2, shape2)
                    body = " ".join(lits + order_lits)
                    clauses.append(f"(assert (not (and {body})))")
        return clauses


def encode(samples: SampleSet, params: SynthesisParams) -> str:
    """The full SMT-LIB v2 problem text for one (n, k, c) candidate."""
    return Encoding(samples, params).text()


def decode_model(model_text: str, samples: SampleSet, params: SynthesisParams) -> Dra:
    """Decode a (get-model) response against the encoding's name scheme."""
    return Encoding(samples, params).decode(parse_model(model_text))


def validate_consistency(dra: Dra, samples: SampleSet) -> bool:
    """Every positive runs to accept and every negative to reject."""
    by_state = _outgoing_map(dra)
    return all(_classify(dra, seq, by_state) for seq in samples.positives) and not any(
        _classify(dra, seq, by_state) for seq in samples.negatives
    )


@dataclass
class SynthesisBudget:
    wall_seconds: float = 600.0
    max_determinism_rounds: int = 200


def _candidate_params(max_states, max_registers, max_constants, base: SynthesisParams):
    triples = [
        (n, k, c)
        for n in range(1, max_states + 1)
        for k in range(0, max_registers + 1)
        for c in range(0, max_constants + 1)
    ]
    triples.sort(key=lambda t: (sum(t), t))
    for n, k, c in triples:
        pool = base.constant_pool if base.constant_pool and len(base.constant_pool) == c else None
        yield SynthesisParams(
            n=n,
            k=k,
            c=c,
            constant_pool=pool,
            timeout=base.timeout,
            max_out=base.max_out,
            slot_bound=base.slot_bound,
        )


def synthesize(
    samples: SampleSet,
    budget: SynthesisBudget = None,
    max_states: int = 3,
    max_registers: int = 1,
    max_constants: int = 2,
    base_params: SynthesisParams = None,
    solver_command=None,
    on_event=None,
):
    """Enumerate (n, k, c) by total size; first consistent deterministic DRA wins.

    Per candidate: encode, solve, decode; determinism violations found by the
    symbolic check are blocked under the decoded constant order and the
    candidate is re-solved incrementally. Consistency and determinism of the
    returned automaton are re-checked by execution, never trusted.
    """
    budget = budget or SynthesisBudget()
    base_params = base_params or SynthesisParams(n=1)
    deadline = time.monotonic() + budget.wall_seconds
    last = None

    def note(kind, **info):
        if on_event is not None:
            on_event(kind, info)

    for params in _candidate_params(max_states, max_registers, max_constants, base_params):
        if time.monotonic() > deadline:
            raise BudgetExhausted("wall-clock budget exhausted", last)
        encoding = Encoding(samples, params)
        note("candidate", n=params.n, k=params.k, c=params.c)
        try:
            with SolverProcess(solver_command) as solver:
                solver.send(encoding.text())
                for _round in range(budget.max_determinism_rounds):
                    if time.monotonic() > deadline:
                        raise BudgetExhausted("wall-clock budget exhausted", last)
                    status = solver.check_sat()
                    if status == "unsat":
                        note("unsat", n=params.n, k=params.k, c=params.c)
                        break
                    if status != "sat":
                        note("unknown", n=params.n, k=params.k, c=params.c)
                        break
                    model = parse_model(solver.get_model_text())
                    dra = encoding.decode(model)
                    last = dra
                    violations = check_determinism(dra)
                    if not violations:
                        if not validate_consistency(dra, samples):
                            raise MalformedModel(
                                "decoded automaton is inconsistent with the samples"
                            )
                        note("success", n=params.n, k=params.k, c=params.c)
                        return dra
                    note("determinism_round", violations=len(violations))
                    for violation in violations:
                        info1 = encoding.slot_of_transition.get(violation.first)
                        info2 = encoding.slot_of_transition.get(violation.second)
                        if info1 is None or info2 is None:
                            raise MalformedModel("violation on an unknown transition")
                        for clause in encoding.blocking_clauses(info1[2], info2[2]):
                            solver.send(clause)
        except SolverError as exc:
            note("solver_error", error=str(exc))
            continue
    raise BudgetExhausted("no consistent deterministic automaton within the caps", last)

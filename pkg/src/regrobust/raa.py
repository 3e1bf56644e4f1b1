"""Two-head register automata with accumulator (RAA).

An RAA reads a pair of sequences with independent heads and accumulates a
non-negative affine cost per step; its output on (v, w) is the minimum
accumulator value over accepting runs (both heads exhausted), or infinity.
Every distance metric shipped here is one of these machines.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .automata import Dra, Transition, split_disequalities
from .guards import (
    CONST,
    CURR1,
    CURR1_OP,
    CURR2,
    CURR2_OP,
    Assignment,
    Guard,
    GuardAtom,
    Operand,
    Valuation,
    apply_assignment,
    guard_constants,
    guard_holds,
    reg,
)
from .rational import INF, ExtendedCost

HEAD1 = "head1"
HEAD2 = "head2"
BOTH = "both"


class UnboundedRegisterDomain(ValueError):
    """Register sources other than constants/letters/registers are not supported."""


@dataclass(frozen=True)
class AccUpdate:
    """acc += a1*curr1 + a2*curr2 + b; steps with a negative increment are forbidden."""

    a1: Fraction = Fraction(0)
    a2: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def increment(self, c1, c2) -> Fraction:
        total = Fraction(self.b)
        if self.a1:
            total += self.a1 * c1
        if self.a2:
            total += self.a2 * c2
        return total


ZERO_ACC = AccUpdate()


@dataclass(frozen=True)
class RaaTransition:
    source: int
    guard: Guard
    assignment: Assignment
    acc: AccUpdate
    target: int
    mov: str

    def __post_init__(self):
        if self.mov not in (HEAD1, HEAD2, BOTH):
            raise ValueError(f"bad mov {self.mov!r}")

    def moves_head1(self) -> bool:
        return self.mov in (HEAD1, BOTH)

    def moves_head2(self) -> bool:
        return self.mov in (HEAD2, BOTH)

    def references(self, kind: str) -> bool:
        """Whether the step looks at the letter under a head (guard, copy, or cost)."""
        if any(a.mentions(kind) for a in self.guard):
            return True
        if any(src.kind == kind for src in self.assignment.sources()):
            return True
        if kind == CURR1 and self.acc.a1:
            return True
        if kind == CURR2 and self.acc.a2:
            return True
        return False


@dataclass(frozen=True)
class Raa:
    """Possibly nondeterministic; registers and accumulator start at 0."""

    num_states: int
    num_registers: int
    initial: int
    accepting: frozenset
    transitions: tuple

    def __post_init__(self):
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        for t in self.transitions:
            if not (0 <= t.source < self.num_states and 0 <= t.target < self.num_states):
                raise ValueError(f"transition endpoints out of range: {t}")
            for atom in t.guard:
                for op in atom.operands():
                    self._check_operand(op)
            for target, src in t.assignment.updates:
                if not (0 <= target < self.num_registers):
                    raise ValueError("assignment target out of range")
                self._check_operand(src)

    def _check_operand(self, op: Operand):
        if op.kind == "curr":
            raise ValueError("RAA operands use curr1/curr2, not 'curr'")
        if op.kind == "reg" and not (0 <= op.index < self.num_registers):
            raise ValueError(f"register r{op.index + 1} out of range")

    def outgoing(self, state: int):
        return tuple(t for t in self.transitions if t.source == state)

    def initial_registers(self) -> tuple:
        return tuple(Fraction(0) for _ in range(self.num_registers))

    def constants(self):
        out = []
        for t in self.transitions:
            out.extend(guard_constants(t.guard))
            for _, src in t.assignment.updates:
                if src.kind == CONST:
                    out.append(src.value)
        return out


def _letters_for(t: RaaTransition, v, w, h1, h2):
    """Letters visible to this step, or None if a needed head ran off the end."""
    m, n = len(v), len(w)
    need1 = t.moves_head1() or t.references(CURR1)
    need2 = t.moves_head2() or t.references(CURR2)
    if need1 and h1 > m:
        return None
    if need2 and h2 > n:
        return None
    c1 = v[h1 - 1] if h1 <= m else None
    c2 = w[h2 - 1] if h2 <= n else None
    return c1, c2


class _CompiledRaa:
    """Register-free evaluation plan: per-state transitions with memoized
    per-letter-pair effects. Purely an engine optimization; the semantics
    are the generic configuration-graph sweep."""

    __slots__ = ("raa", "per_state", "letter_ids", "letters", "effects", "scaled")

    def __init__(self, raa: Raa):
        self.raa = raa
        self.per_state = [[] for _ in range(raa.num_states)]
        for t in raa.transitions:
            self.per_state[t.source].append(
                (
                    t.moves_head1() or t.references(CURR1),
                    t.moves_head2() or t.references(CURR2),
                    t.guard,
                    t.acc,
                    t.target,
                    1 if t.moves_head1() else 0,
                    1 if t.moves_head2() else 0,
                )
            )
        self.letter_ids = {None: 0}  # value -> small int, id 0 = exhausted head
        self.letters = [None]
        self.effects = {}
        self.scaled = {}

    def letter_id(self, value: Fraction) -> int:
        key = (value.numerator, value.denominator)  # int-tuple hash beats Fraction.__hash__
        i = self.letter_ids.get(key)
        if i is None:
            i = len(self.letters)
            self.letter_ids[key] = i
            self.letters.append(value)
        return i

    def effects_for(self, state, i1, i2):
        key = (state, i1, i2)
        cached = self.effects.get(key)
        if cached is not None:
            return cached
        c1, c2 = self.letters[i1], self.letters[i2]
        out = []
        letters = {CURR1: c1, CURR2: c2}
        val = Valuation((), letters)
        for need1, need2, guard, acc, target, dh1, dh2 in self.per_state[state]:
            if (need1 and c1 is None) or (need2 and c2 is None):
                continue
            if not guard_holds(guard, val):
                continue
            inc = acc.increment(c1, c2)
            if inc < 0:
                continue
            out.append((target, dh1, dh2, inc))
        self.effects[key] = out
        return out

    def scaled_row(self, state, i1, i2, scale):
        key = (state, i1, i2, scale)
        cached = self.scaled.get(key)
        if cached is None:
            cached = tuple(
                (t, dh1, dh2, int(inc * scale))
                for (t, dh1, dh2, inc) in self.effects_for(state, i1, i2)
            )
            self.scaled[key] = cached
        return cached

    def denom_lcm(self, i1, i2):
        key = ("lcm", i1, i2)
        cached = self.scaled.get(key)
        if cached is None:
            cached = 1
            for s in range(len(self.per_state)):
                for _, _, _, inc in self.effects_for(s, i1, i2):
                    d = inc.denominator
                    if cached % d:
                        cached = cached * d // math.gcd(cached, d)
            self.scaled[key] = cached
        return cached

    def conv_rows(self, i1, i2, scale, W, span):
        """Per-state rows of (flat index delta, scaled increment) for a fixed
        distance-array geometry; memoized across calls."""
        key = (i1, i2, scale, W, span)
        cached = self.scaled.get(key)
        if cached is None:
            cached = [
                [
                    ((t - s) * span + dh1 * W + dh2, inc)
                    for (t, dh1, dh2, inc) in self.scaled_row(s, i1, i2, scale)
                ]
                for s in range(len(self.per_state))
            ]
            self.scaled[key] = cached
        return cached


_COMPILE_CACHE: dict = {}


def _compiled(raa: Raa) -> _CompiledRaa:
    plan = _COMPILE_CACHE.get(id(raa))
    if plan is None or plan.raa is not raa:
        plan = _CompiledRaa(raa)
        if len(_COMPILE_CACHE) > 64:
            _COMPILE_CACHE.clear()
        _COMPILE_CACHE[id(raa)] = plan
    return plan


def _evaluate_register_free(raa: Raa, v, w) -> ExtendedCost:
    plan = _compiled(raa)
    m, n = len(v), len(w)
    S = raa.num_states
    lid = plan.letter_id
    i1s = [lid(x) for x in v] + [0]
    i2s = [lid(x) for x in w] + [0]
    d1 = sorted(set(i1s))
    d2 = sorted(set(i2s))
    scale = 1
    for i1 in d1:
        for i2 in d2:
            d = plan.denom_lcm(i1, i2)
            if scale % d:
                scale = scale * d // math.gcd(scale, d)
    W = n + 2
    span = (m + 2) * W
    # rows[h1-1][h2-1][s]: list of (flat index delta, scaled increment)
    pair_rows = {}
    for i1 in d1:
        for i2 in d2:
            pair_rows[(i1, i2)] = plan.conv_rows(i1, i2, scale, W, span)
    rows = [[pair_rows[(i1, i2)] for i2 in i2s] for i1 in i1s]

    dist = [None] * (S * span)
    dist[raa.initial * span + W + 1] = 0  # (initial, h1=1, h2=1)
    if S == 1:
        for h1 in range(1, m + 2):
            rows_h1 = rows[h1 - 1]
            base_h1 = h1 * W
            for h2 in range(1, n + 2):
                idx = base_h1 + h2
                d = dist[idx]
                if d is None:
                    continue
                for delta, inc in rows_h1[h2 - 1][0]:
                    nidx = idx + delta
                    nd = d + inc
                    od = dist[nidx]
                    if od is None or nd < od:
                        dist[nidx] = nd
    else:
        for h1 in range(1, m + 2):
            rows_h1 = rows[h1 - 1]
            base_h1 = h1 * W
            for h2 in range(1, n + 2):
                cell_rows = rows_h1[h2 - 1]
                off = base_h1 + h2
                for s in range(S):
                    idx = s * span + off
                    d = dist[idx]
                    if d is None:
                        continue
                    for delta, inc in cell_rows[s]:
                        nidx = idx + delta
                        nd = d + inc
                        od = dist[nidx]
                        if od is None or nd < od:
                            dist[nidx] = nd
    goal_off = (m + 1) * W + (n + 1)
    best = None
    for s in raa.accepting:
        d = dist[s * span + goal_off]
        if d is not None and (best is None or d < best):
            best = d
    return INF if best is None else Fraction(best, scale)


def evaluate(raa: Raa, v: Sequence[Fraction], w: Sequence[Fraction]) -> ExtendedCost:
    """Minimum accumulated cost over accepting runs on (v, w); INF if none.

    Heads only move right, so configurations form a DAG layered by h1+h2
    and a forward sweep computes exact shortest costs.
    """
    v = tuple(x if type(x) is Fraction else Fraction(x) for x in v)
    w = tuple(x if type(x) is Fraction else Fraction(x) for x in w)
    m, n = len(v), len(w)
    if raa.num_registers == 0:
        return _evaluate_register_free(raa, v, w)
    for t in raa.transitions:
        for _, src in t.assignment.updates:
            if src.kind not in ("reg", "const", CURR1, CURR2):
                raise UnboundedRegisterDomain(f"bad register source {src!r}")
    start = (raa.initial, 1, 1, raa.initial_registers())
    dist = {start: Fraction(0)}
    layers: dict[int, list] = {2: [start]}
    # layer-by-layer relaxation; every step strictly increases h1+h2, so a
    # configuration's cost is final once its layer is reached
    for layer in range(2, m + n + 3):
        for cfg in layers.pop(layer, ()):
            state, h1, h2, regs = cfg
            base = dist[cfg]
            for t in raa.outgoing(state):
                letters = _letters_for(t, v, w, h1, h2)
                if letters is None:
                    continue
                c1, c2 = letters
                val = Valuation(regs, {CURR1: c1, CURR2: c2})
                if not guard_holds(t.guard, val):
                    continue
                inc = t.acc.increment(c1, c2)
                if inc < 0:
                    continue
                nregs = apply_assignment(t.assignment, val)
                ncfg = (
                    t.target,
                    h1 + (1 if t.moves_head1() else 0),
                    h2 + (1 if t.moves_head2() else 0),
                    nregs,
                )
                nd = base + inc
                if ncfg not in dist:
                    layers.setdefault(ncfg[1] + ncfg[2], []).append(ncfg)
                    dist[ncfg] = nd
                elif nd < dist[ncfg]:
                    dist[ncfg] = nd
    best: ExtendedCost = INF
    for (state, h1, h2, _regs), d in dist.items():
        if h1 == m + 1 and h2 == n + 1 and state in raa.accepting:
            if d < best:
                best = d
    return best


def _selfloop(guard, acc, mov, assignment=Assignment()):
    return RaaTransition(0, guard, assignment, acc, 0, mov)


def build_metric(kind: str, **params) -> Raa:
    """The standard metric machines.

    Kinds: last_letter, hamming, threshold_hamming (param c >= 0), manhattan,
    edit (params subst_cost, insdel_cost, default 1 each), dtw.
    """
    lt = GuardAtom(CURR1_OP, "<", CURR2_OP)
    gt = GuardAtom(CURR1_OP, ">", CURR2_OP)
    ge = GuardAtom(CURR1_OP, ">=", CURR2_OP)
    le = GuardAtom(CURR1_OP, "<=", CURR2_OP)
    eq = GuardAtom(CURR1_OP, "=", CURR2_OP)
    ne = GuardAtom(CURR1_OP, "!=", CURR2_OP)
    one = Fraction(1)
    diff21 = AccUpdate(a1=-one, a2=one)  # curr2 - curr1
    diff12 = AccUpdate(a1=one, a2=-one)  # curr1 - curr2

    if kind == "hamming":
        ts = [
            _selfloop((lt,), AccUpdate(b=one), BOTH),
            _selfloop((gt,), AccUpdate(b=one), BOTH),
            _selfloop((eq,), ZERO_ACC, BOTH),
        ]
        return Raa(1, 0, 0, frozenset({0}), tuple(ts))

    if kind == "manhattan":
        ts = [
            _selfloop((le,), diff21, BOTH),
            _selfloop((gt,), diff12, BOTH),
        ]
        return Raa(1, 0, 0, frozenset({0}), tuple(ts))

    if kind == "last_letter":
        ts = [
            RaaTransition(0, (eq,), Assignment(), ZERO_ACC, 0, BOTH),
            RaaTransition(0, (ge,), Assignment(), diff12, 1, BOTH),
            RaaTransition(0, (lt,), Assignment(), diff21, 1, BOTH),
        ]
        return Raa(2, 0, 0, frozenset({1}), tuple(ts))

    if kind == "edit":
        subst = Fraction(params.get("subst_cost", 1))
        insdel = Fraction(params.get("insdel_cost", 1))
        if subst < 0 or insdel < 0:
            raise ValueError("edit costs must be non-negative")
        ts = [
            _selfloop((ne,), AccUpdate(b=subst), BOTH),  # t1: substitution
            _selfloop((eq,), ZERO_ACC, BOTH),            # t2: match
            _selfloop((), AccUpdate(b=2 * insdel), BOTH),  # t3: unmatched pair
            _selfloop((), AccUpdate(b=insdel), HEAD1),   # t4: delete from v
            _selfloop((), AccUpdate(b=insdel), HEAD2),   # t5: insert into v
        ]
        return Raa(1, 0, 0, frozenset({0}), tuple(ts))

    if kind == "dtw":
        # Guesses the incremental matching: each step charges |curr1 - curr2|
        # for the currently matched pair, then advances one or both heads.
        # Acceptance (both heads exhausted) forces the last step to be a
        # 'both' move from the final pair, pinning the (m, n) endpoint; the
        # initial configuration pins (1, 1).
        ts = []
        for mov in (HEAD1, HEAD2, BOTH):
            ts.append(_selfloop((ge,), diff12, mov))
            ts.append(_selfloop((lt,), diff21, mov))
        return Raa(1, 0, 0, frozenset({0}), tuple(ts))

    if kind == "threshold_hamming":
        c = Fraction(params.get("c", 0))
        if c < 0:
            raise ValueError("threshold must be >= 0")
        within = (
            GuardAtom(CURR2_OP, "<=", CURR1_OP, shift=c),
            GuardAtom(CURR2_OP, ">=", CURR1_OP, shift=-c),
        )
        above = (GuardAtom(CURR2_OP, ">", CURR1_OP, shift=c),)
        below = (GuardAtom(CURR2_OP, "<", CURR1_OP, shift=-c),)
        ts = [
            _selfloop(within, ZERO_ACC, BOTH),
            _selfloop(above, AccUpdate(b=one), BOTH),
            _selfloop(below, AccUpdate(b=one), BOTH),
        ]
        return Raa(1, 0, 0, frozenset({0}), tuple(ts))

    raise ValueError(f"unknown metric kind {kind!r}")


METRIC_KINDS = ("last_letter", "hamming", "threshold_hamming", "manhattan", "edit", "dtw")


def raa_split_disequalities(raa: Raa) -> Raa:
    """!= atoms split into </> transition pairs, as for DRAs."""
    new_transitions = []
    for t in raa.transitions:
        neq = [i for i, a in enumerate(t.guard) if a.op == "!="]
        if not neq:
            new_transitions.append(t)
            continue
        for combo in itertools.product("<>", repeat=len(neq)):
            atoms = list(t.guard)
            for pos, op in zip(neq, combo):
                a = atoms[pos]
                atoms[pos] = GuardAtom(a.lhs, op, a.rhs, a.shift)
            new_transitions.append(
                RaaTransition(t.source, tuple(atoms), t.assignment, t.acc, t.target, t.mov)
            )
    return Raa(raa.num_states, raa.num_registers, raa.initial, raa.accepting, tuple(new_transitions))


def _offset_operand(op: Operand, offset: int) -> Operand:
    if op.kind == "reg":
        return reg(op.index + offset)
    return op


def _dra_guard_as(guard, letter_op: Operand, offset: int) -> Guard:
    atoms = []
    for atom in guard:
        lhs = _offset_operand(atom.lhs, offset)
        rhs = _offset_operand(atom.rhs, offset)
        if lhs.kind == "curr":
            lhs = letter_op
        if rhs.kind == "curr":
            rhs = letter_op
        atoms.append(GuardAtom(lhs, atom.op, rhs, atom.shift))
    return tuple(atoms)


def _dra_assignment_as(assignment, letter_op: Operand, offset: int) -> Assignment:
    updates = []
    for target, src in assignment.updates:
        src = _offset_operand(src, offset)
        if src.kind == "curr":
            src = letter_op
        updates.append((target + offset, src))
    return Assignment(tuple(updates))


def restrict_metric(metric: Raa, l1: Dra, l2: Dra) -> Raa:
    """Product computing metric(v, w) when v in L(l1) and w in L(l2), else INF.

    l1 runs on head-1 letters, l2 on head-2 letters; each advances exactly
    when its head moves. A dying DRA run kills the product run, which is the
    correct "otherwise infinity" semantics.
    """
    l1 = split_disequalities(l1)
    l2 = split_disequalities(l2)
    k0, k1 = metric.num_registers, l1.num_registers
    num_registers = k0 + k1 + l2.num_registers
    n1, n2 = l1.num_states, l2.num_states

    def sid(ms, s1, s2):
        return (ms * n1 + s1) * n2 + s2

    transitions = []
    for t in metric.transitions:
        l1_opts = l1.transitions if t.moves_head1() else [None]
        l2_opts = l2.transitions if t.moves_head2() else [None]
        for t1 in l1_opts:
            for t2 in l2_opts:
                guard = list(t.guard)
                updates = list(t.assignment.updates)
                for d_t, letter, offset in ((t1, CURR1_OP, k0), (t2, CURR2_OP, k0 + k1)):
                    if d_t is None:
                        continue
                    guard.extend(_dra_guard_as(d_t.guard, letter, offset))
                    updates.extend(_dra_assignment_as(d_t.assignment, letter, offset).updates)
                src1 = t1.source if t1 is not None else None
                src2 = t2.source if t2 is not None else None
                s1_range = [src1] if src1 is not None else range(n1)
                s2_range = [src2] if src2 is not None else range(n2)
                for s1 in s1_range:
                    for s2 in s2_range:
                        d1 = t1.target if t1 is not None else s1
                        d2 = t2.target if t2 is not None else s2
                        transitions.append(
                            RaaTransition(
                                sid(t.source, s1, s2),
                                tuple(guard),
                                Assignment(tuple(updates)),
                                t.acc,
                                sid(t.target, d1, d2),
                                t.mov,
                            )
                        )
    accepting = frozenset(
        sid(ms, s1, s2)
        for ms in metric.accepting
        for s1 in l1.accepting
        for s2 in l2.accepting
    )
    return Raa(
        num_states=metric.num_states * n1 * n2,
        num_registers=num_registers,
        initial=sid(metric.initial, l1.initial, l2.initial),
        accepting=accepting,
        transitions=tuple(transitions),
    )

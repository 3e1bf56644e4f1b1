"""Deterministic register automata over (Q; <, =): execution and closure ops."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import cells
from .guards import (
    CONST,
    CURR,
    CURR_OP,
    Assignment,
    Guard,
    GuardAtom,
    Operand,
    Valuation,
    apply_assignment,
    const,
    guard_constants,
    guard_holds,
    guard_repr,
    reg,
)


class MultipleEnabledTransitions(RuntimeError):
    """Two guards fired at once: the automaton is not deterministic."""


@dataclass(frozen=True)
class Transition:
    source: int
    guard: Guard
    assignment: Assignment
    target: int

    def __repr__(self):
        return f"{self.source} --[{guard_repr(self.guard)} / {self.assignment!r}]--> {self.target}"


@dataclass(frozen=True)
class Dra:
    """A k-register automaton; deterministic by contract, checkable symbolically.

    Registers start at 0. A run fires the unique enabled transition per
    letter; with none enabled the run dies and the sequence is rejected.
    """

    num_states: int
    num_registers: int
    initial: int
    accepting: frozenset
    transitions: tuple

    def __post_init__(self):
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if not (0 <= self.initial < self.num_states):
            raise ValueError("initial state out of range")
        for q in self.accepting:
            if not (0 <= q < self.num_states):
                raise ValueError(f"accepting state {q} out of range")
        for t in self.transitions:
            if not (0 <= t.source < self.num_states and 0 <= t.target < self.num_states):
                raise ValueError(f"transition endpoints out of range: {t}")
            for atom in t.guard:
                self._check_operand(atom.lhs)
                self._check_operand(atom.rhs)
                if atom.shift:
                    raise ValueError("DRA guards must not carry shifts")
                if atom.lhs.kind == CONST and atom.rhs.kind == CONST:
                    raise ValueError("guard atom must mention a register or curr")
            for target, src in t.assignment.updates:
                if not (0 <= target < self.num_registers):
                    raise ValueError("assignment target out of range")
                self._check_operand(src)

    def _check_operand(self, op: Operand):
        if op.kind in ("curr1", "curr2"):
            raise ValueError("DRA operands use 'curr', not curr1/curr2")
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


@dataclass(frozen=True)
class Configuration:
    state: int
    registers: tuple


@dataclass
class RunResult:
    accepted: bool
    trace: list  # (Configuration, Transition or None); None marks the end or run-death
    died_at: Optional[int] = None  # letter index where no transition was enabled

    @property
    def final(self) -> Configuration:
        return self.trace[-1][0]


def _enabled(dra: Dra, config: Configuration, letter: Fraction):
    val = Valuation(config.registers, {CURR: letter})
    hits = [t for t in dra.outgoing(config.state) if guard_holds(t.guard, val)]
    if len(hits) > 1:
        raise MultipleEnabledTransitions(
            f"state {config.state}, letter {letter}: guards "
            + " | ".join(guard_repr(t.guard) for t in hits)
        )
    return hits[0] if hits else None


def step(dra: Dra, config: Configuration, letter: Fraction):
    """One execution step; returns (next config, transition) or (None, None) on death."""
    t = _enabled(dra, config, letter)
    if t is None:
        return None, None
    val = Valuation(config.registers, {CURR: letter})
    return Configuration(t.target, apply_assignment(t.assignment, val)), t


def run(dra: Dra, seq: Sequence[Fraction]) -> RunResult:
    """Execute from (q0, 0..0). Empty input is accepted iff q0 is accepting."""
    config = Configuration(dra.initial, dra.initial_registers())
    trace = []
    for i, letter in enumerate(seq):
        nxt, t = step(dra, config, Fraction(letter))
        if nxt is None:
            trace.append((config, None))
            return RunResult(False, trace, died_at=i)
        trace.append((config, t))
        config = nxt
    trace.append((config, None))
    return RunResult(config.state in dra.accepting, trace)


def accepts(dra: Dra, seq: Sequence[Fraction]) -> bool:
    return run(dra, seq).accepted


@dataclass(frozen=True)
class DeterminismViolation:
    state: int
    first: Transition
    second: Transition
    witness_registers: tuple
    witness_letter: Fraction


def check_determinism(dra: Dra) -> list:
    """Symbolic pairwise guard-overlap check via order-cell enumeration.

    Empty result means: for every state, register valuation and letter, at
    most one outgoing guard is satisfiable.
    """
    violations = []
    for state in range(dra.num_states):
        outs = dra.outgoing(state)
        for a, b in itertools.combinations(outs, 2):
            cell = cells.guards_overlap(a.guard, b.guard)
            if cell is None:
                continue
            regs = []
            for i in range(dra.num_registers):
                key = cells.reg_key(i)
                regs.append(cell.value_of(key) if key in cell.index else Fraction(0))
            letter = cell.value_of(cells.CURR_KEY) if cells.CURR_KEY in cell.index else Fraction(0)
            violations.append(DeterminismViolation(state, a, b, tuple(regs), letter))
    return violations


def _operand_of_item(item) -> Operand:
    if item == cells.CURR_KEY:
        return CURR_OP
    if item[0] == "reg":
        return reg(item[1])
    return const(item[1])


def complete(dra: Dra) -> Dra:
    """Total version: adds a rejecting sink and, per state, transitions to it
    covering exactly the letter cells no existing guard covers."""
    sink = dra.num_states
    new_transitions = list(dra.transitions)
    for state in range(dra.num_states):
        outs = dra.outgoing(state)
        items = {cells.CURR_KEY}
        consts = set()
        for t in outs:
            for atom in t.guard:
                for op in atom.operands():
                    key = cells.operand_key(op)
                    if key[0] == "const":
                        consts.add(key[1])
                    else:
                        items.add(key)
        for cell in cells.enumerate_cells(sorted(items), consts):
            if any(cell.satisfies_guard(t.guard) for t in outs):
                continue
            guard = cells.cell_guard(cell, _operand_of_item)
            new_transitions.append(Transition(state, guard, Assignment(), sink))
    new_transitions.append(Transition(sink, (), Assignment(), sink))
    return Dra(
        num_states=dra.num_states + 1,
        num_registers=dra.num_registers,
        initial=dra.initial,
        accepting=dra.accepting,
        transitions=tuple(new_transitions),
    )


def complement(dra: Dra) -> Dra:
    """complete(dra) with the accepting set flipped (sink becomes accepting)."""
    total = complete(dra)
    flipped = frozenset(range(total.num_states)) - total.accepting
    return Dra(total.num_states, total.num_registers, total.initial, flipped, total.transitions)


def split_disequalities(dra: Dra) -> Dra:
    """Replace every != atom by two transitions with < and >.

    Language-preserving and determinism-preserving; required because the
    verifier's polytope argument only handles convex (conjunctive,
    disequality-free) guards.
    """
    new_transitions = []
    for t in dra.transitions:
        neq_positions = [i for i, a in enumerate(t.guard) if a.op == "!="]
        if not neq_positions:
            new_transitions.append(t)
            continue
        for combo in itertools.product("<>", repeat=len(neq_positions)):
            atoms = list(t.guard)
            for pos, op in zip(neq_positions, combo):
                a = atoms[pos]
                atoms[pos] = GuardAtom(a.lhs, op, a.rhs, a.shift)
            new_transitions.append(Transition(t.source, tuple(atoms), t.assignment, t.target))
    return Dra(dra.num_states, dra.num_registers, dra.initial, dra.accepting, tuple(new_transitions))

"""Guard atoms, conjunctive guards and register assignments.

Shared between the one-head automata (DRA, operand kind "curr") and the
two-head accumulator automata (operand kinds "curr1"/"curr2"). Guards are
conjunctions of order/equality atoms between registers, the current
letter(s) and rational constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional


REG = "reg"
CURR = "curr"
CURR1 = "curr1"
CURR2 = "curr2"
CONST = "const"

_OPS = ("<", "<=", "=", "!=", ">", ">=")

_NEGATE = {"<": ">=", "<=": ">", "=": "!=", "!=": "=", ">": "<=", ">=": "<"}
_CLOSE = {"<": "<=", ">": ">="}
_FLIP = {"<": ">", "<=": ">=", "=": "=", "!=": "!=", ">": "<", ">=": "<="}


@dataclass(frozen=True)
class Operand:
    """A register reference, a current-letter reference, or a constant."""

    kind: str
    index: int = 0
    value: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in (REG, CURR, CURR1, CURR2, CONST):
            raise ValueError(f"bad operand kind {self.kind!r}")

    def is_letter(self) -> bool:
        return self.kind in (CURR, CURR1, CURR2)

    def __repr__(self):
        if self.kind == REG:
            return f"r{self.index + 1}"
        if self.kind == CONST:
            return str(self.value)
        return self.kind


def reg(i: int) -> Operand:
    return Operand(REG, index=i)


def const(value) -> Operand:
    return Operand(CONST, value=Fraction(value))


CURR_OP = Operand(CURR)
CURR1_OP = Operand(CURR1)
CURR2_OP = Operand(CURR2)


@dataclass(frozen=True)
class GuardAtom:
    """lhs op (rhs + shift).

    The shift is only used by metric constructions that compare letters
    against a letter offset by a constant (threshold Hamming); plain
    automata always have shift 0.
    """

    lhs: Operand
    op: str
    rhs: Operand
    shift: Fraction = Fraction(0)

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"bad comparison op {self.op!r}")
        if not (self.lhs.kind != CONST or self.rhs.kind != CONST or self.shift):
            # constant-vs-constant atoms are legal but pointless; keep them
            pass

    def operands(self):
        return (self.lhs, self.rhs)

    def mentions(self, kind: str) -> bool:
        return self.lhs.kind == kind or self.rhs.kind == kind

    def is_strict(self) -> bool:
        return self.op in ("<", ">")

    def negated(self) -> "GuardAtom":
        return GuardAtom(self.lhs, _NEGATE[self.op], self.rhs, self.shift)

    def closed(self) -> "GuardAtom":
        if self.op in _CLOSE:
            return GuardAtom(self.lhs, _CLOSE[self.op], self.rhs, self.shift)
        return self

    def holds(self, lhs_value: Fraction, rhs_value: Fraction) -> bool:
        return compare(lhs_value, self.op, rhs_value + self.shift)

    def __repr__(self):
        sh = "" if not self.shift else f"+{self.shift}"
        return f"{self.lhs!r}{self.op}{self.rhs!r}{sh}"


def compare(a: Fraction, op: str, b: Fraction) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == ">":
        return a > b
    return a >= b


Guard = tuple[GuardAtom, ...]  # conjunction; empty tuple is True

TOP: Guard = ()


@dataclass(frozen=True)
class Assignment:
    """Register updates (target index, source operand); unmentioned registers keep their value."""

    updates: tuple[tuple[int, Operand], ...] = ()

    def __post_init__(self):
        targets = [t for t, _ in self.updates]
        if len(targets) != len(set(targets)):
            raise ValueError("assignment writes a register twice")

    def sources(self):
        return tuple(src for _, src in self.updates)

    def __repr__(self):
        return ", ".join(f"r{t + 1}:={s!r}" for t, s in self.updates) or "-"


NO_ASSIGN = Assignment()


class Valuation:
    """Concrete evaluation context: register vector plus current letters."""

    __slots__ = ("registers", "letters")

    def __init__(self, registers, letters: Optional[dict] = None):
        self.registers = registers
        self.letters = letters or {}

    def resolve(self, operand: Operand) -> Fraction:
        if operand.kind == CONST:
            return operand.value
        if operand.kind == REG:
            return self.registers[operand.index]
        try:
            return self.letters[operand.kind]
        except KeyError:
            raise KeyError(f"letter {operand.kind} not available here") from None


def guard_holds(guard: Guard, valuation: Valuation) -> bool:
    for atom in guard:
        if not atom.holds(valuation.resolve(atom.lhs), valuation.resolve(atom.rhs)):
            return False
    return True


def apply_assignment(assignment: Assignment, valuation: Valuation) -> tuple[Fraction, ...]:
    """New register vector after the assignment (reads old values)."""
    regs = list(valuation.registers)
    for target, src in assignment.updates:
        regs[target] = valuation.resolve(src)
    return tuple(regs)


def guard_constants(guard: Guard):
    out = []
    for atom in guard:
        if atom.lhs.kind == CONST:
            out.append(atom.lhs.value)
        if atom.rhs.kind == CONST:
            out.append(atom.rhs.value + atom.shift)
        elif atom.shift:
            out.append(atom.shift)
    return out


def substitute_operand(operand: Operand, kind: str, replacement: Operand) -> Operand:
    return replacement if operand.kind == kind else operand


def substitute_guard(guard: Guard, kind: str, replacement: Operand) -> Guard:
    """Replace every occurrence of a letter kind; folds const+shift."""
    atoms = []
    for atom in guard:
        lhs = substitute_operand(atom.lhs, kind, replacement)
        rhs = substitute_operand(atom.rhs, kind, replacement)
        shift = atom.shift
        if rhs.kind == CONST and shift:
            rhs = const(rhs.value + shift)
            shift = Fraction(0)
        atoms.append(GuardAtom(lhs, atom.op, rhs, shift))
    return tuple(atoms)


def substitute_assignment(assignment: Assignment, kind: str, replacement: Operand) -> Assignment:
    return Assignment(tuple((t, substitute_operand(s, kind, replacement)) for t, s in assignment.updates))


def guard_repr(guard: Guard) -> str:
    return " & ".join(repr(a) for a in guard) if guard else "T"

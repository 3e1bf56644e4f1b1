"""Interval-guard lattice shared by the constraint learner and local search.

Guards are intervals low <= curr <= high (strictness per endpoint) whose
endpoints are register references, constant slots, or absent; assignments
draw each register from {keep, another register, a constant slot, curr}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..guards import CURR_OP, Assignment, Guard, GuardAtom, Operand, const, reg

NL = None  # unbounded low endpoint
NH = None  # unbounded high endpoint


@dataclass(frozen=True)
class Endpoint:
    """A guard interval endpoint: register index or constant-slot index."""

    kind: str  # "reg" | "slot"
    index: int

    def operand(self, slot_values) -> Operand:
        if self.kind == "reg":
            return reg(self.index)
        return const(slot_values[self.index])


@dataclass(frozen=True)
class GuardShape:
    """low <= curr <= high with optional strict endpoints; None = unbounded."""

    low: Optional[Endpoint] = None
    low_strict: bool = False
    high: Optional[Endpoint] = None
    high_strict: bool = False

    def to_guard(self, slot_values) -> Guard:
        atoms = []
        if self.low is not None:
            atoms.append(
                GuardAtom(self.low.operand(slot_values), "<" if self.low_strict else "<=", CURR_OP)
            )
        if self.high is not None:
            atoms.append(
                GuardAtom(CURR_OP, "<" if self.high_strict else "<=", self.high.operand(slot_values))
            )
        return tuple(atoms)

    def label(self) -> str:
        def end(e, strict, side):
            if e is None:
                return "n" + side
            s = "s" if strict else "w"
            return f"{e.kind[0]}{e.index}{s}"

        return end(self.low, self.low_strict, "l") + "_" + end(self.high, self.high_strict, "h")


def enumerate_endpoints(num_registers: int, num_slots: int):
    out = [None]
    out.extend(Endpoint("reg", i) for i in range(num_registers))
    out.extend(Endpoint("slot", j) for j in range(num_slots))
    return out


def enumerate_shapes(num_registers: int, num_slots: int):
    """All non-degenerate interval shapes over the endpoint vocabulary.

    A shape with both endpoints equal is only kept fully non-strict (the
    equality guard); strict same-endpoint combinations are empty.
    """
    shapes = []
    endpoints = enumerate_endpoints(num_registers, num_slots)
    for low in endpoints:
        low_stricts = (False,) if low is None else (False, True)
        for ls in low_stricts:
            for high in endpoints:
                high_stricts = (False,) if high is None else (False, True)
                for hs in high_stricts:
                    if low is not None and low == high and (ls or hs):
                        continue
                    shapes.append(GuardShape(low, ls, high, hs))
    return shapes


@dataclass(frozen=True)
class SourceShape:
    """Register-update source: keep, curr, another register, or a slot."""

    kind: str  # "keep" | "curr" | "reg" | "slot"
    index: int = 0

    def operand(self, slot_values) -> Optional[Operand]:
        if self.kind == "keep":
            return None
        if self.kind == "curr":
            return CURR_OP
        if self.kind == "reg":
            return reg(self.index)
        return const(slot_values[self.index])

    def label(self) -> str:
        if self.kind in ("keep", "curr"):
            return self.kind
        return f"{self.kind}{self.index}"


def enumerate_sources(num_registers: int, num_slots: int, target: int):
    out = [SourceShape("keep"), SourceShape("curr")]
    out.extend(SourceShape("reg", j) for j in range(num_registers) if j != target)
    out.extend(SourceShape("slot", j) for j in range(num_slots))
    return out


def assignment_from_sources(sources, slot_values) -> Assignment:
    updates = []
    for target, src in enumerate(sources):
        operand = src.operand(slot_values)
        if operand is not None:
            updates.append((target, operand))
    return Assignment(tuple(updates))

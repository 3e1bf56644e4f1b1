"""Order-type cell enumeration over (Q; <, =).

A cell is a consistent total preorder over a finite operand set (registers,
the current letter, pinned constants). Guards built from order atoms are
constant on each cell, so enumerating cells decides satisfiability and
overlap questions exactly. Exponential in the number of operands, which the
benchmark automata keep tiny (guards have at most 4 atoms).
"""

from __future__ import annotations

from fractions import Fraction

from .guards import CONST, Guard, GuardAtom, Operand, compare

CURR_KEY = ("curr",)


def reg_key(i: int):
    return ("reg", i)


def operand_key(operand: Operand):
    """Cell-item key for an operand; constants key by value."""
    if operand.kind == CONST:
        return ("const", operand.value)
    if operand.kind == "reg":
        return reg_key(operand.index)
    return CURR_KEY  # curr / curr1 / curr2 collapse to the single letter slot


class Cell:
    """One total preorder: ordered blocks of equal-valued items."""

    __slots__ = ("blocks", "anchors", "index", "values")

    def __init__(self, blocks, anchors):
        self.blocks = blocks  # list of lists of item keys
        self.anchors = anchors  # per block: Fraction or None
        self.index = {}
        for i, block in enumerate(blocks):
            for item in block:
                self.index[item] = i
        self.values = _block_values(anchors)

    def value_of(self, item) -> Fraction:
        return self.values[self.index[item]]

    def satisfies(self, atom: GuardAtom) -> bool:
        if atom.shift:
            raise ValueError("shift atoms are not cell-enumerable")
        li = self.index[operand_key(atom.lhs)]
        ri = self.index[operand_key(atom.rhs)]
        return compare(li, atom.op, ri)

    def satisfies_guard(self, guard: Guard) -> bool:
        return all(self.satisfies(a) for a in guard)


def _block_values(anchors):
    """Concrete rational per block: anchored blocks keep their constant,
    free runs get evenly spaced values inside the surrounding gap."""
    n = len(anchors)
    values: list = [None] * n
    anchor_pos = [i for i, a in enumerate(anchors) if a is not None]
    for i in anchor_pos:
        values[i] = anchors[i]
    if not anchor_pos:
        return [Fraction(i) for i in range(n)]
    first, last = anchor_pos[0], anchor_pos[-1]
    for i in range(first - 1, -1, -1):
        values[i] = values[i + 1] - 1
    for i in range(last + 1, n):
        values[i] = values[i - 1] + 1
    for a, b in zip(anchor_pos, anchor_pos[1:]):
        gap = b - a - 1
        if gap:
            lo, hi = values[a], values[b]
            for j in range(1, gap + 1):
                values[a + j] = lo + (hi - lo) * Fraction(j, gap + 1)
    return values


def enumerate_cells(symbolic_items, constants):
    """All total preorders of symbolic items around the pinned constants.

    constants: iterable of Fractions (duplicates collapsed, order fixed by
    value). Symbolic items may join a constant's block (equality) or sit in
    any gap.
    """
    anchors = sorted(set(Fraction(c) for c in constants))
    base_blocks = [[("const", a)] for a in anchors]
    base_anchors = list(anchors)
    items = list(symbolic_items)
    results: list[Cell] = []

    def insert(blocks, anchs, remaining):
        if not remaining:
            results.append(Cell([list(b) for b in blocks], list(anchs)))
            return
        item, rest = remaining[0], remaining[1:]
        for i, block in enumerate(blocks):
            block.append(item)
            insert(blocks, anchs, rest)
            block.pop()
        for gap in range(len(blocks) + 1):
            blocks.insert(gap, [item])
            anchs.insert(gap, None)
            insert(blocks, anchs, rest)
            del blocks[gap]
            del anchs[gap]

    if not items and not base_blocks:
        return [Cell([], [])]
    insert(base_blocks, base_anchors, items)
    return results


def cell_guard(cell: Cell, operand_of_item) -> Guard:
    """Conjunction of atoms pinning exactly this cell.

    operand_of_item maps an item key back to an Operand. Blocks are chained
    with < atoms between representatives and = atoms inside blocks;
    const-vs-const atoms are dropped as vacuous.
    """
    atoms: list[GuardAtom] = []

    def rep(block):
        # prefer the constant anchor as the comparison target
        for item in block:
            if item[0] == "const":
                return operand_of_item(item)
        return operand_of_item(block[0])

    reps = [rep(b) for b in cell.blocks]
    for block, r in zip(cell.blocks, reps):
        for item in block:
            op = operand_of_item(item)
            if op == r:
                continue
            if op.kind == CONST and r.kind == CONST:
                continue
            atoms.append(GuardAtom(op, "=", r))
    for a, b in zip(reps, reps[1:]):
        if a.kind == CONST and b.kind == CONST:
            continue
        atoms.append(GuardAtom(a, "<", b))
    return tuple(atoms)


def guards_overlap(guard1: Guard, guard2: Guard):
    """Witness cell where both conjunctions hold, or None.

    Only operands mentioned by either guard participate; absent registers
    are unconstrained and irrelevant to the answer.
    """
    items = set()
    consts = set()
    for guard in (guard1, guard2):
        for atom in guard:
            for op in atom.operands():
                key = operand_key(op)
                if key[0] == "const":
                    consts.add(key[1])
                else:
                    items.add(key)
    for cell in enumerate_cells(sorted(items), consts):
        if cell.satisfies_guard(guard1) and cell.satisfies_guard(guard2):
            return cell
    return None

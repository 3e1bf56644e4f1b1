"""Benchmark languages: ground-truth automata, Markov samplers, dataset I/O.

L1..L7 are the symbolic two-letter languages; the letters a and b are bound
at runtime, a to the first letter read and b to the first later letter,
which must be strictly greater. S1..S11 are order/trend languages over Q;
S9 is the higher-highs-higher-lows machine verbatim.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .automata import Dra, Transition, run
from .guards import (
    CURR_OP,
    Assignment,
    GuardAtom,
    Valuation,
    apply_assignment,
    const,
    guard_holds,
    reg,
)
from .rational import format_rational, parse_rational

BENCHMARK_IDS = tuple(f"L{i}" for i in range(1, 8)) + tuple(f"S{i}" for i in range(1, 12))


def _t(source, guard, assign, target):
    return Transition(source, tuple(guard), Assignment(tuple(assign)), target)


def _a(*updates):
    return tuple(updates)


R1, R2, R3 = reg(0), reg(1), reg(2)
C = CURR_OP


def _atom(lhs, op, rhs):
    return GuardAtom(lhs, op, rhs)


def _build_l1():
    # Fig: q0 --[0 <= curr <= 5 / r1 := curr]--> q1; q1 --[r1 = curr / r1 := r1]--> q1
    ts = [
        _t(0, [_atom(const(0), "<=", C), _atom(C, "<=", const(5))], _a((0, C)), 1),
        _t(1, [_atom(R1, "=", C)], _a((0, R1)), 1),
    ]
    return Dra(2, 1, 0, {0, 1}, ts)


def _build_l2():
    # (ab)*: q0 eps-accepting, q1 after a, q2 after full pairs, q3 mid-pair
    ts = [
        _t(0, [], _a((0, C)), 1),
        _t(1, [_atom(C, ">", R1)], _a((1, C)), 2),
        _t(2, [_atom(C, "=", R1)], _a(), 3),
        _t(3, [_atom(C, "=", R2)], _a(), 2),
    ]
    return Dra(4, 2, 0, {0, 2}, ts)


def _build_l3():
    # a^n b^m, n odd, m even; states: 0 start, 1 odd a, 2 even a, 3 odd b, 4 even b
    ts = [
        _t(0, [], _a((0, C)), 1),
        _t(1, [_atom(C, "=", R1)], _a(), 2),
        _t(2, [_atom(C, "=", R1)], _a(), 1),
        _t(1, [_atom(C, ">", R1)], _a((1, C)), 3),
        _t(3, [_atom(C, "=", R2)], _a(), 4),
        _t(4, [_atom(C, "=", R2)], _a(), 3),
    ]
    return Dra(5, 2, 0, {1, 4}, ts)


def _build_l4():
    # no symbol three times in a row; 0 start, runs: 1/2 a-run len 1/2 (b unbound),
    # 3/4 a-run len 1/2 (b bound), 5/6 b-run len 1/2
    ts = [
        _t(0, [], _a((0, C)), 1),
        _t(1, [_atom(C, "=", R1)], _a(), 2),
        _t(1, [_atom(C, ">", R1)], _a((1, C)), 5),
        _t(2, [_atom(C, ">", R1)], _a((1, C)), 5),
        _t(3, [_atom(C, "=", R1)], _a(), 4),
        _t(3, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 5),
        _t(4, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 5),
        _t(5, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 6),
        _t(5, [_atom(C, "=", R1)], _a(), 3),
        _t(6, [_atom(C, "=", R1)], _a(), 3),
    ]
    return Dra(7, 2, 0, {0, 1, 2, 3, 4, 5, 6}, ts)


def _build_l5():
    # a(a|b)*, even #a and even #b; 0 start, unbound (pa,pb even-ness of a count only
    # matters before b exists): 1 = (odd,0), 2 = (even,0); bound: 3=(e,e) 4=(e,o) 5=(o,e) 6=(o,o)
    ts = [
        _t(0, [], _a((0, C)), 1),
        _t(1, [_atom(C, "=", R1)], _a(), 2),
        _t(2, [_atom(C, "=", R1)], _a(), 1),
        _t(1, [_atom(C, ">", R1)], _a((1, C)), 6),
        _t(2, [_atom(C, ">", R1)], _a((1, C)), 4),
        _t(3, [_atom(C, "=", R1)], _a(), 5),
        _t(3, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 4),
        _t(4, [_atom(C, "=", R1)], _a(), 6),
        _t(4, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 3),
        _t(5, [_atom(C, "=", R1)], _a(), 3),
        _t(5, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 6),
        _t(6, [_atom(C, "=", R1)], _a(), 4),
        _t(6, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 5),
    ]
    return Dra(7, 2, 0, {2, 3}, ts)


def _build_l6():
    # a(a|b)*, #a == #b mod 3; d = (#a - #b) mod 3; 0 start; unbound d: 1,2,3 = d 0,1,2;
    # bound d: 4,5,6 = d 0,1,2
    def u(d):
        return 1 + d

    def b(d):
        return 4 + d

    ts = [_t(0, [], _a((0, C)), u(1))]
    for d in range(3):
        ts.append(_t(u(d), [_atom(C, "=", R1)], _a(), u((d + 1) % 3)))
        ts.append(_t(u(d), [_atom(C, ">", R1)], _a((1, C)), b((d - 1) % 3)))
        ts.append(_t(b(d), [_atom(C, "=", R1)], _a(), b((d + 1) % 3)))
        ts.append(_t(b(d), [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), b((d - 1) % 3)))
    return Dra(7, 2, 0, {u(0), b(0)}, ts)


def _build_l7():
    # a+ b* a* b*; 0 start, 1 first a-block, 2 first b-block, 3 second a-block, 4 last b-block
    ts = [
        _t(0, [], _a((0, C)), 1),
        _t(1, [_atom(C, "=", R1)], _a(), 1),
        _t(1, [_atom(C, ">", R1)], _a((1, C)), 2),
        _t(2, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 2),
        _t(2, [_atom(C, "=", R1)], _a(), 3),
        _t(3, [_atom(C, "=", R1)], _a(), 3),
        _t(3, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 4),
        _t(4, [_atom(R1, "<", R2), _atom(C, "=", R2)], _a(), 4),
    ]
    return Dra(5, 2, 0, {1, 2, 3, 4}, ts)


def _build_monotone(op):
    ts = [
        _t(0, [], _a((0, C)), 1),
        _t(1, [_atom(C, op, R1)], _a((0, C)), 1),
    ]
    return Dra(2, 1, 0, {0, 1}, ts)


def _build_s5(up=">", down="<"):
    # single peak: ascend at least once, then descend at least once
    ts = [
        _t(0, [], _a((0, C)), 1),
        _t(1, [_atom(C, up, R1)], _a((0, C)), 2),
        _t(2, [_atom(C, up, R1)], _a((0, C)), 2),
        _t(2, [_atom(C, down, R1)], _a((0, C)), 3),
        _t(3, [_atom(C, down, R1)], _a((0, C)), 3),
    ]
    return Dra(4, 1, 0, {3}, ts)


def _build_peaks(count):
    # alternating strict ascent/descent phases; accepts after the count-th descent
    num_states = 2 + 2 * count
    ts = [_t(0, [], _a((0, C)), 1)]
    prev = 1
    for _ in range(count):
        up, down = prev + 1, prev + 2
        ts.append(_t(prev, [_atom(C, ">", R1)], _a((0, C)), up))
        ts.append(_t(up, [_atom(C, ">", R1)], _a((0, C)), up))
        ts.append(_t(up, [_atom(C, "<", R1)], _a((0, C)), down))
        ts.append(_t(down, [_atom(C, "<", R1)], _a((0, C)), down))
        prev = down
    return Dra(num_states, 1, 0, {num_states - 1}, ts)


def _build_s9():
    # Higher highs and higher lows, exactly the motivating machine:
    # r1 last trough, r2 last peak, r3 previous value.
    ts = [
        _t(0, [_atom(R1, ">=", C)], _a((0, C)), 0),
        _t(0, [_atom(R1, "<", C)], _a((1, C)), 1),
        _t(1, [_atom(R2, "<=", C)], _a((1, C)), 1),
        _t(1, [_atom(R2, ">", C), _atom(R1, "<", C)], _a((2, C)), 2),
        _t(2, [_atom(R3, ">=", C), _atom(R1, "<", C)], _a((2, C)), 2),
        _t(2, [_atom(R3, "<", C)], _a((0, R3), (2, C)), 3),
        _t(3, [_atom(R3, "<=", C)], _a((2, C)), 3),
        _t(3, [_atom(R3, ">", C), _atom(R2, "<", R3)], _a((1, R3), (2, C)), 2),
    ]
    return Dra(4, 3, 0, {1, 2, 3}, ts)


def _build_s10():
    # higher highs, lower lows: descents are unbounded, each new trough must
    # undercut the last (checked at the turn), each new peak must exceed the last
    ts = [
        _t(0, [_atom(R1, ">=", C)], _a((0, C)), 0),
        _t(0, [_atom(R1, "<", C)], _a((1, C)), 1),
        _t(1, [_atom(R2, "<=", C)], _a((1, C)), 1),
        _t(1, [_atom(R2, ">", C)], _a((2, C)), 2),
        _t(2, [_atom(R3, ">=", C)], _a((2, C)), 2),
        _t(2, [_atom(R3, "<", C), _atom(R3, "<", R1)], _a((0, R3), (2, C)), 3),
        _t(3, [_atom(R3, "<=", C)], _a((2, C)), 3),
        _t(3, [_atom(R3, ">", C), _atom(R2, "<", R3)], _a((1, R3), (2, C)), 2),
    ]
    return Dra(4, 3, 0, {1, 2, 3}, ts)


def _build_s11():
    # lower highs and lower lows: the order-mirror of S9 (ascend first);
    # r1 last peak, r2 last trough, r3 previous value
    ts = [
        _t(0, [_atom(R1, "<=", C)], _a((0, C)), 0),
        _t(0, [_atom(R1, ">", C)], _a((1, C)), 1),
        _t(1, [_atom(R2, ">=", C)], _a((1, C)), 1),
        _t(1, [_atom(R2, "<", C), _atom(R1, ">", C)], _a((2, C)), 2),
        _t(2, [_atom(R3, "<=", C), _atom(R1, ">", C)], _a((2, C)), 2),
        _t(2, [_atom(R3, ">", C)], _a((0, R3), (2, C)), 3),
        _t(3, [_atom(R3, ">=", C)], _a((2, C)), 3),
        _t(3, [_atom(R3, "<", C), _atom(R2, ">", R3)], _a((1, R3), (2, C)), 2),
    ]
    return Dra(4, 3, 0, {1, 2, 3}, ts)


_BUILDERS = {
    "L1": _build_l1,
    "L2": _build_l2,
    "L3": _build_l3,
    "L4": _build_l4,
    "L5": _build_l5,
    "L6": _build_l6,
    "L7": _build_l7,
    "S1": lambda: _build_monotone(">"),
    "S2": lambda: _build_monotone("<"),
    "S3": lambda: _build_monotone("<="),
    "S4": lambda: _build_monotone(">="),
    "S5": _build_s5,
    "S6": lambda: _build_s5(up="<", down=">"),
    "S7": lambda: _build_peaks(2),
    "S8": lambda: _build_peaks(3),
    "S9": _build_s9,
    "S10": _build_s10,
    "S11": _build_s11,
}


def ground_truth(benchmark_id: str) -> Dra:
    try:
        return _BUILDERS[benchmark_id]()
    except KeyError:
        raise ValueError(f"unknown benchmark {benchmark_id!r}; expected one of {BENCHMARK_IDS}") from None


# Hand-labelled acceptance vectors for the hand-built fixtures; executable
# documentation, replayed verbatim by the test suite.
FIXTURE_VECTORS: dict[str, list[tuple[tuple, bool]]] = {
    "S5": [
        ((0, 5, 3), True),
        ((0, 2, 7, 4, 1), True),
        ((1, 2, 3, 4, 2), True),
        ((0, 9, 8, 7, 6, 5), True),
        ((-3, -1, -2), True),
        ((5, 3, 1), False),
        ((1, 2, 3), False),
        ((0, 5, 5, 3), False),
        ((0, 5, 3, 4), False),
        ((2,), False),
        ((0, 3, 1, 4, 2), False),
    ],
    "S6": [
        ((5, 1, 3), True),
        ((4, 2, 0, 6, 9), True),
        ((0, -2, 5), True),
        ((9, 8, 7, 8, 9), True),
        ((3, 1, 2, 4), True),
        ((1, 2, 1), False),
        ((3, 2, 1), False),
        ((1, 2, 3), False),
        ((5, 1, 1, 3), False),
        ((4,), False),
        ((5, 1, 3, 2), False),
    ],
    "S7": [
        ((0, 2, 1, 3, 2), True),
        ((0, 5, 3, 9, 2, 1), True),
        ((1, 4, 2, 3, 2), True),
        ((-1, 0, -2, 1, 0, -1), True),
        ((0, 9, 1, 2, 1), True),
        ((0, 2, 1), False),
        ((0, 2, 1, 3), False),
        ((0, 2, 1, 3, 2, 4, 1), False),
        ((0, 1, 2, 3), False),
        ((5, 4, 6, 5), False),
        ((0, 2, 2, 1, 3, 2), False),
    ],
    "S8": [
        ((0, 2, 1, 3, 2, 4, 3), True),
        ((0, 9, 5, 8, 2, 3, 1), True),
        ((1, 2, 1, 2, 1, 2, 1), True),
        ((-2, 0, -1, 1, 0, 2, -3), True),
        ((0, 5, 4, 6, 5, 7, 6, 2), True),
        ((0, 2, 1, 3, 2), False),
        ((0, 2, 1, 3, 2, 4), False),
        ((0, 2, 1, 3, 2, 4, 3, 5, 4), False),
        ((3, 2, 4, 3, 5, 4), False),
        ((0, 1, 2, 3, 4), False),
        ((0, 2, 1, 1, 3, 2, 4, 3), False),
    ],
    "S9": [
        ((0, -1, 5, 3, 7, 9, 6, 8), True),
        ((0, -1, 5, 3, 7, 9, 6, 3), False),
        ((1, 2, 3), True),
        ((0, -1, -2), False),
        ((-1,), False),
        ((2,), True),
        ((0, -2, 3, 1, 4), True),
        ((0, -2, 3, -3), False),
        ((0, 5, -1), False),
        ((0, 5, 2, 6, 1, 0), False),
        ((0, 3, 1, 2, 4, 2, 5), True),
    ],
    "S10": [
        ((0, -1, 5, 3, 7, 9, 6, 8), False),
        ((0, 4, -1, 5, -2, 6), True),
        ((0, 3, -1, 4), True),
        ((1, 2, 3), True),
        ((0, 4, 1, 5, 2, 6), False),
        ((0, 4, -1, 3, 2), False),
        ((2,), True),
        ((-1,), False),
        ((0, 4, -1, 5, -2), True),
        ((0, 4, -1, 4, 3), False),
        ((0, 5, -1, 6, -2, 7, -3), True),
        ((0, 4, 2, 5, 1, 6), False),
    ],
    "S11": [
        ((0, -1, -2), True),
        ((1, 2, 3), False),
        ((2,), False),
        ((-2,), True),
        ((9, 5, 8, 4, 7), True),
        ((3, 1, 2, 0, 1), True),
        ((-1, -3, -2, -4, -3), True),
        ((5, 2, 4, 1, 3), True),
        ((0, 9, 5, 10), False),
        ((3, 1, 2, 0, 3, 4), False),
        ((3, 1, 2, 1, 2), False),
        ((5, 1, 4, 0, 3, -1, 2), True),
        ((0, 9, 5, 8, 2, 3, 1), True),
    ],
}


class QuotaUnreachable(RuntimeError):
    """The sampler could not hit the requested class quotas."""


QUARTER = Fraction(1, 4)


@dataclass
class _Region:
    """Feasible curr values for one guard under concrete registers."""

    lo: Optional[Fraction]
    lo_strict: bool
    hi: Optional[Fraction]
    hi_strict: bool

    def is_empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_strict or self.hi_strict)

    def is_point(self) -> bool:
        return self.lo is not None and self.lo == self.hi and not (self.lo_strict or self.hi_strict)

    def contains(self, x: Fraction) -> bool:
        if self.lo is not None and (x < self.lo or (x == self.lo and self.lo_strict)):
            return False
        if self.hi is not None and (x > self.hi or (x == self.hi and self.hi_strict)):
            return False
        return True


def _guard_region(guard, registers) -> Optional[_Region]:
    """Project a guard onto curr for fixed registers; None if register-only
    atoms already fail."""
    region = _Region(None, False, None, False)

    def tighten_lo(v, strict):
        if region.lo is None or v > region.lo or (v == region.lo and strict):
            region.lo, region.lo_strict = v, strict

    def tighten_hi(v, strict):
        if region.hi is None or v < region.hi or (v == region.hi and strict):
            region.hi, region.hi_strict = v, strict

    val = Valuation(registers)
    for atom in guard:
        lhs_curr = atom.lhs.kind == "curr"
        rhs_curr = atom.rhs.kind == "curr"
        if not lhs_curr and not rhs_curr:
            if not atom.holds(val.resolve(atom.lhs), val.resolve(atom.rhs)):
                return None
            continue
        if lhs_curr and rhs_curr:
            # curr ~ curr: trivially true for =, <=, >=; empty otherwise
            if atom.op in ("<", ">", "!="):
                return None
            continue
        if lhs_curr:
            bound = val.resolve(atom.rhs) + atom.shift
            op = atom.op
        else:
            bound = val.resolve(atom.lhs)
            if atom.shift:
                bound = bound - atom.shift
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[atom.op]
        if op == "=":
            tighten_lo(bound, False)
            tighten_hi(bound, False)
        elif op in ("<", "<="):
            tighten_hi(bound, op == "<")
        elif op in (">", ">="):
            tighten_lo(bound, op == ">")
        else:  # != : ignored for sampling purposes (ground truths are !=-free)
            return None
    return None if region.is_empty() else region


class MarkovSampler:
    """Random walk over a ground-truth automaton.

    At every step the walk follows a random enabled transition with
    probability 1 - noise and deviates into an uncovered letter cell
    otherwise. Letters keep a margin of one unit from open cell boundaries
    (see ledgered policy); the emitted label always equals the ground-truth
    run, which generate() re-checks.
    """

    def __init__(self, dra: Dra, noise=Fraction(1, 2), max_length: int = 12, seed: int = 0):
        self.dra = dra
        self.noise = Fraction(noise)
        if not (0 <= self.noise <= 1):
            raise ValueError("noise must be in [0, 1]")
        self.max_length = int(max_length)
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")
        self.rng = random.Random(seed)

    def _bernoulli(self, p: Fraction) -> bool:
        return self.rng.randrange(p.denominator) < p.numerator

    def _jitter(self) -> Fraction:
        return QUARTER * self.rng.randrange(0, 4)

    def _instantiate(self, region: _Region) -> Fraction:
        if region.is_point():
            return region.lo
        lo, hi = region.lo, region.hi
        if lo is not None and hi is not None:
            width = hi - lo
            # stay in the middle half of the cell
            mid = lo + width / 2
            return mid + (width / 16) * self.rng.randrange(-2, 3)
        if lo is not None:
            return lo + 1 + self._jitter()
        if hi is not None:
            return hi - 1 - self._jitter()
        return Fraction(self.rng.randrange(-8, 9), 4)

    def _deviation_regions(self, regions):
        """Uncovered pieces of the letter line, margin-friendly pieces first."""
        points = set()
        for r in regions:
            if r.lo is not None:
                points.add(r.lo)
            if r.hi is not None:
                points.add(r.hi)
        cuts = sorted(points)
        pieces = []
        if not cuts:
            return pieces  # fully covered by an unbounded guard or no guards at all
        pieces.append(_Region(None, False, cuts[0], True))
        for a, b in zip(cuts, cuts[1:]):
            pieces.append(_Region(a, True, b, True))
        pieces.append(_Region(cuts[-1], True, None, False))
        for p in cuts:
            pieces.append(_Region(p, False, p, False))
        free = [p for p in pieces if not p.is_empty() and not any(r.contains(self._probe(p)) for r in regions)]
        open_pieces = [p for p in free if not p.is_point()]
        return open_pieces or free

    @staticmethod
    def _probe(piece: _Region) -> Fraction:
        if piece.is_point():
            return piece.lo
        if piece.lo is not None and piece.hi is not None:
            return (piece.lo + piece.hi) / 2
        if piece.lo is not None:
            return piece.lo + 1
        if piece.hi is not None:
            return piece.hi - 1
        return Fraction(0)

    def draw(self):
        """One labelled sequence (letters tuple, label int)."""
        length = self.rng.randint(1, self.max_length)
        letters = []
        state = self.dra.initial
        registers = self.dra.initial_registers()
        dead = False
        for _ in range(length):
            if dead:
                base = letters[-1] if letters else Fraction(0)
                letters.append(base + Fraction(self.rng.randrange(-4, 5), 4))
                continue
            enabled = []
            for t in self.dra.outgoing(state):
                region = _guard_region(t.guard, registers)
                if region is not None:
                    enabled.append((t, region))
            deviate = self._bernoulli(self.noise)
            letter = None
            if deviate or not enabled:
                pieces = self._deviation_regions([r for _, r in enabled])
                if pieces:
                    letter = self._instantiate(self.rng.choice(pieces))
            if letter is None:
                if not enabled:
                    dead = True
                    base = letters[-1] if letters else Fraction(0)
                    letters.append(base + Fraction(self.rng.randrange(-4, 5), 4))
                    continue
                t, region = self.rng.choice(enabled)
                letter = self._instantiate(region)
            # advance the ground-truth run with the chosen letter
            val = Valuation(registers, {"curr": letter})
            fired = None
            for t in self.dra.outgoing(state):
                if guard_holds(t.guard, val):
                    fired = t
                    break
            letters.append(letter)
            if fired is None:
                dead = True
            else:
                registers = apply_assignment(fired.assignment, val)
                state = fired.target
        seq = tuple(letters)
        label = 1 if run(self.dra, seq).accepted else 0
        return seq, label


def build_sampler(benchmark_id: str, noise=Fraction(1, 2), max_length: int = 12, seed: int = 0) -> MarkovSampler:
    return MarkovSampler(ground_truth(benchmark_id), noise=noise, max_length=max_length, seed=seed)


def generate(sampler: MarkovSampler, n_pos: int, n_neg: int, max_attempts: Optional[int] = None):
    """Rejection-sample until the class quotas are met; deterministic per seed."""
    if max_attempts is None:
        max_attempts = 400 * (n_pos + n_neg) + 2000
    records = []
    need = {1: n_pos, 0: n_neg}
    attempts = 0
    while need[0] > 0 or need[1] > 0:
        attempts += 1
        if attempts > max_attempts:
            raise QuotaUnreachable(
                f"could not reach quotas pos={n_pos} neg={n_neg} in {max_attempts} draws"
            )
        seq, label = sampler.draw()
        assert (run(sampler.dra, seq).accepted) == bool(label)
        if need[label] > 0:
            need[label] -= 1
            records.append((seq, label))
    return records


def write_dataset(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for seq, label in records:
            fh.write(json.dumps({"seq": [format_rational(x) for x in seq], "label": label}) + "\n")


def read_dataset(path):
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            records.append((tuple(parse_rational(x) for x in doc["seq"]), int(doc["label"])))
    return records

"""Hill-climbing DRA synthesis over a precomputed deterministic search space.

The mutation operators are accept-flag toggling (op_f) and wholesale
replacement of one state's outgoing transitions by a deterministic set drawn
from the space (op_delta); candidates are accepted on strictly better score.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .. import cells
from ..automata import Dra, Transition
from ..guards import CURR_OP, Assignment, GuardAtom, Valuation, const, guard_holds, reg
from ..serialize import serialize


class EmptySampleSet(ValueError):
    pass


@dataclass(frozen=True)
class SampleSet:
    positives: tuple
    negatives: tuple

    def __post_init__(self):
        object.__setattr__(self, "positives", tuple(tuple(Fraction(x) for x in s) for s in self.positives))
        object.__setattr__(self, "negatives", tuple(tuple(Fraction(x) for x in s) for s in self.negatives))
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            raise ValueError(f"{len(overlap)} sequences are labelled both ways")

    @classmethod
    def from_records(cls, records):
        pos = [seq for seq, label in records if label]
        neg = [seq for seq, label in records if not label]
        return cls(tuple(pos), tuple(neg))

    def __len__(self):
        return len(self.positives) + len(self.negatives)


def _outgoing_map(dra: Dra):
    by_state = [[] for _ in range(dra.num_states)]
    for t in dra.transitions:
        by_state[t.source].append(t)
    return by_state


def _classify(dra: Dra, seq, by_state) -> bool:
    state = dra.initial
    regs = dra.initial_registers()
    for letter in seq:
        val = Valuation(regs, {"curr": letter})
        fired = None
        for t in by_state[state]:
            if guard_holds(t.guard, val):
                fired = t
                break
        if fired is None:
            return False
        nregs = list(regs)
        for target, src in fired.assignment.updates:
            nregs[target] = val.resolve(src)
        regs = tuple(nregs)
        state = fired.target
    return state in dra.accepting


def _count_correct(dra: Dra, samples: SampleSet, wrong_budget: Optional[int] = None):
    """Correctly classified count; None if more than wrong_budget misses."""
    by_state = _outgoing_map(dra)
    correct = 0
    wrong = 0
    for seq in samples.positives:
        if _classify(dra, seq, by_state):
            correct += 1
        else:
            wrong += 1
            if wrong_budget is not None and wrong > wrong_budget:
                return None
    for seq in samples.negatives:
        if not _classify(dra, seq, by_state):
            correct += 1
        else:
            wrong += 1
            if wrong_budget is not None and wrong > wrong_budget:
                return None
    return correct


def score(dra: Dra, samples: SampleSet) -> Fraction:
    """Exact accuracy: (accepted positives + rejected negatives) / total."""
    total = len(samples)
    if total == 0:
        raise EmptySampleSet("score needs at least one sample")
    return Fraction(_count_correct(dra, samples), total)


def op_f(dra: Dra, q: int) -> Dra:
    """Toggle the accepting flag of state q."""
    accepting = set(dra.accepting)
    if q in accepting:
        accepting.remove(q)
    else:
        accepting.add(q)
    return Dra(dra.num_states, dra.num_registers, dra.initial, frozenset(accepting), dra.transitions)


def op_delta(dra: Dra, q: int, catalog_choice) -> Dra:
    """Replace q's outgoing transitions wholesale by the chosen set."""
    kept = tuple(t for t in dra.transitions if t.source != q)
    for t in catalog_choice:
        if t.source != q:
            raise ValueError(f"catalog transition for state {t.source}, expected {q}")
    return Dra(
        dra.num_states,
        dra.num_registers,
        dra.initial,
        dra.accepting,
        kept + tuple(catalog_choice),
    )


@dataclass(frozen=True)
class SearchConfig:
    max_iterations: int = 100_000
    max_time: Optional[float] = None
    restarts: int = 5
    rng_seed: int = 0
    stop_on_perfect: bool = True  # False runs every restart (restart statistics)
    jobs: int = 1  # restarts run in worker processes when > 1

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1 or self.jobs < 1:
            raise ValueError("bounds must be positive")


class SearchSpace:
    """Finite space of deterministic per-state transition sets.

    Candidate sets partition the letter axis at up to (max_cells - 1) / 2
    endpoints drawn from registers and pool constants; cells are strict
    intervals plus the boundary points, so disjointness holds under every
    register valuation. Cells may be left uncovered (run death).
    """

    def __init__(self, num_states: int, num_registers: int, constants=(), max_cells: int = 3):
        if num_states < 1:
            raise ValueError("need at least one state")
        self.num_states = num_states
        self.num_registers = num_registers
        self.constants = tuple(Fraction(c) for c in constants)
        self.max_cells = max_cells
        self.endpoints = [reg(i) for i in range(num_registers)]
        self.endpoints.extend(const(c) for c in self.constants)

    def _random_assignment(self, rng) -> Assignment:
        updates = []
        for i in range(self.num_registers):
            r = rng.random()
            if r < 0.4:
                continue  # keep
            if r < 0.8:
                updates.append((i, CURR_OP))
            elif r < 0.9 and self.constants:
                updates.append((i, const(rng.choice(self.constants))))
            elif self.num_registers > 1:
                updates.append((i, reg(rng.randrange(self.num_registers))))
            else:
                updates.append((i, CURR_OP))
        return Assignment(tuple(updates))

    def random_transition_set(self, q: int, rng) -> tuple:
        """One deterministic outgoing set for state q."""
        max_endpoints = max(0, (self.max_cells - 1) // 2)
        n_endpoints = rng.randint(0, min(max_endpoints, len(self.endpoints))) if self.endpoints else 0
        if n_endpoints == 0:
            cells_guards = [()]
        else:
            b = rng.choice(self.endpoints)
            cells_guards = [
                (GuardAtom(CURR_OP, "<", b),),
                (GuardAtom(CURR_OP, "=", b),),
                (GuardAtom(CURR_OP, ">", b),),
            ]
        out = []
        for guard in cells_guards:
            if rng.random() < 0.25:
                continue  # leave the cell uncovered
            out.append(
                Transition(q, guard, self._random_assignment(rng), rng.randrange(self.num_states))
            )
        return tuple(out)

    def random_dra(self, rng) -> Dra:
        transitions = []
        for q in range(self.num_states):
            transitions.extend(self.random_transition_set(q, rng))
        accepting = frozenset(q for q in range(self.num_states) if rng.random() < 0.5)
        return Dra(self.num_states, self.num_registers, 0, accepting, tuple(transitions))

    def validate_catalog_entry(self, entry) -> bool:
        """Pairwise guard disjointness, checked symbolically."""
        for i, a in enumerate(entry):
            for b in entry[i + 1:]:
                if cells.guards_overlap(a.guard, b.guard) is not None:
                    return False
        return True


@dataclass
class ClimbResult:
    best: Dra
    best_score: Fraction
    restart_scores: list
    iterations: int
    score_trace: list = field(default_factory=list)


def _climb_once(samples: SampleSet, space: SearchSpace, cfg: SearchConfig, rng, init: Optional[Dra], deadline, cache):
    total = len(samples)
    current = init if init is not None else space.random_dra(rng)
    key = (current.accepting, current.transitions)
    if key not in cache:
        cache[key] = _count_correct(current, samples)
    best, best_correct = current, cache[key]
    iterations = 0
    trace = [Fraction(best_correct, total)]
    while best_correct < total and iterations < cfg.max_iterations:
        if deadline is not None and time.monotonic() > deadline:
            break
        iterations += 1
        q = rng.randrange(space.num_states)
        if rng.random() < 0.5:
            candidate = op_f(best, q)
        else:
            candidate = op_delta(best, q, space.random_transition_set(q, rng))
        key = (candidate.accepting, candidate.transitions)
        correct = cache.get(key, -1)
        if correct == -1:
            # abort counting as soon as the candidate cannot beat the best
            correct = _count_correct(candidate, samples, wrong_budget=total - best_correct - 1)
            cache[key] = correct
        if correct is not None and correct > best_correct:
            best, best_correct = candidate, correct
            trace.append(Fraction(best_correct, total))
    return best, Fraction(best_correct, total), iterations, trace


def _climb_job(args):
    samples, space, cfg, init, restart_seed = args
    rng = random.Random(restart_seed)
    deadline = time.monotonic() + cfg.max_time if cfg.max_time else None
    dra, sc, iters, tr = _climb_once(samples, space, cfg, rng, init, deadline, {})
    return dra, sc, iters, tr


def hill_climb(
    samples: SampleSet,
    space: SearchSpace,
    cfg: SearchConfig,
    init: Optional[Dra] = None,
) -> ClimbResult:
    """Algorithm-1 style hill climbing with an outer restart loop.

    Strict-improvement acceptance; deterministic for a fixed seed. Restarts
    re-seed the initial automaton randomly (the provided init is used for
    the first climb only); results merge by best score, ties by
    lexicographically smallest serialization. With cfg.jobs > 1 the restarts
    run in worker processes under per-restart derived seeds; the merge rule
    keeps the outcome deterministic for a fixed (seed, jobs) pair.
    """
    if len(samples) == 0:
        raise EmptySampleSet("cannot search over an empty sample set")
    best = None
    restart_scores = []
    iterations = 0
    trace = []

    def merge(dra, sc, iters, tr):
        nonlocal best, iterations
        restart_scores.append(sc)
        iterations += iters
        trace.append(tr)
        cand = (sc, dra)
        if best is None or cand[0] > best[0] or (cand[0] == best[0] and serialize(cand[1]) < serialize(best[1])):
            best = cand

    if cfg.jobs > 1:
        import multiprocessing

        jobs = [
            (samples, space, cfg, init if i == 0 else None, cfg.rng_seed * 1000 + i)
            for i in range(cfg.restarts)
        ]
        with multiprocessing.Pool(cfg.jobs) as pool:
            for dra, sc, iters, tr in pool.map(_climb_job, jobs):
                merge(dra, sc, iters, tr)
        return ClimbResult(best[1], best[0], restart_scores, iterations, trace)

    rng = random.Random(cfg.rng_seed)
    deadline = time.monotonic() + cfg.max_time if cfg.max_time else None
    cache: dict = {}
    for restart in range(cfg.restarts):
        seed_dra = init if restart == 0 and init is not None else None
        dra, sc, iters, tr = _climb_once(samples, space, cfg, rng, seed_dra, deadline, cache)
        merge(dra, sc, iters, tr)
        if best[0] == 1 and cfg.stop_on_perfect:
            break
    return ClimbResult(best[1], best[0], restart_scores, iterations, trace)

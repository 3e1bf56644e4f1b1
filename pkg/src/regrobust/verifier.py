"""Local robustness of a DRA at a sequence, decided exactly.

Pipeline: split disequalities, complete the automaton, pick the flip target,
pin the metric RAA onto v with a letter bound alpha, take the product with
the flip target, relax strict guards (closure), build the finite constant-
grid graph, and run Dijkstra. A shortest closed path below delta certifies
non-robustness; its letters are then perturbed back into the strict guards
to produce a concrete, re-executed witness.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .automata import Dra, complement, complete, run, split_disequalities
from .guards import (
    CONST,
    CURR1,
    CURR2,
    CURR2_OP,
    Assignment,
    Guard,
    GuardAtom,
    Operand,
    const,
    reg,
)
from .raa import BOTH, HEAD2, AccUpdate, Raa, RaaTransition, evaluate, raa_split_disequalities
from .rational import INF, ExtendedCost

FLIP_TO_REJECT = "flip-to-reject"
FLIP_TO_ACCEPT = "flip-to-accept"
AUTO = "auto"


class IncompatibleGuards(ValueError):
    """The flip target is not a plain one-head DRA."""


class DisequalityPresent(ValueError):
    """Closure requires disequality-free guards; split them first."""


class RefinementFailed(RuntimeError):
    """The slack-halving repair loop ran out of budget; engine bug."""


class GraphSizeExceeded(RuntimeError):
    """The lazy coverability graph grew past the configured vertex limit."""


@dataclass(frozen=True)
class RobustnessQuery:
    dra: Dra
    v: tuple
    metric: Raa
    delta: Fraction
    side: str = AUTO

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(Fraction(x) for x in self.v))
        object.__setattr__(self, "delta", Fraction(self.delta))
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if not self.v:
            raise ValueError("v must be non-empty")
        if self.side not in (AUTO, FLIP_TO_REJECT, FLIP_TO_ACCEPT):
            raise ValueError(f"bad side {self.side!r}")


@dataclass(frozen=True)
class PlanTransition:
    """One projected/product transition in evaluation-friendly form.

    Guards and assignments only mention registers of the combined machine,
    constants, and curr2. The head-1 letter is already substituted; `a` and
    `b` give the accumulator increment a*curr2 + b. `view_guard` keeps the
    head-1 pin atoms for the two-head Raa rendering, `mov` its move.
    """

    source: int
    target: int
    guard: Guard
    assignment: Assignment
    a: Fraction
    b: Fraction
    consuming: bool
    refs2: bool
    view_guard: Guard
    mov: str
    orig: Optional["PlanTransition"] = None


@dataclass
class ProjectedPlan:
    num_states: int
    num_registers: int
    initial: int
    accepting: frozenset
    transitions: tuple


@dataclass
class BoundedProjectedRaa:
    """Metric pinned on v (head-1 index folded into states) with every
    head-2 letter bounded by alpha."""

    raa: Raa
    alpha: Fraction
    plan: ProjectedPlan
    v: tuple


def _references_curr2(guard: Guard, assignment: Assignment, a: Fraction) -> bool:
    if a:
        return True
    if any(atom.mentions(CURR2) for atom in guard):
        return True
    return any(src.kind == CURR2 for src in assignment.sources())


def _subst_curr1(guard: Guard, value: Fraction) -> Guard:
    out = []
    for atom in guard:
        lhs, rhs, shift = atom.lhs, atom.rhs, atom.shift
        if lhs.kind == CURR1:
            lhs = const(value)
        if rhs.kind == CURR1:
            rhs = const(value)
        if rhs.kind == CONST and shift:
            rhs = const(rhs.value + shift)
            shift = Fraction(0)
        out.append(GuardAtom(lhs, atom.op, rhs, shift))
    return tuple(out)


def _subst_curr1_assignment(assignment: Assignment, value: Fraction) -> Assignment:
    return Assignment(
        tuple((t, const(value) if s.kind == CURR1 else s) for t, s in assignment.updates)
    )


def _guard_abs_constants(guard: Guard):
    for atom in guard:
        if atom.lhs.kind == CONST:
            yield abs(atom.lhs.value)
        if atom.rhs.kind == CONST:
            yield abs(atom.rhs.value + atom.shift)
        elif atom.shift:
            yield abs(atom.shift)


def project_and_bound(
    metric: Raa, v: Sequence[Fraction], delta: Fraction, extra_bound_candidates=()
) -> BoundedProjectedRaa:
    """Pin head 1 to v and bound head-2 letters.

    alpha is max over projected accumulator updates a*curr2 + b with a != 0
    of |(delta - b)/a| and |b/a| (an increment in [0, delta) bounds |curr2|
    by the larger of the two), widened by 1, all guard and assignment
    constants, all |v_i|, and any extra candidates the caller supplies; a
    safe superset of the bare formula. The pipeline passes the flip target's
    constants here: with all-zero cost coefficients (Hamming-style metrics)
    the bare formula is empty and would otherwise cut off letters the target
    automaton compares against.
    """
    v = tuple(Fraction(x) for x in v)
    delta = Fraction(delta)
    metric = raa_split_disequalities(metric)
    m = len(v)

    def flat(q, i):  # i in 1..m+1
        return q * (m + 1) + (i - 1)

    raw = []  # (source_flat, target_flat, guard, view_guard, assignment, a, b, mov)
    for t in metric.transitions:
        refs1 = t.references(CURR1)
        for i in range(1, m + 2):
            if (t.moves_head1() or refs1) and i > m:
                continue
            vi = v[i - 1] if i <= m else None
            guard = _subst_curr1(t.guard, vi) if refs1 else t.guard
            assignment = _subst_curr1_assignment(t.assignment, vi) if refs1 else t.assignment
            a = t.acc.a2
            b = t.acc.b + (t.acc.a1 * vi if t.acc.a1 else 0)
            view_guard = guard
            if t.moves_head1():
                view_guard = (GuardAtom(Operand(CURR1), "=", const(vi)),) + guard
            ni = i + 1 if t.moves_head1() else i
            raw.append((flat(t.source, i), flat(t.target, ni), guard, view_guard, assignment, a, b, t.mov))

    candidates = [Fraction(1)] + [abs(x) for x in v]
    candidates.extend(abs(Fraction(c)) for c in extra_bound_candidates)
    for _, _, guard, _, assignment, a, b, _ in raw:
        candidates.extend(_guard_abs_constants(guard))
        for _, src in assignment.updates:
            if src.kind == CONST:
                candidates.append(abs(src.value))
        if a:
            candidates.append(abs((delta - b) / a))
            candidates.append(abs(b / a))
    # one unit past every constant, so the outermost strict cells (letter
    # strictly beyond the largest comparison value) stay realizable
    alpha = max(candidates) + 1

    bound_atoms = (
        GuardAtom(CURR2_OP, ">=", const(-alpha)),
        GuardAtom(CURR2_OP, "<=", const(alpha)),
    )
    plan_ts = []
    view_ts = []
    for source, target, guard, view_guard, assignment, a, b, mov in raw:
        consuming = mov in (HEAD2, BOTH)
        refs2 = _references_curr2(guard, assignment, a)
        if consuming or refs2:
            guard = guard + bound_atoms
            view_guard = view_guard + bound_atoms
        plan_ts.append(
            PlanTransition(source, target, guard, assignment, a, b, consuming, refs2, view_guard, mov)
        )
        view_ts.append(
            RaaTransition(source, view_guard, assignment, AccUpdate(Fraction(0), a, b), target, mov)
        )

    num_states = metric.num_states * (m + 1)
    accepting = frozenset(flat(q, m + 1) for q in metric.accepting)
    initial = flat(metric.initial, 1)
    plan = ProjectedPlan(num_states, metric.num_registers, initial, accepting, tuple(plan_ts))
    view = Raa(num_states, metric.num_registers, initial, accepting, tuple(view_ts))
    return BoundedProjectedRaa(raa=view, alpha=alpha, plan=plan, v=v)


@dataclass
class ProductRaa:
    """Projected metric x flip-target DRA; accepts exactly the label-flipping
    w and outputs the metric cost on them."""

    raa: Raa
    plan: ProjectedPlan
    v: tuple
    alpha: Fraction
    dra_registers: int


def _dra_part_guard(guard: Guard, offset: int) -> Guard:
    out = []
    for atom in guard:
        if atom.lhs.kind in (CURR1, CURR2) or atom.rhs.kind in (CURR1, CURR2):
            raise IncompatibleGuards("flip target guards must use 'curr'")
        lhs, rhs = atom.lhs, atom.rhs
        if lhs.kind == "reg":
            lhs = reg(lhs.index + offset)
        elif lhs.kind == "curr":
            lhs = CURR2_OP
        if rhs.kind == "reg":
            rhs = reg(rhs.index + offset)
        elif rhs.kind == "curr":
            rhs = CURR2_OP
        out.append(GuardAtom(lhs, atom.op, rhs, atom.shift))
    return tuple(out)


def _dra_part_assignment(assignment: Assignment, offset: int) -> Assignment:
    updates = []
    for t, s in assignment.updates:
        if s.kind == "reg":
            s = reg(s.index + offset)
        elif s.kind == "curr":
            s = CURR2_OP
        updates.append((t + offset, s))
    return Assignment(tuple(updates))


def product(bp: BoundedProjectedRaa, flip_target: Dra) -> ProductRaa:
    """Pair the pinned metric with the flip target.

    The DRA advances exactly on transitions that consume a head-2 letter;
    on head-1-only moves its state is frozen. The target must be complete
    and disequality-free (complete()/complement() output).
    """
    k0 = bp.plan.num_registers
    nd = flip_target.num_states
    total_regs = k0 + flip_target.num_registers

    def sid(p, d):
        return p * nd + d

    plan_ts = []
    view_ts = []
    for pt in bp.plan.transitions:
        if pt.consuming:
            for dt in flip_target.transitions:
                guard = pt.guard + _dra_part_guard(dt.guard, k0)
                view_guard = pt.view_guard + _dra_part_guard(dt.guard, k0)
                assignment = Assignment(
                    pt.assignment.updates + _dra_part_assignment(dt.assignment, k0).updates
                )
                plan_ts.append(
                    PlanTransition(
                        sid(pt.source, dt.source),
                        sid(pt.target, dt.target),
                        guard,
                        assignment,
                        pt.a,
                        pt.b,
                        True,
                        True,
                        view_guard,
                        pt.mov,
                    )
                )
                view_ts.append(
                    RaaTransition(
                        sid(pt.source, dt.source),
                        view_guard,
                        assignment,
                        AccUpdate(Fraction(0), pt.a, pt.b),
                        sid(pt.target, dt.target),
                        pt.mov,
                    )
                )
        else:
            for d in range(nd):
                plan_ts.append(
                    PlanTransition(
                        sid(pt.source, d),
                        sid(pt.target, d),
                        pt.guard,
                        pt.assignment,
                        pt.a,
                        pt.b,
                        False,
                        pt.refs2,
                        pt.view_guard,
                        pt.mov,
                    )
                )
                view_ts.append(
                    RaaTransition(
                        sid(pt.source, d),
                        pt.view_guard,
                        pt.assignment,
                        AccUpdate(Fraction(0), pt.a, pt.b),
                        sid(pt.target, d),
                        pt.mov,
                    )
                )
    accepting = frozenset(
        sid(p, d) for p in bp.plan.accepting for d in flip_target.accepting
    )
    initial = sid(bp.plan.initial, flip_target.initial)
    num_states = bp.plan.num_states * nd
    plan = ProjectedPlan(num_states, total_regs, initial, accepting, tuple(plan_ts))
    view = Raa(num_states, total_regs, initial, accepting, tuple(view_ts))
    return ProductRaa(raa=view, plan=plan, v=bp.v, alpha=bp.alpha, dra_registers=flip_target.num_registers)


def closure(raa: Raa) -> Raa:
    """Strict inequalities relaxed to non-strict; everything else unchanged."""
    ts = []
    for t in raa.transitions:
        atoms = []
        for atom in t.guard:
            if atom.op == "!=":
                raise DisequalityPresent("closure requires !=-free guards")
            atoms.append(atom.closed())
        ts.append(RaaTransition(t.source, tuple(atoms), t.assignment, t.acc, t.target, t.mov))
    return Raa(raa.num_states, raa.num_registers, raa.initial, raa.accepting, tuple(ts))


def _close_plan(plan: ProjectedPlan) -> ProjectedPlan:
    ts = []
    for pt in plan.transitions:
        atoms = []
        for atom in pt.guard:
            if atom.op == "!=":
                raise DisequalityPresent("closure requires !=-free guards")
            atoms.append(atom.closed())
        ts.append(
            PlanTransition(
                pt.source,
                pt.target,
                tuple(atoms),
                pt.assignment,
                pt.a,
                pt.b,
                pt.consuming,
                pt.refs2,
                pt.view_guard,
                pt.mov,
                orig=pt,
            )
        )
    return ProjectedPlan(plan.num_states, plan.num_registers, plan.initial, plan.accepting, tuple(ts))


def _plan_guard_holds(guard: Guard, regs, d) -> bool:
    for atom in guard:
        lhs = _plan_resolve(atom.lhs, regs, d)
        rhs = _plan_resolve(atom.rhs, regs, d) + atom.shift
        op = atom.op
        if op == "<":
            ok = lhs < rhs
        elif op == "<=":
            ok = lhs <= rhs
        elif op == "=":
            ok = lhs == rhs
        elif op == ">":
            ok = lhs > rhs
        elif op == ">=":
            ok = lhs >= rhs
        else:
            ok = lhs != rhs
        if not ok:
            return False
    return True


def _plan_resolve(operand: Operand, regs, d):
    kind = operand.kind
    if kind == CONST:
        return operand.value
    if kind == "reg":
        return regs[operand.index]
    if kind == CURR2:
        if d is None:
            raise KeyError("no current letter")
        return d
    raise KeyError(f"operand {operand!r} not available after projection")


def _plan_apply(assignment: Assignment, regs, d):
    out = list(regs)
    for t, s in assignment.updates:
        out[t] = _plan_resolve(s, regs, d)
    return tuple(out)


def _strict_letter_interval_nonempty(guard: Guard, regs) -> bool:
    """Whether the strict guard admits any letter at these concrete registers.

    Closed guards accept boundary points whose strict counterpart is empty
    (e.g. a pinned letter meeting a strict bound); admitting such edges makes
    the closed graph optimum undercut the true infimum, so they are filtered
    here. Only letter-vs-concrete atoms constrain the interval; register
    relations are the closed check's and the repair pass's business.
    """
    lo = hi = None
    lo_strict = hi_strict = False
    for atom in guard:
        lhs_letter = atom.lhs.kind == CURR2
        rhs_letter = atom.rhs.kind == CURR2
        if lhs_letter and rhs_letter:
            continue
        if not lhs_letter and not rhs_letter:
            continue
        if lhs_letter:
            bound = _plan_resolve(atom.rhs, regs, None) + atom.shift
            op = atom.op
        else:
            bound = _plan_resolve(atom.lhs, regs, None) - atom.shift
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[atom.op]
        if op in ("<", "<="):
            if hi is None or bound < hi or (bound == hi and op == "<"):
                hi, hi_strict = bound, op == "<"
        elif op in (">", ">="):
            if lo is None or bound > lo or (bound == lo and op == ">"):
                lo, lo_strict = bound, op == ">"
        elif op == "=":
            if lo is None or bound > lo:
                lo, lo_strict = bound, False
            if hi is None or bound < hi:
                hi, hi_strict = bound, False
    if lo is None or hi is None:
        return True
    if lo > hi:
        return False
    return not (lo == hi and (lo_strict or hi_strict))


@dataclass
class GraphEdge:
    src: int
    dst: int
    weight: Fraction
    transition: PlanTransition
    letter: Optional[Fraction]


@dataclass
class CoverabilityGraph:
    """Forward-reachable part of the closed constant-grid graph.

    Vertices are (state, registers in C^k, pending letter, consumed-any
    flag); the pending component models a head-2 letter that has been read
    by a non-consuming transition but not yet consumed, and the flag keeps
    the empty sequence out of the target set.
    """

    constants: tuple
    vertices: list
    vertex_ids: dict
    edges_from: list
    source: int
    targets: list
    spec_vertex_bound: int


def build_graph(closed_plan: ProjectedPlan, alpha: Fraction, v, extra_roots=(), max_vertices=None) -> CoverabilityGraph:
    consts = {Fraction(0), Fraction(alpha), -Fraction(alpha)}
    consts.update(Fraction(x) for x in v)
    for pt in closed_plan.transitions:
        for atom in pt.guard:
            if atom.lhs.kind == CONST:
                consts.add(atom.lhs.value)
            if atom.rhs.kind == CONST:
                consts.add(atom.rhs.value + atom.shift)
        for _, src in pt.assignment.updates:
            if src.kind == CONST:
                consts.add(src.value)
        if pt.a:
            consts.add(-pt.b / pt.a)  # increment-sign breakpoint is a polytope facet
    consts.update(Fraction(x) for x in extra_roots)
    grid = tuple(sorted(consts))

    k = closed_plan.num_registers
    by_state = [[] for _ in range(closed_plan.num_states)]
    for pt in closed_plan.transitions:
        by_state[pt.source].append(pt)

    start = (closed_plan.initial, tuple(Fraction(0) for _ in range(k)), None, False)
    vertex_ids = {start: 0}
    vertices = [start]
    edges_from = [[]]
    queue = [0]
    bound = closed_plan.num_states * (len(grid) ** k) * 2 * (len(grid) + 1)
    while queue:
        vid = queue.pop()
        state, regs, pending, consumed = vertices[vid]
        for pt in by_state[state]:
            need_letter = pt.consuming or pt.refs2
            if need_letter:
                strict_guard = (pt.orig or pt).guard
                if not _strict_letter_interval_nonempty(strict_guard, regs):
                    continue
                letters = (pending,) if pending is not None else grid
            else:
                letters = (None,)
            for d in letters:
                if not _plan_guard_holds(pt.guard, regs, d):
                    continue
                weight = pt.b + (pt.a * d if pt.a else 0)
                if weight < 0:
                    continue
                nregs = _plan_apply(pt.assignment, regs, d)
                if pt.consuming:
                    npending = None
                elif need_letter:
                    npending = d
                else:
                    npending = pending
                nvertex = (pt.target, nregs, npending, consumed or pt.consuming)
                nid = vertex_ids.get(nvertex)
                if nid is None:
                    nid = len(vertices)
                    if max_vertices is not None and nid >= max_vertices:
                        raise GraphSizeExceeded(
                            f"coverability graph exceeded {max_vertices} vertices"
                        )
                    vertex_ids[nvertex] = nid
                    vertices.append(nvertex)
                    edges_from.append([])
                    queue.append(nid)
                edges_from[vid].append(GraphEdge(vid, nid, weight, pt, d))
    assert len(vertices) <= bound, "vertex count exceeded the structural bound"
    targets = [
        vid
        for vid, (state, _regs, pending, consumed) in enumerate(vertices)
        if state in closed_plan.accepting and pending is None and consumed
    ]
    return CoverabilityGraph(
        constants=grid,
        vertices=vertices,
        vertex_ids=vertex_ids,
        edges_from=edges_from,
        source=0,
        targets=targets,
        spec_vertex_bound=bound,
    )


def _vertex_sort_key(vertex):
    state, regs, pending, consumed = vertex
    pkey = (0, Fraction(0)) if pending is None else (1, pending)
    return (state, regs, pkey, consumed)


# --------------------------------------------------------- path feasibility
#
# A closed-graph path is only usable if the original strict guards along it
# admit some assignment of the consumed letters. A closure-only construction
# silently assumes every closed polytope is the closure of its strict
# counterpart, which fails when the strict polytope is empty (a pinned letter
# meeting a strict bound, or a register forced onto a strict boundary). The
# system is a conjunction of order constraints with rational offsets between
# letters and constants, so exact feasibility is a negative-cycle check with
# lexicographic (weight, strictness) arithmetic.


def _path_system(path):
    """Difference constraints of the strict system along a path.

    Returns a list of (term_a, op, term_b, shift) with term = ("L", j) for
    letter j or ("C", value); includes guard atoms and the non-negativity of
    every accumulator increment. None signals an immediate contradiction."""
    constraints = []
    prov = {}
    j = 0

    def term_of(op_ref, letter_idx):
        if op_ref.kind == CONST:
            return ("C", op_ref.value)
        if op_ref.kind == CURR2:
            return ("L", letter_idx)
        if op_ref.kind == "reg":
            return prov.get(op_ref.index, ("C", Fraction(0)))
        raise KeyError(op_ref)

    for edge in path:
        pt = edge.transition
        orig = pt.orig or pt
        li = j if (pt.consuming or pt.refs2) else None
        for atom in orig.guard:
            ta = term_of(atom.lhs, li)
            tb = term_of(atom.rhs, li)
            constraints.append((ta, atom.op, tb, atom.shift))
        if pt.consuming or pt.refs2:
            # increment non-negativity: a*w + b >= 0
            if pt.a > 0:
                constraints.append((("L", li), ">=", ("C", -pt.b / pt.a), Fraction(0)))
            elif pt.a < 0:
                constraints.append((("L", li), "<=", ("C", -pt.b / pt.a), Fraction(0)))
            elif pt.b < 0:
                return None
        for target, src in orig.assignment.updates:
            prov[target] = term_of(src, li)
        if pt.consuming:
            j += 1
    return constraints


def _system_feasible(constraints) -> bool:
    """Exact satisfiability of order constraints over Q.

    Difference graph with edge weights (offset, strict?) added
    lexicographically; infeasible iff some cycle is negative or zero with a
    strict edge. Bellman-Ford over the lexicographic weights."""
    if constraints is None:
        return False
    nodes = {("Z",)}
    edges = []

    def node_of(term):
        if term[0] == "C":
            return ("Z",)
        return term

    def offset_of(term):
        return term[1] if term[0] == "C" else Fraction(0)

    for ta, op, tb, shift in constraints:
        na, nb = node_of(ta), node_of(tb)
        base = shift + offset_of(tb) - offset_of(ta)
        nodes.add(na)
        nodes.add(nb)
        # interpret: value(ta) op value(tb) + base'  where base' folds constants
        if op in ("<", "<="):
            strict = op == "<"
            if na == nb:
                if base < 0 or (base == 0 and strict):
                    return False
                continue
            # a - b <= base : edge b -> a with weight base
            edges.append((nb, na, base, strict))
        elif op in (">", ">="):
            strict = op == ">"
            if na == nb:
                if base > 0 or (base == 0 and strict):
                    return False
                continue
            # a - b >= base : b - a <= -base : edge a -> b weight -base
            edges.append((na, nb, -base, strict))
        elif op == "=":
            if na == nb:
                if base != 0:
                    return False
                continue
            edges.append((nb, na, base, False))
            edges.append((na, nb, -base, False))
        else:  # "!=" never appears after splitting
            raise DisequalityPresent("unexpected != in a path system")
    # lexicographic Bellman-Ford: weight (c, s), s counts strict edges as -1
    dist = {n: (Fraction(0), 0) for n in nodes}
    for _ in range(len(nodes)):
        changed = False
        for (u, vtx, c, strict) in edges:
            cand = (dist[u][0] + c, dist[u][1] - (1 if strict else 0))
            if cand < dist[vtx]:
                dist[vtx] = cand
                changed = True
        if not changed:
            return True
    return False  # still relaxing after |V| rounds: negative (or strict-zero) cycle


def _dijkstra(graph: CoverabilityGraph, start: int, banned_edges=frozenset(), banned_vertices=frozenset()):
    n = len(graph.vertices)
    dist = [None] * n
    pred = [None] * n
    if start in banned_vertices:
        return dist, pred
    dist[start] = Fraction(0)
    heap = [(Fraction(0), _vertex_sort_key(graph.vertices[start]), start)]
    settled = [False] * n
    while heap:
        d, _key, vid = heapq.heappop(heap)
        if settled[vid]:
            continue
        settled[vid] = True
        for edge in graph.edges_from[vid]:
            if id(edge) in banned_edges or edge.dst in banned_vertices:
                continue
            nd = d + edge.weight
            if dist[edge.dst] is None or nd < dist[edge.dst]:
                dist[edge.dst] = nd
                pred[edge.dst] = edge
                heapq.heappush(heap, (nd, _vertex_sort_key(graph.vertices[edge.dst]), edge.dst))
    return dist, pred


def _extract(pred, start, target):
    path = []
    cur = target
    while cur != start:
        edge = pred[cur]
        if edge is None:
            return None
        path.append(edge)
        cur = edge.src
    path.reverse()
    return path


def _best_target(graph, dist):
    best = None
    for t in graph.targets:
        if dist[t] is None:
            continue
        cand = (dist[t], _vertex_sort_key(graph.vertices[t]), t)
        if best is None or cand < best:
            best = cand
    return best


def best_feasible_path(graph: CoverabilityGraph, max_candidates: int = 500):
    """Minimum-weight path whose strict system is satisfiable.

    Dijkstra first; when the optimum is spurious, Yen's loopless-path
    enumeration in weight order until a feasible candidate appears."""
    dist, pred = _dijkstra(graph, graph.source)
    best = _best_target(graph, dist)
    if best is None:
        return None
    first = _extract(pred, graph.source, best[2])
    if _system_feasible(_path_system(first)):
        return first, best[0]

    accepted = [(first, best[0])]
    seen = {tuple(id(e) for e in first)}
    candidates = []  # (weight, tiebreak, path)
    counter = 0
    for _k in range(1, max_candidates):
        prev_path = accepted[-1][0]
        prev_nodes = [graph.source] + [e.dst for e in prev_path]
        for i in range(len(prev_path)):
            spur = prev_nodes[i]
            root = prev_path[:i]
            root_weight = sum((e.weight for e in root), Fraction(0))
            banned_edges = set()
            for p, _w in accepted:
                if len(p) > i and all(id(p[x]) == id(root[x]) for x in range(i)):
                    banned_edges.add(id(p[i]))
            banned_vertices = frozenset(prev_nodes[:i])
            sdist, spred = _dijkstra(graph, spur, frozenset(banned_edges), banned_vertices)
            sbest = _best_target(graph, sdist)
            if sbest is None:
                continue
            spur_path = _extract(spred, spur, sbest[2])
            if spur_path is None:
                continue
            total = root + spur_path
            if not total:
                continue
            key = tuple(id(e) for e in total)
            if key in seen:
                continue
            seen.add(key)
            counter += 1
            heapq.heappush(candidates, (root_weight + sbest[0], counter, total))
        if not candidates:
            return None
        weight, _c, path = heapq.heappop(candidates)
        accepted.append((path, weight))
        if _system_feasible(_path_system(path)):
            return path, weight
    raise RuntimeError("path enumeration exceeded the candidate budget")


def shortest_path(graph: CoverabilityGraph):
    """Dijkstra with exact weights; ties broken by lexicographic vertex key.

    Returns (list of GraphEdge, weight) for a minimum source-to-target path,
    or None when no target is reachable.
    """
    n = len(graph.vertices)
    dist = [None] * n
    pred = [None] * n
    dist[graph.source] = Fraction(0)
    heap = [(Fraction(0), _vertex_sort_key(graph.vertices[graph.source]), graph.source)]
    settled = [False] * n
    while heap:
        d, _key, vid = heapq.heappop(heap)
        if settled[vid]:
            continue
        settled[vid] = True
        for edge in graph.edges_from[vid]:
            nd = d + edge.weight
            if dist[edge.dst] is None or nd < dist[edge.dst]:
                dist[edge.dst] = nd
                pred[edge.dst] = edge
                heapq.heappush(heap, (nd, _vertex_sort_key(graph.vertices[edge.dst]), edge.dst))
    best = None
    for t in graph.targets:
        if dist[t] is None:
            continue
        cand = (dist[t], _vertex_sort_key(graph.vertices[t]), t)
        if best is None or cand < best:
            best = cand
    if best is None:
        return None
    path = []
    cur = best[2]
    while cur != graph.source:
        edge = pred[cur]
        path.append(edge)
        cur = edge.src
    path.reverse()
    return path, best[0]


@dataclass
class PathConstraintSystem:
    """Everything needed to perturb a closed-grid optimum into the strict
    guards: the original transitions along the path, the letter index each
    edge constrains, and the per-letter cost coefficients."""

    edges: list  # GraphEdge along the shortest path (closed transitions)
    letters: list  # closed optimum letters, one per consuming edge
    letter_index: list  # per edge: index into letters, or None
    coefficients: list  # per letter: (a, b) of its consuming edge
    num_registers: int

    @classmethod
    def from_path(cls, path, num_registers):
        letters = []
        letter_index = []
        coefficients = []
        j = 0
        for edge in path:
            pt = edge.transition
            if pt.consuming or pt.refs2:
                letter_index.append(j)
                if pt.consuming:
                    letters.append(edge.letter)
                    coefficients.append((pt.a, pt.b))
                    j += 1
            else:
                letter_index.append(None)
        assert j == len(letters)
        return cls(path, letters, letter_index, coefficients, num_registers)


def _repair_letter(atom: GuardAtom, x, other, eta):
    """New value for the curr2 side so that the atom holds with slack eta."""
    lhs_is_letter = atom.lhs.kind == CURR2
    if lhs_is_letter:
        bound = other + atom.shift
        op = atom.op
    else:
        bound = other - atom.shift
        op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "="}[atom.op]
    if op == "<":
        return bound - eta
    if op == "<=":
        return bound
    if op == ">":
        return bound + eta
    if op == ">=":
        return bound
    return bound  # "="


def refine_witness(system: PathConstraintSystem, delta: Fraction, closed_optimum: Fraction, verify):
    """Perturb the closed optimum into the strict guards.

    Forward repair pass with slack eta, halved on verification failure (at
    most 40 times). `verify` re-executes the witness against the original
    automata and metric; correctness rests on it, not on the repair
    heuristic.
    """
    coeff_sum = sum((abs(a) for a, _ in system.coefficients), Fraction(0))
    eta = (delta - closed_optimum) / (2 * (1 + coeff_sum))
    for _ in range(41):
        w = _repair_pass(system, eta)
        if w is not None and verify(w):
            return w
        eta = eta / 2
    raise RefinementFailed("could not perturb the closed optimum into the strict guards")


def _repair_pass(system: PathConstraintSystem, eta, max_restarts=8):
    """One repair attempt at slack eta.

    Forward pass nudging letters off violated strict bounds; register-level
    violations are traced to their source letter through the copy provenance
    and fixed by restarting the pass. Returns the letters or None."""
    letters = list(system.letters)
    for _restart in range(max_restarts):
        outcome = _forward_repair(system, letters, eta)
        if outcome is None:
            return None
        done, fix = outcome
        if done:
            return tuple(letters)
        j, value = fix
        if letters[j] == value:
            return None  # the fix is not making progress
        letters[j] = value
    return None


def _forward_repair(system: PathConstraintSystem, letters, eta):
    """Returns (True, None) on success, (False, (letter, value)) to request a
    backward fix and a restart, or None when unrepairable at this eta."""
    k = system.num_registers
    regs = [Fraction(0)] * k
    prov = [None] * k  # source letter index, or None for constants
    for edge, li in zip(system.edges, system.letter_index):
        orig = edge.transition.orig or edge.transition
        x = letters[li] if li is not None else None
        for _round in range(2):
            ok = True
            for atom in orig.guard:
                lhs_letter = atom.lhs.kind == CURR2
                rhs_letter = atom.rhs.kind == CURR2
                lhs = x if lhs_letter else _plan_resolve(atom.lhs, regs, None)
                rhs = x if rhs_letter else _plan_resolve(atom.rhs, regs, None)
                if atom.holds(lhs, rhs):
                    continue
                ok = False
                if lhs_letter != rhs_letter and li is not None:
                    other = rhs if lhs_letter else lhs
                    x = _repair_letter(atom, x, other, eta)
                    letters[li] = x
                    continue
                fix = _backward_fix(atom, lhs, rhs, regs, prov, eta)
                if fix is None:
                    return None
                return (False, fix)
            if ok:
                break
        else:
            return None
        # apply the assignment, tracking which letter each register copies
        new_regs = list(regs)
        new_prov = list(prov)
        for t, s in orig.assignment.updates:
            if s.kind == CONST:
                new_regs[t], new_prov[t] = s.value, None
            elif s.kind == "reg":
                new_regs[t], new_prov[t] = regs[s.index], prov[s.index]
            else:  # curr2
                new_regs[t], new_prov[t] = x, li
        regs, prov = new_regs, new_prov
    return (True, None)


def _atom_sources(atom, regs, prov):
    def side(op):
        if op.kind == "reg":
            return regs[op.index], prov[op.index]
        if op.kind == CONST:
            return op.value, None
        raise KeyError(op)

    return side(atom.lhs), side(atom.rhs)


def _backward_fix(atom, lhs, rhs, regs, prov, eta):
    """Pick a source letter to move so a register-level atom can hold.

    Returns (letter index, new value) or None when both sides trace back to
    constants. The later-read side is preferred implicitly by fixing the rhs
    first (it is the more recent copy in the benchmark machines)."""
    (lv, lp), (rv, rp) = _atom_sources(atom, regs, prov)
    op = atom.op
    if op in ("<", "<="):
        slack = eta if op == "<" else Fraction(0)
        if rp is not None:
            return (rp, lv - atom.shift + slack)
        if lp is not None:
            return (lp, rv + atom.shift - slack)
        return None
    if op in (">", ">="):
        slack = eta if op == ">" else Fraction(0)
        if rp is not None:
            return (rp, lv - atom.shift - slack)
        if lp is not None:
            return (lp, rv + atom.shift + slack)
        return None
    if op == "=":
        if rp is not None:
            return (rp, lv - atom.shift)
        if lp is not None:
            return (lp, rv + atom.shift)
    return None


@dataclass(frozen=True)
class Witness:
    sequence: tuple
    cost: Fraction
    closed_optimum: Fraction


@dataclass(frozen=True)
class RobustnessVerdict:
    robust: bool
    witness: Optional[Witness] = None
    graph_vertices: int = 0

    def __post_init__(self):
        assert self.robust == (self.witness is None)


def _flip_target_and_label(dra: Dra, v, side: str):
    """The automaton that must accept the witness, plus the witness label."""
    split = split_disequalities(dra)
    label_v = run(split, v).accepted
    if side == AUTO:
        side = FLIP_TO_REJECT if label_v else FLIP_TO_ACCEPT
    if side == FLIP_TO_REJECT:
        return complement(split), False
    return complete(split), True


def _pipeline(dra: Dra, v, metric: Raa, delta: Fraction, side: str, max_vertices=None):
    target, witness_label = _flip_target_and_label(dra, v, side)
    bp = project_and_bound(metric, v, delta, extra_bound_candidates=target.constants())
    prod = product(bp, target)
    closed = _close_plan(prod.plan)
    graph = build_graph(closed, bp.alpha, v, max_vertices=max_vertices)
    return prod, graph, witness_label


def check_robustness(query: RobustnessQuery, max_vertices=None) -> RobustnessVerdict:
    """Robust iff no label-flipping w with metric(v, w) < delta exists.

    On failure the verdict carries a concrete witness, re-executed against
    the original automaton and metric before being returned.
    """
    dra, v, metric, delta = query.dra, query.v, query.metric, query.delta
    prod, graph, witness_label = _pipeline(dra, v, metric, delta, query.side, max_vertices)
    sp = best_feasible_path(graph)
    if sp is None or sp[1] >= delta:
        return RobustnessVerdict(True, None, len(graph.vertices))
    path, c_star = sp
    system = PathConstraintSystem.from_path(path, prod.plan.num_registers)

    def verify(w):
        if run(dra, w).accepted != witness_label:
            return False
        cost = evaluate(metric, v, w)
        return cost is not INF and cost < delta

    w = refine_witness(system, delta, c_star, verify)
    cost = evaluate(metric, v, w)
    assert cost is not INF and cost < delta
    assert run(dra, w).accepted == witness_label
    return RobustnessVerdict(False, Witness(w, cost, c_star), len(graph.vertices))


def min_flip_cost(dra: Dra, v, metric: Raa, side: str = AUTO, max_vertices=None) -> ExtendedCost:
    """Infimum metric cost over label-flipping sequences; INF if none exists.

    Computed as the feasible-path optimum with the bound pushed beyond any
    feasible cost: if the optimum lands below the bound it is the global
    minimum, otherwise the bound is raised and the graph rebuilt. The alpha
    widening keeps guard cells and extreme-increment signs stable, so an
    unreachable target set at one bound is unreachable at every bound.
    """
    v = tuple(Fraction(x) for x in v)
    bound = Fraction(1)
    for x in v:
        bound = max(bound, 2 * abs(x) + 1)
    for attempt in range(8):
        _prod, graph, _label = _pipeline(dra, v, metric, bound, side, max_vertices)
        sp = best_feasible_path(graph)
        if sp is None:
            return INF
        c_star = sp[1]
        if c_star < bound:
            return c_star
        bound = c_star + 1
    raise RuntimeError("min_flip_cost bound iteration failed to settle")

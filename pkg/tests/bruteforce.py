"""Independent brute-force robustness oracle.

Enumerates candidate perturbed sequences cell-by-cell: at each position the
candidate letters are the arrangement values of (automaton constants, v
letters, current register contents) plus midpoints and outer points, so
every order-type cell of the run tree is visited. Exact minima come from
per-cell closed minimization: Hamming cost is constant per cell,
last-letter is a one-dimensional interval distance, Manhattan is minimized
over candidate vertex coordinates of the closed cell polytope. No shortest
path, no product automata, no closure machinery is shared with the
verifier.
"""

from fractions import Fraction

from regrobust.automata import Configuration, run, step
from regrobust.guards import CONST
from regrobust.rational import INF


def _base_constants(dra, v):
    consts = {Fraction(0)}
    consts.update(Fraction(x) for x in v)
    consts.update(dra.constants())
    return consts


def _candidates(values):
    """Arrangement points, midpoints of consecutive ones, and outer points."""
    pts = sorted(set(values))
    out = list(pts)
    for a, b in zip(pts, pts[1:]):
        out.append((a + b) / 2)
    out.append(pts[0] - 1)
    out.append(pts[-1] + 1)
    return out


def brute_min_flip_cost(dra, v, metric_kind, threshold=None):
    """Exact infimum of the metric cost over label-flipping sequences."""
    v = tuple(Fraction(x) for x in v)
    label_v = run(dra, v).accepted
    if metric_kind == "hamming":
        return _hamming_min(dra, v, label_v)
    if metric_kind == "last_letter":
        return _last_letter_min(dra, v, label_v)
    if metric_kind == "manhattan":
        return _manhattan_min(dra, v, label_v)
    raise ValueError(metric_kind)


# ------------------------------------------------------------------ hamming

def _hamming_min(dra, v, label_v):
    base = _base_constants(dra, v)
    n = len(v)
    best = [None]

    def rec(i, config, cost):
        if best[0] is not None and cost >= best[0]:
            return
        if i == n:
            label = config is not None and config.state in dra.accepting
            if label != label_v:
                best[0] = cost if best[0] is None else min(best[0], cost)
            return
        if config is None:
            # dead run: the rest can copy v for free
            label = False
            if label != label_v:
                best[0] = cost if best[0] is None else min(best[0], cost)
            return
        for x in _candidates(base | set(config.registers)):
            nxt, _t = step(dra, config, x)
            rec(i + 1, nxt, cost + (0 if x == v[i] else 1))

    rec(0, Configuration(dra.initial, dra.initial_registers()), Fraction(0))
    return INF if best[0] is None else Fraction(best[0])


# -------------------------------------------------------------- last letter

def _last_letter_min(dra, v, label_v):
    prefix_result = run(dra, v[:-1])
    if prefix_result.died_at is not None:
        # every length-|v| continuation is rejected
        return Fraction(0) if label_v else INF
        # label_v True cannot happen here: v itself would have died
    config = prefix_result.final
    vn = v[-1]
    cuts = sorted(_base_constants(dra, v) | set(config.registers))

    def label_at(x):
        nxt, _t = step(dra, config, x)
        return nxt is not None and nxt.state in dra.accepting

    best = None

    def consider(inf_cost):
        nonlocal best
        if best is None or inf_cost < best:
            best = inf_cost

    # point cells
    for c in cuts:
        if label_at(c) != label_v:
            consider(abs(vn - c))
    # open interval cells: the infimum is the distance to the closer endpoint
    for a, b in zip(cuts, cuts[1:]):
        if a == b:
            continue
        if label_at((a + b) / 2) != label_v:
            consider(min(abs(vn - a), abs(vn - b)) if not (a < vn < b) else Fraction(0))
    # unbounded cells: distance to the finite end, zero if vn lies inside
    lo, hi = cuts[0], cuts[-1]
    if label_at(lo - 1) != label_v:
        consider(Fraction(0) if vn < lo else vn - lo)
    if label_at(hi + 1) != label_v:
        consider(Fraction(0) if vn > hi else hi - vn)
    return INF if best is None else best


# ---------------------------------------------------------------- manhattan

def _manhattan_min(dra, v, label_v):
    """DFS over full order-type cells, then exact closed minimization.

    A position's cell records the letter's relation to every anchor (each
    constant and each register's provenance), which makes the automaton run
    constant across the whole cell polytope: any register value a later
    guard consults was already an anchor when the letter was chosen.
    """
    base = sorted(_base_constants(dra, v))
    n = len(v)
    flips = []  # (const_only_lb, spec list)
    prune = [None]  # provisional upper bound (some flip cell's rep cost)

    def spec_for(x, anchors):
        out = []
        for src, value in anchors:
            if x < value:
                out.append((src, "<"))
            elif x == value:
                out.append((src, "="))
            else:
                out.append((src, ">"))
        return tuple(out)

    def const_lb(spec_list):
        total = Fraction(0)
        for i, spec in enumerate(spec_list):
            lo = hi = None
            for src, rel in spec:
                if src[0] != "const":
                    continue
                value = src[1]
                if rel == "=":
                    lo = hi = value
                    break
                if rel == "<":
                    hi = value if hi is None else min(hi, value)
                else:
                    lo = value if lo is None else max(lo, value)
            tgt = v[i]
            if lo is not None and tgt < lo:
                total += lo - tgt
            elif hi is not None and tgt > hi:
                total += tgt - hi
        return total

    def rec(i, config, spec_list, provs, rep_cost):
        if prune[0] is not None and const_lb(spec_list) >= prune[0]:
            return
        dead = config is None
        if i == n or dead:
            label = (not dead) and i == n and config.state in dra.accepting
            if label != label_v:
                tail = tuple(
                    ((("const", v[j]), "="),) for j in range(i, n)
                )  # the free tail copies v
                full = tuple(spec_list) + tail
                tail_rep = rep_cost  # tail letters cost 0
                flips.append((const_lb(full), full))
                if prune[0] is None or tail_rep < prune[0]:
                    prune[0] = tail_rep
            return
        anchors = []
        seen = set()
        for c in base:
            anchors.append((("const", c), c))
        for ridx, rv in enumerate(config.registers):
            src = provs[ridx]
            if src not in seen:
                seen.add(src)
                if src[0] == "letter" or src not in [a[0] for a in anchors]:
                    anchors.append((src, rv))
        reps = _candidates([value for _, value in anchors])
        reps.sort(key=lambda x: abs(v[i] - x))
        for x in reps:
            nxt, t = step(dra, config, x)
            nprov = provs
            if nxt is not None and t is not None:
                np = list(provs)
                for tgt, srcop in t.assignment.updates:
                    if srcop.kind == CONST:
                        np[tgt] = ("const", srcop.value)
                    elif srcop.kind == "reg":
                        np[tgt] = provs[srcop.index]
                    else:
                        np[tgt] = ("letter", i)
                nprov = tuple(np)
            rec(
                i + 1,
                nxt,
                spec_list + [spec_for(x, anchors)],
                nprov,
                rep_cost + abs(v[i] - x),
            )

    init_prov = tuple(("const", Fraction(0)) for _ in range(dra.num_registers))
    rec(0, Configuration(dra.initial, dra.initial_registers()), [], init_prov, Fraction(0))
    if not flips:
        return INF
    # exact closed minimization per flip cell, cheapest lower bounds first
    cands = sorted(set(base) | set(v))
    best = None
    flips.sort(key=lambda item: item[0])
    for lb, spec_list in flips:
        if best is not None and lb >= best:
            break
        cost = _closed_spec_min(spec_list, v, cands, best)
        if cost is not None and (best is None or cost < best):
            best = cost
    return INF if best is None else best


def _closed_spec_min(spec_list, v, cands, cap):
    """Min of sum |v_i - w_i| over the closed cell, via candidate vertex
    coordinates (constants and v letters)."""
    n = len(spec_list)
    assign = [None] * n
    best = cap

    def val(src):
        return src[1] if src[0] == "const" else assign[src[1]]

    def ok_so_far(i):
        x = assign[i]
        for src, rel in spec_list[i]:
            if src[0] == "letter" and src[1] > i:
                continue  # cannot happen: anchors precede the position
            other = val(src)
            if other is None:
                continue
            if rel == "<" and not (x <= other):
                return False
            if rel == "=" and x != other:
                return False
            if rel == ">" and not (x >= other):
                return False
        return True

    def rec(i, acc):
        nonlocal best
        if best is not None and acc >= best:
            return
        if i == n:
            best = acc
            return
        for c in cands:
            assign[i] = c
            if ok_so_far(i):
                rec(i + 1, acc + abs(v[i] - c))
            assign[i] = None

    rec(0, Fraction(0))
    return best

"""Conjunctions of order constraints over rational variables.

Atoms relate two terms (variable + rational offset, or a constant): exactly
the fragment the DRA-synthesis encoding emits. Feasibility is a negative-
cycle check on the difference graph with lexicographic (offset, strictness)
weights; conflicts return the cycle's source literals; models come from
shortest distances with an explicit epsilon for strict slack.
"""

from __future__ import annotations

from fractions import Fraction

ZERO = "#zero"


def _normalize(lhs, op, rhs):
    """Push everything into lhs_var op rhs_var + c form with op in <=,<,=,!=."""
    (xv, xo), (yv, yo) = lhs, rhs
    if op in (">", ">="):
        (xv, xo), (yv, yo) = (yv, yo), (xv, xo)
        op = "<" if op == ">" else "<="
    c = yo - xo
    return (xv or ZERO, op, yv or ZERO, c)


class OrderTheory:
    """Checks a set of asserted order literals; stateless per call."""

    def check(self, literals):
        """literals: list of (lhs_term, op, rhs_term) with term = (var|None, offset).

        Returns (True, values) with values mapping var names to Fractions,
        or (False, core_indices) where core_indices index `literals`.
        """
        edges = []  # (src, dst, c, strict, literal_index)
        diseqs = []  # (x, y, c, literal_index): value(x) != value(y) + c
        nodes = {ZERO}
        for idx, (lhs, op, rhs) in enumerate(literals):
            x, nop, y, c = _normalize(lhs, op, rhs)
            nodes.add(x)
            nodes.add(y)
            if nop == "!=":
                if x == y:
                    if c == 0:
                        return False, [idx]
                    continue
                diseqs.append((x, y, c, idx))
                continue
            if x == y:
                ok = c > 0 if nop == "<" else (c >= 0 if nop == "<=" else c == 0)
                if not ok:
                    return False, [idx]
                continue
            if nop == "=":
                edges.append((y, x, c, False, idx))
                edges.append((x, y, -c, False, idx))
            else:
                # x <= y + c  :  x - y <= c : edge y -> x weight c
                edges.append((y, x, c, nop == "<", idx))
        dist = {n: (Fraction(0), 0) for n in nodes}
        pred = {n: None for n in nodes}
        changed_node = None
        for _round in range(len(nodes) + 1):
            changed_node = None
            for (u, v, c, strict, idx) in edges:
                cand = (dist[u][0] + c, dist[u][1] - (1 if strict else 0))
                if cand < dist[v]:
                    dist[v] = cand
                    pred[v] = (u, c, strict, idx)
                    changed_node = v
            if changed_node is None:
                break
        if changed_node is not None:
            # negative (or zero-with-strict) cycle: walk predecessors into it
            node = changed_node
            for _ in range(len(nodes)):
                node = pred[node][0]
            core = []
            cur = node
            while True:
                u, _c, _s, idx = pred[cur]
                core.append(idx)
                cur = u
                if cur == node:
                    break
            return False, sorted(set(core))
        values = self._realize(dist, edges)
        for (x, y, c, idx) in list(diseqs):
            if values[x] == values[y] + c:
                adjusted = self._dodge_disequalities(values, edges, diseqs)
                if adjusted is None:
                    return False, [i for (_x, _y, _c, i) in diseqs] + [
                        e[4] for e in edges
                    ]
                values = adjusted
                break
        base = values[ZERO]
        return True, {n: v - base for n, v in values.items() if n != ZERO}

    @staticmethod
    def _realize(dist, edges):
        """Concrete rationals from (offset, strict-count) distances."""
        eps = Fraction(1)
        for (u, v, c, strict, _idx) in edges:
            slack_c = dist[u][0] + c - dist[v][0]
            if slack_c > 0:
                span = abs(dist[u][1]) + abs(dist[v][1]) + 2
                eps = min(eps, slack_c / span)
        return {n: d[0] + d[1] * (eps / 2) for n, d in dist.items()}

    @staticmethod
    def _dodge_disequalities(values, edges, diseqs, attempts=32):
        """Try small perturbations to satisfy != constraints; None if stuck."""
        from random import Random

        rng = Random(12345)
        nodes = list(values)
        for attempt in range(1, attempts + 1):
            shift = Fraction(1, 2 ** (attempt + 3))
            cand = dict(values)
            for (x, y, c, _idx) in diseqs:
                if cand[x] == cand[y] + c and x != ZERO:
                    cand[x] = cand[x] + shift * rng.choice((1, -1, 2, -2))
            ok = True
            for (u, v, c, strict, _idx) in edges:
                lhs, rhs = cand[v], cand[u] + c
                if lhs > rhs or (strict and lhs == rhs):
                    ok = False
                    break
            if ok and all(cand[x] != cand[y] + c for (x, y, c, _i) in diseqs):
                return cand
        return None

"""Worker for the exhaustive distance-oracle criterion.

The word set (all sequences of length <= 6 over {0,1,2,3}) is arranged as a
prefix trie; for each fixed v the Levenshtein and DTW columns are advanced
incrementally along trie edges, which keeps the oracle side linear in the
number of words. The engine side evaluates the metric machine per pair.
"""

from fractions import Fraction

from regrobust.raa import build_metric, evaluate
from regrobust.rational import INF

GRID = tuple(Fraction(x) for x in (0, 1, 2, 3))
MAX_LEN = 6


def build_trie():
    """Words of length <= MAX_LEN over GRID in BFS order as a parent trie."""
    words = [()]
    parents = [None]
    letters = [None]
    frontier = [0]
    for _depth in range(MAX_LEN):
        next_frontier = []
        for node in frontier:
            for letter in GRID:
                idx = len(words)
                words.append(words[node] + (letter,))
                parents.append(node)
                letters.append(letter)
                next_frontier.append(idx)
        frontier = next_frontier
    return words, parents, letters


def _edit_columns(v, parents, letters):
    m = len(v)
    cols = [None] * len(parents)
    cols[0] = list(range(m + 1))
    for node in range(1, len(parents)):
        old = cols[parents[node]]
        b = letters[node]
        new = [old[0] + 1] + [0] * m
        for i in range(1, m + 1):
            sub = old[i - 1] + (0 if v[i - 1] == b else 1)
            new[i] = min(new[i - 1] + 1, old[i] + 1, sub)
        cols[node] = new
    return [Fraction(c[m]) for c in cols]


def _dtw_columns(v, parents, letters):
    m = len(v)
    cols = [None] * len(parents)
    base = [None] * (m + 1)
    base[0] = Fraction(0)
    cols[0] = base
    for node in range(1, len(parents)):
        old = cols[parents[node]]
        b = letters[node]
        new = [None] * (m + 1)
        for i in range(1, m + 1):
            best = None
            for prev in (old[i], new[i - 1], old[i - 1]):
                if prev is not None and (best is None or prev < best):
                    best = prev
            if best is not None:
                new[i] = best + abs(v[i - 1] - b)
        cols[node] = new
    out = []
    for c in cols:
        value = c[m]
        out.append(INF if value is None else value)
    return out


def check_chunk(args):
    """(metric_kind, v_list) -> (pairs_checked, mismatches, examples)."""
    metric_kind, v_list = args
    words, parents, letters = build_trie()
    raa = build_metric(metric_kind)
    mismatches = 0
    examples = []
    pairs = 0
    for v in v_list:
        if metric_kind == "edit":
            oracle = _edit_columns(v, parents, letters)
        else:
            oracle = _dtw_columns(v, parents, letters)
        for node, w in enumerate(words):
            got = evaluate(raa, v, w)
            want = oracle[node]
            pairs += 1
            if got != want:
                mismatches += 1
                if len(examples) < 3:
                    examples.append((v, w, str(got), str(want)))
    return pairs, mismatches, examples

"""CDCL SAT solver: watched literals, VSIDS-style activities, 1UIP learning,
Luby restarts, phase saving. Variables are positive ints, literals signed."""

from __future__ import annotations

import heapq


def luby(x: int) -> int:
    """The reluctant-doubling sequence 1,1,2,1,1,2,4,... at 0-based index x."""
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) // 2
        seq -= 1
        x = x % size
    return 1 << seq


class SatSolver:
    def __init__(self):
        self.num_vars = 0
        self.clauses = []  # each a list of literals; [0],[1] watched
        self.watches = {}  # literal -> list of clause indexes
        self.assign = [0]  # 1-indexed: 0 unassigned, 1 true, -1 false
        self.level = [0]
        self.reason = [None]
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.activity = [0.0]
        self.var_inc = 1.0
        self.phase = [False]
        self.ok = True
        self.conflicts = 0
        self.order = []  # max-activity heap with lazy deletion

    def new_var(self) -> int:
        self.num_vars += 1
        self.assign.append(0)
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.phase.append(False)
        heapq.heappush(self.order, (0.0, self.num_vars))
        return self.num_vars

    def value(self, lit: int) -> int:
        v = self.assign[abs(lit)]
        return v if lit > 0 else -v

    def add_clause(self, lits) -> bool:
        """Add a clause; False if the instance became trivially unsat."""
        if not self.ok:
            return False
        if self.trail_lim:
            self._backtrack(0)
        seen = set()
        out = []
        for lit in lits:
            if -lit in seen:
                return True  # tautology
            if lit in seen:
                continue
            val = self.value(lit)
            if val == 1:
                return True  # already satisfied at level 0
            if val == -1:
                continue  # falsified at level 0: drop
            seen.add(lit)
            out.append(lit)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            if not self._enqueue(out[0], None):
                self.ok = False
                return False
            conflict = self._propagate()
            if conflict is not None:
                self.ok = False
                return False
            return True
        idx = len(self.clauses)
        self.clauses.append(out)
        self.watches.setdefault(out[0], []).append(idx)
        self.watches.setdefault(out[1], []).append(idx)
        return True

    def _enqueue(self, lit: int, reason) -> bool:
        val = self.value(lit)
        if val == 1:
            return True
        if val == -1:
            return False
        v = abs(lit)
        self.assign[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.phase[v] = lit > 0
        self.trail.append(lit)
        return True

    def _propagate(self):
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            falsified = -lit
            watch_list = self.watches.get(falsified)
            if not watch_list:
                continue
            i = 0
            while i < len(watch_list):
                ci = watch_list[i]
                clause = self.clauses[ci]
                if clause[0] == falsified:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self.value(first) == 1:
                    i += 1
                    continue
                moved = False
                for j in range(2, len(clause)):
                    if self.value(clause[j]) != -1:
                        clause[1], clause[j] = clause[j], clause[1]
                        self.watches.setdefault(clause[1], []).append(ci)
                        watch_list[i] = watch_list[-1]
                        watch_list.pop()
                        moved = True
                        break
                if moved:
                    continue
                if self.value(first) == -1:
                    return ci  # conflict
                self._enqueue(first, ci)
                i += 1
        return None

    def _bump(self, var: int):
        self.activity[var] += self.var_inc
        heapq.heappush(self.order, (-self.activity[var], var))
        if self.activity[var] > 1e100:
            for v in range(1, self.num_vars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100
            self.order = [(-self.activity[v], v) for v in range(1, self.num_vars + 1)]
            heapq.heapify(self.order)

    def _analyze(self, conflict_idx):
        learnt = []
        seen = [False] * (self.num_vars + 1)
        counter = 0
        lit = None
        reason = self.clauses[conflict_idx]
        idx = len(self.trail) - 1
        current_level = len(self.trail_lim)
        while True:
            for q in reason:
                if lit is not None and q == -lit:
                    continue  # the literal this reason clause propagated
                v = abs(q)
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] == current_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            lit = -self.trail[idx]
            v = abs(lit)
            seen[v] = False
            counter -= 1
            idx -= 1
            if counter == 0:
                break
            reason = self.clauses[self.reason[v]]
        learnt.insert(0, lit)
        back_level = 0
        if len(learnt) > 1:
            max_i = 1
            for i in range(2, len(learnt)):
                if self.level[abs(learnt[i])] > self.level[abs(learnt[max_i])]:
                    max_i = i
            learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
            back_level = self.level[abs(learnt[1])]
        return learnt, back_level

    def _backtrack(self, target_level: int):
        while len(self.trail_lim) > target_level:
            bound = self.trail_lim.pop()
            while len(self.trail) > bound:
                lit = self.trail.pop()
                v = abs(lit)
                self.assign[v] = 0
                self.reason[v] = None
                heapq.heappush(self.order, (-self.activity[v], v))
        self.qhead = min(self.qhead, len(self.trail))

    def _decide(self) -> int:
        while self.order:
            act, v = self.order[0]
            if self.assign[v] != 0 or -act != self.activity[v]:
                heapq.heappop(self.order)  # stale entry
                continue
            return v if self.phase[v] else -v
        for v in range(1, self.num_vars + 1):
            if self.assign[v] == 0:
                return v if self.phase[v] else -v
        return 0

    def solve(self, on_progress=None) -> bool:
        if not self.ok:
            return False
        if self.trail_lim:
            self._backtrack(0)
        conflict = self._propagate()
        if conflict is not None:
            self.ok = False
            return False
        restart_count = 0
        conflicts_since_restart = 0
        limit = 64 * luby(restart_count)
        while True:
            conflict = self._propagate()
            if conflict is not None:
                self.conflicts += 1
                conflicts_since_restart += 1
                if not self.trail_lim:
                    self.ok = False
                    return False
                learnt, back_level = self._analyze(conflict)
                self._backtrack(back_level)
                if len(learnt) == 1:
                    if not self._enqueue(learnt[0], None):
                        self.ok = False
                        return False
                else:
                    idx = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches.setdefault(learnt[0], []).append(idx)
                    self.watches.setdefault(learnt[1], []).append(idx)
                    self._enqueue(learnt[0], idx)
                self.var_inc *= 1.05
                if on_progress is not None and self.conflicts % 256 == 0:
                    on_progress(self.conflicts)
                if conflicts_since_restart >= limit:
                    restart_count += 1
                    conflicts_since_restart = 0
                    limit = 64 * luby(restart_count)
                    self._backtrack(0)
                continue
            lit = self._decide()
            if lit == 0:
                return True  # full assignment
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    def model(self):
        return {v: self.assign[v] == 1 for v in range(1, self.num_vars + 1)}

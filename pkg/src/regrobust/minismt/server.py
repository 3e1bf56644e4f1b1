"""SMT-LIB v2 front end: parsing, Tseitin conversion, DPLL(T) loop.

Supports the QF_LRA fragment the synthesis encoding needs: Bool and Real
constants, and/or/not/=>/= terms, order atoms between Real terms built from
variables, numerals, (/ n d) and (- x). Commands: set-logic, set-option,
set-info, declare-const, declare-fun (nullary), assert, check-sat,
get-model, push, pop, reset, echo, exit.
"""

from __future__ import annotations

import re
import sys
from fractions import Fraction

from .sat import SatSolver
from .theory import OrderTheory

_TOKEN = re.compile(r"""\(|\)|"(?:[^"]|"")*"|[^\s()]+""")


def tokenize(text: str):
    return _TOKEN.findall(text)


def parse_sexprs(tokens):
    out = []
    stack = []
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                out.append(done)
        else:
            if stack:
                stack[-1].append(tok)
            else:
                out.append(tok)
    if stack:
        raise ValueError("unbalanced '('")
    return out


_NEG_OP = {"<": ">=", "<=": ">", "=": "!=", ">": "<=", ">=": "<", "!=": "="}


class Session:
    def __init__(self):
        self.reset()

    def reset(self):
        self.sat = SatSolver()
        self.theory = OrderTheory()
        self.bool_vars = {}  # name -> sat var
        self.real_vars = {}  # name -> canonical node name
        self.atom_vars = {}  # canonical atom key -> sat var
        self.atoms = {}  # sat var -> (lhs_term, op, rhs_term)
        self.defs = {}  # structural hash -> literal
        self.true_lit = None
        self.model_bools = None
        self.model_reals = None
        self.stack = []  # (kind, payload) replay log for push/pop
        self.levels = []
        self.chained = set()  # atom var pairs already order-linked

    # ------------------------------------------------------------ replay

    def _log(self, kind, payload):
        self.stack.append((kind, payload))

    def push(self, n=1):
        for _ in range(n):
            self.levels.append(len(self.stack))

    def pop(self, n=1):
        if n > len(self.levels):
            raise ValueError("pop past the bottom of the stack")
        target = self.levels[len(self.levels) - n]
        del self.levels[len(self.levels) - n:]
        replay = self.stack[:target]
        self.reset_solver_only()
        for kind, payload in replay:
            if kind == "declare":
                self._declare(*payload)
            else:
                self._assert(payload)
        self.stack = replay

    def reset_solver_only(self):
        levels = self.levels
        self.reset()
        self.levels = levels

    # ------------------------------------------------------------ declarations

    def declare(self, name, sort):
        self._log("declare", (name, sort))
        self._declare(name, sort)

    def _declare(self, name, sort):
        if sort == "Bool":
            if name not in self.bool_vars:
                self.bool_vars[name] = self.sat.new_var()
        elif sort in ("Real", "Int"):
            self.real_vars[name] = name
        else:
            raise ValueError(f"unsupported sort {sort}")

    # ------------------------------------------------------------ terms

    def _true(self):
        if self.true_lit is None:
            v = self.sat.new_var()
            self.sat.add_clause([v])
            self.true_lit = v
        return self.true_lit

    def _real_term(self, t):
        """Returns (var name or None, Fraction offset)."""
        if isinstance(t, str):
            if t in self.real_vars:
                return (t, Fraction(0))
            try:
                return (None, Fraction(t))
            except ValueError:
                raise ValueError(f"unknown real term {t!r}") from None
        if not t:
            raise ValueError("empty real term")
        head = t[0]
        if head == "/" and len(t) == 3:
            a = self._real_term(t[1])
            b = self._real_term(t[2])
            if a[0] is None and b[0] is None and b[1] != 0:
                return (None, a[1] / b[1])
        if head == "-" and len(t) == 2:
            inner = self._real_term(t[1])
            if inner[0] is None:
                return (None, -inner[1])
        raise ValueError(f"unsupported real term {t!r}")

    def _atom_literal(self, op, lhs, rhs):
        a = self._real_term(lhs)
        b = self._real_term(rhs)
        key = (op, a, b)
        var = self.atom_vars.get(key)
        if var is None:
            var = self.sat.new_var()
            self.atom_vars[key] = var
            self.atoms[var] = (a, op, b)
        return var

    def _is_real_term(self, t):
        try:
            self._real_term(t)
            return True
        except ValueError:
            return False

    def _literal(self, t):
        """Tseitin: term -> SAT literal, defining clauses added on the fly."""
        if isinstance(t, str):
            if t == "true":
                return self._true()
            if t == "false":
                return -self._true()
            if t in self.bool_vars:
                return self.bool_vars[t]
            raise ValueError(f"unknown boolean term {t!r}")
        head = t[0]
        if head == "not":
            return -self._literal(t[1])
        if head in ("<", "<=", ">", ">="):
            return self._atom_literal(head, t[1], t[2])
        if head == "=":
            if self._is_real_term(t[1]) and self._is_real_term(t[2]):
                return self._atom_literal("=", t[1], t[2])
            a, b = self._literal(t[1]), self._literal(t[2])
            key = ("iff", tuple(sorted((a, b))))
            if key in self.defs:
                return self.defs[key]
            aux = self.sat.new_var()
            self.defs[key] = aux
            self.sat.add_clause([-aux, -a, b])
            self.sat.add_clause([-aux, a, -b])
            self.sat.add_clause([aux, a, b])
            self.sat.add_clause([aux, -a, -b])
            return aux
        if head == "=>":
            lits = [self._literal(x) for x in t[1:]]
            # right-associative implication chain
            out = lits[-1]
            for lit in reversed(lits[:-1]):
                out = self._or([-lit, out])
            return out
        if head == "and":
            return self._and([self._literal(x) for x in t[1:]])
        if head == "or":
            return self._or([self._literal(x) for x in t[1:]])
        if head == "xor":
            return self._xor(self._literal(t[1]), self._literal(t[2]))
        if head == "ite":
            c = self._literal(t[1])
            a, b = self._literal(t[2]), self._literal(t[3])
            return self._or([self._and([c, a]), self._and([-c, b])])
        raise ValueError(f"unsupported term {t!r}")

    def _and(self, lits):
        lits = [l for l in lits if l != self._true()]
        if any(l == -self._true() for l in lits):
            return -self._true()
        if not lits:
            return self._true()
        if len(lits) == 1:
            return lits[0]
        key = ("and", tuple(sorted(lits)))
        if key in self.defs:
            return self.defs[key]
        aux = self.sat.new_var()
        self.defs[key] = aux
        for l in lits:
            self.sat.add_clause([-aux, l])
        self.sat.add_clause([aux] + [-l for l in lits])
        return aux

    def _or(self, lits):
        return -self._and([-l for l in lits])

    def _xor(self, a, b):
        key = ("xor", tuple(sorted((a, b))))
        if key in self.defs:
            return self.defs[key]
        aux = self.sat.new_var()
        self.defs[key] = aux
        self.sat.add_clause([-aux, a, b])
        self.sat.add_clause([-aux, -a, -b])
        self.sat.add_clause([aux, -a, b])
        self.sat.add_clause([aux, a, -b])
        return aux

    # ------------------------------------------------------------ commands

    def assert_term(self, t):
        self._log("assert", t)
        self._assert(t)

    def _assert(self, t):
        self.sat.add_clause([self._literal(t)])

    def _halfline(self, var, lhs, op, rhs):
        """Predicate (kind, bound) over d = x - y for grouping, or None."""
        (xv, xo), (yv, yo) = lhs, rhs
        x = xv or "#z"
        y = yv or "#z"
        c = yo - xo
        if op in (">", ">="):
            x, y = y, x
            c = -c
            op = "<" if op == ">" else "<="
        if x == y:
            return None
        if (x, y) > (y, x):
            # canonical direction: d = smaller - larger
            x, y = y, x
            c = -c
            op = {"<": ">", "<=": ">=", "=": "="}[op]
        return ((x, y), op, c)

    def _order_chains(self):
        """Static consistency clauses between atoms over the same variable
        pair: implication, exclusion and coverage of half-line predicates.
        Keeps the boolean abstraction from enumerating impossible orders."""
        groups = {}
        for var, (lhs, op, rhs) in self.atoms.items():
            pred = self._halfline(var, lhs, op, rhs)
            if pred is not None:
                groups.setdefault(pred[0], []).append((var, pred[1], pred[2]))

        def implies(op1, c1, op2, c2):
            # does (d op1 c1) imply (d op2 c2)?
            if op1 == "=":
                if op2 == "=":
                    return c1 == c2
                lo1 = hi1 = c1
                return _seg_in_halfline(lo1, hi1, op2, c2)
            if op2 == "=":
                return False
            down1 = op1 in ("<", "<=")
            down2 = op2 in ("<", "<=")
            if down1 != down2:
                return False
            if down1:
                return c1 < c2 or (c1 == c2 and (op1 == "<" or op2 == "<="))
            return c1 > c2 or (c1 == c2 and (op1 == ">" or op2 == ">="))

        def disjoint(op1, c1, op2, c2):
            lo1, hi1, ls1, hs1 = _halfline_bounds(op1, c1)
            lo2, hi2, ls2, hs2 = _halfline_bounds(op2, c2)
            lo = lo1 if lo2 is None else (lo2 if lo1 is None else max(lo1, lo2))
            hi = hi1 if hi2 is None else (hi2 if hi1 is None else min(hi1, hi2))
            if lo is None or hi is None:
                return False
            if lo > hi:
                return True
            if lo == hi:
                strict_lo = (lo1 == lo and ls1) or (lo2 == lo and ls2)
                strict_hi = (hi1 == hi and hs1) or (hi2 == hi and hs2)
                return strict_lo or strict_hi
            return False

        def covers(op1, c1, op2, c2):
            # (d op1 c1) union (d op2 c2) is everything
            if op1 == "=" or op2 == "=":
                return False
            down1 = op1 in ("<", "<=")
            down2 = op2 in ("<", "<=")
            if down1 == down2:
                return False
            if down2:
                op1, c1, op2, c2 = op2, c2, op1, c1
            # now op1 is the downward one, op2 upward
            return c1 > c2 or (c1 == c2 and (op1 == "<=" or op2 == ">="))

        for pair, entries in groups.items():
            for i, (v1, op1, c1) in enumerate(entries):
                for v2, op2, c2 in entries[i + 1:]:
                    key = (min(v1, v2), max(v1, v2))
                    if key in self.chained:
                        continue
                    self.chained.add(key)
                    if implies(op1, c1, op2, c2):
                        self.sat.add_clause([-v1, v2])
                    if implies(op2, c2, op1, c1):
                        self.sat.add_clause([-v2, v1])
                    if disjoint(op1, c1, op2, c2):
                        self.sat.add_clause([-v1, -v2])
                    if covers(op1, c1, op2, c2):
                        self.sat.add_clause([v1, v2])
        self._triangle_chains(groups, implies, disjoint)

    def _triangle_chains(self, groups, implies, disjoint):
        """Transitivity across pairs sharing a variable: from (x-y op c) and
        (y-z op' c') derive a bound on x-z and link it to existing atoms."""

        def atoms_for(x, y):
            out = []
            for (gx, gy), entries in groups.items():
                if (gx, gy) == (x, y):
                    for var, op, c in entries:
                        if op == "=":
                            out.append((var, "<=", c))
                            out.append((var, ">=", c))
                        else:
                            out.append((var, op, c))
                elif (gx, gy) == (y, x):
                    for var, op, c in entries:
                        if op == "=":
                            out.append((var, "<=", -c))
                            out.append((var, ">=", -c))
                        else:
                            flip = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op]
                            out.append((var, flip, -c))
            return out

        nodes = set()
        for x, y in groups:
            nodes.add(x)
            nodes.add(y)
        nodes = sorted(nodes)
        if len(nodes) > 12:
            return  # quadratic-space guard; the theory loop still backs this up
        for x in nodes:
            for y in nodes:
                if x == y:
                    continue
                a_xy = atoms_for(x, y)
                if not a_xy:
                    continue
                for z in nodes:
                    if z in (x, y):
                        continue
                    a_yz = atoms_for(y, z)
                    a_xz = atoms_for(x, z)
                    if not a_yz or not a_xz:
                        continue
                    for v1, op1, c1 in a_xy:
                        down1 = op1 in ("<", "<=")
                        for v2, op2, c2 in a_yz:
                            if v1 == v2:
                                continue
                            if (op2 in ("<", "<=")) != down1:
                                continue
                            strict = "<" if (op1 == "<" or op2 == "<") else "<="
                            dop = strict if down1 else {"<": ">", "<=": ">="}[strict]
                            dc = c1 + c2
                            for v3, op3, c3 in a_xz:
                                if v3 in (v1, v2):
                                    continue
                                key = ("tri", v1, v2, v3)
                                if key in self.chained:
                                    continue
                                if implies(dop, dc, op3, c3):
                                    self.chained.add(key)
                                    self.sat.add_clause([-v1, -v2, v3])
                                elif disjoint(dop, dc, op3, c3):
                                    self.chained.add(key)
                                    self.sat.add_clause([-v1, -v2, -v3])

    def check_sat(self) -> str:
        self.model_bools = None
        self.model_reals = None
        self._order_chains()
        while self.sat.solve():
            model = self.sat.model()
            literals = []
            lit_vars = []
            for var, (lhs, op, rhs) in self.atoms.items():
                val = model.get(var)
                if val is None:
                    continue
                literals.append((lhs, op if val else _NEG_OP[op], rhs))
                lit_vars.append(var if val else -var)
            ok, payload = self.theory.check(literals)
            if ok:
                self.model_bools = model
                self.model_reals = payload
                return "sat"
            if not payload:
                return "unsat"
            blocking = [-lit_vars[i] for i in payload]
            if not self.sat.add_clause(blocking):
                return "unsat"
        return "unsat"

    def get_model(self) -> str:
        if self.model_bools is None:
            raise ValueError("no model available; call after a sat check-sat")
        lines = ["("]
        for name, var in sorted(self.bool_vars.items()):
            value = "true" if self.model_bools.get(var) else "false"
            lines.append(f"  (define-fun {name} () Bool {value})")
        reals = self.model_reals or {}
        for name in sorted(self.real_vars):
            value = reals.get(name, Fraction(0))
            lines.append(f"  (define-fun {name} () Real {_format_real(value)})")
        lines.append(")")
        return "\n".join(lines)


def _halfline_bounds(op, c):
    """(lo, hi, lo_strict, hi_strict) of the predicate's solution set."""
    if op == "=":
        return (c, c, False, False)
    if op in ("<", "<="):
        return (None, c, False, op == "<")
    return (c, None, op == ">", False)


def _seg_in_halfline(lo, hi, op, c):
    if op in ("<", "<="):
        return hi < c or (hi == c and op == "<=")
    if op in (">", ">="):
        return lo > c or (lo == c and op == ">=")
    return lo == hi == c


def _format_real(x: Fraction) -> str:
    if x < 0:
        return f"(- {_format_real(-x)})"
    if x.denominator == 1:
        return f"{x.numerator}.0"
    return f"(/ {x.numerator} {x.denominator})"


def run(stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    session = Session()
    parts = []
    depth = 0

    def respond(text):
        stdout.write(text + "\n")
        stdout.flush()

    for line in stdin:
        parts.append(line)
        depth += line.count("(") - line.count(")")
        if depth > 0:
            continue
        buffer = "".join(parts)
        parts = []
        depth = 0
        if not buffer.strip():
            continue
        try:
            commands = parse_sexprs(tokenize(buffer))
        except ValueError:
            parts = [buffer]  # tokens inside strings may hide parens; wait
            depth = buffer.count("(") - buffer.count(")")
            continue
        for cmd in commands:
            if not isinstance(cmd, list) or not cmd:
                continue
            head = cmd[0]
            try:
                if head in ("set-logic", "set-option", "set-info"):
                    continue
                if head in ("declare-const",):
                    session.declare(cmd[1], cmd[2])
                elif head == "declare-fun":
                    if cmd[2] != []:
                        raise ValueError("only nullary declare-fun supported")
                    session.declare(cmd[1], cmd[3])
                elif head == "assert":
                    session.assert_term(cmd[1])
                elif head == "check-sat":
                    respond(session.check_sat())
                elif head == "get-model":
                    respond(session.get_model())
                elif head == "push":
                    session.push(int(cmd[1]) if len(cmd) > 1 else 1)
                elif head == "pop":
                    session.pop(int(cmd[1]) if len(cmd) > 1 else 1)
                elif head == "reset":
                    session = Session()
                elif head == "echo":
                    respond(cmd[1].strip('"'))
                elif head == "exit":
                    return
                else:
                    respond(f'(error "unsupported command {head}")')
            except Exception as exc:  # answer and keep serving
                respond(f'(error "{exc}")')

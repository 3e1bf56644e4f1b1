"""External SMT solver process interface: spawn, feed SMT-LIB v2 text,
parse (check-sat) and (get-model) responses.

Backend resolution order: the REGROBUST_SOLVER environment variable (a shell
command line), then a z3 or cvc5 binary on PATH, then the bundled
`python -m regrobust.minismt` solver.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import sys
from fractions import Fraction

from .minismt.server import parse_sexprs, tokenize


class SolverError(RuntimeError):
    pass


class SolverTimeout(SolverError):
    pass


def default_solver_command():
    env = os.environ.get("REGROBUST_SOLVER")
    if env:
        return shlex.split(env)
    if shutil.which("z3"):
        return ["z3", "-in"]
    if shutil.which("cvc5"):
        return ["cvc5", "--incremental", "--produce-models", "--lang", "smt2"]
    return [sys.executable, "-m", "regrobust.minismt"]


class SolverProcess:
    """One solver subprocess speaking SMT-LIB v2 over stdio."""

    def __init__(self, command=None):
        self.command = list(command) if command else default_solver_command()
        self.proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def send(self, text: str):
        if self.proc.poll() is not None:
            raise SolverError(f"solver {self.command[0]} exited early")
        self.proc.stdin.write(text)
        if not text.endswith("\n"):
            self.proc.stdin.write("\n")
        self.proc.stdin.flush()

    def _read_line(self) -> str:
        line = self.proc.stdout.readline()
        if not line:
            raise SolverError(f"solver {self.command[0]} closed its output")
        return line.strip()

    def check_sat(self) -> str:
        self.send("(check-sat)")
        while True:
            line = self._read_line()
            if not line:
                continue
            if line.startswith("(error"):
                raise SolverError(line)
            if line in ("sat", "unsat", "unknown"):
                return line
            # skip solver chatter
            continue

    def get_model_text(self) -> str:
        self.send("(get-model)")
        chunks = []
        depth = 0
        started = False
        while True:
            line = self.proc.stdout.readline()
            if not line:
                raise SolverError("solver closed during get-model")
            chunks.append(line)
            depth += line.count("(") - line.count(")")
            started = started or "(" in line
            if started and depth <= 0:
                return "".join(chunks)

    def reset(self):
        self.send("(reset)")

    def close(self):
        try:
            if self.proc.poll() is None:
                self.send("(exit)")
                self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()
        finally:
            if self.proc.stdin:
                self.proc.stdin.close()
            if self.proc.stdout:
                self.proc.stdout.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _value_from_sexpr(expr) -> object:
    if isinstance(expr, str):
        if expr == "true":
            return True
        if expr == "false":
            return False
        try:
            return Fraction(expr.rstrip("?"))
        except ValueError:
            return expr
    if expr and expr[0] == "/":
        return Fraction(_value_from_sexpr(expr[1])) / Fraction(_value_from_sexpr(expr[2]))
    if expr and expr[0] == "-" and len(expr) == 2:
        return -_value_from_sexpr(expr[1])
    return expr


def parse_model(text: str) -> dict:
    """Parse a (get-model) response into name -> bool | Fraction."""
    try:
        docs = parse_sexprs(tokenize(text))
    except ValueError as exc:
        raise SolverError(f"unparseable model: {exc}") from exc
    out = {}
    for doc in docs:
        if not isinstance(doc, list):
            continue
        entries = doc
        if entries and entries[0] == "model":  # older z3 wraps entries
            entries = entries[1:]
        for entry in entries:
            if isinstance(entry, list) and entry and entry[0] == "define-fun":
                name = entry[1]
                value = _value_from_sexpr(entry[-1])
                out[name] = value
    return out


def _frac_text(x) -> str:
    x = Fraction(x)
    if x < 0:
        return f"(- {_frac_text(-x)})"
    if x.denominator == 1:
        return str(x.numerator)
    return f"(/ {x.numerator} {x.denominator})"

"""JSON (de)serialization for automata.

One document per automaton. Rationals travel as "num/den" strings; guard
operands are {"reg":i}, {"curr":null}, {"curr1":null}, {"curr2":null} or
{"const":"num/den"}. RAA documents add "acc" and "mov" per transition and
may carry an optional "shift" on guard atoms.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .automata import Dra, Transition
from .guards import CONST, CURR, CURR1, CURR2, REG, Assignment, GuardAtom, Operand
from .raa import AccUpdate, Raa, RaaTransition
from .rational import ParseError, format_rational, parse_rational


def _operand_to_json(op: Operand):
    if op.kind == REG:
        return {"reg": op.index}
    if op.kind == CONST:
        return {"const": format_rational(op.value)}
    return {op.kind: None}


def _operand_from_json(doc, where):
    if not isinstance(doc, dict) or len(doc) != 1:
        raise ParseError("operand must be a single-key object", where)
    key, value = next(iter(doc.items()))
    if key == "reg":
        return Operand(REG, index=int(value))
    if key == "const":
        return Operand(CONST, value=parse_rational(value))
    if key in (CURR, CURR1, CURR2):
        return Operand(key)
    raise ParseError(f"unknown operand key {key!r}", where)


def _guard_to_json(guard):
    out = []
    for atom in guard:
        doc = {"lhs": _operand_to_json(atom.lhs), "op": atom.op, "rhs": _operand_to_json(atom.rhs)}
        if atom.shift:
            doc["shift"] = format_rational(atom.shift)
        out.append(doc)
    return out


def _guard_from_json(doc, where):
    atoms = []
    for i, a in enumerate(doc):
        loc = f"{where}.guard[{i}]"
        try:
            shift = parse_rational(a["shift"]) if "shift" in a else Fraction(0)
            atoms.append(
                GuardAtom(
                    _operand_from_json(a["lhs"], loc),
                    a["op"],
                    _operand_from_json(a["rhs"], loc),
                    shift,
                )
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad guard atom: {exc}", loc) from exc
    return tuple(atoms)


def _assignment_to_json(assignment):
    return [{"target": t, "src": _operand_to_json(s)} for t, s in assignment.updates]


def _assignment_from_json(doc, where):
    updates = []
    for i, u in enumerate(doc):
        loc = f"{where}.assign[{i}]"
        try:
            updates.append((int(u["target"]), _operand_from_json(u["src"], loc)))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad assignment: {exc}", loc) from exc
    return Assignment(tuple(updates))


def dra_to_doc(dra: Dra) -> dict:
    return {
        "kind": "dra",
        "states": dra.num_states,
        "registers": dra.num_registers,
        "initial": dra.initial,
        "accepting": sorted(dra.accepting),
        "transitions": [
            {
                "from": t.source,
                "to": t.target,
                "guard": _guard_to_json(t.guard),
                "assign": _assignment_to_json(t.assignment),
            }
            for t in dra.transitions
        ],
    }


def raa_to_doc(raa: Raa) -> dict:
    return {
        "kind": "raa",
        "states": raa.num_states,
        "registers": raa.num_registers,
        "initial": raa.initial,
        "accepting": sorted(raa.accepting),
        "transitions": [
            {
                "from": t.source,
                "to": t.target,
                "guard": _guard_to_json(t.guard),
                "assign": _assignment_to_json(t.assignment),
                "acc": {
                    "a1": format_rational(t.acc.a1),
                    "a2": format_rational(t.acc.a2),
                    "b": format_rational(t.acc.b),
                },
                "mov": t.mov,
            }
            for t in raa.transitions
        ],
    }


def serialize(automaton) -> str:
    if isinstance(automaton, Dra):
        doc = dra_to_doc(automaton)
    elif isinstance(automaton, Raa):
        doc = raa_to_doc(automaton)
    else:
        raise TypeError(f"cannot serialize {type(automaton).__name__}")
    return json.dumps(doc, indent=2, sort_keys=True)


def _doc_from_text(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from exc


def dra_from_doc(doc: dict) -> Dra:
    if doc.get("kind") != "dra":
        raise ParseError(f"expected kind 'dra', got {doc.get('kind')!r}", "kind")
    transitions = []
    for i, t in enumerate(doc.get("transitions", [])):
        where = f"transitions[{i}]"
        try:
            transitions.append(
                Transition(
                    int(t["from"]),
                    _guard_from_json(t.get("guard", []), where),
                    _assignment_from_json(t.get("assign", []), where),
                    int(t["to"]),
                )
            )
        except KeyError as exc:
            raise ParseError(f"missing field {exc}", where) from exc
    try:
        return Dra(
            num_states=int(doc["states"]),
            num_registers=int(doc["registers"]),
            initial=int(doc["initial"]),
            accepting=frozenset(int(q) for q in doc["accepting"]),
            transitions=tuple(transitions),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"malformed automaton: {exc}") from exc


def raa_from_doc(doc: dict) -> Raa:
    if doc.get("kind") != "raa":
        raise ParseError(f"expected kind 'raa', got {doc.get('kind')!r}", "kind")
    transitions = []
    for i, t in enumerate(doc.get("transitions", [])):
        where = f"transitions[{i}]"
        try:
            acc = t.get("acc", {})
            transitions.append(
                RaaTransition(
                    int(t["from"]),
                    _guard_from_json(t.get("guard", []), where),
                    _assignment_from_json(t.get("assign", []), where),
                    AccUpdate(
                        parse_rational(acc.get("a1", "0/1")),
                        parse_rational(acc.get("a2", "0/1")),
                        parse_rational(acc.get("b", "0/1")),
                    ),
                    int(t["to"]),
                    t["mov"],
                )
            )
        except KeyError as exc:
            raise ParseError(f"missing field {exc}", where) from exc
    try:
        return Raa(
            num_states=int(doc["states"]),
            num_registers=int(doc["registers"]),
            initial=int(doc["initial"]),
            accepting=frozenset(int(q) for q in doc["accepting"]),
            transitions=tuple(transitions),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"malformed automaton: {exc}") from exc


def parse(text: str):
    """Parse an automaton document, dispatching on its "kind"."""
    doc = _doc_from_text(text)
    kind = doc.get("kind")
    if kind == "dra":
        return dra_from_doc(doc)
    if kind == "raa":
        return raa_from_doc(doc)
    raise ParseError(f"unknown automaton kind {kind!r}", "kind")


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def dump(automaton, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(automaton) + "\n")

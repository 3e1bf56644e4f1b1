"""regrobust: register-automata extraction and local-robustness certification
over rational data sequences."""

from .automata import (
    Configuration,
    DeterminismViolation,
    Dra,
    MultipleEnabledTransitions,
    RunResult,
    Transition,
    accepts,
    check_determinism,
    complement,
    complete,
    run,
    split_disequalities,
)
from .guards import Assignment, GuardAtom, Operand, const, reg
from .raa import AccUpdate, Raa, RaaTransition, build_metric, evaluate, restrict_metric
from .rational import INF, ExtendedCost, format_rational, parse_rational, parse_sequence
from .serialize import parse, serialize

__all__ = [
    "AccUpdate",
    "Assignment",
    "Configuration",
    "DeterminismViolation",
    "Dra",
    "ExtendedCost",
    "GuardAtom",
    "INF",
    "MultipleEnabledTransitions",
    "Operand",
    "Raa",
    "RaaTransition",
    "RunResult",
    "Transition",
    "accepts",
    "build_metric",
    "check_determinism",
    "complement",
    "complete",
    "const",
    "evaluate",
    "format_rational",
    "parse",
    "parse_rational",
    "parse_sequence",
    "reg",
    "restrict_metric",
    "run",
    "serialize",
    "split_disequalities",
]

"""Exact rational arithmetic helpers.

All letters, constants, guards, costs and distances in this package are
`fractions.Fraction` values; no floating point enters any computation.
The only non-rational quantity is the extended cost infinity, modelled by
the :data:`INF` singleton below.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union


class ParseError(ValueError):
    """Raised when a rational literal or a document cannot be parsed."""

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


def parse_rational(text) -> Fraction:
    """Parse "num/den", integer, or decimal text into an exact Fraction.

    Decimal input is exact: "0.1" parses to 1/10, never to a float.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise ParseError(f"refusing float input {text!r}; pass a string or int")
    s = str(text).strip()
    if not s:
        raise ParseError("empty rational literal")
    try:
        if "/" in s:
            num, den = s.split("/", 1)
            return Fraction(int(num.strip()), int(den.strip()))
        return Fraction(s)  # handles integers and decimal strings exactly
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational literal {s!r}: {exc}") from exc


def format_rational(value: Fraction) -> str:
    """Canonical "num/den" text, reduced, denominator positive."""
    f = Fraction(value)
    return f"{f.numerator}/{f.denominator}"


def parse_sequence(text: str) -> tuple[Fraction, ...]:
    """Parse a comma-separated sequence such as "0,-1,5,3/2"."""
    items = [p for p in text.split(",") if p.strip()]
    if not items:
        raise ParseError("empty sequence")
    return tuple(parse_rational(p) for p in items)


class _Infinity:
    """Positive infinity for extended costs: absorbs addition, wins max."""

    __slots__ = ()

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is INF

    def __gt__(self, other):
        return other is not INF

    def __ge__(self, other):
        return True

    def __eq__(self, other):
        return other is INF

    def __hash__(self):
        return hash("regrobust-inf")

    def __add__(self, other):
        return INF

    __radd__ = __add__

    def __repr__(self):
        return "inf"


INF = _Infinity()

ExtendedCost = Union[Fraction, _Infinity]


def is_finite(cost: ExtendedCost) -> bool:
    return cost is not INF


def format_cost(cost: ExtendedCost) -> str:
    return "inf" if cost is INF else format_rational(cost)

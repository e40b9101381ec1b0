"""Exact rational values for pydantic models"""

import math
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Annotated, Any, Iterable

from pydantic import PlainSerializer, PlainValidator, SerializationInfo, WithJsonSchema


def parse_rational(value: Any) -> Fraction:
    """Parse ints, decimal strings, "p/q" strings and JSON numbers exactly.

    Floats are read through their shortest decimal repr, so ``0.1`` becomes
    ``1/10`` rather than the binary approximation.
    """
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite number {value!r}")
        return Fraction(Decimal(repr(value)))
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise ValueError(f"non-finite number {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        try:
            if "/" in text:
                return Fraction(text)
            parsed = Decimal(text)
        except (ValueError, ZeroDivisionError, InvalidOperation) as e:
            raise ValueError(f"invalid rational literal {value!r}") from e
        if not parsed.is_finite():
            raise ValueError(f"non-finite number {value!r}")
        return Fraction(parsed)
    raise ValueError(f"cannot read {type(value).__name__} as a rational")


def format_rational(value: Fraction) -> str:
    """Canonical string form: "3/10", "-2", "0"."""
    return str(Fraction(value))


def _serialize(value: Fraction, info: SerializationInfo) -> str | float:
    if info.context and info.context.get("float"):
        return float(value)
    return format_rational(value)


Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(_serialize),
    WithJsonSchema({"type": "string", "pattern": r"^-?\d+(\.\d+)?(/\d+)?$"}),
]


def positive_part(value: Fraction) -> Fraction:
    return value if value > 0 else Fraction(0)


def total(values: Iterable[Fraction]) -> Fraction:
    return sum(values, Fraction(0))

"""Arithmetic contexts with a fixed count of significant decimal digits.

All solver and residual arithmetic runs through a :class:`PrecisionContext`
so that every elementary operation (add, sub, mul, div, sqrt) is rounded to
the context's significant-digit count with round-to-nearest, ties-to-even.

The context is realized with the stdlib ``decimal`` module (libmpdec): a
``decimal.Context(prec=digits, rounding=ROUND_HALF_EVEN)`` delivers exactly
that contract, correctly rounding each operation result to ``digits``
significant decimal digits.  Values are plain ``decimal.Decimal`` objects
(:data:`MPValue` is an alias).  Contexts never touch the thread-local
decimal state, so solves at different digit settings can run concurrently.

Conversion policy: ``int``/``str``/``Decimal`` inputs convert exactly;
``float`` inputs convert via their exact binary expansion.  External data
is therefore carried at full precision until it is rounded into the active
context once, at the entry of a computation.
"""

from __future__ import annotations

import decimal
from decimal import Decimal
from typing import Optional, Union

from .errors import ConfigurationError, DomainError

MPValue = Decimal

Number = Union[Decimal, int, float, str]

MIN_DIGITS = 4

# Precision used for ground-truth generation and deviation reporting; far
# above the 10..20 digit study range so it acts as the reference arithmetic.
REFERENCE_DIGITS = 34


def _as_decimal(x: Number) -> Decimal:
    if isinstance(x, Decimal):
        return x
    if isinstance(x, (int, float, str)):
        return Decimal(x)
    raise DomainError(f"cannot interpret {type(x).__name__!r} as a numeric value")


class PrecisionContext:
    """Rounds every elementary operation to ``digits`` significant decimal digits.

    Immutable after creation and safe to share between concurrent workers.
    """

    __slots__ = ("digits", "_ctx")

    def __init__(self, digits: int):
        if isinstance(digits, bool) or not isinstance(digits, int):
            raise ConfigurationError(f"digits must be an integer, got {digits!r}")
        if digits < MIN_DIGITS:
            raise ConfigurationError(
                f"precision context requires at least {MIN_DIGITS} significant "
                f"digits, got {digits}"
            )
        self.digits = digits
        self._ctx = decimal.Context(
            prec=digits,
            rounding=decimal.ROUND_HALF_EVEN,
            Emin=-999999,
            Emax=999999,
            traps=[decimal.DivisionByZero, decimal.InvalidOperation, decimal.Overflow],
        )

    def __repr__(self) -> str:
        return f"PrecisionContext(digits={self.digits})"

    def round(self, x: Number) -> Decimal:
        """Round a value into this context (used once on external inputs)."""
        return self._ctx.plus(_as_decimal(x))

    def add(self, a: Number, b: Number) -> Decimal:
        return self._ctx.add(_as_decimal(a), _as_decimal(b))

    def sub(self, a: Number, b: Number) -> Decimal:
        return self._ctx.subtract(_as_decimal(a), _as_decimal(b))

    def mul(self, a: Number, b: Number) -> Decimal:
        return self._ctx.multiply(_as_decimal(a), _as_decimal(b))

    def div(self, a: Number, b: Number) -> Decimal:
        try:
            return self._ctx.divide(_as_decimal(a), _as_decimal(b))
        except (decimal.DivisionByZero, decimal.InvalidOperation):
            raise DomainError("div: division by zero") from None

    def sqrt(self, a: Number) -> Decimal:
        try:
            return self._ctx.sqrt(_as_decimal(a))
        except decimal.InvalidOperation:
            raise DomainError("sqrt: negative operand") from None

    # Vector helpers used throughout the solver; each elementary step rounds.

    def dot(self, xs, ys) -> Decimal:
        acc = Decimal(0)
        add, mul = self.add, self.mul
        for x, y in zip(xs, ys):
            acc = add(acc, mul(x, y))
        return acc

    def norm(self, xs) -> Decimal:
        return self.sqrt(self.dot(xs, xs))


_BINARY_KINDS = ("add", "sub", "mul", "div")


def make_context(digits: int) -> PrecisionContext:
    """Create a context governing arithmetic at ``digits`` significant digits."""
    return PrecisionContext(digits)


def reference_context() -> PrecisionContext:
    """Context for ground-truth generation and high-precision reporting."""
    return PrecisionContext(REFERENCE_DIGITS)


def op(ctx: PrecisionContext, kind: str, a: Number, b: Optional[Number] = None) -> Decimal:
    """Apply one elementary operation in ``ctx``.

    ``kind`` is one of ``add``, ``sub``, ``mul``, ``div``, ``sqrt``; ``b``
    must be omitted for ``sqrt`` and supplied otherwise.
    """
    if kind == "sqrt":
        if b is not None:
            raise DomainError("sqrt: takes a single operand")
        return ctx.sqrt(a)
    if kind in _BINARY_KINDS:
        if b is None:
            raise DomainError(f"{kind}: needs two operands")
        return getattr(ctx, kind)(a, b)
    raise DomainError(f"unknown operation kind {kind!r}")

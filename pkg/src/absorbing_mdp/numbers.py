"""Scalars with two backends: exact rationals, or floats with an error bound.

Every mass, weight, probability and integral in this library is a `Number`.
A Number is either exact (a `Fraction`, error identically zero) or approximate
(a float plus a nonnegative absolute error bound).  Arithmetic between exact
operands stays exact; as soon as a float operand enters, the result is
demoted to the float backend and the bound is propagated first-order, with a
small per-operation slop for rounding.  Exact values never degrade silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

# A few ulps above IEEE double precision, charged once per float operation.
_EPS = 2.0 ** -50

ExactLike = int | Fraction


def _slop(x: float) -> float:
    return _EPS * max(1.0, abs(x))


@dataclass(frozen=True)
class Number:
    value: Fraction | float
    err: Fraction | float = Fraction(0)

    def __post_init__(self):
        v, e = self.value, self.err
        if isinstance(v, int):
            v = Fraction(v)
            object.__setattr__(self, "value", v)
        if isinstance(v, Fraction):
            if e != 0:
                raise ValueError("exact value cannot carry an error bound")
            object.__setattr__(self, "err", Fraction(0))
        elif isinstance(v, float):
            if not math.isfinite(v):
                raise ValueError(f"non-finite value {v!r}")
            e = float(e)
            if not (e >= 0.0) or not math.isfinite(e):
                raise ValueError(f"bad error bound {e!r}")
            object.__setattr__(self, "err", e)
        else:
            raise TypeError(f"unsupported value type {type(v).__name__}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def exact(p, q=1) -> "Number":
        return Number(Fraction(p, q))

    @staticmethod
    def approx(v: float, err: float = 0.0) -> "Number":
        return Number(float(v), float(err))

    @staticmethod
    def lift(x) -> "Number":
        """Lift an int or Fraction to an exact Number.

        Floats are rejected on purpose: callers must say Number.approx to
        mark a value as inexact.
        """
        if isinstance(x, Number):
            return x
        if isinstance(x, (int, Fraction)):
            return Number(Fraction(x))
        raise TypeError(f"cannot lift {type(x).__name__} implicitly; use Number.approx")

    # -- predicates --------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def as_fraction(self) -> Fraction:
        if not self.is_exact:
            raise ValueError(f"not exact: {self!r}")
        return self.value

    def __float__(self) -> float:
        return float(self.value)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "Number":
        return Number.lift(other)

    def __add__(self, other) -> "Number":
        o = self._coerce(other)
        if self.is_exact and o.is_exact:
            return Number(self.value + o.value)
        v = float(self.value) + float(o.value)
        return Number(v, float(self.err) + float(o.err) + _slop(v))

    __radd__ = __add__

    def __neg__(self) -> "Number":
        return Number(-self.value, self.err)

    def __sub__(self, other) -> "Number":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Number":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "Number":
        o = self._coerce(other)
        if self.is_exact and o.is_exact:
            return Number(self.value * o.value)
        a, b = float(self.value), float(o.value)
        ea, eb = float(self.err), float(o.err)
        v = a * b
        return Number(v, abs(a) * eb + abs(b) * ea + ea * eb + _slop(v))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Number":
        o = self._coerce(other)
        if self.is_exact and o.is_exact:
            return Number(self.value / o.value)
        a, b = float(self.value), float(o.value)
        ea, eb = float(self.err), float(o.err)
        if abs(b) <= eb:
            raise ZeroDivisionError(f"divisor interval contains zero: {o!r}")
        v = a / b
        bound = (ea + abs(v) * eb) / (abs(b) - eb)
        return Number(v, bound + _slop(v))

    def __abs__(self) -> "Number":
        return Number(abs(self.value), self.err)

    # -- comparisons (by central value; certified variants below) ----------

    def __lt__(self, other):
        return self.value < self._coerce(other).value

    def __le__(self, other):
        return self.value <= self._coerce(other).value

    def __gt__(self, other):
        return self.value > self._coerce(other).value

    def __ge__(self, other):
        return self.value >= self._coerce(other).value

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Number.lift(other)
        if not isinstance(other, Number):
            return NotImplemented
        return (
            self.is_exact == other.is_exact
            and self.value == other.value
            and self.err == other.err
        )

    def __hash__(self):
        return hash((self.is_exact, self.value, self.err))

    def certainly_ge(self, c) -> bool:
        """True only if the whole uncertainty interval sits at or above c."""
        c = Number.lift(c).value
        return self.value - self.err >= c

    def certainly_le(self, c) -> bool:
        c = Number.lift(c).value
        return self.value + self.err <= c

    def within(self, target, tol) -> bool:
        """|self - target| <= tol, including the tracked error bound."""
        gap = abs(self - Number.lift(target))
        return float(gap.value) + float(gap.err) <= float(tol)

    def __repr__(self):
        if self.is_exact:
            return f"Number({self.value})"
        return f"Number({self.value!r}, err={self.err!r})"


ZERO = Number.exact(0)
ONE = Number.exact(1)


def nsum(items) -> Number:
    total = ZERO
    for it in items:
        total = total + it
    return total


def format_number(n: Number) -> str:
    """Exact values render as 'p/q'; approximate values as a decimal literal."""
    if n.is_exact:
        f = n.as_fraction()
        return f"{f.numerator}/{f.denominator}"
    return repr(float(n.value))


def parse_number(s: str) -> Number:
    s = s.strip()
    if "/" in s:
        p, q = s.split("/")
        return Number.exact(int(p), int(q))
    try:
        return Number.exact(int(s))
    except ValueError:
        return Number.approx(float(s))

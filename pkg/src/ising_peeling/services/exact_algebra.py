"""Exact arithmetic in Q and Q(sqrt7), precision-tracked reals and the critical constants."""

from __future__ import annotations

import numbers
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache, total_ordering
from typing import Any, Dict, Union

import mpmath


Rational = Fraction

DEFAULT_PRECISION_BITS = 128
MIN_PRECISION_BITS = 16

_SURD_PATTERN = re.compile(
    r"^\s*(?P<a>[+-]?\d+(?:/\d+)?)\s*(?P<sign>[+-])\s*(?P<b>\d+(?:/\d+)?)\*sqrt7\s*$"
)


def _to_fraction(x: Any) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, numbers.Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"Cannot convert {type(x).__name__} to an exact rational")


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


@total_ordering
class QuadSurd:
    """Exact element ``a + b*sqrt(7)`` of Q(sqrt7) with rational ``a`` and ``b``.

    Instances are immutable. Integers and Fractions coerce on both sides of
    every arithmetic operator; floats do not (use ``surd_eval`` instead).
    """

    def __init__(self, a: Any = 0, b: Any = 0) -> None:
        self._a: Fraction = _to_fraction(a)
        self._b: Fraction = _to_fraction(b)

    @classmethod
    def _make(cls, a: Fraction, b: Fraction) -> QuadSurd:
        obj = object.__new__(cls)
        obj._a = a
        obj._b = b
        return obj

    @property
    def a(self) -> Fraction:
        return self._a

    @property
    def b(self) -> Fraction:
        return self._b

    @classmethod
    def from_int(cls, x: int) -> QuadSurd:
        return cls._make(Fraction(x), Fraction(0))

    @classmethod
    def sqrt7(cls) -> QuadSurd:
        return cls._make(Fraction(0), Fraction(1))

    @classmethod
    def coerce(cls, x: Any) -> QuadSurd:
        if isinstance(x, QuadSurd):
            return x
        return cls._make(_to_fraction(x), Fraction(0))

    @classmethod
    def parse(cls, text: str) -> QuadSurd:
        """Parses the ``"a_num/a_den + b_num/b_den*sqrt7"`` form produced by ``str``."""
        match = _SURD_PATTERN.match(text)
        if not match:
            raise ValueError(f"Not a Q(sqrt7) literal: {text!r}")
        b = Fraction(match.group("b"))
        if match.group("sign") == "-":
            b = -b
        return cls(Fraction(match.group("a")), b)

    def __repr__(self) -> str:
        return f"QuadSurd({self._a!r}, {self._b!r})"

    def __str__(self) -> str:
        a, b = self._a, self._b
        sign = "-" if b < 0 else "+"
        return (
            f"{a.numerator}/{a.denominator} {sign} "
            f"{abs(b.numerator)}/{b.denominator}*sqrt7"
        )

    def is_rational(self) -> bool:
        return self._b == 0

    def __bool__(self) -> bool:
        return bool(self._a) or bool(self._b)

    def __hash__(self) -> int:
        if self._b == 0:
            return hash(self._a)
        return hash((self._a, self._b))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, QuadSurd):
            return self._a == other._a and self._b == other._b
        if isinstance(other, numbers.Rational):
            return self._b == 0 and self._a == _to_fraction(other)
        return NotImplemented

    def __lt__(self, other: Any) -> bool:
        if not isinstance(other, (QuadSurd, numbers.Rational)):
            return NotImplemented
        return surd_sign(self - other) < 0

    def __add__(self, other: Any) -> QuadSurd:
        if isinstance(other, QuadSurd):
            return QuadSurd._make(self._a + other._a, self._b + other._b)
        if isinstance(other, numbers.Rational):
            return QuadSurd._make(self._a + _to_fraction(other), self._b)
        return NotImplemented

    def __radd__(self, other: Any) -> QuadSurd:
        return self + other

    def __neg__(self) -> QuadSurd:
        return QuadSurd._make(-self._a, -self._b)

    def __pos__(self) -> QuadSurd:
        return self

    def __sub__(self, other: Any) -> QuadSurd:
        if isinstance(other, (QuadSurd, numbers.Rational)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other: Any) -> QuadSurd:
        return (-self) + other

    def __mul__(self, other: Any) -> QuadSurd:
        if isinstance(other, QuadSurd):
            a = self._a * other._a + 7 * self._b * other._b
            b = self._a * other._b + self._b * other._a
            return QuadSurd._make(a, b)
        if isinstance(other, numbers.Rational):
            f = _to_fraction(other)
            return QuadSurd._make(self._a * f, self._b * f)
        return NotImplemented

    def __rmul__(self, other: Any) -> QuadSurd:
        return self * other

    def conj(self) -> QuadSurd:
        return QuadSurd._make(self._a, -self._b)

    @cached_property
    def norm(self) -> Fraction:
        return self._a * self._a - 7 * self._b * self._b

    @cached_property
    def inv(self) -> QuadSurd:
        n = self.norm
        if n == 0:
            raise ZeroDivisionError("QuadSurd division by zero")
        return QuadSurd._make(self._a / n, -self._b / n)

    def __truediv__(self, other: Any) -> QuadSurd:
        if isinstance(other, QuadSurd):
            return self * other.inv
        if isinstance(other, numbers.Rational):
            f = _to_fraction(other)
            if f == 0:
                raise ZeroDivisionError("QuadSurd division by zero")
            return QuadSurd._make(self._a / f, self._b / f)
        return NotImplemented

    def __rtruediv__(self, other: Any) -> QuadSurd:
        if isinstance(other, numbers.Rational):
            return QuadSurd.coerce(other) * self.inv
        return NotImplemented

    def __pow__(self, other: int) -> QuadSurd:
        if other < 0:
            return self.inv ** (-other)
        result = QuadSurd._make(Fraction(1), Fraction(0))
        base = self
        n = other
        while n > 0:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __float__(self) -> float:
        return float(surd_eval(self, 64).value)

    def to_mpf(self, precision_bits: int = DEFAULT_PRECISION_BITS) -> mpmath.mpf:
        return surd_eval(self, precision_bits).value


@dataclass(frozen=True)
class PrecReal:
    """An mpmath binary float tagged with the precision it was rounded to."""

    value: mpmath.mpf
    precision_bits: int

    def __float__(self) -> float:
        return float(self.value)

    def decimal(self, digits: int = 0) -> str:
        if digits <= 0:
            digits = max(1, int(self.precision_bits * 0.30103))
        return mpmath.nstr(self.value, digits)

    def __str__(self) -> str:
        return self.decimal()


def surd_sign(x: Union[QuadSurd, Fraction, int]) -> int:
    """Exact sign of ``a + b*sqrt(7)`` without floating point."""
    x = QuadSurd.coerce(x)
    sa = _sign(x.a)
    sb = _sign(x.b)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    # opposite signs: the larger of a^2 and 7b^2 wins
    return sa if x.norm > 0 else sb


def surd_eval(x: Union[QuadSurd, Fraction, int], precision_bits: int) -> PrecReal:
    """Rounds ``a + b*sqrt(7)`` to ``precision_bits`` bits (relative error below 2^(1-bits)).

    When ``a`` and ``b`` have opposite signs the value is computed as
    ``norm / (a - b*sqrt7)`` so that no cancellation occurs.
    """
    if precision_bits < MIN_PRECISION_BITS:
        raise ValueError(
            f"precision_bits must be >= {MIN_PRECISION_BITS}, got {precision_bits}"
        )
    x = QuadSurd.coerce(x)
    with mpmath.workprec(precision_bits + 16):
        a = mpmath.mpf(x.a.numerator) / x.a.denominator
        b = mpmath.mpf(x.b.numerator) / x.b.denominator
        root = mpmath.sqrt(7)
        if _sign(x.a) * _sign(x.b) < 0:
            n = mpmath.mpf(x.norm.numerator) / x.norm.denominator
            value = n / (a - b * root)
        else:
            value = a + b * root
    with mpmath.workprec(precision_bits):
        rounded = +value
    return PrecReal(value=rounded, precision_bits=precision_bits)


@dataclass(frozen=True)
class CriticalConstants:
    """Exact constants of the critical point (nu_c, t_c).

    t_c and u_c themselves are not in Q(sqrt7); only their square, product
    and ratio are stored. ``t_c`` and ``u_c`` return rounded reals.
    """

    nu_c: QuadSurd
    t_c_squared: QuadSurd
    t_over_u: QuadSurd
    t_times_u: QuadSurd
    mu_squared: Fraction
    c_infty_squared: Fraction

    def u_c_squared(self) -> QuadSurd:
        return self.t_times_u / self.t_over_u

    def t_c(self, precision_bits: int = DEFAULT_PRECISION_BITS) -> PrecReal:
        sq = surd_eval(self.t_c_squared, precision_bits + 8).value
        with mpmath.workprec(precision_bits):
            return PrecReal(+mpmath.sqrt(sq), precision_bits)

    def u_c(self, precision_bits: int = DEFAULT_PRECISION_BITS) -> PrecReal:
        sq = surd_eval(self.u_c_squared(), precision_bits + 8).value
        with mpmath.workprec(precision_bits):
            return PrecReal(+mpmath.sqrt(sq), precision_bits)

    def mu(self) -> QuadSurd:
        """Drift 1/(4*sqrt7) = sqrt7/28."""
        return QuadSurd(0, Fraction(1, 28))

    def c_infty(self) -> QuadSurd:
        """1/(3*sqrt7) = sqrt7/21."""
        return QuadSurd(0, Fraction(1, 21))


@lru_cache(maxsize=1)
def constants_critical() -> CriticalConstants:
    """Returns the exact critical constants."""
    s = QuadSurd(7, 1)  # 7 + sqrt7
    t_c_squared = QuadSurd(10) / (64 * s**3)
    t_over_u = QuadSurd(5) / (6 * s)
    t_times_u = Fraction(6, 5) * s * t_c_squared
    return CriticalConstants(
        nu_c=QuadSurd(1, 2),
        t_c_squared=t_c_squared,
        t_over_u=t_over_u,
        t_times_u=t_times_u,
        mu_squared=Fraction(1, 112),
        c_infty_squared=Fraction(1, 63),
    )


def surd_to_json(x: Union[QuadSurd, Fraction, int]) -> Dict[str, int]:
    x = QuadSurd.coerce(x)
    return {
        "a_num": x.a.numerator,
        "a_den": x.a.denominator,
        "b_num": x.b.numerator,
        "b_den": x.b.denominator,
    }


def surd_from_json(data: Dict[str, int]) -> QuadSurd:
    return QuadSurd(
        Fraction(data["a_num"], data["a_den"]), Fraction(data["b_num"], data["b_den"])
    )


def constant_record(
    name: str, x: Union[QuadSurd, Fraction, int], precision_bits: int
) -> Dict[str, Any]:
    """One row of the ``constants`` dump."""
    return {
        "name": name,
        "exact": surd_to_json(x),
        "decimal": surd_eval(x, precision_bits).decimal(),
        "precision_bits": precision_bits,
    }

"""Truncated power series and univariate rational functions over Q(sqrt7).

Exact series hold ``Fraction`` or ``QuadSurd`` coefficients; the ``float_*``
helpers are the numpy counterparts used for long numeric tables.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Callable, List, Optional, Sequence

import mpmath
import numpy as np

from ising_peeling.services.exact_algebra import QuadSurd


class PoleError(ZeroDivisionError):
    """A rational function was evaluated at a root of its denominator."""


# ==================== Polynomials (coefficient lists, low -> high) ====================


def poly_trim(coeffs: Sequence[Any]) -> List[Any]:
    out = list(coeffs)
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def poly_add(p: Sequence[Any], q: Sequence[Any]) -> List[Any]:
    n = max(len(p), len(q))
    out = []
    for i in range(n):
        a = p[i] if i < len(p) else 0
        b = q[i] if i < len(q) else 0
        out.append(a + b)
    return poly_trim(out)


def poly_scale(p: Sequence[Any], c: Any) -> List[Any]:
    return poly_trim([c * x for x in p])


def poly_mul(p: Sequence[Any], q: Sequence[Any]) -> List[Any]:
    out: List[Any] = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return poly_trim(out)


def poly_pow(p: Sequence[Any], n: int) -> List[Any]:
    result: List[Any] = [1]
    base = list(p)
    while n > 0:
        if n & 1:
            result = poly_mul(result, base)
        base = poly_mul(base, base)
        n >>= 1
    return result


def poly_eval(p: Sequence[Any], x: Any) -> Any:
    acc: Any = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_derivative(p: Sequence[Any]) -> List[Any]:
    if len(p) <= 1:
        return [0]
    return poly_trim([i * p[i] for i in range(1, len(p))])


def poly_taylor_shift(p: Sequence[Any], x0: Any) -> List[Any]:
    """Coefficients of ``e -> p(x0 + e)``."""
    out = list(p)
    n = len(out)
    # repeated synthetic division
    for i in range(n):
        for j in range(n - 2, i - 1, -1):
            out[j] = out[j] + x0 * out[j + 1]
    return poly_trim(out)


def valuation(coeffs: Sequence[Any]) -> int:
    """Index of the first nonzero coefficient (``len`` if all vanish)."""
    for i, c in enumerate(coeffs):
        if c != 0:
            return i
    return len(coeffs)


# ==================== Exact truncated power series ====================


class PowerSeriesQ7:
    """Truncated power series ``c_0 + c_1 w + ... + c_{order-1} w^(order-1)``.

    Coefficients are exact (``Fraction`` or ``QuadSurd``); results of binary
    operations are truncated to the shorter operand.
    """

    def __init__(self, coeffs: Sequence[Any], order: Optional[int] = None) -> None:
        order = len(coeffs) if order is None else order
        data = list(coeffs[:order])
        data.extend([Fraction(0)] * (order - len(data)))
        self._c: List[Any] = data

    @classmethod
    def from_polynomial(cls, poly: Sequence[Any], order: int) -> PowerSeriesQ7:
        return cls(list(poly), order)

    @classmethod
    def variable(cls, order: int) -> PowerSeriesQ7:
        return cls([Fraction(0), Fraction(1)], order)

    @property
    def order(self) -> int:
        return len(self._c)

    @property
    def coefficients(self) -> List[Any]:
        return list(self._c)

    def __len__(self) -> int:
        return len(self._c)

    def __getitem__(self, i: int) -> Any:
        return self._c[i]

    def __iter__(self):
        return iter(self._c)

    def __repr__(self) -> str:
        head = ", ".join(str(c) for c in self._c[:4])
        return f"PowerSeriesQ7([{head}, ...], order={self.order})"

    def truncate(self, order: int) -> PowerSeriesQ7:
        return PowerSeriesQ7(self._c, order)

    def _coerce(self, other: Any) -> PowerSeriesQ7:
        if isinstance(other, PowerSeriesQ7):
            return other
        return PowerSeriesQ7([other], self.order)

    def __add__(self, other: Any) -> PowerSeriesQ7:
        other = self._coerce(other)
        n = min(self.order, other.order)
        return PowerSeriesQ7([self._c[i] + other._c[i] for i in range(n)])

    __radd__ = __add__

    def __neg__(self) -> PowerSeriesQ7:
        return PowerSeriesQ7([-c for c in self._c])

    def __sub__(self, other: Any) -> PowerSeriesQ7:
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> PowerSeriesQ7:
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> PowerSeriesQ7:
        if not isinstance(other, PowerSeriesQ7):
            return PowerSeriesQ7([c * other for c in self._c])
        n = min(self.order, other.order)
        a, b = self._c, other._c
        out: List[Any] = [Fraction(0)] * n
        for i in range(n):
            ai = a[i]
            if ai == 0:
                continue
            for j in range(n - i):
                bj = b[j]
                if bj != 0:
                    out[i + j] = out[i + j] + ai * bj
        return PowerSeriesQ7(out)

    def __rmul__(self, other: Any) -> PowerSeriesQ7:
        return self * other

    def __pow__(self, n: int) -> PowerSeriesQ7:
        result = PowerSeriesQ7([Fraction(1)], self.order)
        base = self
        while n > 0:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other: Any) -> PowerSeriesQ7:
        if not isinstance(other, PowerSeriesQ7):
            return PowerSeriesQ7([c / other for c in self._c])
        return series_divide(self, other)

    def shift_down(self, k: int = 1) -> PowerSeriesQ7:
        """Divides by ``w^k``; the dropped coefficients must vanish."""
        if any(c != 0 for c in self._c[:k]):
            raise ValueError(f"series is not divisible by w^{k}")
        return PowerSeriesQ7(self._c[k:])

    def shift_up(self, k: int = 1) -> PowerSeriesQ7:
        return PowerSeriesQ7([Fraction(0)] * k + self._c[: self.order - k])

    def derivative(self) -> PowerSeriesQ7:
        return PowerSeriesQ7([i * self._c[i] for i in range(1, self.order)])

    def partial_sums(self) -> PowerSeriesQ7:
        out: List[Any] = []
        acc: Any = Fraction(0)
        for c in self._c:
            acc = acc + c
            out.append(acc)
        return PowerSeriesQ7(out)

    def compose_polynomial(self, poly: Sequence[Any]) -> PowerSeriesQ7:
        """``poly(self)`` by Horner's rule (``self`` may have a constant term)."""
        acc = PowerSeriesQ7([Fraction(0)], self.order)
        for c in reversed(poly):
            acc = acc * self + c
        return acc

    def map(self, fn: Callable[[Any], Any]) -> PowerSeriesQ7:
        return PowerSeriesQ7([fn(c) for c in self._c])

    def to_float_array(self) -> np.ndarray:
        return np.array([float(c) for c in self._c], dtype=np.float64)


def series_divide(num: PowerSeriesQ7, den: PowerSeriesQ7) -> PowerSeriesQ7:
    """Quotient of two series with invertible constant term of ``den``."""
    if den[0] == 0:
        raise ZeroDivisionError("series denominator has zero constant term")
    n = min(num.order, den.order)
    inv0 = den[0].inv if isinstance(den[0], QuadSurd) else 1 / Fraction(den[0])
    out: List[Any] = []
    for k in range(n):
        acc = num[k]
        for j in range(1, k + 1):
            dj = den[j]
            if dj != 0:
                acc = acc - dj * out[k - j]
        out.append(acc * inv0)
    return PowerSeriesQ7(out)


def revert_polynomial(poly: Sequence[Any], order: int) -> PowerSeriesQ7:
    """Compositional inverse ``g`` of ``f = poly`` (``f(0) = 0``): ``f(g(w)) = w``.

    Coefficients are found one at a time: with ``g_0 = 0`` the coefficient of
    ``w^n`` in ``g^j`` (``j >= 2``) only involves ``g_1 .. g_{n-1}``.
    """
    if poly[0] != 0 or len(poly) < 2 or poly[1] == 0:
        raise ValueError("reversion needs f(0) = 0 and f'(0) != 0")
    degree = len(poly) - 1
    g: List[Any] = [Fraction(0)] * order
    powers: List[List[Any]] = [[Fraction(0)] * order for _ in range(degree + 1)]
    for n in range(1, order):
        for j in range(2, degree + 1):
            lower = powers[j - 1] if j > 2 else g
            acc: Any = Fraction(0)
            for i in range(1, n):
                if g[i] != 0 and lower[n - i] != 0:
                    acc = acc + g[i] * lower[n - i]
            powers[j][n] = acc
        rhs: Any = Fraction(1 if n == 1 else 0)
        for j in range(2, degree + 1):
            if poly[j] != 0:
                rhs = rhs - poly[j] * powers[j][n]
        g[n] = rhs / poly[1]
    return PowerSeriesQ7(g)


# ==================== Rational functions of one variable ====================


class RationalFunction1V:
    """``numerator(x) / denominator(x)`` with exact coefficients."""

    def __init__(self, numerator: Sequence[Any], denominator: Sequence[Any] = (1,)) -> None:
        den = poly_trim(denominator)
        if all(c == 0 for c in den):
            raise ValueError("denominator is identically zero")
        # content normalisation: make the leading denominator coefficient 1
        lead = _exact(den[-1])
        self.numerator = poly_trim([_exact(c) / lead for c in numerator])
        self.denominator = [_exact(c) / lead for c in den]

    def __repr__(self) -> str:
        return f"RationalFunction1V({self.numerator}, {self.denominator})"

    def __call__(self, x: Any) -> Any:
        return self.evaluate(x)

    def evaluate(self, x: Any) -> Any:
        d = poly_eval(self.denominator, x)
        if d == 0:
            raise PoleError(f"pole of rational function at {x}")
        return poly_eval(self.numerator, x) / d

    def evaluate_mp(self, x: mpmath.mpf, precision_bits: int) -> mpmath.mpf:
        """Evaluates at an mpmath real with exact coefficients rounded once."""
        with mpmath.workprec(precision_bits + 16):
            num = [_to_mp(c, precision_bits + 16) for c in self.numerator]
            den = [_to_mp(c, precision_bits + 16) for c in self.denominator]
            d = poly_eval(den, x)
            if d == 0:
                raise PoleError(f"pole of rational function at {x}")
            value = poly_eval(num, x) / d
        with mpmath.workprec(precision_bits):
            return +value

    def derivative(self) -> RationalFunction1V:
        n, d = self.numerator, self.denominator
        top = poly_add(poly_mul(poly_derivative(n), d), poly_scale(poly_mul(n, poly_derivative(d)), -1))
        return RationalFunction1V(top, poly_mul(d, d))

    def compose_series(self, h: PowerSeriesQ7) -> PowerSeriesQ7:
        return series_divide(h.compose_polynomial(self.numerator), h.compose_polynomial(self.denominator))


def _exact(c: Any) -> Any:
    return c if isinstance(c, QuadSurd) else Fraction(c)


def _to_mp(c: Any, precision_bits: int) -> mpmath.mpf:
    if isinstance(c, QuadSurd):
        return c.to_mpf(precision_bits)
    c = Fraction(c)
    return mpmath.mpf(c.numerator) / c.denominator


# ==================== Float series (numpy) ====================


def float_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(len(a), len(b))
    return np.convolve(a[:n], b[:n])[:n]


def float_compose_polynomial(poly: Sequence[float], h: np.ndarray) -> np.ndarray:
    acc = np.zeros(len(h))
    for c in reversed(poly):
        acc = float_mul(acc, h)
        acc[0] += c
    return acc


def float_divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Series quotient by forward substitution (stable when 1/den is analytic on the closed unit disk)."""
    n = min(len(num), len(den))
    out = np.zeros(n)
    d0 = den[0]
    for k in range(n):
        acc = num[k]
        if k:
            acc -= np.dot(den[1 : k + 1], out[k - 1 :: -1])
        out[k] = acc / d0
    return out


def float_revert_polynomial(poly: Sequence[float], order: int) -> np.ndarray:
    """numpy version of ``revert_polynomial``."""
    degree = len(poly) - 1
    g = np.zeros(order)
    powers = np.zeros((degree + 1, order))
    for n in range(1, order):
        for j in range(2, degree + 1):
            lower = powers[j - 1] if j > 2 else g
            powers[j, n] = np.dot(g[1:n], lower[n - 1 : 0 : -1])
        rhs = 1.0 if n == 1 else 0.0
        for j in range(2, degree + 1):
            rhs -= poly[j] * powers[j, n]
        g[n] = rhs / poly[1]
    return g

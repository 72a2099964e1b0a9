"""Tutte recurrence for z_{p,q}(nu, t) and checks of the derived functional equations.

The table holds ``[t^n] z_{p,q}`` for ``0 <= n <= N``. Layer ``n`` only
depends on layers ``< n``; the convolutions of a layer are done as
Toeplitz matrix products so that every backend (python ints, floats)
goes through the same numpy code path.

Backends:

* ``poly``     exact nu-polynomials (Kronecker substitution nu = 2^K on ints)
* ``rational`` exact values at a rational nu = a/b, stored as ints
               ``z * b^E`` with ``E = (3n + p + q) / 2`` the edge count
* ``surd``     exact values at a Q(sqrt7) nu (polynomial table, then Horner)
* ``float``    float64 values rescaled by ``s^n r^(p+q)``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from ising_peeling.services.exact_algebra import (
    PrecReal,
    QuadSurd,
    constants_critical,
)


EXPONENT_CRITICAL = Fraction(7, 3)
EXPONENT_GENERIC = Fraction(5, 2)
TAIL_FIT_POINTS = 20


class ExactCapExceeded(ValueError):
    """Requested exact table beyond the configured exact cap."""


class MemoryBudgetExceeded(RuntimeError):
    """Requested table would not fit in the configured memory budget."""


class NuMismatch(ValueError):
    """A table evaluated at one nu was queried at another."""


# ==================== nu-polynomials ====================


class NuPolynomial:
    """Polynomial in nu with rational coefficients, trailing zeros trimmed."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: Sequence[Any] = (0,)) -> None:
        coeffs = [Fraction(c) for c in coefficients] or [Fraction(0)]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients: Tuple[Fraction, ...] = tuple(coeffs)

    @classmethod
    def zero(cls) -> NuPolynomial:
        return cls((0,))

    @classmethod
    def from_kronecker(cls, value: int, bits: int, signed: bool = False) -> NuPolynomial:
        """Decodes ``value = P(2^bits)`` into the coefficients of ``P``.

        With ``signed`` the digits are read in balanced form, which is exact
        as long as every coefficient has magnitude below ``2^(bits-1)``.
        """
        base = 1 << bits
        half = base >> 1
        digits: List[int] = []
        v = int(value)
        while v:
            d = v & (base - 1)
            if signed and d >= half:
                d -= base
            digits.append(d)
            v = (v - d) >> bits
        return cls(digits or [0])

    @property
    def degree(self) -> int:
        if self.is_zero():
            return -1
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return len(self.coefficients) == 1 and self.coefficients[0] == 0

    def max_abs(self) -> Fraction:
        return max(abs(c) for c in self.coefficients)

    def evaluate(self, nu: Any) -> Any:
        acc: Any = 0
        for c in reversed(self.coefficients):
            acc = acc * nu + c
        return acc

    def evaluate_int(self, nu: int) -> int:
        acc = 0
        for c in reversed(self.coefficients):
            if c.denominator != 1:
                raise ValueError(f"non-integral coefficient {c} in {self}")
            acc = acc * nu + c.numerator
        return acc

    def homogenize(self, a: int, b: int, degree: int) -> int:
        """``b^degree * P(a/b)`` as an int (``degree`` must bound the degree)."""
        acc = 0
        for i, c in enumerate(self.coefficients):
            if c:
                acc += c.numerator * a**i * b ** (degree - i)
        return acc

    def __add__(self, other: Any) -> NuPolynomial:
        other = _as_nupoly(other)
        n = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (Fraction(0),) * (n - len(self.coefficients))
        b = other.coefficients + (Fraction(0),) * (n - len(other.coefficients))
        return NuPolynomial([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self) -> NuPolynomial:
        return NuPolynomial([-c for c in self.coefficients])

    def __sub__(self, other: Any) -> NuPolynomial:
        return self + (-_as_nupoly(other))

    def __mul__(self, other: Any) -> NuPolynomial:
        other = _as_nupoly(other)
        a = np.array(self.coefficients, dtype=object)
        b = np.array(other.coefficients, dtype=object)
        return NuPolynomial(list(np.convolve(a, b)))

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if isinstance(other, NuPolynomial):
            return self.coefficients == other.coefficients
        if isinstance(other, (int, Fraction)):
            return self.coefficients == (Fraction(other),)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def __repr__(self) -> str:
        return f"NuPolynomial({self})"

    def __str__(self) -> str:
        terms = []
        for i, c in enumerate(self.coefficients):
            if c == 0 and len(self.coefficients) > 1:
                continue
            mono = "" if i == 0 else ("v" if i == 1 else f"v^{i}")
            text = str(c) if not mono else f"{c}*{mono}"
            terms.append(text)
        return "+".join(terms).replace("+-", "-")


def _as_nupoly(x: Any) -> NuPolynomial:
    return x if isinstance(x, NuPolynomial) else NuPolynomial((x,))


# ==================== Coefficient table ====================


@dataclass
class CoeffTable:
    """``[t^n] z_{p,q}`` for ``n <= n_max`` and ``p + q <= n + 2``.

    ``data[p, q, n]`` holds backend-specific entries; use ``coeff`` to read
    values. ``scale`` is ``(s, r)`` for the float backend and ``(a, b)`` with
    ``nu = a/b`` for the rational backend.
    """

    mode: str
    backend: str
    n_max: int
    nu: Any
    data: np.ndarray
    scale: Tuple[Any, Any] = (1, 1)
    critical: bool = False
    stats: Dict[str, Any] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.data.shape[0]

    def in_support(self, p: int, q: int, n: int) -> bool:
        return (
            0 <= p < self.size
            and 0 <= q < self.size
            and p + q <= n + 2
            and (3 * n + p + q) % 2 == 0
        )

    def zero(self) -> Any:
        if self.backend == "poly":
            return NuPolynomial.zero()
        if self.backend == "float":
            return mpmath.mpf(0)
        if self.backend == "surd":
            return QuadSurd(0)
        return Fraction(0)

    def coeff(self, p: int, q: int, n: int) -> Any:
        return coeff(self, p, q, n)

    def scaled(self, p: int, q: int, n: int) -> float:
        """Float backend only: ``[t^n] z_{p,q} * s^n * r^(p+q)``."""
        if self.backend != "float":
            raise ValueError("scaled values exist only for float tables")
        if not self.in_support(p, q, n) or n > self.n_max:
            return 0.0
        return float(self.data[p, q, n])

    def homogenized(self, p: int, q: int, n: int) -> int:
        """Rational backend only: ``[t^n] z_{p,q} * b^E`` as an exact int."""
        if self.backend != "rational":
            raise ValueError("homogenized ints exist only for rational tables")
        if not self.in_support(p, q, n) or n > self.n_max:
            return 0
        return int(self.data[p, q, n])

    def replace_entry(self, p: int, q: int, n: int, value: Any) -> None:
        """Overwrites one stored entry (used to inject faults in checks)."""
        if self.backend == "poly":
            value = _as_nupoly(value)
        self.data[p, q, n] = value


def _estimate_bytes(size: int, n_max: int, backend: str) -> int:
    per_entry = 8 if backend == "float" else 96
    return size * size * (n_max + 1) * per_entry


def _toeplitz_lower(f: np.ndarray) -> np.ndarray:
    """``L[i, j] = f[i - j]`` for ``i >= j`` else 0."""
    s = len(f)
    idx = np.subtract.outer(np.arange(s), np.arange(s))
    idx[idx < 0] = s
    padded = np.concatenate([f, np.zeros(1, dtype=f.dtype)])
    return padded[idx]


def _run_recurrence(
    z: np.ndarray,
    n_max: int,
    alpha: Any,
    beta: Any,
    verbose: bool = False,
    label: str = "",
) -> None:
    """Fills layers ``1..n_max`` of ``z`` in place (layer 0 already seeded).

    For ``q >= 0`` the new entry ``z[p, q+1, n]`` is
    ``alpha * (A + B + C - corr1) + beta * (D + E + F - corr2)`` where the
    six terms are the t-coefficient ``n - 1`` of the sums of the recurrence.
    Entries with ``q = 0`` follow by the symmetry ``z_{p,0} = z_{0,p}``.
    """
    dtype = z.dtype
    for n in range(1, n_max + 1):
        c = n - 1
        s = n + 2
        x = np.array(z[2 : s + 2, 0:s, c], dtype=dtype)
        y = np.array(z[0:s, 2 : s + 2, c], dtype=dtype)
        for n1 in range(c + 1):
            m = c - n1
            k = min(s, m + 2)
            lower = _toeplitz_lower(z[1 : s + 1, 0, n1])
            x[:, :k] += lower[:, :k] @ z[1 : k + 1, 0:k, m]
            upper = _toeplitz_lower(z[1, 0:s, n1]).T
            x[:k, :] += z[1 : k + 1, 0:k, m] @ upper[:k, :]
            x -= np.outer(z[1 : s + 1, 0, n1], z[1, 0:s, m])
            upper = _toeplitz_lower(z[0, 1 : s + 1, n1]).T
            y[:k, :] += z[0:k, 1 : k + 1, m] @ upper[:k, :]
            lower = _toeplitz_lower(z[0:s, 1, n1])
            y[:, :k] += lower[:, :k] @ z[0:k, 1 : k + 1, m]
            y -= np.outer(z[0:s, 1, n1], z[0, 1 : s + 1, m])
        layer = x * alpha + y * beta
        pp, qq = np.indices((s, s))
        layer[pp + qq > n + 1] = 0
        z[0:s, 1 : s + 1, n] = layer
        z[1:, 0, n] = z[0, 1:, n]
        if verbose and (n == 1 or n % 25 == 0 or n == n_max):
            print(f"   [{label}] layer {n}/{n_max}")


def _seeded(size: int, n_max: int, dtype: Any, one: Any, z11: Any, z02: Any) -> np.ndarray:
    z = np.zeros((size, size, n_max + 1), dtype=dtype)
    z[0, 0, 0] = one
    z[1, 1, 0] = z11
    z[0, 2, 0] = z02
    z[2, 0, 0] = z02
    return z


def _integer_table(n_max: int, a: int, b: int, verbose: bool) -> np.ndarray:
    size = n_max + 4
    z = _seeded(size, n_max, object, 1, b, a)
    _run_recurrence(z, n_max, b, a, verbose=verbose, label=f"nu={a}/{b}")
    return z


def _float_table(
    n_max: int, nu: float, s: float, r: float, verbose: bool
) -> np.ndarray:
    size = n_max + 4
    z = _seeded(size, n_max, np.float64, 1.0, r * r, nu * r * r)
    _run_recurrence(z, n_max, s / r, nu * s / r, verbose=verbose, label="float")
    return z


def _estimate_float_scale(nu: float, exponent: Fraction) -> float:
    """Radius of convergence in t from a short unscaled run (ratio method)."""
    n0 = 31
    z = _float_table(n0, nu, 1.0, 1.0, verbose=False)
    c_lo, c_hi = z[1, 0, n0 - 2], z[1, 0, n0]
    ratio = (c_lo / c_hi) * ((n0 / (n0 - 2)) ** float(-exponent))
    return float(np.sqrt(ratio))


def _is_critical(nu: Any) -> bool:
    return isinstance(nu, QuadSurd) and nu == constants_critical().nu_c


def build_coeff_table(
    n_max: int,
    mode: str = "exact",
    nu: Any = None,
    config: Optional[Dict[str, Any]] = None,
    backend: str = "auto",
    verbose: bool = False,
) -> CoeffTable:
    """Runs the Tutte recurrence up to face order ``n_max``.

    Args:
        n_max: Largest t-order.
        mode: ``"exact"`` (nu-polynomials) or ``"evaluated"`` (values at ``nu``).
        nu: Evaluation point in evaluated mode: int/Fraction, QuadSurd or float.
            ``"critical"`` selects nu_c.
        config: Configuration dict (``tables`` section is read).
        backend: ``"auto"`` or one of ``poly``, ``rational``, ``surd``, ``float``.
        verbose: Print layer progress.

    Returns:
        CoeffTable: The frozen table.

    Raises:
        ExactCapExceeded: Exact backends beyond ``tables.exact_cap``.
        MemoryBudgetExceeded: Table larger than ``tables.memory_budget_mb``.
    """
    tables = (config or {}).get("tables", {})
    exact_cap = int(tables.get("exact_cap", 40))
    evaluated_cap = int(tables.get("evaluated_cap", 250))
    budget_mb = float(tables.get("memory_budget_mb", 2048))

    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    if mode not in ("exact", "evaluated"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(nu, str) and nu == "critical":
        nu = constants_critical().nu_c
    if mode == "evaluated" and nu is None:
        raise ValueError("evaluated tables need a value of nu")

    if mode == "exact":
        backend = "poly"
    elif backend == "auto":
        if isinstance(nu, (int, Fraction)) and n_max <= exact_cap:
            backend = "rational"
        elif isinstance(nu, QuadSurd) and n_max <= exact_cap:
            backend = "surd"
        else:
            backend = "float"

    if backend in ("poly", "rational", "surd") and n_max > exact_cap:
        raise ExactCapExceeded(
            f"exact table up to order {n_max} exceeds the exact cap {exact_cap}"
        )
    if backend == "float" and n_max > evaluated_cap:
        raise ExactCapExceeded(
            f"evaluated table up to order {n_max} exceeds the cap {evaluated_cap}"
        )
    size = n_max + 4
    needed = _estimate_bytes(size, n_max, backend) / 2**20
    if needed > budget_mb:
        raise MemoryBudgetExceeded(
            f"table needs ~{needed:.0f} MB, budget is {budget_mb:.0f} MB"
        )

    if verbose:
        print(f"🚀 Tutte recurrence | backend: {backend} | N = {n_max}")
        print("-" * 40)

    critical = _is_critical(nu) or backend == "poly"
    if backend == "poly":
        table = _build_poly(n_max, verbose)
    elif backend == "rational":
        nu = Fraction(nu)
        z = _integer_table(n_max, nu.numerator, nu.denominator, verbose)
        table = CoeffTable(
            "evaluated", "rational", n_max, nu, z, scale=(nu.numerator, nu.denominator)
        )
        critical = False
    elif backend == "surd":
        poly = _build_poly(n_max, verbose)
        z = np.empty(poly.data.shape, dtype=object)
        for idx in np.ndindex(z.shape):
            z[idx] = poly.data[idx].evaluate(nu)
        table = CoeffTable("evaluated", "surd", n_max, nu, z, critical=critical)
    else:
        if isinstance(nu, QuadSurd):
            nu_float = float(nu)
        else:
            nu_float = float(nu)
        if critical:
            cc = constants_critical()
            s, r = float(cc.t_c(64)), float(cc.u_c(64))
        else:
            s, r = _estimate_float_scale(nu_float, EXPONENT_GENERIC), float(
                constants_critical().u_c(64)
            )
        z = _float_table(n_max, nu_float, s, r, verbose)
        table = CoeffTable(
            "evaluated", "float", n_max, nu, z, scale=(s, r), critical=critical
        )

    table.critical = critical and backend != "poly"
    table.stats = {"backend": backend, "n_max": n_max, "size": size, "mb": needed}
    if verbose:
        print(f"🏁 Done. {size}x{size}x{n_max + 1} entries")
    return table


def _build_poly(n_max: int, verbose: bool) -> CoeffTable:
    # coefficients are nonnegative and sum to the value at nu = 1
    at_one = _integer_table(n_max, 1, 1, verbose=False)
    bound = max(int(v) for v in at_one.flat)
    bits = max(bound.bit_length() + 1, 2)
    z = _integer_table(n_max, 1 << bits, 1, verbose)
    data = np.empty(z.shape, dtype=object)
    for idx in np.ndindex(z.shape):
        data[idx] = NuPolynomial.from_kronecker(z[idx], bits)
    return CoeffTable("exact", "poly", n_max, None, data, scale=(bits, 1))


def coeff(table: CoeffTable, p: int, q: int, n: int) -> Any:
    """Returns ``[t^n] z_{p,q}`` (zero outside the support).

    Raises:
        ValueError: ``n`` outside ``0..n_max``.
    """
    if n < 0 or n > table.n_max:
        raise ValueError(f"order n={n} out of range 0..{table.n_max}")
    if p < 0 or q < 0:
        raise ValueError("p and q must be nonnegative")
    if p >= table.size or q >= table.size or p + q > n + 2:
        return table.zero()
    entry = table.data[p, q, n]
    if table.backend == "rational":
        a, b = table.scale
        e = (3 * n + p + q) // 2
        return Fraction(int(entry), b**e)
    if table.backend == "float":
        s, r = table.scale
        if entry == 0:
            return mpmath.mpf(0)
        return mpmath.mpf(float(entry)) / (mpmath.mpf(s) ** n * mpmath.mpf(r) ** (p + q))
    return entry


# ==================== Evaluation of partition functions ====================


@dataclass(frozen=True)
class PartitionValue:
    """Truncated value of ``z_{p,q}(nu, t)`` with its (heuristic) error bound."""

    value: PrecReal
    truncation_error: PrecReal
    heuristic: bool = False
    exact_pair: Optional[Tuple[QuadSurd, QuadSurd]] = None


def _same_nu(table_nu: Any, nu: Any) -> bool:
    if nu is None:
        return True
    if isinstance(nu, str) and nu == "critical":
        return _is_critical(table_nu)
    if isinstance(nu, float) or isinstance(table_nu, float):
        return abs(float(table_nu) - float(nu)) <= 1e-12 * max(1.0, abs(float(nu)))
    if isinstance(table_nu, QuadSurd) or isinstance(nu, QuadSurd):
        return QuadSurd.coerce(table_nu) == QuadSurd.coerce(nu)
    if isinstance(table_nu, (int, Fraction)) and isinstance(nu, (int, Fraction)):
        return Fraction(table_nu) == Fraction(nu)
    return abs(float(table_nu) - float(nu)) <= 1e-12 * max(1.0, abs(float(nu)))


def eval_partition(
    table: CoeffTable,
    p: int,
    q: int,
    nu: Any = None,
    t: Any = None,
    tail_mode: str = "extrapolate",
    precision_bits: int = 128,
    exact_pair: bool = False,
    source: Optional[CoeffTable] = None,
    order: Optional[int] = None,
) -> PartitionValue:
    """Sums ``sum_{n <= N} [t^n] z_{p,q} t^n`` and bounds the neglected tail.

    With ``tail_mode="extrapolate"`` the tail is modelled as
    ``C * n^(-gamma) * (t/rho)^n`` over the admissible parity, ``rho`` the
    radius in t (t_c at the critical point, a ratio estimate elsewhere) and
    ``C`` taken from the last ``TAIL_FIT_POINTS`` nonzero coefficients. The
    bound is a heuristic and flagged as such. ``tail_mode="none"`` reports
    no error.

    With ``exact_pair`` the truncated sum at (nu_c, t_c) is also returned as
    ``A + B * t_c`` with ``A, B`` in Q(sqrt7); this needs a polynomial or a
    critical surd table, passed as ``source`` when ``table`` is a float one.

    Args:
        table: Evaluated table.
        p, q: Boundary lengths.
        nu: Expected evaluation point of the table (checked).
        t: Real ``t >= 0``; ``None`` means the critical ``t_c``.
        tail_mode: ``"extrapolate"`` or ``"none"``.
        precision_bits: Working precision of the summation.
        order: Last order summed (default: the whole table).

    Raises:
        NuMismatch: ``nu`` differs from the table's.
        ValueError: Negative ``t`` or a table in exact mode.
    """
    if table.mode != "evaluated":
        raise ValueError("eval_partition needs an evaluated table")
    if not _same_nu(table.nu, nu):
        raise NuMismatch(f"table evaluated at nu={table.nu}, asked for nu={nu}")
    cc = constants_critical()
    with mpmath.workprec(precision_bits + 16):
        t_c = cc.t_c(precision_bits + 16).value if table.critical else None
        if t is None:
            if t_c is None:
                raise ValueError("t must be given away from the critical point")
            t_val = t_c
        else:
            t_val = t.value if isinstance(t, PrecReal) else mpmath.mpf(t)
        if t_val < 0:
            raise ValueError(f"t must be >= 0, got {t_val}")

        if tail_mode not in ("extrapolate", "none"):
            raise ValueError(f"unknown tail_mode {tail_mode!r}")
        last = table.n_max if order is None else order
        if last < 0 or last > table.n_max:
            raise ValueError(f"order {last} out of range 0..{table.n_max}")

        coefficients: List[Tuple[int, mpmath.mpf]] = []
        total = mpmath.mpf(0)
        for n in range(last + 1):
            if not table.in_support(p, q, n):
                continue
            c = coeff(table, p, q, n)
            if isinstance(c, QuadSurd):
                c = c.to_mpf(precision_bits + 16)
            elif isinstance(c, Fraction):
                c = mpmath.mpf(c.numerator) / c.denominator
            c = mpmath.mpf(c)
            if c:
                coefficients.append((n, c))
                total += c * t_val**n

        error = mpmath.mpf(0)
        heuristic = False
        if tail_mode == "extrapolate" and len(coefficients) >= 2 and t_val > 0:
            gamma = EXPONENT_CRITICAL if table.critical else EXPONENT_GENERIC
            g = mpmath.mpf(gamma.numerator) / gamma.denominator
            if t_c is not None:
                radius = t_c
            else:
                (n_lo, c_lo), (n_hi, c_hi) = coefficients[-2], coefficients[-1]
                radius = mpmath.root(
                    (c_lo / c_hi) * (mpmath.mpf(n_hi) / n_lo) ** (-g), n_hi - n_lo
                )
            fit = coefficients[-TAIL_FIT_POINTS:]
            c_hat = max(c * radius**n * mpmath.mpf(n) ** g for n, c in fit)
            n0 = last + 1
            if (3 * n0 + p + q) % 2:
                n0 += 1
            rho = t_val / radius
            if abs(rho - 1) < mpmath.mpf(2) ** (-(precision_bits // 2)):
                error = c_hat * mpmath.mpf(2) ** (-g) * mpmath.zeta(g, mpmath.mpf(n0) / 2)
            elif rho > 1:
                raise ValueError(f"t={t_val} lies beyond the radius of convergence {radius}")
            else:
                error = (
                    c_hat
                    * mpmath.mpf(2) ** (-g)
                    * rho**n0
                    * mpmath.lerchphi(rho**2, g, mpmath.mpf(n0) / 2)
                )
            heuristic = True

    pair = None
    if exact_pair:
        pair = exact_critical_pair(source or table, p, q)
    with mpmath.workprec(precision_bits):
        value = PrecReal(+total, precision_bits)
        err = PrecReal(+error, precision_bits)
    return PartitionValue(
        value=value, truncation_error=err, heuristic=heuristic, exact_pair=pair
    )


def exact_critical_pair(table: CoeffTable, p: int, q: int) -> Tuple[QuadSurd, QuadSurd]:
    """Truncated ``z_{p,q}(nu_c, t_c)`` as ``A + B * t_c`` with ``A, B`` in Q(sqrt7).

    Even orders contribute ``(t_c^2)^(n/2)`` to ``A``, odd orders
    ``(t_c^2)^((n-1)/2)`` to ``B``.
    """
    cc = constants_critical()
    if table.backend == "poly":
        value_at = lambda n: coeff(table, p, q, n).evaluate(cc.nu_c)  # noqa: E731
    elif table.backend == "surd" and table.critical:
        value_at = lambda n: QuadSurd.coerce(coeff(table, p, q, n))  # noqa: E731
    else:
        raise ValueError("exact pairs need a polynomial or critical surd table")
    a_part = QuadSurd(0)
    b_part = QuadSurd(0)
    power = QuadSurd(1)
    for n in range(table.n_max + 1):
        if n and n % 2 == 0:
            power = power * cc.t_c_squared
        c = value_at(n)
        if n % 2 == 0:
            a_part = a_part + c * power
        else:
            b_part = b_part + c * power
    return a_part, b_part


# ==================== Volume exponent probe ====================


def estimate_radius(table: CoeffTable, exponent: Fraction, p: int = 1, q: int = 0) -> float:
    """Ratio-method radius of convergence in t from the two top coefficients."""
    if table.backend != "float":
        raise ValueError("radius estimation needs a float table")
    n_hi = table.n_max
    while not table.in_support(p, q, n_hi):
        n_hi -= 1
    n_lo = n_hi - 2
    s = table.scale[0]
    ratio = table.scaled(p, q, n_lo) / table.scaled(p, q, n_hi)
    return float(s * np.sqrt(ratio * (n_hi / n_lo) ** float(-exponent)))


def volume_exponent_probe(
    table: CoeffTable,
    n_lo: int,
    n_hi: int,
    exponent: Optional[Fraction] = None,
    p: int = 1,
    q: int = 0,
) -> List[Tuple[int, float]]:
    """Rescaled coefficients ``n^gamma * tau^n * [t^n] z_{1,0}``.

    At nu_c ``tau = t_c`` and ``gamma = 7/3``. Elsewhere ``tau`` is estimated
    from the top coefficient ratio and ``gamma`` defaults to 5/2.

    Raises:
        ValueError: Invalid range or a non-float table.
    """
    if table.backend != "float":
        raise ValueError("volume probe needs a float table")
    if n_lo < 1 or n_lo > n_hi or n_hi > table.n_max:
        raise ValueError(f"invalid range [{n_lo}, {n_hi}] for N = {table.n_max}")
    if exponent is None:
        exponent = EXPONENT_CRITICAL if table.critical else EXPONENT_GENERIC
    s, r = table.scale
    tau = s if table.critical else estimate_radius(table, exponent, p, q)
    out: List[Tuple[int, float]] = []
    for n in range(n_lo, n_hi + 1):
        if not table.in_support(p, q, n):
            continue
        v = table.scaled(p, q, n)
        if v <= 0:
            out.append((n, 0.0))
            continue
        log_value = (
            np.log(v)
            + n * np.log(tau / s)
            + float(exponent) * np.log(n)
            - (p + q) * np.log(r)
        )
        out.append((n, float(np.exp(log_value))))
    return out


# ==================== Functional equations ====================


def _kmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product of two multivariate series stored as int arrays."""
    out = np.zeros(a.shape, dtype=object)
    for idx in zip(*np.nonzero(a != 0)):
        tgt = tuple(slice(i, None) for i in idx)
        src = tuple(slice(0, s - i) for i, s in zip(idx, a.shape))
        out[tgt] = out[tgt] + a[idx] * b[src]
    return out


def _kshift(a: np.ndarray, axis: int, k: int) -> np.ndarray:
    """Multiplies by ``x^k`` (``k > 0``) or applies ``k`` discrete derivatives (``k < 0``)."""
    out = np.zeros(a.shape, dtype=object)
    n = a.shape[axis]
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if k >= 0:
        src[axis] = slice(0, n - k)
        dst[axis] = slice(k, None)
    else:
        src[axis] = slice(-k, None)
        dst[axis] = slice(0, n + k)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _kconst(shape: Tuple[int, ...], value: int, at: Optional[Tuple[int, ...]] = None) -> np.ndarray:
    out = np.zeros(shape, dtype=object)
    out[at or (0,) * len(shape)] = value
    return out


def _first_failure(residual: np.ndarray) -> Optional[Tuple[int, ...]]:
    nz = np.argwhere(residual != 0)
    if len(nz) == 0:
        return None
    nz = sorted(tuple(int(i) for i in row) for row in nz)
    return nz[0]


def verify_functional_equations(
    table: CoeffTable, n_check: int, uv_degree: int = 4, verbose: bool = False
) -> Dict[str, Any]:
    """Checks the identities satisfied by the table as exact series in t.

    Every identity is first multiplied through so that it is polynomial in
    ``(nu, t, u, v)``; nu is then replaced by ``2^K`` with ``K`` large enough
    that a polynomial vanishes iff its value does. Failures are decoded back
    into nu-polynomials.

    Families: ``eq_z0`` ``eq_z1`` ``eq_z1_shift`` ``eq_z2_shift`` (the four
    v-slices of the first Tutte equation), ``eq_rational`` (the rational
    expression of Z(u, v), coefficients with p, q <= ``uv_degree``),
    ``eq_one_catalytic`` (the closed equation of Z_0) and ``eq_z11``.

    Returns:
        Dict[str, Any]: ``{"n_check", "all_pass", "first_failing_order",
        "families": {name: {"passed", "first_failing_order", "residual"}}}``.
    """
    if table.mode != "exact":
        raise ValueError("functional equations are checked on exact tables")
    if n_check < 0 or n_check > table.n_max:
        raise ValueError(f"n_check={n_check} outside 0..{table.n_max}")

    T = n_check + 1
    U = min(table.size, n_check + 3) + 9

    bound = 1
    degree = 0
    for idx in np.ndindex(table.data.shape):
        if idx[2] <= n_check:
            entry = table.data[idx]
            if not entry.is_zero():
                bound = max(bound, int(entry.max_abs()))
                degree = max(degree, entry.degree)
    count = T * U * U
    bits = 4 * bound.bit_length() + 4 * (degree + 8).bit_length() + 4 * count.bit_length() + 64
    X = 1 << bits

    def val(p: int, q: int, n: int) -> int:
        if p >= table.size or q >= table.size:
            return 0
        return table.data[p, q, n].evaluate_int(X)

    def slice_series(i: int) -> np.ndarray:
        out = np.zeros((T, U), dtype=object)
        for n in range(T):
            for p in range(U):
                out[n, p] = val(p, i, n)
        return out

    Z0, Z1, Z2, Z3 = (slice_series(i) for i in range(4))
    z1 = np.zeros((T, U), dtype=object)
    z3 = np.zeros((T, U), dtype=object)
    z11 = np.zeros((T, U), dtype=object)
    for n in range(T):
        z1[n, 0] = val(1, 0, n)
        z3[n, 0] = val(3, 0, n)
        z11[n, 0] = val(1, 1, n)

    shape = (T, U)
    one = _kconst(shape, 1)
    u = _kconst(shape, 1, (0, 1))
    t = _kconst(shape, 1, (1, 0))
    nu2m1 = X * X - 1
    mul = _kmul

    def d(a: np.ndarray, k: int = 1) -> np.ndarray:
        return _kshift(a, 1, -k)

    dz0, dz1 = d(Z0), d(Z1)
    residuals: Dict[str, np.ndarray] = {}
    residuals["eq_z0"] = (
        X * dz0 - Z1 - nu2m1 * (mul(t, d(Z0, 2) + mul(dz0, dz0)) + u)
    )
    residuals["eq_z1"] = (
        X * dz1 - Z2 - nu2m1 * mul(t, d(Z1, 2) + mul(dz0, dz1) + mul(z1, dz1))
    )
    residuals["eq_z1_shift"] = X * Z1 - dz0 - nu2m1 * mul(t, Z2 + mul(Z1, Z1))
    residuals["eq_z2_shift"] = (
        X * Z2 - dz1 - nu2m1 * (mul(t, Z3 + mul(Z1, Z2) + mul(z1, Z2)) + one)
    )

    # closed equation of Z_0 multiplied by u^3
    y = Z0
    y2 = mul(y, y)
    y3 = mul(y2, y)
    u2 = _kshift(u, 1, 1)
    u3 = _kshift(u, 1, 2)
    u4 = _kshift(u, 1, 3)
    t2 = _kshift(t, 0, 1)
    z1z1 = mul(z1, z1)
    r_u3 = (
        nu2m1**2 * mul(t2, mul(y - one, y3) - mul(mul(z1, u), y2) + mul(2 * mul(z1z1, z1) - z3, u3))
        - nu2m1**2 * mul(mul(t, u3), one + y - 2 * y2 + mul(z1, u))
        - nu2m1
        * mul(
            t,
            2 * X * mul(mul(y - one, u), y2)
            - (X + 1) * mul(mul(z1, u2), y)
            + 3 * (X - 1) * mul(z1z1, u3),
        )
        + X * (X + 1) * mul(mul(y - one, u2), y)
        - X * nu2m1 * mul(u4, 2 * y - one)
        + X * (X - 3) * mul(z1, u3)
        + nu2m1**2 * _kshift(u3, 1, 3)
    )
    residuals["eq_one_catalytic"] = mul(u3, y) - u3 - X * _kshift(u3, 1, 2) - mul(t, r_u3)

    # z_{1,1} identity multiplied by (nu + 1) t
    residuals["eq_z11"] = (X + 1) * mul(t, z11) - (
        (X + 1) * nu2m1 * mul(t, 2 * mul(t, mul(z1z1, z1)) - mul(t, z3) - one)
        - (X + 1) * (3 * X - 2) * mul(t, z1z1)
        + X * z1
    )

    residuals["eq_rational"] = _rational_residual(table, n_check, uv_degree, X, val)

    families: Dict[str, Dict[str, Any]] = {}
    first_orders: List[int] = []
    for name, res in residuals.items():
        where = _first_failure(res)
        if where is None:
            families[name] = {"passed": True, "first_failing_order": None, "residual": ""}
        else:
            poly = NuPolynomial.from_kronecker(int(res[where]), bits, signed=True)
            families[name] = {
                "passed": False,
                "first_failing_order": where[0],
                "residual": f"[t^{where[0]}] index {where[1:]}: {poly}",
            }
            first_orders.append(where[0])
        if verbose:
            mark = "✅" if families[name]["passed"] else "❌"
            print(f"   {mark} {name}")

    return {
        "n_check": n_check,
        "all_pass": not first_orders,
        "first_failing_order": min(first_orders) if first_orders else None,
        "families": families,
    }


def _rational_residual(
    table: CoeffTable, n_check: int, uv_degree: int, X: int, val: Any
) -> np.ndarray:
    """Residual of ``(Z - Z0(v)) * u * D = u * N`` with the rational expression of Z(u, v)."""
    T = n_check + 1
    W = uv_degree + 1
    shape = (T, W, W)
    Z = np.zeros(shape, dtype=object)
    Z0u = np.zeros(shape, dtype=object)
    Z0v = np.zeros(shape, dtype=object)
    Z1v = np.zeros(shape, dtype=object)
    for n in range(T):
        for p in range(W):
            Z0u[n, p, 0] = val(p, 0, n)
            Z0v[n, 0, p] = val(p, 0, n)
            Z1v[n, 0, p] = val(p, 1, n)
            for q in range(W):
                Z[n, p, q] = val(p, q, n)
    u = _kconst(shape, 1, (0, 1, 0))
    v = _kconst(shape, 1, (0, 0, 1))
    t = _kconst(shape, 1, (1, 0, 0))
    uv = _kconst(shape, 1, (0, 1, 1))
    u2 = _kconst(shape, 1, (0, 2, 0))
    nu2m1 = X * X - 1
    mul = _kmul
    lhs_factor = X * uv - u2 - nu2m1 * mul(mul(t, v), Z0u + mul(u, Z1v))
    rhs = mul(u, mul(u, Z0v - Z0u) + nu2m1 * mul(v, u2 - mul(t, mul(Z0u, Z1v))))
    return mul(Z - Z0v, lhs_factor) - rhs

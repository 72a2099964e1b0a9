"""Rational parametrizations at the critical point and the series they generate.

Everything here is normalized by powers of u_c so that it stays in Q(sqrt7):
the variable is ``w = u / u_c`` and a boundary series ``X(u)`` is stored as
its coefficients ``x_p * u_c^p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from ising_peeling.services.exact_algebra import (
    PrecReal,
    QuadSurd,
    constants_critical,
    surd_sign,
)
from ising_peeling.services.power_series import (
    PoleError,
    PowerSeriesQ7,
    RationalFunction1V,
    float_compose_polynomial,
    float_divide,
    float_mul,
    float_revert_polynomial,
    poly_eval,
    poly_mul,
    poly_pow,
    poly_scale,
    poly_add,
    poly_taylor_shift,
    revert_polynomial,
    series_divide,
    valuation,
)


SQRT7 = QuadSurd.sqrt7()
# (nu_c^2 - 1) * t_c / u_c
KERNEL_FACTOR = Fraction(10, 3)


class OrderMismatch(RuntimeError):
    """Numerator and denominator of a derivative ratio vanish to different orders."""


class BranchSelectionError(RuntimeError):
    """No branch of the (t^2, z_1, z_3) parametrization gives a counting series."""


# ==================== The parametrizations in H ====================

# u_hat / u_c = H (10 - 12H + 6H^2 - H^3) / 3
_CUBIC = [Fraction(10), Fraction(-12), Fraction(6), Fraction(-1)]
U_HAT_POLY = poly_scale(poly_mul([0, 1], _CUBIC), Fraction(1, 3))

Z0_HAT = RationalFunction1V(
    poly_scale(poly_mul([1, SQRT7 - 1, 3, -1], _CUBIC), Fraction(1, 10))
)

# u_c * Z1_hat
Z1_HAT = RationalFunction1V(
    poly_scale(
        poly_add(poly_mul([SQRT7 - 1, 1], _CUBIC), poly_scale([4, -3, 1], -3)),
        Fraction(3, 10),
    ),
    _CUBIC,
)

# A_hat / A_hat(0)
A_HAT = RationalFunction1V([9, -8, 3], poly_pow([3, -3, 1], 2))

_PARAMETRIZATIONS: Dict[str, RationalFunction1V] = {
    "u_hat": RationalFunction1V(U_HAT_POLY),
    "z0_hat": Z0_HAT,
    "z1_hat": Z1_HAT,
    "a_hat": A_HAT,
}

NORMALIZATION = {
    "u_hat": "value / u_c",
    "z0_hat": "value",
    "z1_hat": "value * u_c",
    "a_hat": "value / ((3/2)^(7/3) / 10)",
}


def eval_param(which: str, H: Union[QuadSurd, Fraction, int, PrecReal]) -> Any:
    """Evaluates one of the critical parametrizations at ``H``.

    The value carries the normalization listed in ``NORMALIZATION``. Exact
    input gives an exact QuadSurd; a PrecReal gives a PrecReal of the same
    precision.

    Raises:
        KeyError: Unknown ``which``.
        PoleError: ``H`` is a root of the denominator.
    """
    fn = _PARAMETRIZATIONS[which]
    if isinstance(H, PrecReal):
        return PrecReal(fn.evaluate_mp(H.value, H.precision_bits), H.precision_bits)
    return QuadSurd.coerce(fn(QuadSurd.coerce(H)))


def revert_u_hat(order: int) -> PowerSeriesQ7:
    """``H(w)`` with ``u_hat(H(w)) / u_c = w``, coefficients of ``w^0 .. w^(order-1)``."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return _revert_u_hat(order)


@lru_cache(maxsize=8)
def _revert_u_hat(order: int) -> PowerSeriesQ7:
    return revert_polynomial(U_HAT_POLY, max(order, 2)).truncate(order)


# ==================== Boundary series ====================


@dataclass(frozen=True)
class BoundarySeries:
    """Normalized boundary sequences at (nu_c, t_c).

    ``zeta0[p] = z_{p,0} u_c^p``, ``zeta1[p] = z_{p,1} u_c^(p+1)`` and
    ``alpha[p] = a_p u_c^p / a_0``.
    """

    zeta0: Tuple[QuadSurd, ...]
    zeta1: Tuple[QuadSurd, ...]
    alpha: Tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.zeta0)

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"p": p, "zeta0": self.zeta0[p], "zeta1": self.zeta1[p], "alpha": self.alpha[p]}
            for p in range(self.order)
        ]


def boundary_series(N: int) -> BoundarySeries:
    """Coefficients ``0..N`` of the three normalized boundary series.

    Raises:
        ValueError: ``N < 2`` or a nonpositive entry (a transcription error).
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    return _boundary_series(N)


@lru_cache(maxsize=8)
def _boundary_series(N: int) -> BoundarySeries:
    order = N + 1
    # one extra order: xi needs H / w
    h = revert_u_hat(order + 1)
    zeta = Z0_HAT.compose_series(h.truncate(order))
    h_over_w = h.shift_down(1)
    h_trunc = h.truncate(order)
    xi = (
        (SQRT7 - 1) * _one(order) + h_trunc - h_over_w * h_trunc.compose_polynomial([4, -3, 1])
    ) * Fraction(3, 10)
    alpha = A_HAT.compose_series(h.truncate(order))

    zeta0 = tuple(QuadSurd.coerce(c) for c in zeta)
    zeta1 = tuple(QuadSurd.coerce(c) for c in xi)
    alpha_q = tuple(_rational(c) for c in alpha)
    for name, seq in (("zeta0", zeta0), ("zeta1", zeta1), ("alpha", alpha_q)):
        bad = [p for p, c in enumerate(seq) if surd_sign(c) <= 0]
        if bad:
            raise ValueError(f"{name} has nonpositive entries at p = {bad[:5]}")
    return BoundarySeries(zeta0=zeta0, zeta1=zeta1, alpha=alpha_q)


def _one(order: int) -> PowerSeriesQ7:
    return PowerSeriesQ7([Fraction(1)], order)


def _rational(c: Any) -> Fraction:
    c = QuadSurd.coerce(c)
    if not c.is_rational():
        raise ValueError(f"expected a rational coefficient, got {c}")
    return c.a


# ==================== Values and derivatives at u_c ====================


@dataclass(frozen=True)
class CriticalValues:
    """Values at ``u = u_c`` (H = 1), normalized to lie in Q(sqrt7).

    ``Z1_at_uc`` is ``Z_1(u_c) u_c``, ``dZ0_at_uc`` is ``Z_0'(u_c) u_c`` and
    ``dZ1_at_uc`` is ``Z_1'(u_c) u_c^2``.
    """

    Z0_at_uc: QuadSurd
    Z1_at_uc: QuadSurd
    dZ0_at_uc: QuadSurd
    dZ1_at_uc: QuadSurd
    A_at_uc_over_a0: QuadSurd
    b_ratio: Fraction


def _expansion_at_one(fn: RationalFunction1V, order: int) -> PowerSeriesQ7:
    num = PowerSeriesQ7(poly_taylor_shift(fn.numerator, 1), order)
    den = PowerSeriesQ7(poly_taylor_shift(fn.denominator, 1), order)
    return series_divide(num, den)


def _leading_ratio(top: PowerSeriesQ7, bottom: PowerSeriesQ7) -> QuadSurd:
    """Ratio of the first nonconstant Taylor coefficients, which must share an order."""
    k_top = valuation(top.coefficients[1:]) + 1
    k_bottom = valuation(bottom.coefficients[1:]) + 1
    if k_top != k_bottom:
        raise OrderMismatch(
            f"numerator vanishes to order {k_top - 1}, denominator to order {k_bottom - 1}"
        )
    return QuadSurd.coerce(top[k_top]) / QuadSurd.coerce(bottom[k_bottom])


@lru_cache(maxsize=1)
def values_at_uc() -> CriticalValues:
    """Values and derivatives of Z_0, Z_1 and A at u_c.

    ``u_hat`` is flat to second order at H = 1, so ``Z'(u_c)`` is the ratio of
    the leading Taylor coefficients of ``Z_hat - Z_hat(1)`` and
    ``u_hat - u_c`` at H = 1.

    Raises:
        OrderMismatch: The two expansions start at different orders.
    """
    order = 8
    u_exp = _expansion_at_one(RationalFunction1V(U_HAT_POLY), order)
    z0_exp = _expansion_at_one(Z0_HAT, order)
    z1_exp = _expansion_at_one(Z1_HAT, order)
    a_exp = _expansion_at_one(A_HAT, order)
    return CriticalValues(
        Z0_at_uc=QuadSurd.coerce(z0_exp[0]),
        Z1_at_uc=QuadSurd.coerce(z1_exp[0]),
        dZ0_at_uc=_leading_ratio(z0_exp, u_exp),
        dZ1_at_uc=_leading_ratio(z1_exp, u_exp),
        A_at_uc_over_a0=QuadSurd.coerce(a_exp[0]),
        # A_hat(0) = (3/2)^(7/3) / 10
        b_ratio=_rational(a_exp[1]) / 10,
    )


def peeling_normalization() -> QuadSurd:
    """``(nu_c + 1) t_c (Z_0(u_c)/u_c + Z_1(u_c))``, which equals 1."""
    cc = constants_critical()
    v = values_at_uc()
    return (cc.nu_c + 1) * cc.t_over_u * (v.Z0_at_uc + v.Z1_at_uc)


def drift_and_tails() -> Dict[str, QuadSurd]:
    """Exact drift of X_1, drift of X_1 + Y_1 and the tail-constant ratio c_x / c_y.

    Raises:
        ArithmeticError: The drift does not equal sqrt7 / 28.
    """
    cc = constants_critical()
    v = values_at_uc()
    nu = cc.nu_c
    mu = cc.t_over_u * ((nu - 1) * v.Z0_at_uc - v.Z1_at_uc - nu * v.dZ0_at_uc - v.dZ1_at_uc)
    if mu != cc.mu():
        raise ArithmeticError(f"drift {mu} differs from sqrt7/28")
    mu_sum = (nu + 1) * cc.t_over_u * (v.Z0_at_uc - v.dZ0_at_uc - v.dZ1_at_uc)
    alpha1 = boundary_series(2).alpha[1]
    cx_over_cy = (nu + alpha1) / (1 + nu * alpha1)
    return {"mu": mu, "mu_sum": mu_sum, "cx_over_cy": cx_over_cy}


def c_infty_closed_form() -> QuadSurd:
    """c_infinity from the boundary data, without any simulation."""
    cc = constants_critical()
    v = values_at_uc()
    alpha1 = boundary_series(2).alpha[1]
    a0_normalized = Fraction(1, 10)
    return (
        Fraction(4, 3)
        * (cc.nu_c + 1)
        * cc.t_over_u
        * (1 + alpha1)
        * (v.A_at_uc_over_a0 - 1)
        * Fraction(9, 4)
        * a0_normalized**2
        / v.b_ratio
    )


# ==================== Parametrization of z_1 and z_3 ====================


def _rp13_polynomials(nu: Any) -> Dict[str, Tuple[List[Any], List[Any]]]:
    """Numerators and denominators (in S) of t^2, t^3 z_1 and t^9 z_3."""
    nu2m1 = nu * nu - 1
    a = [nu, -1]  # nu - S
    b = [nu - 2, 1]  # S + nu - 2
    nu2 = nu * nu - 2 * nu
    t2_num = poly_mul(poly_mul(a, b), [nu2, -2, -1, 4])
    t2_den = poly_scale([0, 0, 1], 32 * nu2m1**3)
    z1_num = poly_mul(poly_mul(poly_pow(a, 2), b), [nu2, -nu, -nu, 3])
    z1_den = poly_scale([0, 0, 1], 64 * nu2m1**4)
    k = 2 * nu * nu - 4 * nu + 3
    p10 = [
        -3 * nu**3 * (nu - 2) ** 3,
        14 * nu**2 * (nu - 2) ** 2,
        nu * (nu - 2) * (9 * nu**2 - 18 * nu - 20),
        -4 * (7 * nu**2 - 14 * nu - 2),
        32 * nu**4 - 128 * nu**3 + 183 * nu**2 - 110 * nu + 20,
        -2 * (32 * nu**2 - 64 * nu + 57),
        -7 * (16 * nu**2 - 32 * nu + 27),
        32 * k,
        -16 * k,
        -128,
        160,
    ]
    z3_num = poly_mul(poly_mul(poly_pow(a, 5), poly_pow(b, 5)), p10)
    z3_den = poly_scale([0] * 8 + [1], 2**22 * nu2m1**12)
    return {
        "t2": (t2_num, t2_den),
        "t3z1": (z1_num, z1_den),
        "t9z3": (z3_num, z3_den),
    }


def critical_z1_z3() -> Dict[str, QuadSurd]:
    """``t^2``, ``t^3 z_1`` and ``t^9 z_3`` at S = 3, nu = nu_c (exact).

    Raises:
        ArithmeticError: ``t^2`` at S = 3 is not t_c^2.
    """
    cc = constants_critical()
    polys = _rp13_polynomials(cc.nu_c)
    s = QuadSurd(3)
    out = {
        name: QuadSurd.coerce(poly_eval(num, s)) / QuadSurd.coerce(poly_eval(den, s))
        for name, (num, den) in polys.items()
    }
    if out["t2"] != cc.t_c_squared:
        raise ArithmeticError("S = 3 does not map to the critical t_c")
    return out


@dataclass(frozen=True)
class Rp13Series:
    """Series of ``t^3 z_1`` and ``t^9 z_3`` in ``t2 = t^2`` at a fixed nu."""

    nu: Any
    branch: Any
    t3z1: Tuple[Any, ...]
    t9z3: Tuple[Any, ...]

    def z1(self) -> Dict[int, Any]:
        """``{n: [t^n] z_1}`` for odd n."""
        return {2 * j - 3: c for j, c in enumerate(self.t3z1) if j >= 2}

    def z3(self) -> Dict[int, Any]:
        """``{n: [t^n] z_3}`` for odd n."""
        return {2 * j - 9: c for j, c in enumerate(self.t9z3) if j >= 5}


def rp13_series(nu: Any, N: int) -> Rp13Series:
    """Expands the parametrization of (t^2, t^3 z_1, t^9 z_3) around t = 0.

    Every root S_0 of ``t^2(S)`` in the field of nu is tried as a base point; the
    branch kept is the one whose ``t^3 z_1`` series starts at order ``t^4``
    with nonnegative coefficients.

    Args:
        nu: ``nu > 1``: a rational, a ``QuadSurd`` or ``"critical"``.
        N: Number of coefficients in ``t^2`` (at most 60).

    Raises:
        ValueError: Invalid arguments.
        BranchSelectionError: No branch gives a counting series.
    """
    nu = constants_critical().nu_c if nu == "critical" else _exact(nu)
    if nu <= 1:
        raise ValueError(f"nu must be > 1, got {nu}")
    if not 2 <= N <= 60:
        raise ValueError(f"N must lie in 2..60, got {N}")
    polys = _rp13_polynomials(nu)
    t2_num, t2_den = polys["t2"]
    for s0 in (nu, 2 - nu):
        if s0 == 0:
            continue
        t2 = _shifted_series(t2_num, t2_den, s0, N)
        if t2[0] != 0 or t2[1] == 0:
            continue
        s_of_t2 = revert_polynomial(t2.coefficients, N)
        coeffs = [_exact(c) for c in _compose(polys["t3z1"], s0, s_of_t2, N)]
        if coeffs[0] != 0 or coeffs[1] != 0 or any(c < 0 for c in coeffs):
            continue
        if all(c == 0 for c in coeffs):
            continue
        z3 = [_exact(c) for c in _compose(polys["t9z3"], s0, s_of_t2, N)]
        return Rp13Series(nu=nu, branch=s0, t3z1=tuple(coeffs), t9z3=tuple(z3))
    raise BranchSelectionError(f"no branch of t^2(S) = 0 gives a counting series at nu = {nu}")


def _exact(x: Any) -> Any:
    if isinstance(x, QuadSurd):
        return x.a if x.is_rational() else x
    return Fraction(x)


def _shifted_series(num: Sequence[Any], den: Sequence[Any], s0: Any, order: int) -> PowerSeriesQ7:
    return series_divide(
        PowerSeriesQ7(poly_taylor_shift(num, s0), order),
        PowerSeriesQ7(poly_taylor_shift(den, s0), order),
    )


def _compose(pair: Tuple[List[Any], List[Any]], s0: Any, inner: PowerSeriesQ7, order: int) -> PowerSeriesQ7:
    outer = _shifted_series(pair[0], pair[1], s0, order)
    return inner.compose_polynomial(outer.coefficients)


# ==================== Identity on the critical curve ====================


def appendix_residual(points: Sequence[Any], precision_bits: int = 256) -> PrecReal:
    """Largest ``|L^4 - 2 C_2(J) L^2 - C_0(J)|`` over the given curve points.

    Each ``H`` is mapped to ``(u, y) = (u_hat(H), Z0_hat(H))`` at the critical
    point; ``J``, ``L``, ``C_2`` and ``C_0`` are then evaluated in mpmath at
    ``precision_bits``.

    Raises:
        PoleError: ``u_hat(H) = 0``.
    """
    cc = constants_critical()
    exact = critical_z1_z3()
    bits = precision_bits + 32
    worst = mpmath.mpf(0)
    with mpmath.workprec(bits):
        t = cc.t_c(bits).value
        u_c = cc.u_c(bits).value
        nu = cc.nu_c.to_mpf(bits)
        t3z1 = exact["t3z1"].to_mpf(bits)
        t5z3 = exact["t9z3"].to_mpf(bits) / t**4
        t4z1sq = t3z1**2 / t**2
        t5z1cube = t3z1**3 / t**4
        w = (
            -((nu**2 - 1) ** 2) * t5z3
            + (nu**2 - 1) ** 2 * (2 * t5z1cube - 3 / (nu + 1) * t4z1sq - mpmath.mpf(3) / 4 * t**4)
            + (nu - 3) * nu * t3z1
            + t**2
        )
        for h in points:
            hv = h.value if isinstance(h, PrecReal) else _to_mp(h, bits)
            u = u_c * RationalFunction1V(U_HAT_POLY).evaluate_mp(hv, bits)
            if u == 0:
                raise PoleError(f"u_hat vanishes at H = {h}")
            y = Z0_HAT.evaluate_mp(hv, bits)
            r = t * y / u
            J = (nu - 1) * (t * u + r**2) - r
            L = 2 * r + (nu + 1) * J
            C2 = (
                (nu + 1) ** 2 * J**2
                + 2 * (nu + 3) / (nu - 1) * J
                - 2 * (nu**2 - 1) * t**2
                + 2 / (nu - 1) ** 2
            )
            C0 = (
                -((nu + 1) ** 2)
                * (((nu + 1) * J**2 - 2 * (nu - 1) * t**2) ** 2 + 4 * J**3 + 16 * (nu - 1) * t3z1 * J)
                - 4 * J**2
                + 16 * (nu + 1) * nu * t**2 * J
                + 16 * w
            )
            worst = max(worst, abs(L**4 - 2 * C2 * L**2 - C0))
    with mpmath.workprec(precision_bits):
        return PrecReal(+worst, precision_bits)


def _to_mp(x: Any, bits: int) -> mpmath.mpf:
    if isinstance(x, QuadSurd):
        return x.to_mpf(bits)
    if isinstance(x, (Fraction, int)):
        x = Fraction(x)
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


# ==================== Kernel-form series of Z(u, u_c) and Z(u, v) ====================


def _kernel_pieces(order: int) -> Tuple[PowerSeriesQ7, PowerSeriesQ7, Any, Any, Any]:
    bs = boundary_series(order - 1)
    zeta = PowerSeriesQ7(list(bs.zeta0))
    xi = PowerSeriesQ7(list(bs.zeta1))
    v = values_at_uc()
    cc = constants_critical()
    nu2m1_uc2 = (cc.nu_c * cc.nu_c - 1) * cc.u_c_squared()
    return zeta, xi, v.Z0_at_uc, v.Z1_at_uc, nu2m1_uc2


def slice_series(N: int) -> PowerSeriesQ7:
    """``W_p = sum_k z_{p,k} u_c^(p+k)``, the coefficients of ``Z(u_c w, u_c)``, for p <= N.

    Numerator and denominator of the rational expression of Z(u, v) at
    ``v = u_c`` both vanish at ``w = 1``; both are divided by ``w - 1`` first.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return _slice_series(N)


@lru_cache(maxsize=4)
def _slice_series(N: int) -> PowerSeriesQ7:
    order = N + 1
    zeta, xi, zeta_one, xi_one, nu2m1_uc2 = _kernel_pieces(order)
    c = KERNEL_FACTOR
    w = PowerSeriesQ7.variable(order)
    numer = w * (zeta_one - zeta) + (w * w) * nu2m1_uc2 - zeta * (c * xi_one)
    if numer[0] != -c * xi_one:
        raise ArithmeticError("kernel numerator has an unexpected constant term")
    f = -numer.partial_sums()
    tails = (zeta_one - zeta.partial_sums()) * c
    beta = constants_critical().nu_c - c * xi_one
    e = PowerSeriesQ7([beta - 1, Fraction(-1)], order) - tails
    quotient = series_divide(f, e)
    return quotient.shift_up(1) + PowerSeriesQ7([zeta_one], order)


def column_table(p_max: int, k_max: int) -> Dict[Tuple[int, int], QuadSurd]:
    """Exact ``z_{p,k} u_c^(p+k)`` for ``p <= p_max`` or ``k <= p_max`` (the other index ``<= k_max``).

    Columns are obtained one power of the second boundary variable at a time
    from the kernel form of Z(u, v); each step divides by ``w^2``.
    """
    if p_max < 1 or k_max < p_max:
        raise ValueError(f"need 1 <= p_max <= k_max, got {p_max}, {k_max}")
    return dict(_column_table(p_max, k_max))


@lru_cache(maxsize=4)
def _column_table(p_max: int, k_max: int) -> Tuple[Tuple[Tuple[int, int], QuadSurd], ...]:
    order = k_max + 2 * p_max + 3
    zeta, xi, _, _, nu2m1_uc2 = _kernel_pieces(order)
    c = KERNEL_FACTOR
    nu = constants_critical().nu_c
    w = PowerSeriesQ7.variable(order)

    d1 = w * nu - (zeta + w * xi[0]) * c

    def d_j(j: int) -> PowerSeriesQ7:
        return w * (-c * xi[j - 1])

    def n_k(k: int) -> PowerSeriesQ7:
        if k == 1:
            return w * zeta[1] + (w * w) * nu2m1_uc2 - zeta * (c * xi[0])
        return w * zeta[k] - zeta * (c * xi[k - 1])

    columns: List[PowerSeriesQ7] = [zeta - 1]
    for k in range(1, p_max + 1):
        acc = columns[k - 1] * d1 - (w * n_k(k))
        for j in range(2, k + 1):
            acc = acc + columns[k - j] * d_j(j)
        columns.append(acc.shift_down(2))
    if any(columns[1][p] != xi[p] - (zeta[1] if p == 0 else 0) for p in range(columns[1].order)):
        raise ArithmeticError("first column disagrees with the Z_1 series")

    out: Dict[Tuple[int, int], QuadSurd] = {}
    for k, col in enumerate(columns):
        for p in range(min(col.order, k_max + 1)):
            value = QuadSurd.coerce(col[p]) + (zeta[k] if p == 0 else 0)
            out[(p, k)] = value
            out[(k, p)] = value
    return tuple(sorted(out.items()))


# ==================== Float tables to large order ====================


@dataclass(frozen=True)
class NumericTables:
    """float64 versions of the boundary series up to order ``K - 1``."""

    zeta0: np.ndarray
    zeta1: np.ndarray
    alpha: np.ndarray
    slice_w: np.ndarray

    @property
    def order(self) -> int:
        return len(self.zeta0)


def _float_poly(poly: Sequence[Any]) -> List[float]:
    return [float(QuadSurd.coerce(c)) for c in poly]


def _unit(K: int, value: float) -> np.ndarray:
    out = np.zeros(K)
    out[0] = value
    return out


def numeric_tables(K: int, check_order: int = 24) -> NumericTables:
    """O(K^2) float recurrences for zeta, xi, alpha and W, cross-checked against the exact series.

    Raises:
        ArithmeticError: The float and exact series disagree beyond 1e-9 (relative).
    """
    if K < check_order + 2:
        raise ValueError(f"K must be >= {check_order + 2}, got {K}")
    return _numeric_tables(K, check_order)


@lru_cache(maxsize=4)
def _numeric_tables(K: int, check_order: int) -> NumericTables:
    h = float_revert_polynomial(_float_poly(U_HAT_POLY), K + 1)
    h_k = h[:K]
    zeta = float_divide(
        float_compose_polynomial(_float_poly(Z0_HAT.numerator), h_k),
        float_compose_polynomial(_float_poly(Z0_HAT.denominator), h_k),
    )
    h_over_w = h[1 : K + 1]
    sqrt7 = float(SQRT7)
    xi = 0.3 * (
        _unit(K, sqrt7 - 1)
        + h_k
        - float_mul(h_over_w, float_compose_polynomial([4.0, -3.0, 1.0], h_k))
    )
    alpha = float_divide(
        float_compose_polynomial(_float_poly(A_HAT.numerator), h_k),
        float_compose_polynomial(_float_poly(A_HAT.denominator), h_k),
    )

    v = values_at_uc()
    cc = constants_critical()
    zeta_one, xi_one = float(v.Z0_at_uc), float(v.Z1_at_uc)
    c = float(KERNEL_FACTOR)
    nu2m1_uc2 = float((cc.nu_c * cc.nu_c - 1) * cc.u_c_squared())
    numer = -c * xi_one * zeta
    numer[1:] -= zeta[:-1]
    numer[1] += zeta_one
    numer[2] += nu2m1_uc2
    f = -np.cumsum(numer)
    e = -c * (zeta_one - np.cumsum(zeta))
    e[0] += float(cc.nu_c) - c * xi_one - 1
    e[1] -= 1
    slice_w = np.empty(K)
    slice_w[0] = zeta_one
    slice_w[1:] = float_divide(f, e)[: K - 1]

    tables = NumericTables(zeta0=zeta, zeta1=xi, alpha=alpha, slice_w=slice_w)
    _cross_check(tables, check_order)
    return tables


def _cross_check(tables: NumericTables, check_order: int) -> None:
    exact = boundary_series(check_order)
    exact_w = slice_series(check_order)
    pairs = (
        ("zeta0", tables.zeta0, exact.zeta0),
        ("zeta1", tables.zeta1, exact.zeta1),
        ("alpha", tables.alpha, exact.alpha),
        ("slice_w", tables.slice_w, exact_w.coefficients),
    )
    for name, approx, ref in pairs:
        for p in range(check_order + 1):
            target = float(QuadSurd.coerce(ref[p]))
            if abs(approx[p] - target) > 1e-9 * max(1.0, abs(target)):
                raise ArithmeticError(
                    f"float {name}[{p}] = {approx[p]!r} disagrees with exact {target!r}"
                )


def cached_numeric_tables(min_order: int, config: Optional[Dict[str, Any]] = None) -> NumericTables:
    """Smallest power-of-two table (at least ``tables.numeric_order``) covering ``min_order``.

    Raises:
        ValueError: ``min_order`` beyond ``tables.numeric_order_cap``.
    """
    tables_cfg = (config or {}).get("tables", {})
    base = int(tables_cfg.get("numeric_order", 16384))
    cap = int(tables_cfg.get("numeric_order_cap", 262144))
    if min_order > cap:
        raise ValueError(f"numeric table of order {min_order} exceeds the cap {cap}")
    k = base
    while k < min_order:
        k *= 2
    return numeric_tables(min(k, cap))

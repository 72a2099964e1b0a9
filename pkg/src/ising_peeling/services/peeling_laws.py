"""One-step laws of the peeling process in the three regimes.

Events are ``Cp``, ``Cm`` (the revealed vertex is new) and ``Lp(k)``,
``Lm(k)``, ``Rp(k)``, ``Rm(k)`` (the revealed vertex lies on the boundary,
``k`` edges to the left or right). In the half-plane and finite regimes the
right-hand families also contain the events ``R(p+k)`` that swallow the
whole plus boundary; they are stored in the same family with index ``p + k``.

Weights are normalized so that everything at the critical point lies in
Q(sqrt7): with ``c = t_c/u_c``, ``zeta_k = z_{k,0} u_c^k``,
``xi_k = z_{k,1} u_c^(k+1)`` and ``alpha_p = a_p u_c^p / a_0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any, Dict, List, Optional, Tuple

import mpmath
import numpy as np

from ising_peeling.config import default_config
from ising_peeling.services.critical_parametrization import (
    BoundarySeries,
    NumericTables,
    boundary_series,
    cached_numeric_tables,
    column_table,
    slice_series,
    values_at_uc,
)
from ising_peeling.services.exact_algebra import (
    CriticalConstants,
    PrecReal,
    QuadSurd,
    constants_critical,
    surd_eval,
    surd_sign,
)
from ising_peeling.services.tutte_series import CoeffTable, eval_partition


FAMILIES: Tuple[str, ...] = ("Cp", "Cm", "Lp", "Lm", "Rp", "Rm")
REGIMES: Tuple[str, ...] = ("finite", "halfplane", "fullplane")

# power-law decay of the float tables past their last entry
EXTENSION_EXPONENTS: Dict[str, float] = {
    "zeta0": 7 / 3,
    "zeta1": 7 / 3,
    "alpha": 4 / 3,
    "slice_w": 7 / 3,
}
TAIL_EXPONENT = 7 / 3
SCAN_BLOCK = 512
TWO_64 = 1 << 64


class SequenceTooShort(ValueError):
    """The boundary sequences do not reach the indices a law needs."""


class LawToleranceExceeded(RuntimeError):
    """A law's normalization defect is above the configured tolerance."""


class EventOutOfSupport(ValueError):
    """The event cannot occur in the given regime and state."""


@dataclass(frozen=True)
class PeelingEvent:
    tag: str
    k: int = 0

    def __post_init__(self) -> None:
        if self.tag not in FAMILIES:
            raise EventOutOfSupport(f"unknown event family {self.tag!r}")
        if self.k < 0:
            raise EventOutOfSupport(f"negative index in {self.tag}({self.k})")
        if self.tag in ("Cp", "Cm") and self.k != 0:
            raise EventOutOfSupport(f"{self.tag} carries no index")

    def __str__(self) -> str:
        if self.tag in ("Cp", "Cm"):
            return self.tag
        return f"{self.tag}({self.k})"

    @classmethod
    def parse(cls, text: str) -> PeelingEvent:
        text = text.strip()
        if "(" not in text:
            return cls(text)
        tag, _, rest = text.partition("(")
        return cls(tag, int(rest.rstrip(")")))


@dataclass(frozen=True)
class Displacement:
    dx: int
    dy: int


def displacement(event: PeelingEvent, regime: str = "fullplane", p: Optional[int] = None) -> Displacement:
    """Perimeter change ``(X_1, Y_1)`` caused by ``event``.

    In the half-plane and finite regimes ``Rp(k)`` and ``Rm(k)`` with
    ``k > p`` are the events that swallow the plus boundary.

    Raises:
        EventOutOfSupport: Unknown regime, or ``p`` missing where it matters.
    """
    if regime not in REGIMES:
        raise EventOutOfSupport(f"unknown regime {regime!r}")
    tag, k = event.tag, event.k
    if tag == "Cp":
        return Displacement(2, -1)
    if tag == "Cm":
        return Displacement(0, 1)
    if tag == "Lp":
        return Displacement(1, -k - 1)
    if tag == "Lm":
        return Displacement(0, -k)
    if regime != "fullplane":
        if p is None:
            raise EventOutOfSupport(f"{event} needs the plus length p in regime {regime}")
        if k > p:
            j = k - p
            return Displacement(-p + 1, -j - 1) if tag == "Rp" else Displacement(-p, -j)
    if tag == "Rp":
        return Displacement(-k + 1, -1)
    return Displacement(-k, 0)


# ==================== Boundary data lookup ====================


class BoundaryLookup:
    """Boundary sequences: exact up to the configured order, float tables beyond.

    Past the end of the float tables values follow the pure power law of
    their tail, which is an approximation and is only used when the tables
    hit ``tables.numeric_order_cap``.
    """

    def __init__(
        self,
        config: Optional[Dict[str, Any]] = None,
        series: Optional[BoundarySeries] = None,
    ) -> None:
        self.config = config or default_config()
        tables = self.config["tables"]
        if series is not None:
            self.exact_order = series.order - 1
            self._series = series
        else:
            self.exact_order = int(tables["boundary_exact_order"])
            self._series = None
        self.numeric_cap = int(tables["numeric_order_cap"])
        self._numeric: Optional[NumericTables] = None

    @cached_property
    def series(self) -> BoundarySeries:
        return self._series or boundary_series(self.exact_order)

    @cached_property
    def slice_w(self) -> Tuple[QuadSurd, ...]:
        return tuple(QuadSurd.coerce(c) for c in slice_series(self.exact_order).coefficients)

    def exact(self, name: str, k: int) -> Any:
        """Exact entry, or ``None`` past the exact order."""
        if name == "slice_w":
            seq: Tuple[Any, ...] = self.slice_w
        else:
            seq = getattr(self.series, name)
        return seq[k] if 0 <= k < len(seq) else None

    def numeric(self, min_order: int) -> NumericTables:
        if self._numeric is None or (
            self._numeric.order < min_order and self._numeric.order < self.numeric_cap
        ):
            self._numeric = cached_numeric_tables(min(min_order, self.numeric_cap), self.config)
        return self._numeric

    def array(self, name: str, ks: Any) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        if ks.size == 0:
            return np.zeros(ks.shape)
        if ks.min() < 0:
            raise IndexError(f"negative index into {name}")
        seq = getattr(self.numeric(int(ks.max()) + 1), name)
        last = len(seq) - 1
        out = np.empty(ks.shape)
        inside = ks <= last
        out[inside] = seq[ks[inside]]
        if not inside.all():
            far = ks[~inside].astype(np.float64)
            out[~inside] = seq[last] * (far / last) ** (-EXTENSION_EXPONENTS[name])
        return out

    def value(self, name: str, k: int, exact: bool = True) -> Any:
        if exact:
            e = self.exact(name, k)
            if e is not None:
                return e
        return float(self.array(name, [k])[0])


_DEFAULT_LOOKUP: Optional[BoundaryLookup] = None


def default_lookup() -> BoundaryLookup:
    global _DEFAULT_LOOKUP
    if _DEFAULT_LOOKUP is None:
        _DEFAULT_LOOKUP = BoundaryLookup()
    return _DEFAULT_LOOKUP


# ==================== Laws ====================


def _to_float(x: Any) -> float:
    if isinstance(x, PrecReal):
        return float(x.value)
    return float(x)


def _is_exact(x: Any) -> bool:
    return isinstance(x, (QuadSurd, Fraction, int))


def _ratio(factors: List[Any], divisor: Any = 1) -> Any:
    """Product of ``factors`` over ``divisor``; exact unless a factor is a float."""
    if all(_is_exact(f) for f in factors) and _is_exact(divisor):
        out = QuadSurd(1)
        for f in factors:
            out = out * f
        return out / divisor
    out_f = 1.0
    for f in factors:
        out_f *= _to_float(f)
    return out_f / _to_float(divisor)


def _total(values: List[Any]) -> Any:
    if all(_is_exact(v) for v in values):
        return sum((QuadSurd.coerce(v) for v in values), QuadSurd(0))
    return sum(_to_float(v) for v in values)


def _defect(total: Any) -> PrecReal:
    if isinstance(total, (QuadSurd, Fraction, int)):
        d = QuadSurd.coerce(total) - 1
        if surd_sign(d) < 0:
            d = -d
        if not d:
            return PrecReal(mpmath.mpf(0), 64)
        return surd_eval(d, 64)
    return PrecReal(mpmath.mpf(abs(float(total) - 1.0)), 53)


@dataclass
class EventLaw:
    """One-step law of the peeling process.

    ``supports[tag] = (lo, hi)`` bounds the index of each family, ``hi`` being
    ``None`` for unbounded families. ``terminal_mass`` is the probability that
    the process stops (finite regime only).
    """

    regime: str
    p: Optional[int]
    q: Optional[int]
    family_masses: Dict[str, Any]
    supports: Dict[str, Tuple[int, Optional[int]]]
    normalization_defect: PrecReal
    terminal_mass: Any = 0
    exact: bool = True
    tail_exponents: Dict[str, float] = field(default_factory=dict)

    def in_support(self, event: PeelingEvent) -> bool:
        lo, hi = self.supports[event.tag]
        return lo <= event.k and (hi is None or event.k <= hi)

    def weight(self, event: PeelingEvent) -> Any:
        """Probability of ``event``, exact where the boundary data is exact."""
        if not self.in_support(event):
            return 0
        return self._weight(event.tag, event.k)

    def float_weights(self, tag: str, ks: Any) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        lo, hi = self.supports[tag]
        out = np.zeros(ks.shape)
        mask = (ks >= lo) if hi is None else (ks >= lo) & (ks <= hi)
        if mask.any():
            out[mask] = self._float_weights(tag, ks[mask])
        return out

    def float_masses(self) -> Dict[str, float]:
        return {tag: _to_float(m) for tag, m in self.family_masses.items()}

    def events(self, k_max: int) -> List[Tuple[PeelingEvent, Any]]:
        """All events with index at most ``k_max`` and their weights."""
        rows: List[Tuple[PeelingEvent, Any]] = []
        for tag in FAMILIES:
            lo, hi = self.supports[tag]
            top = k_max if hi is None else min(hi, k_max)
            for k in range(lo, top + 1):
                rows.append((PeelingEvent(tag, k), self._weight(tag, k)))
        return rows

    def _weight(self, tag: str, k: int) -> Any:
        raise NotImplementedError

    def _float_weights(self, tag: str, ks: np.ndarray) -> np.ndarray:
        return np.array([_to_float(self._weight(tag, int(k))) for k in ks])


# ---------- full plane ----------


@dataclass
class FullplaneLaw(EventLaw):
    lookup: Optional[BoundaryLookup] = None
    constants: Optional[CriticalConstants] = None

    def _coef(self, tag: str) -> QuadSurd:
        cc = self.constants
        c = cc.t_over_u
        return c * cc.nu_c if tag in ("Cm", "Lm", "Rm") else c

    def _weight(self, tag: str, k: int) -> Any:
        if tag in ("Cp", "Cm"):
            return self._coef(tag)
        name, idx = ("zeta1", k) if tag in ("Lp", "Rm") else ("zeta0", k + 1)
        return _ratio([self._coef(tag), self.lookup.value(name, idx)])

    def _float_weights(self, tag: str, ks: np.ndarray) -> np.ndarray:
        coef = float(self._coef(tag))
        if tag in ("Cp", "Cm"):
            return np.full(ks.shape, coef)
        if tag in ("Lp", "Rm"):
            return coef * self.lookup.array("zeta1", ks)
        return coef * self.lookup.array("zeta0", ks + 1)


def law_fullplane(
    bs: Optional[BoundarySeries] = None,
    cc: Optional[CriticalConstants] = None,
    lookup: Optional[BoundaryLookup] = None,
    config: Optional[Dict[str, Any]] = None,
) -> FullplaneLaw:
    """Step law of the full-plane peeling (i.i.d. increments).

    ``P(Cp) = c``, ``P(Cm) = nu c``, ``P(Lp(k)) = c xi_k``,
    ``P(Lm(k)) = nu c zeta_(k+1)``, ``P(Rp(k)) = c zeta_(k+1)`` and
    ``P(Rm(k)) = nu c xi_k``.
    """
    cc = cc or constants_critical()
    if lookup is None:
        lookup = (
            BoundaryLookup(config, series=bs)
            if bs is not None or config is not None
            else default_lookup()
        )
    v = values_at_uc()
    c, nu = cc.t_over_u, cc.nu_c
    masses = {
        "Cp": c,
        "Cm": nu * c,
        "Lp": c * v.Z1_at_uc,
        "Lm": nu * c * (v.Z0_at_uc - 1),
        "Rp": c * (v.Z0_at_uc - 1),
        "Rm": nu * c * v.Z1_at_uc,
    }
    supports = {tag: (0, 0) if tag in ("Cp", "Cm") else (0, None) for tag in FAMILIES}
    return FullplaneLaw(
        regime="fullplane",
        p=None,
        q=None,
        family_masses=masses,
        supports=supports,
        normalization_defect=_defect(sum(masses.values(), QuadSurd(0))),
        exact=True,
        tail_exponents={tag: TAIL_EXPONENT for tag in FAMILIES},
        lookup=lookup,
        constants=cc,
    )


# ---------- half plane ----------


@dataclass
class HalfplaneLaw(EventLaw):
    lookup: Optional[BoundaryLookup] = None
    constants: Optional[CriticalConstants] = None
    row_p_cap: int = 8
    row_k_cap: int = 40
    big_masses: Dict[str, Any] = field(default_factory=dict)

    def _a(self, name: str, k: int) -> Any:
        return self.lookup.value(name, k, self.exact)

    @cached_property
    def _columns(self) -> Dict[Tuple[int, int], QuadSurd]:
        return column_table(self.row_p_cap + 1, self.row_k_cap)

    def _exact_rows(self) -> bool:
        return self.p <= self.row_p_cap

    def _big_exact_cap(self, tag: str) -> int:
        return self.row_k_cap if tag == "Rp" else self.row_k_cap - 1

    @cached_property
    def _big_tails(self) -> Dict[str, Tuple[Any, int]]:
        """Mass of each swallowing family left past the exact column entries."""
        out: Dict[str, Tuple[Any, int]] = {}
        for tag in ("Rp", "Rm"):
            cap = self._big_exact_cap(tag)
            known = _total([self._big_exact(tag, j) for j in range(1, cap + 1)])
            out[tag] = (_total([self.big_masses[tag], -known]), cap)
        return out

    def _big_exact(self, tag: str, j: int) -> QuadSurd:
        cc, p = self.constants, self.p
        alpha_p = self._a("alpha", p)
        if tag == "Rp":
            return _ratio([cc.t_over_u, self._a("alpha", 1), self._columns[(p + 1, j)]], alpha_p)
        return _ratio([cc.nu_c, cc.t_over_u, self._columns[(p, j + 1)]], alpha_p)

    def _big_weight(self, tag: str, j: int) -> Any:
        if self._exact_rows():
            tail, cap = self._big_tails[tag]
            if j <= cap:
                return self._big_exact(tag, j)
            return _to_float(tail) * j ** (-TAIL_EXPONENT) / float(mpmath.zeta(TAIL_EXPONENT, cap + 1))
        alpha_one = values_at_uc().A_at_uc_over_a0
        share = self._a("alpha", j)
        if isinstance(share, float) or not self.exact:
            return _to_float(self.big_masses[tag]) * _to_float(share) / float(alpha_one - 1)
        return self.big_masses[tag] * share / (alpha_one - 1)

    def _weight(self, tag: str, k: int) -> Any:
        cc, p = self.constants, self.p
        c, nu = cc.t_over_u, cc.nu_c
        a = self._a
        alpha_p = a("alpha", p)
        if tag == "Cp":
            w = _ratio([c, a("alpha", p + 2)], alpha_p)
        elif tag == "Cm":
            w = nu * c
        elif tag == "Lp":
            w = _ratio([c, a("alpha", p + 1), a("zeta1", k)], alpha_p)
        elif tag == "Lm":
            w = _ratio([nu, c, a("zeta0", k + 1)])
        elif k > p:
            w = self._big_weight(tag, k - p)
        elif tag == "Rp":
            w = _ratio([c, a("zeta0", k + 1), a("alpha", p - k + 1)], alpha_p)
        else:
            w = _ratio([nu, c, a("zeta1", k), a("alpha", p - k)], alpha_p)
        return w if self.exact else _to_float(w)

    def _float_weights(self, tag: str, ks: np.ndarray) -> np.ndarray:
        cc, p, lk = self.constants, self.p, self.lookup
        c, nu = float(cc.t_over_u), float(cc.nu_c)
        alpha_p = float(lk.array("alpha", [p])[0])
        if tag == "Cp":
            return np.full(ks.shape, c * float(lk.array("alpha", [p + 2])[0]) / alpha_p)
        if tag == "Cm":
            return np.full(ks.shape, nu * c)
        if tag == "Lp":
            return c * float(lk.array("alpha", [p + 1])[0]) * lk.array("zeta1", ks) / alpha_p
        if tag == "Lm":
            return nu * c * lk.array("zeta0", ks + 1)
        out = np.empty(ks.shape)
        small = ks <= p
        kk = ks[small]
        if tag == "Rp":
            out[small] = c * lk.array("zeta0", kk + 1) * lk.array("alpha", p - kk + 1) / alpha_p
        else:
            out[small] = nu * c * lk.array("zeta1", kk) * lk.array("alpha", p - kk) / alpha_p
        if (~small).any():
            if self._exact_rows():
                out[~small] = [_to_float(self._big_weight(tag, int(k) - p)) for k in ks[~small]]
            else:
                alpha_one = float(values_at_uc().A_at_uc_over_a0)
                mass = _to_float(self.big_masses[tag])
                out[~small] = mass * lk.array("alpha", ks[~small] - p) / (alpha_one - 1)
        return out


def _halfplane_masses(
    p: int, lookup: BoundaryLookup, cc: CriticalConstants, exact: bool
) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    v = values_at_uc()
    if exact:
        c, nu = cc.t_over_u, cc.nu_c
        a = lambda name, k: lookup.exact(name, k)  # noqa: E731
        alpha_p = a("alpha", p)
        rp_small = sum(
            (a("zeta0", k + 1) * a("alpha", p - k + 1) for k in range(p + 1)), QuadSurd(0)
        )
        rm_small = sum(
            (a("zeta1", k) * a("alpha", p - k) for k in range(p + 1)), QuadSurd(0)
        )
        w_p1, w_p = a("slice_w", p + 1), a("slice_w", p)
        zeta_one, xi_one = v.Z0_at_uc, v.Z1_at_uc
    else:
        c, nu = float(cc.t_over_u), float(cc.nu_c)
        ks = np.arange(p + 1)
        alpha_p = float(lookup.array("alpha", [p])[0])
        rp_small = float(np.dot(lookup.array("zeta0", ks + 1), lookup.array("alpha", p - ks + 1)))
        rm_small = float(np.dot(lookup.array("zeta1", ks), lookup.array("alpha", p - ks)))
        a = lambda name, k: float(lookup.array(name, [k])[0])  # noqa: E731
        w_p1, w_p = a("slice_w", p + 1), a("slice_w", p)
        zeta_one, xi_one = float(v.Z0_at_uc), float(v.Z1_at_uc)

    big = {
        "Rp": c * a("alpha", 1) * (w_p1 - a("zeta0", p + 1)) / alpha_p,
        "Rm": nu * c * (w_p - a("zeta0", p) - a("zeta1", p)) / alpha_p,
    }
    masses = {
        "Cp": c * a("alpha", p + 2) / alpha_p,
        "Cm": nu * c,
        "Lp": c * a("alpha", p + 1) * xi_one / alpha_p,
        "Lm": nu * c * (zeta_one - 1),
        "Rp": c * rp_small / alpha_p + big["Rp"],
        "Rm": nu * c * rm_small / alpha_p + big["Rm"],
    }
    return masses, big


def law_halfplane(
    p: int,
    bs: Optional[BoundarySeries] = None,
    cc: Optional[CriticalConstants] = None,
    lookup: Optional[BoundaryLookup] = None,
    config: Optional[Dict[str, Any]] = None,
    numeric: bool = False,
) -> HalfplaneLaw:
    """Step law of the half-plane peeling with ``p`` plus edges on the boundary.

    It is the Doob transform of the full-plane law by ``alpha``:
    ``P_p(s) = alpha_(p + X_1(s)) / alpha_p * P_inf(s)`` whenever the event
    does not reach the end of the plus boundary. Exact in Q(sqrt7) while
    ``p + 2`` stays within the exact boundary order, float beyond;
    ``numeric=True`` skips the exact evaluation.

    Raises:
        SequenceTooShort: An explicit ``bs`` does not reach index ``p + 2``.
        ValueError: ``p < 0``.
    """
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    config = config or (lookup.config if lookup else default_config())
    if bs is not None:
        if p + 2 >= bs.order:
            raise SequenceTooShort(f"alpha known to index {bs.order - 1}, p + 2 = {p + 2}")
        lookup = BoundaryLookup(config, series=bs)
    elif lookup is None:
        lookup = default_lookup()
    cc = cc or constants_critical()
    exact = p + 2 <= lookup.exact_order and not numeric
    masses, big = _halfplane_masses(p, lookup, cc, exact)
    total = sum(masses.values(), QuadSurd(0)) if exact else sum(masses.values())
    sampling = config["sampling"]
    row_p_cap = int(sampling["row_exact_p_cap"])
    far_exponent = TAIL_EXPONENT if p <= row_p_cap else 4 / 3
    supports: Dict[str, Tuple[int, Optional[int]]] = {"Cp": (0, 0), "Cm": (0, 0)}
    supports.update({tag: (0, None) for tag in ("Lp", "Lm", "Rp", "Rm")})
    return HalfplaneLaw(
        regime="halfplane",
        p=p,
        q=None,
        family_masses=masses,
        supports=supports,
        normalization_defect=_defect(total),
        exact=exact,
        tail_exponents={
            "Cp": TAIL_EXPONENT,
            "Cm": TAIL_EXPONENT,
            "Lp": TAIL_EXPONENT,
            "Lm": TAIL_EXPONENT,
            "Rp": far_exponent,
            "Rm": far_exponent,
        },
        lookup=lookup,
        constants=cc,
        row_p_cap=row_p_cap,
        row_k_cap=int(sampling["row_exact_k_cap"]),
        big_masses=big,
    )


class HalfplaneLaws:
    """LRU cache of half-plane laws keyed by ``p``."""

    def __init__(self, config: Optional[Dict[str, Any]] = None, numeric: bool = True) -> None:
        self.config = config or default_config()
        self.lookup = BoundaryLookup(self.config)
        self.numeric = numeric
        size = int(self.config["sampling"]["halfplane_cache"])
        self.get = lru_cache(maxsize=size)(self._build)

    def _build(self, p: int) -> HalfplaneLaw:
        return law_halfplane(p, lookup=self.lookup, config=self.config, numeric=self.numeric)


# ---------- finite boundary ----------


def finite_support(q: int) -> Tuple[int, int]:
    """Largest ``k`` of ``L(k)`` and of ``R(p+k)`` with mass on a boundary with ``q`` minus edges.

    A bound below the family's first index means the family is empty.
    """
    qq = q - 1
    return (qq // 2 if qq >= 1 else -1), (qq - 1) // 2


@dataclass
class FiniteLaw(EventLaw):
    table_weights: Dict[Tuple[str, int], mpmath.mpf] = field(default_factory=dict)

    def _weight(self, tag: str, k: int) -> Any:
        return PrecReal(self.table_weights.get((tag, k), mpmath.mpf(0)), 64)


def law_finite(
    p: int,
    q: int,
    table: CoeffTable,
    N: Optional[int] = None,
    config: Optional[Dict[str, Any]] = None,
) -> FiniteLaw:
    """Step law under the Dobrushin boundary with ``p`` plus and ``q`` minus edges.

    Weights are ratios ``t z z' / z_{p,q}`` of partition functions summed to
    order ``N`` at (nu_c, t_c); the peeled edge is on the minus side. When
    the minus boundary is the single peeled edge, the left families are
    empty: their configurations coincide with ``Rp(p)`` and ``Rm(p)``.

    Raises:
        ValueError: ``q < 1``, a non-critical table or ``N`` out of range.
        LawToleranceExceeded: The truncated weights miss more than
            ``sampling.finite_defect_max`` of the mass.
    """
    if q < 1:
        raise ValueError("the peeled edge must be a minus edge (q >= 1)")
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    if table.mode != "evaluated" or not table.critical:
        raise ValueError("finite laws need a table evaluated at the critical point")
    N = table.n_max if N is None else N
    if N < 0 or N > table.n_max:
        raise ValueError(f"N={N} out of range 0..{table.n_max}")
    config = config or default_config()
    bits = int(config["precision"]["bits"])
    cc = constants_critical()

    cache: Dict[Tuple[int, int], mpmath.mpf] = {}

    def z(a: int, b: int) -> mpmath.mpf:
        if (a, b) not in cache:
            cache[(a, b)] = eval_partition(
                table, a, b, nu="critical", tail_mode="none", precision_bits=bits, order=N
            ).value.value
        return cache[(a, b)]

    qq = q - 1
    with mpmath.workprec(bits):
        t = cc.t_c(bits).value
        nu = surd_eval(cc.nu_c, bits).value
        Z = z(p, q)
        if Z == 0:
            raise ValueError(f"z_({p},{q}) vanishes at order {N}")
        weights: Dict[Tuple[str, int], mpmath.mpf] = {
            ("Cp", 0): t * z(p + 2, qq) / Z,
            ("Cm", 0): nu * t * z(p, qq + 2) / Z,
        }
        l_hi, j_hi = finite_support(q)
        for k in range(l_hi + 1):
            weights[("Lp", k)] = t * z(p + 1, qq - k) * z(1, k) / Z
            weights[("Lm", k)] = nu * t * z(p, qq - k + 1) * z(0, k + 1) / Z
        for k in range(p + 1):
            weights[("Rp", k)] = t * z(k + 1, 0) * z(p - k + 1, qq) / Z
            weights[("Rm", k)] = nu * t * z(k, 1) * z(p - k, qq + 1) / Z
        for j in range(1, j_hi + 1):
            weights[("Rp", p + j)] = t * z(p + 1, j) * z(1, qq - j) / Z
            weights[("Rm", p + j)] = nu * t * z(p, j + 1) * z(0, qq - j + 1) / Z

        terminal = mpmath.mpf(0)
        if (p, q) == (1, 1):
            terminal = 1 / Z
        elif (p, q) == (0, 2):
            terminal = nu / Z
        masses = {tag: mpmath.mpf(0) for tag in FAMILIES}
        for (tag, _), w in weights.items():
            masses[tag] += w
        defect = abs(1 - sum(masses.values()) - terminal)

    limit = float(config["sampling"]["finite_defect_max"])
    if defect > limit:
        raise LawToleranceExceeded(
            f"finite law at ({p},{q}) misses {float(defect):.3g} of its mass at order {N}"
        )
    supports: Dict[str, Tuple[int, Optional[int]]] = {
        "Cp": (0, 0),
        "Cm": (0, 0),
        "Lp": (0, l_hi),
        "Lm": (0, l_hi),
        "Rp": (0, p + max(j_hi, 0)),
        "Rm": (0, p + max(j_hi, 0)),
    }
    return FiniteLaw(
        regime="finite",
        p=p,
        q=q,
        family_masses={tag: PrecReal(m, bits) for tag, m in masses.items()},
        supports=supports,
        normalization_defect=PrecReal(defect, bits),
        terminal_mass=PrecReal(terminal, bits),
        exact=False,
        table_weights=weights,
    )


# ==================== Sampling ====================


def _uniform64(rng: np.random.Generator) -> int:
    return int(rng.integers(0, TWO_64, dtype=np.uint64))


def _tolerance(law: EventLaw, config: Dict[str, Any]) -> float:
    sampling = config["sampling"]
    if law.regime == "finite":
        return float(sampling["finite_defect_max"])
    return float(sampling["law_tolerance"])


def family_thresholds(law: EventLaw) -> List[int]:
    """Cumulative family masses as 64-bit integer thresholds.

    A draw at or above the last threshold is the terminal event. Without a
    terminal mass the last family absorbs the normalization defect.
    """
    masses = [law.family_masses[tag] for tag in FAMILIES] + [law.terminal_mass]
    with mpmath.workprec(128):
        values = []
        for m in masses:
            if isinstance(m, PrecReal):
                values.append(m.value)
            elif _is_exact(m):
                values.append(surd_eval(m, 128).value if m else mpmath.mpf(0))
            else:
                values.append(mpmath.mpf(m))
        total = sum(values)
        out = []
        acc = mpmath.mpf(0)
        for v in values[:-1]:
            acc += v
            out.append(int(mpmath.floor(acc / total * TWO_64)))
    if not values[-1]:
        out[-1] = TWO_64
    return out


def scan_index(law: EventLaw, tag: str, target: float, rng: np.random.Generator) -> int:
    lo, hi = law.supports[tag]
    if hi is not None and hi == lo:
        return lo
    acc = 0.0
    start = lo
    scan_limit = 1 << 16
    while True:
        stop = start + SCAN_BLOCK if hi is None else min(start + SCAN_BLOCK, hi + 1)
        ks = np.arange(start, stop)
        cums = acc + np.cumsum(law.float_weights(tag, ks))
        pos = int(np.searchsorted(cums, target, side="right"))
        if pos < len(ks):
            return int(ks[pos])
        acc = float(cums[-1])
        start = stop
        if hi is not None and start > hi:
            return hi
        if hi is None and start >= scan_limit:
            # the remaining mass follows the power-law tail of the family
            exponent = law.tail_exponents.get(tag, TAIL_EXPONENT)
            v = 1.0 - rng.random()
            return int(start * v ** (-1.0 / (exponent - 1.0)))


def sample_event(
    law: EventLaw,
    rng: np.random.Generator,
    config: Optional[Dict[str, Any]] = None,
) -> Optional[PeelingEvent]:
    """Draws one event: the family from 64-bit thresholds, then the index by a scan.

    Returns ``None`` when a finite law picks its terminal mass.

    Raises:
        LawToleranceExceeded: The law's normalization defect is above the tolerance.
    """
    config = config or default_config()
    tol = _tolerance(law, config)
    if float(law.normalization_defect) > tol:
        raise LawToleranceExceeded(
            f"normalization defect {float(law.normalization_defect):.3g} exceeds {tol:.3g}"
        )
    thresholds = family_thresholds(law)
    u = _uniform64(rng)
    family = None
    for tag, threshold in zip(FAMILIES, thresholds):
        if u < threshold:
            family = tag
            break
    if family is None:
        return None
    mass = law.float_masses()[family]
    target = (_uniform64(rng) + 0.5) / TWO_64 * mass
    return PeelingEvent(family, scan_index(law, family, target, rng))


# ==================== Derived quantities ====================


def halfplane_mean_increment(p: int, lookup: Optional[BoundaryLookup] = None) -> float:
    """``E_p[X_1]``; tends to ``mu - c_inf = -sqrt7/84`` as p grows."""
    law = law_halfplane(p, lookup=lookup)
    masses = law.float_masses()
    ks = np.arange(p + 1)
    total = 2.0 * masses["Cp"] + masses["Lp"]
    total += float(np.dot(1 - ks, law.float_weights("Rp", ks)))
    total -= float(np.dot(ks, law.float_weights("Rm", ks)))
    total += (1 - p) * _to_float(law.big_masses["Rp"]) - p * _to_float(law.big_masses["Rm"])
    return total


def prob_jump_below(p: int, m: int, lookup: Optional[BoundaryLookup] = None) -> float:
    """``P_p(P_1 <= m)``: the step leaves at most ``m`` plus edges."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    law = law_halfplane(p, lookup=lookup)
    masses = law.float_masses()
    d = m - p
    total = 0.0
    if d >= 2:
        total += masses["Cp"]
    if d >= 1:
        total += masses["Lp"]
    if d >= 0:
        total += masses["Cm"] + masses["Lm"]
    total += float(law.float_weights("Rp", np.arange(max(1 - d, 0), p + 1)).sum())
    total += float(law.float_weights("Rm", np.arange(max(-d, 0), p + 1)).sum())
    if m >= 1:
        total += _to_float(law.big_masses["Rp"])
    total += _to_float(law.big_masses["Rm"])
    return total


def marginal_tail(k: int, lookup: Optional[BoundaryLookup] = None) -> Dict[str, Any]:
    """Full-plane ``P(X_1 = -k)`` and ``P(Y_1 = -k)`` for ``k >= 2``.

    ``X_1 = -k`` comes from ``Rp(k+1)`` and ``Rm(k)``, ``Y_1 = -k`` from
    ``Lm(k)`` and ``Lp(k-1)``. The ratio ``P(Y_1 = -k) / P(X_1 = -k)`` tends
    to ``(nu + alpha_1) / (1 + nu alpha_1)``.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    law = law_fullplane(lookup=lookup or default_lookup())
    x = _total([law.weight(PeelingEvent("Rp", k + 1)), law.weight(PeelingEvent("Rm", k))])
    y = _total([law.weight(PeelingEvent("Lm", k)), law.weight(PeelingEvent("Lp", k - 1))])
    return {"k": k, "x": x, "y": y}


def describe_law(law: EventLaw, k_max: int) -> Dict[str, Any]:
    """JSON-ready summary: family masses, defect and the events up to ``k_max``."""
    def fmt(x: Any) -> Any:
        if isinstance(x, QuadSurd):
            return {"exact": str(x), "value": float(x)}
        if isinstance(x, Fraction):
            return {"exact": str(x), "value": float(x)}
        return {"value": _to_float(x)}

    rows = []
    for event, w in law.events(k_max):
        d = displacement(event, law.regime, law.p)
        rows.append({"event": str(event), "dx": d.dx, "dy": d.dy, **fmt(w)})
    return {
        "regime": law.regime,
        "p": law.p,
        "q": law.q,
        "exact": law.exact,
        "family_masses": {tag: fmt(m) for tag, m in law.family_masses.items()},
        "terminal_mass": _to_float(law.terminal_mass),
        "normalization_defect": float(law.normalization_defect),
        "events": rows,
    }

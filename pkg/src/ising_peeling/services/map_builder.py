"""Constructs explicit maps: exact finite sampling, peeling replay and half-plane balls.

Every construction goes through one step: glue a triangle on the peeled
slot, then either open a new vertex or split the remaining region at a
vertex of its boundary. A region with slots ``s_0..s_(L-1)`` (Dobrushin
word read from ``s_0``) is always peeled at ``s_(L-1)``; its third vertex at
boundary position ``j`` splits it into ``s_0..s_(j-1) + [b]`` and
``s_j..s_(L-2) + [c]``.
"""

import copy
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ising_peeling.config import default_config
from ising_peeling.services.peeling_laws import (
    EventOutOfSupport,
    HalfplaneLaws,
    PeelingEvent,
    finite_support,
    sample_event,
)
from ising_peeling.services.planar_map import (
    EXTERNAL,
    HOLE,
    INTERNAL,
    MINUS,
    PLUS,
    UNEXPLORED,
    Ball,
    ColoredPlanarMap,
    MapBuilder,
    ball,
    canonical_form,
    empty_map,
    vertex_distances,
)
from ising_peeling.services.tutte_series import CoeffTable, build_coeff_table, coeff


class FillerMissing(RuntimeError):
    """A region was swallowed while full maps are requested but no filler is set."""


# ==================== Weights and exact choice ====================


class _Weights:
    """``[t^n] z_{a,b}`` as exact Fractions (poly/rational tables) or scaled floats."""

    def __init__(self, table: CoeffTable, nu: Any = None) -> None:
        if table.backend == "surd":
            raise ValueError("sampling needs a poly, rational or float table")
        self.table = table
        self.exact = table.backend in ("poly", "rational")
        if table.backend == "poly":
            if nu is None:
                raise ValueError("a poly table needs an explicit rational nu")
            self.nu: Any = Fraction(nu)
        elif table.backend == "rational":
            self.nu = Fraction(table.nu)
        else:
            self.nu = float(table.nu)
        self._cache: Dict[Tuple[int, int, int], Any] = {}

    def z(self, a: int, b: int, n: int) -> Any:
        key = (a, b, n)
        if key not in self._cache:
            t = self.table
            if n < 0 or n > t.n_max or not t.in_support(a, b, n):
                value: Any = Fraction(0) if self.exact else 0.0
            elif t.backend == "poly":
                value = Fraction(coeff(t, a, b, n).evaluate(self.nu))
            elif t.backend == "rational":
                value = coeff(t, a, b, n)
            else:
                value = t.scaled(a, b, n)
            self._cache[key] = value
        return self._cache[key]


def randbelow(n: int, rng: np.random.Generator) -> int:
    """Uniform integer in ``[0, n)`` for arbitrarily large ``n``."""
    if n <= 0:
        raise ValueError("n must be positive")
    if n < 2**62:
        return int(rng.integers(0, n))
    bits = n.bit_length()
    chunks = (bits + 31) // 32
    while True:
        r = 0
        for _ in range(chunks):
            r = (r << 32) | int(rng.integers(0, 2**32))
        r >>= chunks * 32 - bits
        if r < n:
            return r


def choose(weights: List[Any], rng: np.random.Generator, exact: bool) -> int:
    """Index drawn proportionally to ``weights``; exact rationals are drawn without rounding."""
    if exact:
        fracs = [Fraction(w) for w in weights]
        den = math.lcm(*(f.denominator for f in fracs))
        ints = [f.numerator * (den // f.denominator) for f in fracs]
        r = randbelow(sum(ints), rng)
        for i, w in enumerate(ints):
            if r < w:
                return i
            r -= w
        raise RuntimeError("exact choice fell through")
    cum = np.cumsum(np.asarray(weights, dtype=np.float64))
    if cum[-1] <= 0:
        raise ValueError("all weights vanish")
    i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(i, len(weights) - 1)


# ==================== Region decomposition ====================


@dataclass
class _Region:
    slots: List[int]
    spins: List[int]
    n: int


@dataclass(frozen=True)
class _Move:
    """One way to peel a region: ``j is None`` opens a new vertex."""

    sigma: int
    j: Optional[int] = None
    n1: int = 0


def _counts(spins: List[int]) -> Tuple[int, int]:
    p = sum(1 for s in spins if s == PLUS)
    return p, len(spins) - p


def _dobrushin_start(spins: List[int]) -> int:
    """Index where the plus run begins (0 for a single-spin word)."""
    L = len(spins)
    for i in range(L):
        if spins[i] == PLUS and spins[i - 1] == MINUS:
            return i
    return 0


def _normalized(region: _Region) -> Tuple[List[int], List[int], int]:
    """Slots and working spins with a minus edge last; ``flip`` is -1 for all-plus regions."""
    flip = -1 if all(s == PLUS for s in region.spins) else 1
    work = [flip * s for s in region.spins]
    i = _dobrushin_start(work)
    return region.slots[i:] + region.slots[:i], work[i:] + work[:i], flip


def _moves(work: List[int], n: int, W: _Weights) -> Tuple[List[_Move], List[Any]]:
    L = len(work)
    P, Q = _counts(work)
    moves: List[_Move] = [_Move(PLUS), _Move(MINUS)]
    weights: List[Any] = [W.z(P + 2, Q - 1, n - 1), W.nu * W.z(P, Q + 1, n - 1)]
    for j in range(L):
        for sigma in (PLUS, MINUS):
            a1, b1 = _counts(work[:j] + [sigma])
            a2, b2 = _counts(work[j : L - 1] + [sigma])
            factor = W.nu if sigma == MINUS else 1
            for n1 in range(n):
                w = W.z(a1, b1, n1) * W.z(a2, b2, n - 1 - n1)
                if w:
                    moves.append(_Move(sigma, j, n1))
                    weights.append(factor * w)
    return moves, weights


def _apply_move(
    builder: MapBuilder, slots: List[int], work: List[int], flip: int, n: int, move: _Move
) -> List[_Region]:
    sigma = move.sigma
    apex = None if move.j is None else builder.dest[slots[move.j]]
    _, b, c = builder.reveal(slots[-1], flip * sigma, apex)
    L = len(slots)
    if move.j is None:
        return [_Region(slots[:-1] + [c, b], [flip * s for s in work[:-1] + [sigma, sigma]], n - 1)]
    j = move.j
    r1 = _Region(slots[:j] + [b], [flip * s for s in work[:j] + [sigma]], move.n1)
    r2 = _Region(slots[j : L - 1] + [c], [flip * s for s in work[j : L - 1] + [sigma]], n - 1 - move.n1)
    return [r1, r2]


def _glue_edge_map(builder: MapBuilder, region: _Region) -> None:
    if len(region.slots) != 2:
        raise RuntimeError(f"a {len(region.slots)}-gon cannot be empty")
    builder.glue(region.slots[0], region.slots[1])


def _fill(builder: MapBuilder, region: _Region, W: _Weights, rng: np.random.Generator) -> None:
    stack = [region]
    while stack:
        reg = stack.pop()
        if reg.n == 0:
            _glue_edge_map(builder, reg)
            continue
        slots, work, flip = _normalized(reg)
        moves, weights = _moves(work, reg.n, W)
        if W.exact:
            total = W.z(*_counts(work), reg.n)
            if sum(weights) != total:
                raise RuntimeError(
                    f"budget inconsistency at {_counts(work)}, n={reg.n}: {sum(weights)} != {total}"
                )
        move = moves[choose(weights, rng, W.exact)]
        stack.extend(_apply_move(builder, slots, work, flip, reg.n, move))


def sample_finite_map(
    p: int,
    q: int,
    n: int,
    table: CoeffTable,
    rng: np.random.Generator,
    nu: Any = None,
) -> ColoredPlanarMap:
    """Exact sample of a (p,q)-boundary triangulation with ``n`` internal faces.

    Each map is drawn with probability ``nu^#mono / [t^n] z_{p,q}``.

    Args:
        p: Plus boundary edges.
        q: Minus boundary edges.
        n: Number of internal faces (``<= table.n_max``).
        table: Poly (with ``nu``), rational or float coefficient table.
        rng: Random generator.
        nu: Rational evaluation point for poly tables.

    Raises:
        ValueError: Empty support or ``n`` beyond the table.
    """
    if p < 0 or q < 0 or p + q == 0:
        raise ValueError(f"boundary ({p},{q}) must have at least one edge")
    if n > table.n_max:
        raise ValueError(f"n={n} beyond table order {table.n_max}")
    W = _Weights(table, nu)
    if not W.z(p, q, n):
        raise ValueError(f"no map with boundary ({p},{q}) and {n} faces")
    builder = MapBuilder()
    slots = builder.polygon([PLUS] * p + [MINUS] * q)
    _fill(builder, _Region(slots, [PLUS] * p + [MINUS] * q, n), W, rng)
    return builder.freeze(p, q)


def enumerate_finite_maps(
    p: int, q: int, n: int, table: CoeffTable, nu: Any = None
) -> Dict[Tuple[Any, ...], Any]:
    """Every (p,q)-map with ``n`` faces, keyed by canonical form, with its weight ``nu^#mono``.

    Exhaustive over the peeling decomposition; meant for small ``n`` and
    exact tables.
    """
    W = _Weights(table, nu)
    if not W.exact:
        raise ValueError("enumeration needs an exact table")
    out: Dict[Tuple[Any, ...], Any] = {}
    builder = MapBuilder()
    slots = builder.polygon([PLUS] * p + [MINUS] * q)
    todo = [(builder, [_Region(slots, [PLUS] * p + [MINUS] * q, n)], Fraction(1))]
    while todo:
        b, pending, weight = todo.pop()
        if not pending:
            key = canonical_form(b.freeze(p, q))
            out[key] = out.get(key, 0) + weight
            continue
        reg, rest = pending[-1], pending[:-1]
        if reg.n == 0:
            glue = W.z(*_counts(reg.spins), 0)
            if glue:
                _glue_edge_map(b, reg)
                todo.append((b, rest, weight * glue))
            continue
        slots_r, work, flip = _normalized(reg)
        moves, weights = _moves(work, reg.n, W)
        for move, w in zip(moves, weights):
            if not w:
                continue
            child = copy.deepcopy(b)
            regions = _apply_move(child, slots_r, work, flip, reg.n, move)
            factor = W.nu if move.sigma == MINUS else 1
            todo.append((child, rest + regions, weight * factor))
    return out


# ==================== Fillers ====================


class CriticalFiller:
    """Fills a swallowed region with a critical Boltzmann map of bounded size.

    The face budget is drawn from ``[t^n] z_{a,b} t_c^n`` truncated at the
    table order, then the region is filled exactly at that budget.
    """

    def __init__(self, table: CoeffTable, rng: np.random.Generator) -> None:
        if table.backend != "float" or not table.critical:
            raise ValueError("the filler needs a critical float table")
        self.table = table
        self.rng = rng
        self.weights = _Weights(table)
        self.filled = 0
        self.skipped = 0

    @classmethod
    def from_config(
        cls, rng: np.random.Generator, config: Optional[Dict[str, Any]] = None
    ) -> "CriticalFiller":
        config = config or default_config()
        n_max = int(config["sampling"]["filler_max_faces"])
        table = build_coeff_table(n_max, "evaluated", "critical", config, backend="float")
        return cls(table, rng)

    def budget(self, a: int, b: int) -> Optional[int]:
        ws = [self.weights.z(a, b, n) for n in range(self.table.n_max + 1)]
        if sum(ws) <= 0:
            return None
        return choose(ws, self.rng, exact=False)

    def fill(self, builder: MapBuilder, slots: List[int], spins: List[int]) -> bool:
        n = self.budget(*_counts(spins))
        if n is None:
            self.skipped += 1
            return False
        _fill(builder, _Region(list(slots), list(spins), n), self.weights, self.rng)
        self.filled += 1
        return True


# ==================== Explored maps ====================


@dataclass
class ExploredMap:
    """Explored part of a peeling: revealed faces plus one hole.

    The hole's frontier is ``plus`` (from the current root to the far
    junction), then ``minus_right``, then ``minus_left`` whose last slot is
    the next edge to peel. For the half-plane the minus arc is infinite: a
    gap separates ``minus_right`` from ``minus_left`` and both rays are
    materialized lazily.
    """

    builder: MapBuilder
    plus: List[int]
    minus_right: List[int]
    minus_left: List[int]
    infinite: bool
    p0: int
    q0: int
    steps: int = 0
    unfilled: int = 0
    terminated: bool = False
    events: List[str] = field(default_factory=list)

    @classmethod
    def finite(cls, p: int, q: int) -> "ExploredMap":
        if q < 1:
            raise ValueError("the minus boundary must be nonempty")
        builder = MapBuilder()
        slots = builder.polygon([PLUS] * p + [MINUS] * q)
        return cls(builder, slots[:p], [], slots[p:], False, p, q)

    @classmethod
    def halfplane(cls, p: int) -> "ExploredMap":
        if p < 0:
            raise ValueError("p must be >= 0")
        builder = MapBuilder()
        spins = [MINUS, MINUS] + [PLUS] * p + [MINUS]
        vs = [builder.new_vertex() for _ in range(len(spins) + 1)]
        line = [builder.new_half_edge(vs[i + 1], vs[i], 0) for i in range(len(spins))]
        for i, h in enumerate(line):
            if i:
                builder.nxt[h] = line[i - 1]
            builder.boundary_spin[h] = spins[i]
        builder.root = line[2]
        return cls(builder, line[2 : 2 + p], line[2 + p :], line[:2], True, p, 0)

    @property
    def P(self) -> int:
        return len(self.plus)

    @property
    def Q(self) -> float:
        return math.inf if self.infinite else len(self.minus_left) + len(self.minus_right)

    def frontier(self) -> List[int]:
        """Frontier slots in linear order (finite: cyclic from the root)."""
        if self.infinite:
            return self.minus_left + self.plus + self.minus_right
        return self.plus + self.minus_right + self.minus_left

    def frontier_vertices(self) -> List[int]:
        seq = self.frontier()
        out = [self.builder.dest[s] for s in seq]
        if self.infinite and seq:
            out.append(self.builder.origin[seq[-1]])
        return out

    def _new_boundary(self, origin: int, dest: int) -> int:
        h = self.builder.new_half_edge(origin, dest, 0)
        self.builder.boundary_spin[h] = MINUS
        return h

    def ensure_left(self, k: int) -> None:
        while self.infinite and len(self.minus_left) < k:
            anchor = self.frontier()[0]
            h = self._new_boundary(self.builder.dest[anchor], self.builder.new_vertex())
            self.builder.nxt[anchor] = h
            self.minus_left.insert(0, h)

    def ensure_right(self, k: int) -> None:
        while self.infinite and len(self.minus_right) < k:
            anchor = self.frontier()[-1]
            h = self._new_boundary(self.builder.new_vertex(), self.builder.origin[anchor])
            self.builder.nxt[h] = anchor
            self.minus_right.append(h)

    def to_map(self) -> ColoredPlanarMap:
        """Snapshot with the hole materialized as a face of kind ``hole``."""
        b = copy.deepcopy(self.builder)
        if not self.terminated or self.plus:
            b.close(self.frontier(), HOLE, chain=not self.infinite)
        return b.freeze(self.p0, self.q0)

    def reposition(self) -> None:
        """Moves the root of a single-spin minus frontier to the closest frontier vertex.

        Ties go to the first vertex in frontier order.
        """
        dist = vertex_distances(self.builder.freeze(), self.builder.dest[self.builder.root])
        if self.infinite:
            M = self.minus_left + self.minus_right
            cands = [self.builder.dest[s] for s in M] + [self.builder.origin[M[-1]]]
            best = min(range(len(cands)), key=lambda i: (dist.get(cands[i], math.inf), i))
            self.minus_left, self.minus_right = M[:best], M[best:]
            self.ensure_left(2)
            self.ensure_right(1)
        else:
            M = self.minus_left
            cands = [self.builder.dest[s] for s in M]
            best = min(range(len(cands)), key=lambda i: (dist.get(cands[i], math.inf), i))
            self.minus_left = M[best:] + M[:best]


def _swallow(
    emap: ExploredMap, slots: List[int], spins: List[int], filler: Any, full: bool
) -> None:
    if full and filler.fill(emap.builder, slots, spins):
        return
    emap.builder.close(slots, UNEXPLORED)
    emap.unfilled += 1


def apply_event(
    emap: ExploredMap, event: PeelingEvent, filler: Any = None, full: bool = False
) -> ExploredMap:
    """Reveals the triangle behind the peel edge as ``event`` prescribes.

    Swallowed regions are filled when ``full`` is set, otherwise they are
    left as ``unexplored`` faces. The frontier counts move by the event's
    displacement.

    Raises:
        FillerMissing: ``full`` without a filler on a swallowing event.
        EventOutOfSupport: The event does not fit the current frontier.
    """
    if emap.terminated:
        raise ValueError("the exploration has terminated")
    tag, k = event.tag, event.k
    if full and filler is None and tag[0] in "LR":
        raise FillerMissing(f"{event} swallows a region but no filler is set")
    b = emap.builder
    P = emap.P
    sigma = PLUS if tag.endswith("p") else MINUS
    emap.ensure_left(2 + (k if tag[0] == "L" else 0))
    if not emap.infinite:
        l_hi, j_hi = finite_support(len(emap.minus_left))
        if (tag[0] == "L" and k > l_hi) or (tag[0] == "R" and k > P + j_hi):
            raise EventOutOfSupport(f"{event} does not fit a ({P},{emap.Q}) frontier")
    peel = emap.minus_left[-1]

    if tag[0] == "C":
        _, hb, hc = b.reveal(peel, sigma)
        emap.minus_left = emap.minus_left[:-1]
        if sigma == PLUS:
            emap.plus = [hc, hb] + emap.plus
        else:
            emap.minus_left += [hc, hb]
    elif tag[0] == "L":
        apex = b.dest[emap.minus_left[-1 - k]]
        _, hb, hc = b.reveal(peel, sigma, apex)
        gone = emap.minus_left[-1 - k : -1] + [hc]
        emap.minus_left = emap.minus_left[: -1 - k]
        if sigma == PLUS:
            emap.plus = [hb] + emap.plus
        else:
            emap.minus_left.append(hb)
        _swallow(emap, gone, [MINUS] * k + [sigma], filler, full)
    elif k <= P:
        right = emap.minus_right if emap.infinite else emap.minus_left
        if emap.infinite:
            emap.ensure_right(1)
        apex = b.dest[emap.plus[k]] if k < P else b.dest[right[0]]
        _, hb, hc = b.reveal(peel, sigma, apex)
        gone = emap.plus[:k] + [hb]
        emap.plus = emap.plus[k:]
        emap.minus_left = emap.minus_left[:-1]
        if sigma == PLUS:
            emap.plus = [hc] + emap.plus
        else:
            emap.minus_left.append(hc)
        _swallow(emap, gone, [PLUS] * k + [sigma], filler, full)
    else:
        i = k - P
        if emap.infinite:
            emap.ensure_right(i + 1)
            apex = b.dest[emap.minus_right[i]]
            _, hb, hc = b.reveal(peel, sigma, apex)
            gone = emap.plus + emap.minus_right[:i] + [hb]
            emap.minus_right = emap.minus_right[i:]
            emap.minus_left = emap.minus_left[:-1]
        else:
            apex = b.dest[emap.minus_left[i]]
            _, hb, hc = b.reveal(peel, sigma, apex)
            gone = emap.plus + emap.minus_left[:i] + [hb]
            emap.minus_left = emap.minus_left[i:-1]
        emap.plus = []
        if sigma == PLUS:
            emap.plus = [hc]
        else:
            emap.minus_left.append(hc)
        _swallow(emap, gone, [PLUS] * P + [MINUS] * i + [sigma], filler, full)

    emap.steps += 1
    emap.events.append(str(event))
    if not emap.infinite and not emap.minus_left and not emap.minus_right:
        emap.terminated = True
    elif not emap.plus:
        emap.reposition()
    return emap


def truncate_map(emap: ExploredMap) -> ColoredPlanarMap:
    """Explored map without the boundary edges that still touch the hole."""
    return truncate_colored(emap.to_map())


def truncate_colored(m: ColoredPlanarMap) -> ColoredPlanarMap:
    """Deletes edges between a hole and the external face; both merge into face 0.

    Idempotent: the result has no hole face left.
    """
    if m.root < 0:
        return m
    kinds = m.face_kind

    def between_hole_and_outside(h: int) -> bool:
        t = m.twin[h]
        if t < 0:
            return False
        pair = {kinds[m.face[h]], kinds[m.face[t]]}
        return pair == {HOLE, EXTERNAL}

    deleted = {h for h in range(m.n_half_edges) if between_hole_and_outside(h)}
    survivors = [h for h in range(m.n_half_edges) if h not in deleted]
    if not any(kinds[m.face[h]] == INTERNAL for h in survivors):
        return empty_map()
    index = {h: i for i, h in enumerate(survivors)}

    def next_survivor(h: int) -> int:
        x = m.nxt[h]
        for _ in range(m.n_half_edges + 1):
            if x < 0 or x not in deleted:
                return x
            t = m.twin[x]
            x = m.nxt[t] if t >= 0 else -1
        return -1

    face_ids: Dict[int, int] = {}
    face_spin, face_kind = [0], [EXTERNAL]
    twin, nxt, origin, dest, face = [], [], [], [], []
    boundary: Dict[int, int] = {}
    for h in survivors:
        f = m.face[h]
        if kinds[f] in (HOLE, EXTERNAL):
            g = 0
        else:
            if f not in face_ids:
                face_ids[f] = len(face_spin)
                face_spin.append(m.face_spin[f])
                face_kind.append(kinds[f])
            g = face_ids[f]
        t = m.twin[h]
        twin.append(index.get(t, -1) if t >= 0 else -1)
        x = next_survivor(h)
        nxt.append(index.get(x, -1) if x >= 0 else -1)
        origin.append(m.origin[h])
        dest.append(m.dest[h])
        face.append(g)
        if h in m.boundary_spin:
            boundary[index[h]] = m.boundary_spin[h]
    rho = m.dest[m.root]
    at_root = [index[h] for h in survivors if m.dest[h] == rho]
    outer = [i for i in at_root if face[i] == 0]
    root = (outer or at_root or [0])[0]
    return ColoredPlanarMap(twin, nxt, origin, dest, face, face_spin, face_kind, boundary, root, m.p, m.q)


def frontier_distance(emap: ExploredMap) -> float:
    """Smallest graph distance from the root vertex to a frontier vertex."""
    m = emap.builder.freeze()
    dist = vertex_distances(m, m.dest[m.root])
    return min((dist.get(v, math.inf) for v in emap.frontier_vertices()), default=math.inf)


def ball_sampler_halfplane(
    p: int,
    r: int,
    rng: np.random.Generator,
    config: Optional[Dict[str, Any]] = None,
    laws: Optional[HalfplaneLaws] = None,
    filler: Optional[CriticalFiller] = None,
) -> Ball:
    """Ball of radius ``r`` around the root of the half-plane map with ``p`` plus edges.

    Peels the half-plane (single-spin frontiers are repositioned at the
    closest frontier vertex) until every frontier vertex is at distance at
    least ``r``, filling swallowed regions, then cuts the ball out of the
    truncated explored map. ``theta`` is that stopping time and ``thetas``
    holds the stopping times of every smaller radius of the same run.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    config = config or default_config()
    if r == 0:
        return Ball(empty_map(), 0, theta=0, thetas={0: 0})
    laws = laws or HalfplaneLaws(config)
    filler = filler or CriticalFiller.from_config(rng, config)
    guard = int(config["sampling"]["step_guard"])
    emap = ExploredMap.halfplane(p)
    thetas: Dict[int, int] = {0: 0}
    while r not in thetas:
        d = frontier_distance(emap)
        for rr in range(1, r + 1):
            if rr not in thetas and d >= rr:
                thetas[rr] = emap.steps
        if r in thetas:
            break
        if emap.steps >= guard:
            raise RuntimeError(f"ball of radius {r} not reached after {guard} steps")
        event = sample_event(laws.get(emap.P), rng, config)
        apply_event(emap, event, filler, full=True)
    out = ball(truncate_map(emap), r)
    out.theta = thetas[r]
    out.thetas = thetas
    return out

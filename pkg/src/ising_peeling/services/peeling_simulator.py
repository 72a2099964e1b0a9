"""Perimeter processes ``(X_n, Y_n)`` of the peeling, sampled in lockstep batches.

All paths of a batch advance together: one vectorized draw per step for the
whole batch, so a batch is reproducible from its random stream alone.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ising_peeling.config import default_config
from ising_peeling.services.exact_algebra import constants_critical
from ising_peeling.services.peeling_laws import (
    FAMILIES,
    BoundaryLookup,
    FiniteLaw,
    HalfplaneLaws,
    PeelingEvent,
    displacement,
    family_thresholds,
    law_finite,
    law_fullplane,
    sample_event,
    scan_index,
)
from ising_peeling.services.tutte_series import CoeffTable, MemoryBudgetExceeded, build_coeff_table
from ising_peeling.services.critical_parametrization import values_at_uc


STOPPING_KINDS = ("fixed_steps", "T_m", "tau_eps", "theta_r", "first_of")
SMALL_JUMPS = 32
DEFAULT_CHUNK = 256

_CP, _CM, _LP, _LM, _RP, _RM = range(6)


class StepBudgetExceeded(RuntimeError):
    """A path did not stop within ``sampling.step_guard`` steps."""


def barrier_f(eps: float, n: int) -> float:
    """``((n+2) log(n+2)^(1+eps))^(3/4)``, the fluctuation barrier."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    m = n + 2
    return (m * math.log(m) ** (1 + eps)) ** 0.75


# ==================== Stopping rules ====================


@dataclass(frozen=True)
class StoppingSpec:
    """Stopping rule: ``fixed_steps(n)``, ``T_m(m)``, ``tau_eps(x, eps)``,
    ``theta_r(r)`` or ``first_of(...)``."""

    kind: str
    n: int = 0
    m: int = 0
    x: float = 0.0
    eps: float = 0.0
    r: int = 0
    parts: Tuple["StoppingSpec", ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in STOPPING_KINDS:
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if min(self.n, self.m, self.r) < 0 or self.x < 0:
            raise ValueError("stopping parameters must be nonnegative")
        if self.kind == "tau_eps" and self.eps <= 0:
            raise ValueError("tau_eps needs eps > 0")
        if self.kind == "first_of" and not self.parts:
            raise ValueError("first_of needs at least one clause")

    @classmethod
    def fixed_steps(cls, n: int) -> StoppingSpec:
        return cls("fixed_steps", n=n)

    @classmethod
    def t_m(cls, m: int) -> StoppingSpec:
        return cls("T_m", m=m)

    @classmethod
    def tau_eps(cls, x: float, eps: float) -> StoppingSpec:
        return cls("tau_eps", x=x, eps=eps)

    @classmethod
    def theta_r(cls, r: int) -> StoppingSpec:
        return cls("theta_r", r=r)

    @classmethod
    def first_of(cls, *parts: StoppingSpec) -> StoppingSpec:
        return cls("first_of", parts=tuple(parts))

    def leaves(self) -> List[StoppingSpec]:
        if self.kind != "first_of":
            return [self]
        out: List[StoppingSpec] = []
        for part in self.parts:
            out.extend(part.leaves())
        return out

    def __str__(self) -> str:
        if self.kind == "fixed_steps":
            return f"fixed_steps({self.n})"
        if self.kind == "T_m":
            return f"T_m({self.m})"
        if self.kind == "tau_eps":
            return f"tau_eps({self.x:g},{self.eps:g})"
        if self.kind == "theta_r":
            return f"theta_r({self.r})"
        return "first_of(" + ",".join(str(p) for p in self.parts) + ")"

    @classmethod
    def parse(cls, text: str) -> StoppingSpec:
        """Parses the ``str`` form, e.g. ``first_of(T_m(5),fixed_steps(1000))``."""
        text = text.strip()
        match = re.fullmatch(r"(\w+)\((.*)\)", text)
        if not match:
            raise ValueError(f"bad stopping rule {text!r}")
        name, body = match.group(1), match.group(2)
        if name == "first_of":
            return cls.first_of(*(cls.parse(part) for part in _split_top(body)))
        args = [a.strip() for a in body.split(",") if a.strip()]
        try:
            if name == "fixed_steps":
                return cls.fixed_steps(int(args[0]))
            if name == "T_m":
                return cls.t_m(int(args[0]))
            if name == "tau_eps":
                return cls.tau_eps(float(args[0]), float(args[1]))
            if name == "theta_r":
                return cls.theta_r(int(args[0]))
        except (IndexError, ValueError) as e:
            raise ValueError(f"bad arguments in {text!r}: {e}") from e
        raise ValueError(f"unknown stopping rule {name!r}")


def _split_top(body: str) -> List[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    parts.append(body[start:])
    return [p for p in parts if p.strip()]


# ==================== Random streams ====================


@dataclass(frozen=True)
class RngStream:
    """Independent stream ``stream_index`` of a 64-bit master seed.

    Streams are derived with numpy's ``SeedSequence`` hashing of
    ``(seed, stream_index)``, so distinct pairs give independent generators.
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 1 << 64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if self.stream_index < 0:
            raise ValueError("stream_index must be >= 0")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_index,))
        return np.random.default_rng(seq)


# ==================== Paths ====================


@dataclass
class PerimeterPath:
    regime: str
    initial: Tuple[int, int]
    x: np.ndarray
    y: np.ndarray
    events: List[PeelingEvent] = field(default_factory=list)
    stop_reason: str = ""
    stop_time: int = 0
    hit_zero_time: Optional[int] = None

    @property
    def p_values(self) -> np.ndarray:
        return self.initial[0] + self.x

    @property
    def q_values(self) -> np.ndarray:
        return self.initial[1] + self.y


class _Sampler:
    """Vectorized one-step sampler for a regime."""

    def __init__(
        self,
        regime: str,
        config: Dict[str, Any],
        table: Optional[CoeffTable] = None,
    ) -> None:
        if regime not in ("fullplane", "halfplane", "finite"):
            raise ValueError(f"unknown regime {regime!r}")
        self.regime = regime
        self.config = config
        self.lookup = BoundaryLookup(config)
        cc = constants_critical()
        v = values_at_uc()
        self.c = float(cc.t_over_u)
        self.nu = float(cc.nu_c)
        self.zeta_one = float(v.Z0_at_uc)
        self.xi_one = float(v.Z1_at_uc)

        full = law_fullplane(lookup=self.lookup)
        self.thresholds = np.array(family_thresholds(full)[:-1], dtype=np.uint64)
        tables = self.lookup.numeric(int(config["tables"]["numeric_order"]))
        self.k_table = tables.order - 1
        xi = tables.zeta1[: self.k_table]
        zeta = tables.zeta0[1 : self.k_table + 1]
        self.xi_cdf = np.cumsum(xi) / self.xi_one
        self.zeta_cdf = np.cumsum(zeta) / (self.zeta_one - 1)

        self.laws = HalfplaneLaws(config) if regime == "halfplane" else None
        self.table = table
        self._finite: Dict[Tuple[int, int], FiniteLaw] = {}

    def _index(self, cdf: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        v = rng.random(size)
        k = np.searchsorted(cdf, v, side="right")
        far = k >= len(cdf)
        if far.any():
            # power-law tail past the float tables
            w = 1.0 - rng.random(int(far.sum()))
            k[far] = (len(cdf) * w ** (-0.75)).astype(np.int64)
        return k.astype(np.int64)

    def _indices_for(self, fam: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        k = np.zeros(fam.shape, dtype=np.int64)
        xi_mask = (fam == _LP) | (fam == _RM)
        zeta_mask = (fam == _LM) | (fam == _RP)
        if xi_mask.any():
            k[xi_mask] = self._index(self.xi_cdf, rng, int(xi_mask.sum()))
        if zeta_mask.any():
            k[zeta_mask] = self._index(self.zeta_cdf, rng, int(zeta_mask.sum()))
        return k

    def step(
        self, p: np.ndarray, q: np.ndarray, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Draws one event per path; returns family indices, indices and a terminal mask."""
        if self.regime == "fullplane":
            u = rng.integers(0, 1 << 64, size=len(p), dtype=np.uint64)
            fam = np.searchsorted(self.thresholds, u, side="right")
            return fam, self._indices_for(fam, rng), np.zeros(len(p), dtype=bool)
        if self.regime == "halfplane":
            return self._halfplane_step(p, rng)
        return self._finite_step(p, q, rng)

    def _halfplane_step(
        self, p: np.ndarray, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        lk, c, nu = self.lookup, self.c, self.nu
        a0 = lk.array("alpha", p)
        masses = np.stack(
            [
                c * lk.array("alpha", p + 2) / a0,
                np.full(len(p), nu * c),
                c * lk.array("alpha", p + 1) * self.xi_one / a0,
                np.full(len(p), nu * c * (self.zeta_one - 1)),
            ],
            axis=1,
        )
        cums = np.cumsum(masses, axis=1)
        u = rng.random(len(p))
        fam = (cums <= u[:, None]).sum(axis=1)
        k = np.zeros(len(p), dtype=np.int64)
        lm_mask = (fam == _LP) | (fam == _LM)
        if lm_mask.any():
            k[lm_mask] = self._indices_for(fam[lm_mask], rng)

        block = np.flatnonzero(fam == 4)
        if block.size:
            target = u[block] - cums[block, -1]
            fam_b, k_b = self._r_block(p[block], a0[block], target, rng)
            fam[block] = fam_b
            k[block] = k_b
        return fam, k, np.zeros(len(p), dtype=bool)

    def _r_block(
        self, p: np.ndarray, a0: np.ndarray, target: np.ndarray, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray]:
        lk, c, nu = self.lookup, self.c, self.nu
        ks = np.arange(SMALL_JUMPS)
        valid = ks[None, :] <= p[:, None]
        rm_idx = np.clip(p[:, None] - ks[None, :], 0, None)
        rm_w = nu * c * lk.array("zeta1", ks)[None, :] * lk.array("alpha", rm_idx) / a0[:, None]
        rp_w = c * lk.array("zeta0", ks + 1)[None, :] * lk.array("alpha", rm_idx + 1) / a0[:, None]
        rm_w = np.where(valid, rm_w, 0.0)
        rp_w = np.where(valid, rp_w, 0.0)
        pairs = np.stack([rm_w, rp_w], axis=2).reshape(len(p), 2 * SMALL_JUMPS)
        cums = np.cumsum(pairs, axis=1)
        pos = (cums <= target[:, None]).sum(axis=1)
        fam = np.where(pos % 2 == 0, _RM, _RP)
        k = pos // 2
        far = np.flatnonzero(pos >= 2 * SMALL_JUMPS)
        for i in far:
            law = self.laws.get(int(p[i]))
            rest = target[i] - cums[i, -1]
            rm_rest = law.float_masses()["Rm"] - rm_w[i].sum()
            if rest < rm_rest:
                fam[i], tag, prefix = _RM, "Rm", rm_w[i].sum()
            else:
                fam[i], tag, prefix = _RP, "Rp", rp_w[i].sum()
                rest -= rm_rest
            k[i] = scan_index(law, tag, prefix + rest, rng)
        return fam, k

    def _finite_law(self, p: int, q: int) -> FiniteLaw:
        if (p, q) not in self._finite:
            if self.table is None:
                order = int(self.config["sampling"]["finite_order"])
                self.table = build_coeff_table(
                    order, mode="evaluated", nu="critical", config=self.config, backend="float"
                )
            self._finite[(p, q)] = law_finite(p, q, self.table, config=self.config)
        return self._finite[(p, q)]

    def _finite_step(
        self, p: np.ndarray, q: np.ndarray, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        fam = np.zeros(len(p), dtype=np.int64)
        k = np.zeros(len(p), dtype=np.int64)
        terminal = np.zeros(len(p), dtype=bool)
        for i in range(len(p)):
            event = sample_event(self._finite_law(int(p[i]), int(q[i])), rng, self.config)
            if event is None:
                terminal[i] = True
                continue
            fam[i] = FAMILIES.index(event.tag)
            k[i] = event.k
        return fam, k, terminal


def increments(regime: str, fam: np.ndarray, k: np.ndarray, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized ``displacement`` over family indices and event indices."""
    swallow = (k > p) if regime != "fullplane" else np.zeros(len(k), dtype=bool)
    j = k - p
    dx = np.select(
        [fam == _CP, fam == _LP, (fam == _RP) & ~swallow, (fam == _RP) & swallow,
         (fam == _RM) & ~swallow, (fam == _RM) & swallow],
        [2, 1, 1 - k, 1 - p, -k, -p],
        0,
    )
    dy = np.select(
        [fam == _CP, fam == _CM, fam == _LP, fam == _LM, (fam == _RP) & ~swallow,
         (fam == _RP) & swallow, (fam == _RM) & swallow],
        [-1, 1, -k - 1, -k, -1, -j - 1, -j],
        0,
    )
    return dx.astype(np.int64), dy.astype(np.int64)


def fullplane_increments(
    n: int, rng: np.random.Generator, config: Optional[Dict[str, Any]] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """``n`` i.i.d. full-plane steps ``(X_1, Y_1)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    sampler = _Sampler("fullplane", config or default_config())
    zeros = np.zeros(n, dtype=np.int64)
    fam, k, _ = sampler.step(zeros, zeros, rng)
    return increments("fullplane", fam, k, zeros)


def _check_stopping(stopping: StoppingSpec, regime: str) -> None:
    for leaf in stopping.leaves():
        if leaf.kind == "theta_r":
            raise ValueError("theta_r needs an explored map; use the map ball sampler")
        if leaf.kind == "T_m" and regime == "fullplane":
            raise ValueError("T_m is defined for the half-plane and finite regimes")


def _fired(
    stopping: StoppingSpec, n: int, p: np.ndarray, x: np.ndarray, y: np.ndarray, mu: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Mask of paths whose rule fires at time ``n`` and the index of the first leaf that fired."""
    leaves = stopping.leaves()
    which = np.full(len(x), -1, dtype=np.int64)
    for li, leaf in enumerate(leaves):
        if leaf.kind == "fixed_steps":
            hit = np.full(len(x), n >= leaf.n)
        elif leaf.kind == "T_m":
            hit = p <= leaf.m
        else:
            if n == 0:
                continue
            bound = leaf.x * barrier_f(leaf.eps, n)
            hit = np.maximum(np.abs(x - mu * n), np.abs(y - mu * n)) > bound
        which = np.where((which < 0) & hit, li, which)
    return which >= 0, which


@dataclass
class _Batch:
    summaries: List[Dict[str, Any]]
    paths: List[PerimeterPath]


def run_lockstep(
    regime: str,
    init: Tuple[int, int],
    stopping: StoppingSpec,
    n_paths: int,
    rng: np.random.Generator,
    config: Optional[Dict[str, Any]] = None,
    keep_paths: bool = False,
    table: Optional[CoeffTable] = None,
    first_id: int = 0,
    sampler: Optional[_Sampler] = None,
) -> _Batch:
    """Runs ``n_paths`` paths in lockstep until each one's stopping rule fires.

    Raises:
        StepBudgetExceeded: Some path is still running after ``sampling.step_guard`` steps.
        MemoryBudgetExceeded: Kept paths outgrow ``tables.memory_budget_mb``.
    """
    config = config or default_config()
    _check_stopping(stopping, regime)
    p0, q0 = init
    if regime != "fullplane" and p0 < 0:
        raise ValueError("p must be >= 0")
    if regime == "finite" and q0 < 1:
        raise ValueError("the finite regime needs q >= 1")
    sampler = sampler or _Sampler(regime, config, table)
    guard = int(config["sampling"]["step_guard"])
    budget = float(config["tables"]["memory_budget_mb"]) * 2**20
    mu = float(constants_critical().mu())
    leaves = [str(leaf) for leaf in stopping.leaves()]

    x = np.zeros(n_paths, dtype=np.int64)
    y = np.zeros(n_paths, dtype=np.int64)
    active = np.ones(n_paths, dtype=bool)
    stop_time = np.zeros(n_paths, dtype=np.int64)
    reason = [""] * n_paths
    min_x = np.zeros(n_paths, dtype=np.int64)
    min_y = np.zeros(n_paths, dtype=np.int64)
    max_dev = np.zeros(n_paths)
    hit_zero = np.full(n_paths, -1, dtype=np.int64)
    double_jumps = np.zeros(n_paths, dtype=np.int64)
    if regime != "fullplane" and p0 == 0:
        hit_zero[:] = 0
    hist_x: List[np.ndarray] = []
    hist_y: List[np.ndarray] = []
    hist_events: List[List[Optional[PeelingEvent]]] = [[] for _ in range(n_paths)]

    def settle(n: int, idx: np.ndarray) -> None:
        fired, which = _fired(stopping, n, p0 + x[idx], x[idx], y[idx], mu)
        for j in np.flatnonzero(fired):
            i = idx[j]
            active[i] = False
            stop_time[i] = n
            reason[i] = leaves[which[j]]

    settle(0, np.arange(n_paths))
    n = 0
    while active.any():
        if n >= guard:
            raise StepBudgetExceeded(f"{int(active.sum())} paths still running after {guard} steps")
        idx = np.flatnonzero(active)
        p_cur = p0 + x[idx]
        fam, k, terminal = sampler.step(p_cur, q0 + y[idx], rng)
        dx, dy = increments(regime, fam, k, p_cur)
        dx[terminal] = 0
        dy[terminal] = 0
        x[idx] += dx
        y[idx] += dy
        n += 1
        min_x[idx] = np.minimum(min_x[idx], x[idx])
        min_y[idx] = np.minimum(min_y[idx], y[idx])
        dev = np.maximum(np.abs(x[idx] - mu * n), np.abs(y[idx] - mu * n))
        max_dev[idx] = np.maximum(max_dev[idx], dev)
        double_jumps[idx] += (dx < -2) & (dy < -2)
        if regime != "fullplane":
            newly = (p0 + x[idx] == 0) & (hit_zero[idx] < 0)
            hit_zero[idx[newly]] = n
        if keep_paths:
            hist_x.append(x.copy())
            hist_y.append(y.copy())
            if n * n_paths * 16 > budget:
                raise MemoryBudgetExceeded("kept paths exceed the memory budget")
            for j, i in enumerate(idx):
                if terminal[j]:
                    hist_events[i].append(None)
                else:
                    hist_events[i].append(PeelingEvent(FAMILIES[fam[j]], int(k[j])))

        for j in np.flatnonzero(terminal):
            i = idx[j]
            active[i] = False
            stop_time[i] = n
            reason[i] = "terminal"
        if regime == "finite":
            mono = np.flatnonzero(active[idx] & (q0 + y[idx] <= 0))
            for j in mono:
                i = idx[j]
                active[i] = False
                stop_time[i] = n
                reason[i] = "monochromatic"
        still = idx[active[idx]]
        if still.size:
            settle(n, still)

    summaries = []
    paths: List[PerimeterPath] = []
    for i in range(n_paths):
        summaries.append(
            {
                "path_id": first_id + i,
                "stop_reason": reason[i],
                "stop_time": int(stop_time[i]),
                "x_final": int(x[i]),
                "y_final": int(y[i]),
                "min_x": int(min_x[i]),
                "min_y": int(min_y[i]),
                "max_dev": float(max_dev[i]),
                "hit_zero_time": int(hit_zero[i]) if hit_zero[i] >= 0 else None,
                "double_jumps": int(double_jumps[i]),
            }
        )
        if keep_paths:
            t = int(stop_time[i])
            xs = np.array([0] + [h[i] for h in hist_x[:t]], dtype=np.int64)
            ys = np.array([0] + [h[i] for h in hist_y[:t]], dtype=np.int64)
            paths.append(
                PerimeterPath(
                    regime=regime,
                    initial=(p0, q0),
                    x=xs,
                    y=ys,
                    events=[e for e in hist_events[i] if e is not None],
                    stop_reason=reason[i],
                    stop_time=t,
                    hit_zero_time=summaries[-1]["hit_zero_time"],
                )
            )
    return _Batch(summaries=summaries, paths=paths)


def run_path(
    regime: str,
    init: Tuple[int, int],
    stopping: StoppingSpec,
    rng: Optional[np.random.Generator] = None,
    config: Optional[Dict[str, Any]] = None,
    table: Optional[CoeffTable] = None,
) -> PerimeterPath:
    """Runs one path; ``rng`` defaults to stream 0 of seed 0."""
    rng = rng if rng is not None else RngStream(0, 0).generator()
    batch = run_lockstep(regime, init, stopping, 1, rng, config, keep_paths=True, table=table)
    return batch.paths[0]


def path_is_consistent(path: PerimeterPath) -> bool:
    """Every increment of ``path`` equals the displacement of its event."""
    if len(path.events) != len(path.x) - 1:
        return False
    for n, event in enumerate(path.events):
        p = int(path.initial[0] + path.x[n])
        d = displacement(event, path.regime, p if path.regime != "fullplane" else None)
        if (path.x[n + 1] - path.x[n], path.y[n + 1] - path.y[n]) != (d.dx, d.dy):
            return False
    return True


def _run_chunk(
    regime: str,
    init: Tuple[int, int],
    stopping: StoppingSpec,
    size: int,
    seed: int,
    chunk_index: int,
    first_id: int,
    config: Dict[str, Any],
) -> List[Dict[str, Any]]:
    rng = RngStream(seed, chunk_index).generator()
    return run_lockstep(regime, init, stopping, size, rng, config, first_id=first_id).summaries


def batch_run(
    config: Optional[Dict[str, Any]],
    n_paths: int,
    stopping: StoppingSpec,
    seed: int,
    regime: str = "fullplane",
    init: Tuple[int, int] = (0, 0),
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    table: Optional[CoeffTable] = None,
    verbose: bool = False,
) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    """Runs ``n_paths`` paths; chunk ``i`` of ``chunk_size`` paths uses stream ``(seed, i)``.

    Summaries are deterministic given ``seed`` and ``chunk_size``, whatever
    the number of workers.

    Returns:
        Tuple of the per-path summaries (ordered by ``path_id``) and run stats.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    config = config or default_config()
    _check_stopping(stopping, regime)
    starts = list(range(0, n_paths, chunk_size))
    sizes = [min(chunk_size, n_paths - s) for s in starts]

    print(f"🚀 Perimeter paths | Mode: {regime} | {n_paths} paths | seed {seed}")
    print(f"   Stopping: {stopping}")
    print("-" * 40)

    summaries: List[Dict[str, Any]] = []
    if workers > 1 and regime != "finite":
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [
                ex.submit(_run_chunk, regime, init, stopping, size, seed, i, start, config)
                for i, (start, size) in enumerate(zip(starts, sizes))
            ]
            for i, fut in enumerate(futures):
                summaries.extend(fut.result())
                if verbose or i == 0 or (i + 1) % 10 == 0:
                    print(f"   ✅ chunk {i + 1}/{len(starts)}")
    else:
        sampler = _Sampler(regime, config, table)
        for i, (start, size) in enumerate(zip(starts, sizes)):
            rng = RngStream(seed, i).generator()
            batch = run_lockstep(
                regime, init, stopping, size, rng, config,
                table=table, first_id=start, sampler=sampler,
            )
            summaries.extend(batch.summaries)
            if verbose or i == 0 or (i + 1) % 10 == 0:
                print(f"   ✅ chunk {i + 1}/{len(starts)}")

    reasons: Dict[str, int] = {}
    for s in summaries:
        reasons[s["stop_reason"]] = reasons.get(s["stop_reason"], 0) + 1
    stats = {
        "regime": regime,
        "n_paths": n_paths,
        "seed": seed,
        "chunks": len(starts),
        "stop_reasons": reasons,
        "steps": int(sum(s["stop_time"] for s in summaries)),
        "mean_stop_time": float(np.mean([s["stop_time"] for s in summaries])),
    }
    print("-" * 40)
    print(f"🏁 Done. {n_paths} paths, stop reasons: {reasons}")
    return summaries, stats

"""Monte Carlo and exact experiments on the perimeter processes and sampled maps.

Every experiment takes its resolved parameters, a seed and the configuration,
and returns a list of ``StatResult`` records. Exact identities are reported
next to the Monte Carlo estimates they back up.
"""

import math
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from ising_peeling.config import default_config, get_experiment_params
from ising_peeling.services.critical_parametrization import c_infty_closed_form, drift_and_tails
from ising_peeling.services.exact_algebra import QuadSurd, constants_critical
from ising_peeling.services.map_builder import sample_finite_map
from ising_peeling.services.peeling_laws import (
    BoundaryLookup,
    halfplane_mean_increment,
    marginal_tail,
    prob_jump_below,
)
from ising_peeling.services.peeling_simulator import (
    RngStream,
    StoppingSpec,
    batch_run,
    fullplane_increments,
)
from ising_peeling.services.planar_map import (
    MonochromaticBoundary,
    interface_separates,
    trace_leftmost_interface,
    validate_map,
)
from ising_peeling.services.report_io import StatResult
from ising_peeling.services.tutte_series import build_coeff_table

DRIFT_CHUNK = 1_000_000


def _mu() -> float:
    return float(constants_critical().mu())


def _normal_ci(mean: float, sd: float, n: int, level: float) -> Tuple[float, float]:
    half = float(stats.norm.ppf(0.5 + level / 2)) * sd / math.sqrt(n)
    return mean - half, mean + half


def _slope(xs: np.ndarray, ys: np.ndarray) -> float:
    if len(xs) < 2:
        raise ValueError("a regression needs at least two points")
    return float(np.polyfit(xs, ys, 1)[0])


def tm_survival_limit(t: Any) -> Any:
    """Scaling limit ``(1 + mu t)^(-4/3)`` of the survival function of ``T_m / p``."""
    return (1.0 + _mu() * np.asarray(t, dtype=float)) ** (-4.0 / 3.0)


# ==================== Drift ====================


def exp_drift(params: Dict[str, Any], seed: int, config: Dict[str, Any], **_: Any) -> List[StatResult]:
    """Means of ``X_1``, ``Y_1`` and ``X_1 + Y_1`` over i.i.d. full-plane steps."""
    n_events = int(params["n_events"])
    level = float(params.get("level", 0.99))
    if n_events < 1:
        raise ValueError("n_events must be >= 1")
    sums = np.zeros(3)
    squares = np.zeros(3)
    for i, start in enumerate(range(0, n_events, DRIFT_CHUNK)):
        size = min(DRIFT_CHUNK, n_events - start)
        dx, dy = fullplane_increments(size, RngStream(seed, i).generator(), config)
        for j, v in enumerate((dx, dy, dx + dy)):
            v = v.astype(np.float64)
            sums[j] += v.sum()
            squares[j] += (v * v).sum()

    mu = _mu()
    exact = drift_and_tails()
    out = []
    for j, (name, target) in enumerate((("E[X1]", mu), ("E[Y1]", mu), ("E[X1+Y1]", 2 * mu))):
        mean = sums[j] / n_events
        sd = math.sqrt(max(squares[j] / n_events - mean * mean, 0.0))
        ci = _normal_ci(mean, sd, n_events, level)
        out.append(
            StatResult(
                "drift", name, mean, target, ci, "THEORY", ci[0] <= target <= ci[1], seed,
                dict(params), {"sd": sd, "n": n_events},
            )
        )
    mu_exact = exact["mu"]
    out.append(
        StatResult(
            "drift", "mu_exact", float(mu_exact), mu, None, "THEORY",
            mu_exact == constants_critical().mu() and exact["mu_sum"] == 2 * mu_exact, seed,
            dict(params), {"mu": str(mu_exact), "mu_sum": str(exact["mu_sum"])},
        )
    )
    return out


# ==================== T_m survival ====================


def exp_tm_law(
    params: Dict[str, Any], seed: int, config: Dict[str, Any], workers: int = 1, verbose: bool = False
) -> List[StatResult]:
    """Sup distance between the survival of ``T_m / p`` and its scaling limit."""
    p, m = int(params["p"]), int(params["m"])
    n_paths = int(params["n_paths"])
    grid = np.linspace(0.0, float(params["t_max"]), int(params["t_points"]))
    summaries, run = batch_run(
        config, n_paths, StoppingSpec.t_m(m), seed, "halfplane", (p, 0), workers=workers, verbose=verbose
    )
    scaled = np.array([s["stop_time"] for s in summaries], dtype=float) / p
    empirical = (scaled[None, :] > grid[:, None]).mean(axis=1)
    theory = tm_survival_limit(grid)
    dist = float(np.abs(empirical - theory).max())
    threshold = float(params["threshold"])
    return [
        StatResult(
            "tm_law", "sup_distance", dist, 0.0, None, "THEORY", dist < threshold, seed, dict(params),
            {
                "threshold": threshold,
                "t": grid.tolist(),
                "empirical": empirical.tolist(),
                "limit": theory.tolist(),
                "steps": run["steps"],
            },
        )
    ]


# ==================== c_m limit ====================


def cm_values(p: int, m_max: int, config: Optional[Dict[str, Any]] = None) -> np.ndarray:
    """``c_m = p P_p(P_1 <= m)`` for ``m = 1..m_max``."""
    lookup = BoundaryLookup(config or default_config())
    return np.array([p * prob_jump_below(p, m, lookup) for m in range(1, m_max + 1)])


def exp_cm_limit(params: Dict[str, Any], seed: int, config: Dict[str, Any], **_: Any) -> List[StatResult]:
    """Extrapolates ``c_m`` to ``m -> oo`` by a fit ``c_oo - C m^(-1/3)``."""
    p, m_max, m_fit = int(params["p"]), int(params["m_max"]), int(params["m_fit_min"])
    if m_fit >= m_max:
        raise ValueError("m_fit_min must be below m_max")
    cm = cm_values(p, m_max, config)
    ms = np.arange(1, m_max + 1)
    sel = ms >= m_fit
    intercept = float(np.polyfit(ms[sel] ** (-1.0 / 3.0), cm[sel], 1)[1])
    cc = constants_critical()
    target = float(cc.c_infty())
    tol = float(params["tolerance"])
    closed = c_infty_closed_form()
    # E_p[X_1] tends to mu - c_infty = -mu/3
    drift_p = halfplane_mean_increment(p, BoundaryLookup(config))
    return [
        StatResult(
            "cm_limit", "c_infty", intercept, target, None, "THEORY",
            abs(intercept - target) <= tol * target, seed, dict(params),
            {
                "c_m": cm.tolist(),
                "increasing": bool(np.all(np.diff(cm) > 0)),
                "mean_increment": drift_p,
                "mean_increment_limit": -float(cc.mu()) / 3,
            },
        ),
        StatResult(
            "cm_limit", "c_infty_over_mu", float(closed / cc.mu()), 4.0 / 3.0, None, "THEORY",
            closed / cc.mu() == QuadSurd(Fraction(4, 3)), seed, dict(params),
            {"closed_form": str(closed)},
        ),
    ]


# ==================== Tail exponents ====================


def exp_tail_exponents(params: Dict[str, Any], seed: int, config: Dict[str, Any], **_: Any) -> List[StatResult]:
    """Log-log slopes of ``P(X_1 = -k)`` and ``P(Y_1 = -k)`` and the tail-constant ratio."""
    k_min, k_max = int(params["k_min"]), int(params["k_max"])
    if k_max - k_min < 1:
        raise ValueError("the k range needs at least two points")
    tol = float(params["tolerance"])
    lookup = BoundaryLookup(config)
    ks = np.arange(k_min, k_max + 1)
    rows = [marginal_tail(int(k), lookup) for k in ks]
    px = np.array([float(r["x"]) for r in rows])
    py = np.array([float(r["y"]) for r in rows])
    logk = np.log(ks)
    target = -7.0 / 3.0
    out = []
    for name, values in (("slope_X", px), ("slope_Y", py)):
        s = _slope(logk, np.log(values))
        out.append(
            StatResult("tail_exponents", name, s, target, None, "THEORY", abs(s - target) <= tol, seed, dict(params))
        )
    s7 = QuadSurd.sqrt7()
    ratio = drift_and_tails()["cx_over_cy"]
    expected = (2 + 3 * s7) / (2 + s7)
    out.append(
        StatResult(
            "tail_exponents", "cx_over_cy", float(ratio), float(expected), None, "DERIVED",
            ratio == expected, seed, dict(params), {"ratio_at_k_max": float(py[-1] / px[-1])},
        )
    )
    return out


# ==================== Fluctuations ====================


def exp_fluctuation_scaling(
    params: Dict[str, Any], seed: int, config: Dict[str, Any], workers: int = 1, verbose: bool = False
) -> List[StatResult]:
    """Slope of the median sup-deviation ``max |X - mu n|`` against ``n`` on a log scale."""
    lo, hi = int(params["log2_n_min"]), int(params["log2_n_max"])
    if hi <= lo:
        raise ValueError("fluctuation scaling needs at least two values of n")
    n_paths = int(params["n_paths"])
    ns = 2 ** np.arange(lo, hi + 1)
    medians, doubles = [], 0
    for i, n in enumerate(ns):
        summaries, _ = batch_run(
            config, n_paths, StoppingSpec.fixed_steps(int(n)), seed + i, "fullplane", workers=workers,
            verbose=verbose,
        )
        medians.append(float(np.median([s["max_dev"] for s in summaries])))
        doubles += sum(s["double_jumps"] for s in summaries)
    s = _slope(np.log(ns), np.log(medians))
    tol = float(params["tolerance"])
    return [
        StatResult(
            "fluctuation_scaling", "slope", s, 0.75, None, "THEORY", abs(s - 0.75) <= tol, seed,
            dict(params), {"n": ns.tolist(), "median_sup_dev": medians},
        ),
        StatResult(
            "fluctuation_scaling", "simultaneous_big_jumps", float(doubles), 0.0, None, "THEORY",
            doubles == 0, seed, dict(params),
        ),
    ]


# ==================== Hitting zero ====================


def exp_hit_zero(
    params: Dict[str, Any], seed: int, config: Dict[str, Any], workers: int = 1, verbose: bool = False
) -> List[StatResult]:
    """``P_p(T_0 > L p)`` over the grid of ``L``; every run must reach zero."""
    p, n_paths = int(params["p"]), int(params["n_paths"])
    lambdas = [float(v) for v in params["lambdas"]]
    summaries, _ = batch_run(
        config, n_paths, StoppingSpec.t_m(0), seed, "halfplane", (p, 0), workers=workers, verbose=verbose
    )
    t0 = np.array([s["stop_time"] for s in summaries], dtype=float)
    reached = all(s["stop_reason"] == "T_m(0)" for s in summaries)
    probs = [float((t0 > lam * p).mean()) for lam in lambdas]
    positive = [pr for lam, pr in zip(lambdas, probs) if lam > 0]
    decreasing = all(a > b for a, b in zip(positive, positive[1:]))
    out = [
        StatResult(
            "hit_zero", f"P(T0>{lam:g}p)", pr, 1.0 if lam == 0 else None, None, "THEORY",
            pr == 1.0 if lam == 0 else True, seed, dict(params),
        )
        for lam, pr in zip(lambdas, probs)
    ]
    out.append(
        StatResult(
            "hit_zero", "all_reach_zero_and_decreasing", float(reached and decreasing), 1.0, None, "THEORY",
            reached and decreasing, seed, dict(params), {"probabilities": probs},
        )
    )
    return out


# ==================== One jump ====================


def exp_one_jump(
    params: Dict[str, Any], seed: int, config: Dict[str, Any], workers: int = 1, verbose: bool = False
) -> List[StatResult]:
    """``P_p(tau_eps(x) < T_m)`` on a grid of ``(x, m)``; must decrease in both."""
    p, eps, n_paths = int(params["p"]), float(params["eps"]), int(params["n_paths"])
    xs = [float(v) for v in params["xs"]]
    ms = [int(v) for v in params["ms"]]
    grid = np.zeros((len(xs), len(ms)))
    for i, x in enumerate(xs):
        for j, m in enumerate(ms):
            tau = StoppingSpec.tau_eps(x, eps)
            rule = StoppingSpec.first_of(tau, StoppingSpec.t_m(m))
            summaries, _ = batch_run(
                config, n_paths, rule, seed + i * len(ms) + j, "halfplane", (p, 0), workers=workers,
                verbose=verbose,
            )
            grid[i, j] = np.mean([s["stop_reason"] == str(tau) for s in summaries])
    # monotone up to three binomial standard errors
    slack = 3.0 * np.sqrt(np.maximum(grid * (1 - grid), 0.25 / n_paths) / n_paths)
    dec_x = bool(np.all(np.diff(grid, axis=0) <= slack[1:, :]))
    dec_m = bool(np.all(np.diff(grid, axis=1) <= slack[:, 1:]))
    out = []
    for i, x in enumerate(xs):
        for j, m in enumerate(ms):
            out.append(
                StatResult("one_jump", f"P(tau<T_m)[x={x:g},m={m}]", float(grid[i, j]), None, None, "THEORY", True, seed, dict(params))
            )
    out.append(
        StatResult(
            "one_jump", "decreasing_in_x_and_m", float(dec_x and dec_m), 1.0, None, "THEORY",
            dec_x and dec_m, seed, dict(params), {"decreasing_in_x": dec_x, "decreasing_in_m": dec_m},
        )
    )
    return out


# ==================== Interface length ====================


def exp_interface_length(params: Dict[str, Any], seed: int, config: Dict[str, Any], **_: Any) -> List[StatResult]:
    """Leftmost interface lengths on exact samples at small ``(p, q, n)``; exploratory."""
    p, q, n = int(params["p"]), int(params["q"]), int(params["n"])
    nu = Fraction(params["nu"])
    n_maps = int(params["n_maps"])
    if p == 0 or q == 0:
        raise MonochromaticBoundary(f"boundary ({p},{q}) has no interface")
    table = build_coeff_table(max(n, 1), "evaluated", nu, config, backend="rational")
    rng = RngStream(seed, 0).generator()
    lengths, valid, separated = [], True, True
    for _ in range(n_maps):
        m = sample_finite_map(p, q, n, table, rng)
        report = validate_map(m, nu, {"p": p, "q": q, "n": n})
        path = trace_leftmost_interface(m)
        lengths.append(path.length)
        valid = valid and report["all_pass"]
        separated = separated and interface_separates(m, path)
    counts = np.bincount(lengths)
    ok = valid and separated and min(lengths) >= 1
    return [
        StatResult(
            "interface_length", "mean_length", float(np.mean(lengths)), None, None, "EXPLORATORY", ok, seed,
            {k: str(v) if isinstance(v, Fraction) else v for k, v in params.items()},
            {"histogram": counts.tolist(), "all_valid": valid, "all_separated": separated},
        )
    ]


# ==================== Dispatch ====================

EXPERIMENTS: Dict[str, Callable[..., List[StatResult]]] = {
    "drift": exp_drift,
    "tm_law": exp_tm_law,
    "cm_limit": exp_cm_limit,
    "tail_exponents": exp_tail_exponents,
    "fluctuation_scaling": exp_fluctuation_scaling,
    "hit_zero": exp_hit_zero,
    "one_jump": exp_one_jump,
    "interface_length": exp_interface_length,
}


def run_experiment(
    name: str,
    config: Optional[Dict[str, Any]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    seed: int = 0,
    workers: int = 1,
    verbose: bool = False,
) -> Tuple[List[StatResult], Dict[str, Any]]:
    """Runs one named experiment with configured defaults and overrides.

    Returns:
        Tuple of the results and stats ``{"experiment", "results", "passed", "failed"}``.
    """
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    config = config or default_config()
    params = get_experiment_params(config, name, overrides)
    print(f"🚀 Experiment: {name} | Seed: {seed}")
    print("-" * 40)
    results = EXPERIMENTS[name](params, seed, config, workers=workers, verbose=verbose)
    passed = sum(1 for r in results if r.passed)
    for r in results:
        mark = "✅" if r.passed else "❌"
        target = "" if r.target is None else f" (target {r.target:.7g})"
        print(f"  {mark} {r.name}: {r.estimate:.7g}{target}")
    print("-" * 40)
    print(f"🏁 Done. {passed}/{len(results)} checks passed.")
    stats_out = {
        "experiment": name,
        "results": len(results),
        "passed": passed,
        "failed": len(results) - passed,
    }
    return results, stats_out

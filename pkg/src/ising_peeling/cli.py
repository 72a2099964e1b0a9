"""Command Line Interface entry point using Typer."""

import contextlib
import os
import sys
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional

import typer

from ising_peeling.config import load_config

# Create Typer app
app = typer.Typer(
    help="Ising Peeling - critical Ising triangulations: exact series, peeling laws, samplers and experiments",
    add_completion=False,
)

REGIMES = {"full": "fullplane", "fullplane": "fullplane", "half": "halfplane", "halfplane": "halfplane", "finite": "finite"}
MAP_FORMATS = ("text", "csv", "json")


# ==================== Helpers ====================


class CheckFailed(Exception):
    """A requested check did not pass."""


@contextlib.contextmanager
def _service_output() -> Iterator[None]:
    """Routes service progress lines to stderr so stdout carries only data."""
    with contextlib.redirect_stdout(sys.stderr):
        yield


def _parse_nu(text: Optional[str]) -> Any:
    """``critical``, a rational like ``2`` or ``3/2``, or a ``Q(sqrt7)`` literal."""
    from ising_peeling.services.exact_algebra import QuadSurd

    if text is None:
        return None
    if text.strip() == "critical":
        return "critical"
    if "sqrt7" in text:
        return QuadSurd.parse(text)
    return Fraction(text)


def _regime(name: str) -> str:
    if name not in REGIMES:
        raise ValueError(f"unknown regime {name!r}; choose from full, half, finite")
    return REGIMES[name]


def _emit(rows: List[Dict[str, Any]], fmt: str, out: Optional[str], columns: Optional[List[str]] = None) -> None:
    from ising_peeling.services.report_io import table_text, write_output

    text = table_text(rows, fmt, columns)
    path = write_output(text, out)
    if path is None:
        typer.echo(text, nl=False)
    else:
        typer.echo(f"✅ Wrote {path}", err=True)


def _fail(e: Exception, verbose: bool) -> None:
    if isinstance(e, CheckFailed):
        typer.echo(f"❌ {e}", err=True)
    else:
        typer.echo(f"❌ Error: {e}", err=True)
        if verbose:
            import traceback

            traceback.print_exc()
    raise typer.Exit(code=1)


def _parse_sets(items: Optional[List[str]]) -> Dict[str, Any]:
    import yaml

    out: Dict[str, Any] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValueError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = yaml.safe_load(value)
    return out


# ==================== Shared actions (also used by run-task) ====================


def do_constants(precision: int) -> List[Dict[str, Any]]:
    from ising_peeling.services.exact_algebra import constant_record, constants_critical

    cc = constants_critical()
    named = [
        ("nu_c", cc.nu_c),
        ("t_c_squared", cc.t_c_squared),
        ("t_over_u", cc.t_over_u),
        ("t_times_u", cc.t_times_u),
        ("u_c_squared", cc.u_c_squared()),
        ("mu", cc.mu()),
        ("c_infty", cc.c_infty()),
    ]
    rows = [constant_record(name, x, precision) for name, x in named]
    for name, value in (("t_c", cc.t_c(precision)), ("u_c", cc.u_c(precision))):
        rows.append({"name": name, "exact": None, "decimal": value.decimal(), "precision_bits": precision})
    return rows


def _flat_constants(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    flat = []
    for r in rows:
        e = r["exact"] or {}
        flat.append(
            {
                "name": r["name"],
                "a_num": e.get("a_num"),
                "a_den": e.get("a_den"),
                "b_num": e.get("b_num"),
                "b_den": e.get("b_den"),
                "decimal": r["decimal"],
                "precision_bits": r["precision_bits"],
            }
        )
    return flat


def do_verify(precision: int, n_check: int, verbose: bool = False) -> List[Dict[str, Any]]:
    """Exact identity suite; every row carries ``passed``."""
    from ising_peeling.services.critical_parametrization import (
        appendix_residual,
        boundary_series,
        c_infty_closed_form,
        drift_and_tails,
        peeling_normalization,
        values_at_uc,
    )
    from ising_peeling.services.exact_algebra import QuadSurd, constants_critical
    from ising_peeling.services.tutte_series import build_coeff_table, verify_functional_equations

    cc = constants_critical()
    s7 = QuadSurd.sqrt7()
    rows: List[Dict[str, Any]] = []

    def check(name: str, passed: bool, detail: Any = "") -> None:
        rows.append({"check": name, "passed": bool(passed), "detail": str(detail)})
        if verbose:
            typer.echo(f"   {'✅' if passed else '❌'} {name} {detail}", err=True)

    norm = peeling_normalization()
    check("normalization", norm == 1, norm)
    dt = drift_and_tails()
    check("mu", dt["mu"] * dt["mu"] == Fraction(1, 112), dt["mu"])
    check("mu_sum", dt["mu_sum"] == s7 / 14, dt["mu_sum"])
    closed = c_infty_closed_form()
    check("c_infty", closed == Fraction(4, 3) * cc.mu() and closed == cc.c_infty(), closed)
    check("cx_over_cy", dt["cx_over_cy"] == (2 + 3 * s7) / (2 + s7), dt["cx_over_cy"])
    alpha1 = boundary_series(2).alpha[1]
    check("alpha1", alpha1 == Fraction(1, 3), alpha1)
    b = values_at_uc().b_ratio
    check("b_ratio", b == Fraction(3, 5), b)
    residual = appendix_residual([Fraction(k, 10) for k in range(1, 11)], precision)
    check("appendix_residual", float(residual) < 1e-20, residual.decimal(8))
    with _service_output():
        table = build_coeff_table(n_check, "exact")
        report = verify_functional_equations(table, n_check)
    for family, res in report["families"].items():
        check(f"functional:{family}", res["passed"], res.get("first_failing_order") or "")
    return rows


# ==================== Commands ====================


@app.command()
def constants(
    precision: int = typer.Option(128, "--precision", help="Bits of the decimal expansions"),
    fmt: str = typer.Option("json", "--format", help="Output format: csv or json"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Exact critical constants nu_c, t_c, u_c, the drift mu and c_infty in Q(sqrt7).

    Ref: critical point nu_c = 1 + 2 sqrt7 of the Ising triangulation, u_c = (6/5)(7 + sqrt7) t_c,
    drift mu = 1/(4 sqrt7), c_infty = 1/(3 sqrt7).
    """
    try:
        rows = do_constants(precision)
        _emit(rows if fmt == "json" else _flat_constants(rows), fmt, out)
    except Exception as e:
        _fail(e, verbose)


@app.command()
def coeffs(
    n_max: int = typer.Option(10, "--n-max", "-n", help="Largest face order"),
    p: int = typer.Option(1, "--p", help="Plus boundary edges"),
    q: int = typer.Option(0, "--q", help="Minus boundary edges"),
    mode: str = typer.Option("exact", "--mode", help="exact (nu-polynomials) or evaluated"),
    nu: Optional[str] = typer.Option(None, "--nu", help="Evaluation point: critical, 2, 3/2, '1/1 + 2/1*sqrt7'"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Path to configuration file"),
    fmt: str = typer.Option("csv", "--format", help="Output format: csv or json"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Coefficients of t^n in z_{p,q} from the Tutte recurrence of Ising triangulations.

    Ref: Tutte recurrence of Ising triangulations with Dobrushin boundary, seeded by the edge map
    and z_{0,0} = 1.
    """
    from ising_peeling.services.tutte_series import build_coeff_table, coeff

    try:
        config = load_config(config_path)
        with _service_output():
            table = build_coeff_table(n_max, mode, _parse_nu(nu), config, verbose=verbose)
        rows = [{"p": p, "q": q, "n": n, "coeff": str(coeff(table, p, q, n))} for n in range(n_max + 1)]
        _emit(rows, fmt, out)
    except Exception as e:
        _fail(e, verbose)


@app.command()
def series(
    kind: str = typer.Option("boundary", "--kind", help="boundary, slice or rp13"),
    order: int = typer.Option(10, "--order", "-n", help="Number of coefficients"),
    nu: str = typer.Option("2", "--nu", help="nu > 1: rational, critical or a sqrt7 literal (rp13 only)"),
    fmt: str = typer.Option("csv", "--format", help="Output format: csv or json"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Exact series: critical boundary sequences, the kernel slice, or the parametrized z_1, z_3.

    Ref: rational parametrization of z_1 and z_3 in (nu, t), and the boundary series at (nu_c, t_c).
    """
    from ising_peeling.services.critical_parametrization import boundary_series, rp13_series, slice_series

    try:
        if kind == "boundary":
            rows = [{k: str(v) for k, v in r.items()} for r in boundary_series(order).rows()]
        elif kind == "slice":
            s = slice_series(order)
            rows = [{"p": p, "W": str(s[p])} for p in range(order + 1)]
        elif kind == "rp13":
            rs = rp13_series(_parse_nu(nu), order)
            z1, z3 = rs.z1(), rs.z3()
            rows = [
                {"n": n, "z1": str(z1.get(n, 0)), "z3": str(z3.get(n, 0))}
                for n in sorted(set(z1) | set(z3))
            ]
        else:
            raise ValueError(f"unknown series kind {kind!r}")
        _emit(rows, fmt, out)
    except Exception as e:
        _fail(e, verbose)


@app.command()
def laws(
    regime: str = typer.Option("full", "--regime", "-r", help="full, half or finite"),
    p: int = typer.Option(0, "--p", help="Plus boundary edges (half, finite)"),
    q: int = typer.Option(1, "--q", help="Minus boundary edges (finite)"),
    k_max: int = typer.Option(10, "--k-max", help="Largest k listed per family"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Path to configuration file"),
    fmt: str = typer.Option("json", "--format", help="Output format: csv or json"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """One-step peeling laws: the full-plane law, its half-plane h-transform, or a finite Dobrushin law.

    Ref: step probabilities of the peeling process (full plane, half-plane Doob transform, finite
    ratios t z z' / z_{p,q}).
    """
    from ising_peeling.services.peeling_laws import describe_law, law_finite, law_fullplane, law_halfplane
    from ising_peeling.services.tutte_series import build_coeff_table

    try:
        config = load_config(config_path)
        name = _regime(regime)
        if name == "fullplane":
            law = law_fullplane(config=config)
        elif name == "halfplane":
            law = law_halfplane(p, config=config)
        else:
            with _service_output():
                table = build_coeff_table(int(config["sampling"]["finite_order"]), "evaluated", "critical", config)
            law = law_finite(p, q, table, config=config)
        summary = describe_law(law, k_max)
        if fmt == "json":
            _emit([summary], fmt, out)
        else:
            _emit(summary["events"], fmt, out)
    except Exception as e:
        _fail(e, verbose)


@app.command()
def sample(
    seed: int = typer.Option(..., "--seed", help="Master seed (required)"),
    regime: str = typer.Option("full", "--regime", "-r", help="full, half or finite"),
    p: int = typer.Option(0, "--p", help="Initial plus boundary (half, finite)"),
    q: int = typer.Option(0, "--q", help="Initial minus boundary (finite)"),
    steps: Optional[int] = typer.Option(None, "--steps", help="Stop after this many steps"),
    stop: Optional[str] = typer.Option(None, "--stop", help="Stopping rule, e.g. first_of(T_m(5),fixed_steps(1000))"),
    paths: int = typer.Option(1, "--paths", help="Number of paths; more than one prints summaries"),
    threads: int = typer.Option(os.cpu_count() or 1, "--threads", help="Worker processes"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Path to configuration file"),
    fmt: str = typer.Option("csv", "--format", help="Output format: csv or json"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Perimeter process (X_n, Y_n) of the peeling under a stopping rule.

    Ref: perimeter processes with drift mu and 4/3-stable increments.
    """
    from ising_peeling.services.peeling_simulator import RngStream, StoppingSpec, batch_run, run_path

    try:
        config = load_config(config_path)
        name = _regime(regime)
        if stop:
            rule = StoppingSpec.parse(stop)
        elif steps is not None:
            rule = StoppingSpec.fixed_steps(steps)
        else:
            raise ValueError("give --steps or --stop")
        typer.echo(f"🎲 Seed: {seed}", err=True)
        with _service_output():
            if paths == 1:
                path = run_path(name, (p, q), rule, RngStream(seed, 0).generator(), config)
                rows = [
                    {
                        "n": n,
                        "x": int(path.x[n]),
                        "y": int(path.y[n]),
                        "event": str(path.events[n - 1]) if 0 < n <= len(path.events) else "",
                        "seed": seed,
                    }
                    for n in range(len(path.x))
                ]
            else:
                rows, _ = batch_run(config, paths, rule, seed, name, (p, q), workers=threads, verbose=verbose)
                rows = [{**r, "seed": seed} for r in rows]
        _emit(rows, fmt, out)
    except Exception as e:
        _fail(e, verbose)


def _emit_map(m: Any, seed: int, record: Dict[str, Any], fmt: str, out: Optional[str]) -> None:
    """Map file for ``text``; otherwise one csv/json record embedding the map text."""
    from ising_peeling.services.planar_map import dump_map, map_text

    if fmt != "text":
        _emit([{"seed": seed, **record, "map": map_text(m, seed)}], fmt, out)
    elif out:
        dump_map(m, out, seed)
        typer.echo(f"✅ Wrote {out}", err=True)
    else:
        typer.echo(map_text(m, seed), nl=False)


def _map_format(fmt: str) -> str:
    if fmt not in MAP_FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(MAP_FORMATS)}")
    return fmt


@app.command("map-sample")
def map_sample(
    seed: int = typer.Option(..., "--seed", help="Master seed (required)"),
    p: int = typer.Option(1, "--p", help="Plus boundary edges"),
    q: int = typer.Option(1, "--q", help="Minus boundary edges"),
    n: int = typer.Option(1, "--n", help="Number of internal faces"),
    nu: str = typer.Option("2", "--nu", help="Rational nu > 0"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Path to configuration file"),
    fmt: str = typer.Option("text", "--format", help="text (map file), csv or json (record with the map embedded)"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Exact sample of a (p,q)-Dobrushin triangulation with n faces, weighted by nu^#monochromatic.

    Ref: Boltzmann Ising triangulation with weight nu^(monochromatic edges) t^(faces), sampled
    through the peeling recursion.
    """
    from ising_peeling.services.map_builder import sample_finite_map
    from ising_peeling.services.peeling_simulator import RngStream
    from ising_peeling.services.tutte_series import build_coeff_table

    try:
        config = load_config(config_path)
        fmt = _map_format(fmt)
        nu_value = Fraction(nu)
        with _service_output():
            table = build_coeff_table(max(n, 1), "evaluated", nu_value, config, backend="rational")
        m = sample_finite_map(p, q, n, table, RngStream(seed, 0).generator())
        typer.echo(f"🎲 Seed: {seed}", err=True)
        record = {"p": p, "q": q, "n": n, "nu": str(nu_value), "faces": len(m.internal_faces())}
        _emit_map(m, seed, record, fmt, out)
    except Exception as e:
        _fail(e, verbose)


@app.command("map-validate")
def map_validate(
    map_file: str = typer.Argument(..., help="Map file in the ISING-MAP v1 format"),
    nu: Optional[str] = typer.Option(None, "--nu", help="Report the weight nu^#monochromatic"),
    n: Optional[int] = typer.Option(None, "--n", help="Expected number of internal faces"),
    fmt: str = typer.Option("json", "--format", help="Output format: csv or json"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Euler relation, triangular faces, Dobrushin boundary and weight of a stored map; exit 1 on failure.

    Ref: Euler relation V - E + F = 2 and the Dobrushin boundary condition.
    """
    from ising_peeling.services.planar_map import load_map, map_seed, validate_map

    try:
        m = load_map(map_file)
        expected = {"n": n} if n is not None else None
        report = validate_map(m, _parse_nu(nu), expected)
        report["boundary"] = f"{report['boundary'][0]},{report['boundary'][1]}"
        report["seed"] = map_seed(map_file)
        _emit([report], fmt, out)
        if not report["all_pass"]:
            raise CheckFailed(f"{map_file} failed validation")
    except Exception as e:
        _fail(e, verbose)


@app.command("map-ball")
def map_ball(
    seed: int = typer.Option(..., "--seed", help="Master seed (required)"),
    p: int = typer.Option(2, "--p", help="Plus boundary edges of the half-plane"),
    r: int = typer.Option(2, "--r", help="Ball radius"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Path to configuration file"),
    fmt: str = typer.Option("text", "--format", help="text (map file), csv or json (record with the map embedded)"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Ball of radius r around the root of the half-plane Ising triangulation, by peeling.

    Ref: local limit of the half-plane Ising triangulation explored by peeling with repositioning.
    """
    from ising_peeling.services.map_builder import ball_sampler_halfplane
    from ising_peeling.services.peeling_simulator import RngStream

    try:
        config = load_config(config_path)
        fmt = _map_format(fmt)
        with _service_output():
            b = ball_sampler_halfplane(p, r, RngStream(seed, 0).generator(), config)
        typer.echo(f"🎲 Seed: {seed} | theta_r: {b.theta} | faces: {b.n_faces()}", err=True)
        record = {"p": p, "r": r, "theta_r": b.theta, "faces": b.n_faces()}
        _emit_map(b.map, seed, record, fmt, out)
    except Exception as e:
        _fail(e, verbose)


@app.command()
def verify(
    precision: int = typer.Option(256, "--precision", help="Bits for the numeric residual check"),
    n_check: int = typer.Option(15, "--n-check", help="t-order of the functional equation checks"),
    fmt: str = typer.Option("csv", "--format", help="Output format: csv or json"),
    out: Optional[str] = typer.Option(None, "--out", help="Output file (default: stdout)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Exact identities at the critical point and the Tutte functional equations; exit 1 on any failure.

    Ref: normalization of the peeling law, mu^2 = 1/112, c_infty = 4 mu / 3, alpha_1 = 1/3, b = 3/5,
    the critical-curve identity and the Tutte functional equations.
    """
    try:
        rows = do_verify(precision, n_check, verbose)
        _emit(rows, fmt, out)
        failed = [r["check"] for r in rows if not r["passed"]]
        if failed:
            raise CheckFailed(f"{len(failed)} checks failed: {', '.join(failed)}")
        typer.echo(f"✅ All {len(rows)} checks passed", err=True)
    except Exception as e:
        _fail(e, verbose)


def do_experiment(
    name: str,
    config: Dict[str, Any],
    overrides: Dict[str, Any],
    seed: int,
    out_dir: Optional[str],
    fmt: str,
    threads: int,
    verbose: bool,
) -> List[Any]:
    from ising_peeling.services.experiments import run_experiment
    from ising_peeling.services.report_io import emit_report, report_csv, report_json

    with _service_output():
        results, stats = run_experiment(name, config, overrides, seed, threads, verbose)
    typer.echo(f"🎲 Seed: {seed}", err=True)
    if out_dir:
        for path in emit_report(results, out_dir, fmt):
            typer.echo(f"✅ Wrote {path}", err=True)
    else:
        typer.echo(report_csv(results) if fmt == "csv" else report_json(results), nl=False)
    if stats["failed"]:
        raise CheckFailed(f"{stats['failed']} of {stats['results']} checks failed in {name}")
    return results


@app.command()
def experiment(
    name: str = typer.Argument(..., help="drift, tm_law, cm_limit, tail_exponents, fluctuation_scaling, hit_zero, one_jump, interface_length"),
    seed: int = typer.Option(..., "--seed", help="Master seed (required)"),
    sets: Optional[List[str]] = typer.Option(None, "--set", help="Parameter override key=value (repeatable)"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Path to configuration file"),
    out: Optional[str] = typer.Option(None, "--out", help="Report directory (default: stdout)"),
    fmt: str = typer.Option("both", "--format", help="csv, json or both (both needs --out)"),
    threads: int = typer.Option(os.cpu_count() or 1, "--threads", help="Worker processes"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Monte Carlo and exact experiments on drift, tails, hitting times and interfaces; exit 1 on failure.

    Ref: drift mu, T_m survival (1 + mu t)^(-4/3), c_m -> c_infty, tail exponent 7/3, fluctuation
    exponent 3/4, one-jump hitting and interface lengths.
    """
    try:
        config = load_config(config_path)
        do_experiment(name, config, _parse_sets(sets), seed, out, fmt, threads, verbose)
    except Exception as e:
        _fail(e, verbose)


@app.command()
def run_task(
    params_file: str = typer.Argument(..., help="Path to the JSON parameters file"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Path to configuration file"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show verbose logs"),
) -> None:
    """Execute a task defined in a JSON file."""
    import json
    from pathlib import Path

    p_file = Path(params_file)
    if not p_file.exists():
        typer.echo(f"❌ Error: Parameters file not found: {p_file}", err=True)
        raise typer.Exit(code=1)

    try:
        with open(p_file, "r", encoding="utf-8") as f:
            params = json.load(f)
    except json.JSONDecodeError as e:
        typer.echo(f"❌ Error parsing JSON: {e}", err=True)
        raise typer.Exit(code=1)

    task_name = params.get("task")
    if not task_name:
        typer.echo("❌ Error: 'task' field missing in JSON", err=True)
        raise typer.Exit(code=1)

    fmt = params.get("format", "json")
    out = params.get("out")
    try:
        config = load_config(config_path)
        if task_name == "experiment":
            if "seed" not in params:
                raise ValueError("'seed' field missing in JSON")
            do_experiment(
                params["name"],
                config,
                params.get("params", {}),
                int(params["seed"]),
                params.get("out_dir"),
                params.get("format", "both" if params.get("out_dir") else "json"),
                int(params.get("threads", os.cpu_count() or 1)),
                verbose,
            )
        elif task_name == "verify":
            rows = do_verify(int(params.get("precision", 256)), int(params.get("n_check", 15)), verbose)
            _emit(rows, fmt, out)
            failed = [r["check"] for r in rows if not r["passed"]]
            if failed:
                raise CheckFailed(f"{len(failed)} checks failed: {', '.join(failed)}")
        elif task_name == "constants":
            rows = do_constants(int(params.get("precision", 128)))
            _emit(rows if fmt == "json" else _flat_constants(rows), fmt, out)
        else:
            typer.echo(f"❌ Error: Unknown task '{task_name}'", err=True)
            raise typer.Exit(code=1)
    except typer.Exit:
        raise
    except Exception as e:
        _fail(e, verbose)

    typer.echo(f"\n✅ Task '{task_name}' completed successfully.", err=True)


def main() -> None:
    """CLI Main Entry Point."""
    app()


if __name__ == "__main__":
    main()

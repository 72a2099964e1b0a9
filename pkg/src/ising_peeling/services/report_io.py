"""Machine-readable experiment reports and tabular command output."""

import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

REPORT_VERSION = 1
CSV_COLUMNS = [
    "experiment",
    "name",
    "seed",
    "estimate",
    "ci_low",
    "ci_high",
    "target",
    "provenance",
    "pass",
]


class ReportError(RuntimeError):
    """A report could not be written or read."""


@dataclass
class StatResult:
    """One checked quantity: estimate, interval, target and verdict."""

    experiment: str
    name: str
    estimate: float
    target: Optional[float] = None
    ci: Optional[Tuple[float, float]] = None
    provenance: str = "DERIVED"
    passed: bool = True
    seed: Optional[int] = None
    params: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["ci"] = list(self.ci) if self.ci is not None else None
        data["pass"] = data.pop("passed")
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StatResult":
        data = dict(data)
        data["passed"] = data.pop("pass")
        if data.get("ci") is not None:
            data["ci"] = tuple(data["ci"])
        return cls(**data)

    def row(self) -> Dict[str, Any]:
        lo, hi = self.ci if self.ci is not None else (None, None)
        return {
            "experiment": self.experiment,
            "name": self.name,
            "seed": self.seed,
            "estimate": self.estimate,
            "ci_low": lo,
            "ci_high": hi,
            "target": self.target,
            "provenance": self.provenance,
            "pass": self.passed,
        }


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return x.item()
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    return str(x)


def report_json(results: List[StatResult]) -> str:
    payload = {"version": REPORT_VERSION, "results": [_jsonable(r.to_dict()) for r in results]}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_csv(results: List[StatResult]) -> str:
    return table_text([r.row() for r in results], "csv", columns=CSV_COLUMNS)


def emit_report(
    results: List[StatResult], out_dir: Any, fmt: str = "both", stem: Optional[str] = None
) -> List[Path]:
    """Writes ``results`` as ``<stem>.json`` and/or ``<stem>.csv`` under ``out_dir``.

    Raises:
        ReportError: No results, unknown format, or an I/O failure.
    """
    if not results:
        raise ReportError("no results to report")
    if fmt not in ("json", "csv", "both"):
        raise ReportError(f"unknown report format {fmt!r}")
    stem = stem or results[0].experiment
    out = Path(out_dir)
    written: List[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt in ("json", "both"):
            path = out / f"{stem}.json"
            path.write_text(report_json(results), encoding="utf-8")
            written.append(path)
        if fmt in ("csv", "both"):
            path = out / f"{stem}.csv"
            path.write_text(report_csv(results), encoding="utf-8")
            written.append(path)
    except OSError as e:
        raise ReportError(f"cannot write report to {out}: {e}") from e
    return written


def load_report(path: Any) -> List[StatResult]:
    """Reads a JSON report (full records) or a CSV report (summary columns only)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ReportError(f"cannot read {path}: {e}") from e
    if path.suffix == ".csv":
        frame = pd.read_csv(io.StringIO(text))
        out = []
        for rec in frame.to_dict(orient="records"):
            rec = {k: (None if pd.isna(v) else v) for k, v in rec.items()}
            ci = None if rec["ci_low"] is None else (float(rec["ci_low"]), float(rec["ci_high"]))
            out.append(
                StatResult(
                    experiment=rec["experiment"],
                    name=rec["name"],
                    estimate=float(rec["estimate"]),
                    target=None if rec["target"] is None else float(rec["target"]),
                    ci=ci,
                    provenance=rec["provenance"],
                    passed=bool(rec["pass"]),
                    seed=None if rec["seed"] is None else int(rec["seed"]),
                )
            )
        return out
    try:
        payload = json.loads(text)
        return [StatResult.from_dict(r) for r in payload["results"]]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ReportError(f"malformed report {path}: {e}") from e


# ==================== Tables ====================


def table_text(rows: List[Dict[str, Any]], fmt: str, columns: Optional[List[str]] = None) -> str:
    """Renders rows as CSV (header row, comma separated) or as a JSON list."""
    if fmt == "json":
        return json.dumps(_jsonable(rows), indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ReportError(f"unknown table format {fmt!r}")
    frame = pd.DataFrame(rows, columns=columns)
    return frame.to_csv(index=False, lineterminator="\n", float_format="%.12g")


def write_output(text: str, out: Optional[Any]) -> Optional[Path]:
    """Writes ``text`` to ``out``; returns ``None`` when ``out`` is unset (caller echoes)."""
    if out is None:
        return None
    path = Path(out)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e}") from e
    return path

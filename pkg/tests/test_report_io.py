import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from ising_peeling.services.report_io import (
    CSV_COLUMNS,
    ReportError,
    StatResult,
    emit_report,
    load_report,
    report_csv,
    report_json,
    table_text,
    write_output,
)


def sample_results():
    return [
        StatResult(
            experiment="drift",
            name="E[X1]",
            estimate=0.0951,
            target=0.0944911,
            ci=(0.0941, 0.0961),
            seed=7,
            params={"n_events": 1000},
            diagnostics={"n": np.int64(1000)},
        ),
        StatResult(
            experiment="drift",
            name="mu_exact",
            estimate=0.0944911,
            provenance="EXACT",
            passed=False,
            seed=7,
        ),
    ]


class TestReports(unittest.TestCase):
    def test_json_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            paths = emit_report(sample_results(), tmp, "json")
            self.assertEqual([p.name for p in paths], ["drift.json"])
            back = load_report(paths[0])
        self.assertEqual(back[0].ci, (0.0941, 0.0961))
        self.assertEqual(back[0].diagnostics, {"n": 1000})
        self.assertFalse(back[1].passed)
        self.assertEqual(back[1].provenance, "EXACT")

    def test_csv_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            paths = emit_report(sample_results(), tmp, "both", stem="run")
            self.assertEqual(sorted(p.name for p in paths), ["run.csv", "run.json"])
            back = load_report(Path(tmp) / "run.csv")
        self.assertEqual(len(back), 2)
        self.assertAlmostEqual(back[0].estimate, 0.0951)
        self.assertEqual(back[0].seed, 7)
        self.assertIsNone(back[1].ci)
        self.assertIsNone(back[1].target)
        self.assertFalse(back[1].passed)

    def test_bytes_are_deterministic(self):
        self.assertEqual(report_json(sample_results()), report_json(sample_results()))
        csv = report_csv(sample_results())
        self.assertEqual(csv.splitlines()[0], ",".join(CSV_COLUMNS))
        self.assertEqual(csv, report_csv(sample_results()))
        payload = json.loads(report_json(sample_results()))
        self.assertEqual(payload["version"], 1)

    def test_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ReportError):
                emit_report([], tmp)
            with self.assertRaises(ReportError):
                emit_report(sample_results(), tmp, "xml")
            bad = Path(tmp) / "bad.json"
            bad.write_text("{not json", encoding="utf-8")
            with self.assertRaises(ReportError):
                load_report(bad)
            with self.assertRaises(ReportError):
                load_report(Path(tmp) / "missing.json")


class TestTables(unittest.TestCase):
    def test_csv_and_json(self):
        rows = [{"p": 0, "value": 1.0}, {"p": 1, "value": 0.5}]
        self.assertEqual(table_text(rows, "csv"), "p,value\n0,1\n1,0.5\n")
        self.assertEqual(json.loads(table_text(rows, "json")), rows)
        with self.assertRaises(ReportError):
            table_text(rows, "yaml")

    def test_write_output(self):
        self.assertIsNone(write_output("x", None))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_output("hello\n", Path(tmp) / "sub" / "out.txt")
            self.assertEqual(path.read_text(encoding="utf-8"), "hello\n")


if __name__ == "__main__":
    unittest.main()

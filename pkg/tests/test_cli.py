import json
import shutil
import tempfile
import unittest
from pathlib import Path

import pandas as pd
import yaml
from typer.testing import CliRunner

from ising_peeling.cli import app
from ising_peeling.services.planar_map import load_map

SMALL_TABLES = {
    "tables": {"boundary_exact_order": 24, "numeric_order": 256, "numeric_order_cap": 1024},
    "sampling": {"filler_max_faces": 30},
}


class CliCase(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()
        self.tmp = Path(tempfile.mkdtemp())
        self.config = self.tmp / "config.yaml"
        self.config.write_text(yaml.safe_dump(SMALL_TABLES), encoding="utf-8")

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def invoke(self, *args):
        return self.runner.invoke(app, [str(a) for a in args])


class TestConstantsAndSeries(CliCase):
    def test_constants_json(self):
        out = self.tmp / "c.json"
        res = self.invoke("constants", "--out", out)
        self.assertEqual(res.exit_code, 0, res.output)
        rows = {r["name"]: r for r in json.loads(out.read_text(encoding="utf-8"))}
        self.assertEqual(rows["nu_c"]["exact"]["a_num"], 1)
        self.assertEqual(rows["nu_c"]["exact"]["b_num"], 2)
        self.assertTrue(rows["t_c"]["decimal"].startswith("0.013194"))
        self.assertTrue(rows["u_c"]["decimal"].startswith("0.15272"))
        self.assertIsNone(rows["u_c"]["exact"])

    def test_constants_csv(self):
        out = self.tmp / "c.csv"
        res = self.invoke("constants", "--format", "csv", "--out", out)
        self.assertEqual(res.exit_code, 0, res.output)
        frame = pd.read_csv(out)
        self.assertIn("mu", set(frame["name"]))
        self.assertEqual(list(frame.columns)[:2], ["name", "a_num"])

    def test_coeffs(self):
        out = self.tmp / "z.csv"
        res = self.invoke(
            "coeffs", "--n-max", 3, "--p", 1, "--q", 1, "--mode", "evaluated", "--nu", "2",
            "--config", self.config, "--out", out,
        )
        self.assertEqual(res.exit_code, 0, res.output)
        frame = pd.read_csv(out)
        self.assertEqual(list(frame["n"]), [0, 1, 2, 3])
        # the single edge map between a plus and a minus vertex
        self.assertEqual(str(frame["coeff"][0]), "1")

    def test_rp13_at_critical_point(self):
        out = self.tmp / "rp13.json"
        res = self.invoke("series", "--kind", "rp13", "--nu", "critical", "--order", 5, "--format", "json", "--out", out)
        self.assertEqual(res.exit_code, 0, res.output)
        rows = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual([r["n"] for r in rows][:2], [1, 3])
        self.assertIn("sqrt7", rows[0]["z1"])

    def test_unknown_series(self):
        res = self.invoke("series", "--kind", "nope")
        self.assertEqual(res.exit_code, 1)


class TestLawsAndSampling(CliCase):
    def test_fullplane_law(self):
        out = self.tmp / "law.json"
        res = self.invoke("laws", "--k-max", 3, "--config", self.config, "--out", out)
        self.assertEqual(res.exit_code, 0, res.output)
        (summary,) = json.loads(out.read_text(encoding="utf-8"))
        self.assertIn("events", summary)

    def test_unknown_regime(self):
        res = self.invoke("laws", "--regime", "sideways", "--config", self.config)
        self.assertEqual(res.exit_code, 1)

    def test_sample_is_reproducible(self):
        outs = [self.tmp / "a.csv", self.tmp / "b.csv"]
        for out in outs:
            res = self.invoke("sample", "--seed", 5, "--steps", 20, "--config", self.config, "--out", out)
            self.assertEqual(res.exit_code, 0, res.output)
        self.assertEqual(outs[0].read_text(encoding="utf-8"), outs[1].read_text(encoding="utf-8"))
        frame = pd.read_csv(outs[0])
        self.assertEqual(len(frame), 21)
        self.assertEqual((frame["x"][0], frame["y"][0]), (0, 0))

    def test_sample_needs_a_rule(self):
        res = self.invoke("sample", "--seed", 5, "--config", self.config)
        self.assertEqual(res.exit_code, 1)

    def test_map_sample_then_validate(self):
        path = self.tmp / "m.txt"
        res = self.invoke("map-sample", "--seed", 3, "--p", 1, "--q", 1, "--n", 2, "--out", path)
        self.assertEqual(res.exit_code, 0, res.output)
        report = self.tmp / "r.json"
        res = self.invoke("map-validate", path, "--nu", "2", "--n", 2, "--out", report)
        self.assertEqual(res.exit_code, 0, res.output)
        (row,) = json.loads(report.read_text(encoding="utf-8"))
        self.assertTrue(row["all_pass"])
        self.assertEqual(row["boundary"], "1,1")
        res = self.invoke("map-validate", path, "--n", 5, "--out", report)
        self.assertEqual(res.exit_code, 1)

    def test_map_sample_record(self):
        record = self.tmp / "r.json"
        res = self.invoke("map-sample", "--seed", 3, "--p", 1, "--q", 1, "--n", 2, "--format", "json", "--out", record)
        self.assertEqual(res.exit_code, 0, res.output)
        (row,) = json.loads(record.read_text(encoding="utf-8"))
        self.assertEqual((row["seed"], row["faces"], row["nu"]), (3, 2, "2"))
        self.assertIn("\nseed 3\n", row["map"])

        plain = self.tmp / "m.txt"
        res = self.invoke("map-sample", "--seed", 3, "--p", 1, "--q", 1, "--n", 2, "--out", plain)
        self.assertEqual(res.exit_code, 0, res.output)
        self.assertEqual(plain.read_text(encoding="utf-8"), row["map"])
        report = self.tmp / "v.json"
        res = self.invoke("map-validate", plain, "--out", report)
        self.assertEqual(res.exit_code, 0, res.output)
        self.assertEqual(json.loads(report.read_text(encoding="utf-8"))[0]["seed"], 3)

    def test_map_sample_csv(self):
        out = self.tmp / "r.csv"
        res = self.invoke("map-sample", "--seed", 8, "--p", 2, "--q", 1, "--n", 1, "--format", "csv", "--out", out)
        self.assertEqual(res.exit_code, 0, res.output)
        frame = pd.read_csv(out)
        self.assertEqual(int(frame["seed"][0]), 8)
        self.assertTrue(frame["map"][0].startswith("ISING-MAP v1\n"))
        res = self.invoke("map-sample", "--seed", 8, "--format", "xml", "--out", out)
        self.assertEqual(res.exit_code, 1)

    def test_map_ball_record(self):
        out = self.tmp / "ball.json"
        res = self.invoke("map-ball", "--seed", 3, "--p", 2, "--r", 1, "--format", "json", "--config", self.config, "--out", out)
        self.assertEqual(res.exit_code, 0, res.output)
        (row,) = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual((row["seed"], row["r"]), (3, 1))
        # the root vertex starts on the frontier, so at least one step is needed
        self.assertGreaterEqual(row["theta_r"], 1)
        path = self.tmp / "ball.txt"
        path.write_text(row["map"], encoding="utf-8")
        self.assertEqual(len(load_map(path).internal_faces()), row["faces"])
        self.assertIn("\nseed 3\n", row["map"])


class TestTasks(CliCase):
    def write_task(self, payload):
        path = self.tmp / "task.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    def test_constants_task(self):
        out = self.tmp / "c.json"
        res = self.invoke("run-task", self.write_task({"task": "constants", "out": str(out)}))
        self.assertEqual(res.exit_code, 0, res.output)
        self.assertTrue(out.exists())

    def test_experiment_task(self):
        task = {
            "task": "experiment",
            "name": "interface_length",
            "seed": 4,
            "params": {"p": 1, "q": 1, "n": 2, "n_maps": 5},
            "out_dir": str(self.tmp / "reports"),
            "format": "json",
            "threads": 1,
        }
        res = self.invoke("run-task", self.write_task(task), "--config", self.config)
        self.assertEqual(res.exit_code, 0, res.output)
        payload = json.loads((self.tmp / "reports" / "interface_length.json").read_text(encoding="utf-8"))
        self.assertEqual(payload["results"][0]["seed"], 4)

    def test_bad_tasks(self):
        self.assertEqual(self.invoke("run-task", self.tmp / "missing.json").exit_code, 1)
        self.assertEqual(self.invoke("run-task", self.write_task({"precision": 64})).exit_code, 1)
        self.assertEqual(self.invoke("run-task", self.write_task({"task": "organize"})).exit_code, 1)
        task = {"task": "experiment", "name": "drift"}
        self.assertEqual(self.invoke("run-task", self.write_task(task)).exit_code, 1)


class TestHelp(CliCase):
    COMMANDS = [
        "constants", "coeffs", "series", "laws", "sample", "map-sample",
        "map-validate", "map-ball", "verify", "experiment",
    ]

    def test_every_command_names_its_result(self):
        for command in self.COMMANDS:
            res = self.invoke(command, "--help")
            self.assertEqual(res.exit_code, 0, command)
            self.assertIn("Ref:", res.output, command)


if __name__ == "__main__":
    unittest.main()

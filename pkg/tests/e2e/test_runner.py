import unittest
import os
import shutil
import json
import subprocess
from pathlib import Path

import yaml

PROJECT_ROOT = Path(__file__).resolve().parents[2]
CLI_MODULE = "ising_peeling.cli"

TEST_ROOT = Path("/tmp/ipk_e2e_test")
OUT_DIR = TEST_ROOT / "out"
CONFIG_FILE = TEST_ROOT / "config.yaml"
PARAMS_FILE = TEST_ROOT / "params.json"


class TestIsingPeelingE2E(unittest.TestCase):
    def setUp(self):
        # Clean start
        if TEST_ROOT.exists():
            shutil.rmtree(TEST_ROOT)
        TEST_ROOT.mkdir(parents=True)
        OUT_DIR.mkdir()

        # Small tables keep the float boundary series quick
        config = {
            "tables": {"boundary_exact_order": 24, "numeric_order": 256, "numeric_order_cap": 1024},
            "sampling": {"filler_max_faces": 30},
        }
        with open(CONFIG_FILE, "w") as f:
            yaml.safe_dump(config, f)

        # Env setup
        self.env = os.environ.copy()
        self.env["PYTHONPATH"] = str(PROJECT_ROOT / "src")

    def tearDown(self):
        if TEST_ROOT.exists():
            shutil.rmtree(TEST_ROOT)

    def run_cli(self, args):
        cmd = ["uv", "run", "python", "-m", CLI_MODULE] + args
        result = subprocess.run(
            cmd, env=self.env, capture_output=True, text=True, cwd=PROJECT_ROOT
        )
        return result

    def write_params(self, params):
        with open(PARAMS_FILE, "w") as f:
            json.dump(params, f)

    def test_constants_task(self):
        self.write_params({"task": "constants", "precision": 64})

        res = self.run_cli(["run-task", str(PARAMS_FILE)])
        self.assertEqual(res.returncode, 0, f"CLI Failed: {res.stderr}")

        # stdout carries only the JSON rows
        rows = {r["name"]: r for r in json.loads(res.stdout)}
        self.assertEqual(rows["mu"]["exact"]["b_num"], 1)
        self.assertEqual(rows["mu"]["exact"]["b_den"], 28)
        self.assertTrue(rows["t_c"]["decimal"].startswith("0.013194"))

    def test_verify_task(self):
        out = OUT_DIR / "verify.csv"
        self.write_params({"task": "verify", "n_check": 5, "format": "csv", "out": str(out)})

        res = self.run_cli(["run-task", str(PARAMS_FILE)])
        self.assertEqual(res.returncode, 0, f"CLI Failed: {res.stderr}")

        lines = out.read_text().splitlines()
        self.assertEqual(lines[0], "check,passed,detail")
        self.assertTrue(all(",True," in line for line in lines[1:]), lines)

    def test_sample_reproducible(self):
        args = ["sample", "--seed", "42", "--regime", "half", "--p", "10", "--steps", "40",
                "--config", str(CONFIG_FILE)]
        first = self.run_cli(args)
        second = self.run_cli(args)
        self.assertEqual(first.returncode, 0, f"CLI Failed: {first.stderr}")
        self.assertEqual(first.stdout, second.stdout)
        self.assertTrue(first.stdout.startswith("n,x,y,event,seed\n"))
        self.assertIn("Seed: 42", first.stderr)

    def test_experiment_report(self):
        self.write_params({
            "task": "experiment",
            "name": "interface_length",
            "seed": 7,
            "params": {"p": 2, "q": 1, "n": 3, "n_maps": 10},
            "out_dir": str(OUT_DIR),
            "threads": 1,
        })

        res = self.run_cli(["run-task", str(PARAMS_FILE), "--config", str(CONFIG_FILE)])
        self.assertEqual(res.returncode, 0, f"CLI Failed: {res.stderr}")

        self.assertTrue((OUT_DIR / "interface_length.json").exists())
        self.assertTrue((OUT_DIR / "interface_length.csv").exists())
        report = json.loads((OUT_DIR / "interface_length.json").read_text())
        self.assertEqual(report["results"][0]["provenance"], "EXPLORATORY")

    def test_map_round_trip(self):
        map_file = OUT_DIR / "map.txt"
        res = self.run_cli(["map-sample", "--seed", "3", "--p", "2", "--q", "2", "--n", "4",
                            "--out", str(map_file)])
        self.assertEqual(res.returncode, 0, f"CLI Failed: {res.stderr}")
        self.assertTrue(map_file.read_text().startswith("ISING-MAP v1\n"))

        res = self.run_cli(["map-validate", str(map_file), "--n", "4"])
        self.assertEqual(res.returncode, 0, f"CLI Failed: {res.stderr}")

        res = self.run_cli(["map-validate", str(map_file), "--n", "6"])
        self.assertEqual(res.returncode, 1)

    def test_unknown_task(self):
        self.write_params({"task": "organize"})
        res = self.run_cli(["run-task", str(PARAMS_FILE)])
        self.assertEqual(res.returncode, 1)
        self.assertIn("Unknown task", res.stderr)


if __name__ == "__main__":
    unittest.main()

import contextlib
import io
import unittest
from unittest import mock

import numpy as np

from ising_peeling.config import default_config
from ising_peeling.services.experiments import (
    EXPERIMENTS,
    cm_values,
    exp_cm_limit,
    exp_drift,
    exp_fluctuation_scaling,
    exp_hit_zero,
    exp_interface_length,
    exp_tail_exponents,
    exp_tm_law,
    run_experiment,
    tm_survival_limit,
)
from ising_peeling.services.planar_map import MonochromaticBoundary
from ising_peeling.services.report_io import StatResult


def small_config():
    config = default_config()
    config["tables"].update(boundary_exact_order=24, numeric_order=256, numeric_order_cap=1024)
    return config


def quiet():
    return contextlib.redirect_stdout(io.StringIO())


def by_name(results):
    return {r.name: r for r in results}


class TestExactChecks(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.config = small_config()

    def test_survival_limit(self):
        self.assertEqual(float(tm_survival_limit(0.0)), 1.0)
        values = tm_survival_limit(np.array([1.0, 2.0, 4.0]))
        self.assertTrue(np.all(np.diff(values) < 0))

    def test_cm_values_nondecreasing(self):
        cm = cm_values(50, 12, self.config)
        self.assertEqual(cm.shape, (12,))
        self.assertTrue(np.all(np.diff(cm) >= 0))
        self.assertTrue(np.all(cm > 0))

    def test_cm_limit_records(self):
        params = {"p": 50, "m_max": 12, "m_fit_min": 4, "tolerance": 0.5}
        results = by_name(exp_cm_limit(params, 0, self.config))
        self.assertTrue(results["c_infty_over_mu"].passed)
        self.assertEqual(len(results["c_infty"].diagnostics["c_m"]), 12)
        with self.assertRaises(ValueError):
            exp_cm_limit({**params, "m_fit_min": 12}, 0, self.config)

    def test_tail_exponents(self):
        params = {"k_min": 20, "k_max": 60, "tolerance": 0.5}
        results = by_name(exp_tail_exponents(params, 0, self.config))
        self.assertTrue(results["cx_over_cy"].passed)
        self.assertAlmostEqual(results["cx_over_cy"].estimate, 2.139, delta=1e-3)
        self.assertLess(results["slope_X"].estimate, 0)
        self.assertLess(results["slope_Y"].estimate, 0)
        with self.assertRaises(ValueError):
            exp_tail_exponents({**params, "k_max": 20}, 0, self.config)


class TestMonteCarlo(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.config = small_config()

    def test_drift(self):
        results = by_name(exp_drift({"n_events": 20000}, 3, self.config))
        self.assertTrue(results["mu_exact"].passed)
        # closed-form targets are tagged as theory values
        self.assertEqual({r.provenance for r in results.values()}, {"THEORY"})
        self.assertAlmostEqual(results["E[X1+Y1]"].target, 2 * results["E[X1]"].target)
        lo, hi = results["E[X1]"].ci
        self.assertLess(lo, results["E[X1]"].estimate)
        self.assertLess(results["E[X1]"].estimate, hi)
        with self.assertRaises(ValueError):
            exp_drift({"n_events": 0}, 3, self.config)

    def test_drift_is_reproducible(self):
        a = exp_drift({"n_events": 5000}, 11, self.config)
        b = exp_drift({"n_events": 5000}, 11, self.config)
        self.assertEqual([r.estimate for r in a], [r.estimate for r in b])

    def test_tm_law(self):
        params = {"p": 20, "m": 2, "n_paths": 30, "t_max": 4.0, "t_points": 5, "threshold": 1.0}
        with quiet():
            (result,) = exp_tm_law(params, 5, self.config)
        self.assertEqual(result.name, "sup_distance")
        self.assertEqual(len(result.diagnostics["empirical"]), 5)
        # every run lasts at least one step since p > m
        self.assertEqual(result.diagnostics["empirical"][0], 1.0)
        self.assertTrue(0.0 <= result.estimate <= 1.0)
        # T_m > 0 for every path, so the total step count is at least n_paths
        self.assertGreaterEqual(result.diagnostics["steps"], 30)

    def test_hit_zero(self):
        params = {"p": 5, "n_paths": 20, "lambdas": [0, 1]}
        with quiet():
            results = by_name(exp_hit_zero(params, 2, self.config))
        self.assertEqual(results["P(T0>0p)"].estimate, 1.0)
        self.assertTrue(results["P(T0>0p)"].passed)

    def test_fluctuation_needs_two_sizes(self):
        params = {"log2_n_min": 5, "log2_n_max": 5, "n_paths": 4, "tolerance": 0.1}
        with self.assertRaises(ValueError):
            exp_fluctuation_scaling(params, 0, self.config)


class TestInterfaceLength(unittest.TestCase):
    def test_small_maps(self):
        params = {"p": 1, "q": 1, "n": 2, "nu": 2, "n_maps": 20}
        (result,) = exp_interface_length(params, 4, default_config())
        self.assertTrue(result.passed)
        self.assertEqual(result.provenance, "EXPLORATORY")
        self.assertEqual(sum(result.diagnostics["histogram"]), 20)
        self.assertGreaterEqual(result.estimate, 1.0)

    def test_monochromatic(self):
        params = {"p": 0, "q": 2, "n": 2, "nu": 2, "n_maps": 1}
        with self.assertRaises(MonochromaticBoundary):
            exp_interface_length(params, 4, default_config())


class TestRunExperiment(unittest.TestCase):
    def test_unknown(self):
        with self.assertRaises(ValueError):
            run_experiment("nope")

    def test_stats_and_overrides(self):
        seen = {}

        def fake(params, seed, config, **kwargs):
            seen.update(params=params, seed=seed, kwargs=kwargs)
            return [
                StatResult("drift", "a", 1.0, 1.0, passed=True),
                StatResult("drift", "b", 2.0, 1.0, passed=False),
            ]

        with mock.patch.dict(EXPERIMENTS, {"drift": fake}), quiet() as out:
            results, stats = run_experiment("drift", default_config(), {"n_events": 10, "level": None}, seed=8)
        self.assertEqual(stats, {"experiment": "drift", "results": 2, "passed": 1, "failed": 1})
        self.assertEqual(seen["params"], {"n_events": 10, "level": 0.99})
        self.assertEqual(seen["seed"], 8)
        self.assertEqual(seen["kwargs"], {"workers": 1, "verbose": False})
        self.assertIn("🏁 Done. 1/2 checks passed.", out.getvalue())
        self.assertEqual(len(results), 2)

    def test_registry(self):
        self.assertEqual(
            sorted(EXPERIMENTS),
            sorted(default_config()["experiments"]),
        )


if __name__ == "__main__":
    unittest.main()

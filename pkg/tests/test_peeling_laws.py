import unittest
from collections import Counter

import numpy as np

from ising_peeling.config import default_config
from ising_peeling.services.exact_algebra import constants_critical
from ising_peeling.services.peeling_laws import (
    BoundaryLookup,
    Displacement,
    EventOutOfSupport,
    PeelingEvent,
    describe_law,
    displacement,
    halfplane_mean_increment,
    law_finite,
    law_fullplane,
    law_halfplane,
    marginal_tail,
    prob_jump_below,
    sample_event,
)
from ising_peeling.services.tutte_series import build_coeff_table


def small_config():
    config = default_config()
    config["tables"].update(boundary_exact_order=24, numeric_order=256, numeric_order_cap=1024)
    return config


class TestEvents(unittest.TestCase):
    def test_parse_and_str(self):
        self.assertEqual(PeelingEvent.parse("Lp(3)"), PeelingEvent("Lp", 3))
        self.assertEqual(PeelingEvent.parse(" Cm "), PeelingEvent("Cm"))
        self.assertEqual(str(PeelingEvent("Rm", 0)), "Rm(0)")
        self.assertEqual(str(PeelingEvent("Cp")), "Cp")

    def test_invalid_events(self):
        with self.assertRaises(EventOutOfSupport):
            PeelingEvent("Xp", 1)
        with self.assertRaises(EventOutOfSupport):
            PeelingEvent("Cp", 1)
        with self.assertRaises(EventOutOfSupport):
            PeelingEvent("Lm", -1)

    def test_displacements(self):
        self.assertEqual(displacement(PeelingEvent("Cp")), Displacement(2, -1))
        self.assertEqual(displacement(PeelingEvent("Cm")), Displacement(0, 1))
        self.assertEqual(displacement(PeelingEvent("Lp", 3)), Displacement(1, -4))
        self.assertEqual(displacement(PeelingEvent("Lm", 3)), Displacement(0, -3))
        self.assertEqual(displacement(PeelingEvent("Rp", 2)), Displacement(-1, -1))
        self.assertEqual(displacement(PeelingEvent("Rm", 2)), Displacement(-2, 0))

    def test_swallowing_displacements(self):
        self.assertEqual(displacement(PeelingEvent("Rp", 7), "halfplane", 5), Displacement(-4, -3))
        self.assertEqual(displacement(PeelingEvent("Rm", 7), "halfplane", 5), Displacement(-5, -2))
        self.assertEqual(displacement(PeelingEvent("Rm", 5), "halfplane", 5), Displacement(-5, 0))

    def test_displacement_needs_p(self):
        with self.assertRaises(EventOutOfSupport):
            displacement(PeelingEvent("Rp", 1), "halfplane")
        with self.assertRaises(EventOutOfSupport):
            displacement(PeelingEvent("Cp"), "sphere")


class TestFullplaneLaw(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.lookup = BoundaryLookup(small_config())
        cls.law = law_fullplane(lookup=cls.lookup)

    def test_exact_normalization(self):
        self.assertTrue(self.law.exact)
        self.assertEqual(float(self.law.normalization_defect), 0.0)

    def test_cm_mass(self):
        self.assertAlmostEqual(self.law.float_masses()["Cm"], 0.543548, places=5)

    def test_float_weights_match_exact(self):
        for tag in ("Lp", "Rm", "Lm"):
            exact = [float(self.law.weight(PeelingEvent(tag, k))) for k in range(10)]
            np.testing.assert_allclose(self.law.float_weights(tag, np.arange(10)), exact, rtol=1e-8)

    def test_marginal_tails(self):
        for k in (2, 10, 40, 200):
            tail = marginal_tail(k, self.lookup)
            self.assertGreater(float(tail["x"]), 0)
            self.assertGreater(float(tail["y"]), 0)
        tail = marginal_tail(200, self.lookup)
        self.assertTrue(1.0 < float(tail["y"]) / float(tail["x"]) < 4.0)
        with self.assertRaises(ValueError):
            marginal_tail(1, self.lookup)

    def test_describe(self):
        desc = describe_law(self.law, 3)
        self.assertEqual(desc["regime"], "fullplane")
        self.assertEqual(len(desc["events"]), 2 + 4 * 4)
        self.assertIn("exact", desc["family_masses"]["Cm"])


class TestHalfplaneLaw(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.config = small_config()
        cls.lookup = BoundaryLookup(cls.config)

    def test_normalization(self):
        for p in range(11):
            law = law_halfplane(p, lookup=self.lookup, config=self.config)
            self.assertTrue(law.exact)
            self.assertLess(float(law.normalization_defect), 1e-12, f"p={p}")

    def test_numeric_normalization(self):
        law = law_halfplane(60, lookup=self.lookup, config=self.config)
        self.assertFalse(law.exact)
        self.assertLess(float(law.normalization_defect), 1e-9)

    def test_doob_transform_of_fullplane(self):
        full = law_fullplane(lookup=self.lookup)
        alpha = self.lookup.series.alpha
        p = 6
        half = law_halfplane(p, lookup=self.lookup, config=self.config)
        for k in range(p + 1):
            ev = PeelingEvent("Rm", k)
            self.assertEqual(half.weight(ev), full.weight(ev) * alpha[p - k] / alpha[p])
            ev = PeelingEvent("Rp", k)
            self.assertEqual(half.weight(ev), full.weight(ev) * alpha[p - k + 1] / alpha[p])
        ev = PeelingEvent("Lp", 3)
        self.assertEqual(half.weight(ev), full.weight(ev) * alpha[p + 1] / alpha[p])
        self.assertEqual(half.weight(PeelingEvent("Cm")), full.weight(PeelingEvent("Cm")))

    def test_prob_jump_below(self):
        p = 5
        values = [prob_jump_below(p, m, self.lookup) for m in range(p + 3)]
        self.assertTrue(all(b >= a - 1e-15 for a, b in zip(values, values[1:])))
        self.assertGreater(values[0], 0)
        self.assertAlmostEqual(values[-1], 1.0, places=9)
        with self.assertRaises(ValueError):
            prob_jump_below(p, -1, self.lookup)

    def test_negative_p(self):
        with self.assertRaises(ValueError):
            law_halfplane(-1, lookup=self.lookup)


class TestFiniteLaw(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.table = build_coeff_table(120, "evaluated", "critical", backend="float")

    def test_single_minus_edge(self):
        law = law_finite(1, 1, self.table)
        self.assertGreater(float(law.terminal_mass), 0)
        self.assertEqual(law.weight(PeelingEvent("Lp", 0)), 0)
        self.assertEqual(law.supports["Lm"], (0, -1))
        total = sum(law.float_masses().values()) + float(law.terminal_mass)
        self.assertAlmostEqual(total, 1.0, delta=0.05)

    def test_symmetric_boundary(self):
        law = law_finite(2, 3, self.table)
        self.assertEqual(float(law.terminal_mass), 0.0)
        self.assertEqual(law.supports["Lp"], (0, 1))
        self.assertLessEqual(float(law.normalization_defect), 0.05)

    def test_guards(self):
        with self.assertRaises(ValueError):
            law_finite(2, 0, self.table)
        with self.assertRaises(ValueError):
            law_finite(1, 1, build_coeff_table(5, "evaluated", 2))


class TestSampling(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.config = small_config()
        cls.law = law_fullplane(lookup=BoundaryLookup(cls.config))

    def _draw(self, seed, n):
        rng = np.random.default_rng(seed)
        return [sample_event(self.law, rng, self.config) for _ in range(n)]

    def test_reproducible(self):
        self.assertEqual(self._draw(11, 200), self._draw(11, 200))

    def test_family_frequencies(self):
        events = self._draw(3, 2000)
        self.assertTrue(all(self.law.in_support(e) for e in events))
        counts = Counter(e.tag for e in events)
        p_cm = float(constants_critical().nu_c * constants_critical().t_over_u)
        self.assertAlmostEqual(counts["Cm"] / 2000, p_cm, delta=0.05)

    def test_halfplane_mean_increment(self):
        p, n = 5, 20000
        lookup = BoundaryLookup(self.config)
        law = law_halfplane(p, lookup=lookup, config=self.config)
        rng = np.random.default_rng(4)
        dx = np.array([displacement(sample_event(law, rng, self.config), "halfplane", p).dx for _ in range(n)])
        # increments lie in [-p, 2]
        bound = 5 * dx.std() / np.sqrt(n)
        self.assertAlmostEqual(dx.mean(), halfplane_mean_increment(p, lookup), delta=bound)


if __name__ == "__main__":
    unittest.main()

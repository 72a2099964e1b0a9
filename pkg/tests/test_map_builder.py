import unittest
from collections import Counter
from fractions import Fraction

import numpy as np
from scipy import stats

from ising_peeling.config import default_config
from ising_peeling.services.map_builder import (
    CriticalFiller,
    ExploredMap,
    FillerMissing,
    apply_event,
    ball_sampler_halfplane,
    choose,
    enumerate_finite_maps,
    randbelow,
    sample_finite_map,
    truncate_colored,
    truncate_map,
)
from ising_peeling.services.peeling_laws import EventOutOfSupport, PeelingEvent
from ising_peeling.services.peeling_simulator import RngStream, StoppingSpec, run_path
from ising_peeling.services.planar_map import (
    HOLE,
    PLUS,
    UNEXPLORED,
    canonical_form,
    validate_map,
)
from ising_peeling.services.tutte_series import build_coeff_table, coeff


class TestExactChoice(unittest.TestCase):
    def test_randbelow_large(self):
        rng = np.random.default_rng(0)
        n = 2**70 + 3
        self.assertTrue(all(0 <= randbelow(n, rng) < n for _ in range(50)))
        with self.assertRaises(ValueError):
            randbelow(0, rng)

    def test_choose(self):
        rng = np.random.default_rng(1)
        self.assertEqual(choose([0, Fraction(1, 3), 0], rng, exact=True), 1)
        self.assertEqual(choose([0.0, 0.0, 2.5], rng, exact=False), 2)
        with self.assertRaises(ValueError):
            choose([0.0, 0.0], rng, exact=False)


class TestFiniteSampler(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.table = build_coeff_table(6, "evaluated", 2)

    def test_one_triangle_in_a_loop(self):
        # plus triangle has weight nu, minus triangle nu^2
        rng = np.random.default_rng(7)
        plus = 0
        for _ in range(600):
            m = sample_finite_map(0, 1, 1, self.table, rng)
            plus += m.face_spin[m.internal_faces()[0]] == PLUS
        self.assertAlmostEqual(plus / 600, 1 / 3, delta=0.07)

    def test_samples_are_valid(self):
        rng = np.random.default_rng(8)
        for p, q, n in ((0, 1, 1), (1, 1, 2), (2, 2, 4), (3, 1, 2)):
            m = sample_finite_map(p, q, n, self.table, rng)
            report = validate_map(m, nu=2, expected={"p": p, "q": q, "n": n})
            self.assertTrue(report["all_pass"], (p, q, n, report))

    def test_poly_table_needs_nu(self):
        poly = build_coeff_table(4, "exact")
        rng = np.random.default_rng(9)
        m = sample_finite_map(1, 1, 2, poly, rng, nu=3)
        self.assertEqual(len(m.internal_faces()), 2)
        with self.assertRaises(ValueError):
            sample_finite_map(1, 1, 2, poly, rng)

    def test_guards(self):
        rng = np.random.default_rng(10)
        with self.assertRaises(ValueError):
            sample_finite_map(0, 0, 0, self.table, rng)
        with self.assertRaises(ValueError):
            sample_finite_map(1, 1, 7, self.table, rng)
        with self.assertRaises(ValueError):
            sample_finite_map(1, 0, 0, self.table, rng)
        with self.assertRaises(ValueError):
            sample_finite_map(1, 1, 2, build_coeff_table(4, "evaluated", "critical"), rng)


class TestAgainstEnumeration(unittest.TestCase):
    def test_weights_sum_to_coefficient(self):
        table = build_coeff_table(4, "evaluated", 2)
        for p, q, n in ((1, 2, 1), (0, 2, 2), (2, 2, 2)):
            maps = enumerate_finite_maps(p, q, n, table)
            self.assertEqual(sum(maps.values()), coeff(table, p, q, n), (p, q, n))

    def test_sampler_matches_weights(self):
        table = build_coeff_table(4, "evaluated", 2)
        maps = enumerate_finite_maps(1, 1, 2, table)
        keys = list(maps)
        total = sum(maps.values())
        draws = 1200
        rng = np.random.default_rng(11)
        counts = Counter(canonical_form(sample_finite_map(1, 1, 2, table, rng)) for _ in range(draws))
        self.assertTrue(set(counts) <= set(keys))
        observed = [counts.get(k, 0) for k in keys]
        expected = [draws * float(maps[k] / total) for k in keys]
        _, pvalue = stats.chisquare(observed, expected)
        self.assertGreater(pvalue, 1e-3)

    def test_inexact_table(self):
        table = build_coeff_table(4, "evaluated", "critical", backend="float")
        with self.assertRaises(ValueError):
            enumerate_finite_maps(1, 1, 2, table)


class TestApplyEvent(unittest.TestCase):
    def test_new_plus_vertex(self):
        emap = apply_event(ExploredMap.finite(3, 4), PeelingEvent("Cp"))
        self.assertEqual((emap.P, emap.Q), (5, 3))
        report = validate_map(emap.to_map())
        self.assertTrue(report["euler"])
        self.assertTrue(report["triangular"])
        self.assertEqual(report["boundary"], (3, 4))

    def test_zero_jump_keeps_lengths(self):
        emap = apply_event(ExploredMap.finite(3, 4), PeelingEvent("Rm", 0))
        self.assertEqual((emap.P, emap.Q), (3, 4))
        self.assertEqual(emap.unfilled, 1)

    def test_left_swallow(self):
        emap = apply_event(ExploredMap.finite(3, 5), PeelingEvent("Lp", 2))
        self.assertEqual((emap.P, emap.Q), (4, 2))
        m = emap.to_map()
        self.assertIn(UNEXPLORED, [m.face_kind[f] for f in m.faces_in_use()])

    def test_sequence_matches_displacements(self):
        emap = ExploredMap.finite(2, 6)
        for text, expected in (("Cm", (2, 7)), ("Rp(1)", (2, 6)), ("Lm(2)", (2, 4)), ("Cp", (4, 3))):
            apply_event(emap, PeelingEvent.parse(text))
            self.assertEqual((emap.P, emap.Q), expected, text)
        self.assertEqual(emap.events, ["Cm", "Rp(1)", "Lm(2)", "Cp"])

    def test_out_of_support(self):
        # (3,5): L(k) needs k <= 2, R(3+j) needs j <= 1
        for text in ("Lp(5)", "Lp(3)", "Lm(4)", "Rp(5)", "Rp(6)", "Rm(7)"):
            emap = ExploredMap.finite(3, 5)
            with self.assertRaises(EventOutOfSupport, msg=text):
                apply_event(emap, PeelingEvent.parse(text))
            self.assertEqual((emap.P, emap.Q, emap.steps), (3, 5, 0), text)
        for text, expected in (("Lm(2)", (3, 3)), ("Rm(4)", (0, 4))):
            emap = apply_event(ExploredMap.finite(3, 5), PeelingEvent.parse(text))
            self.assertEqual((emap.P, emap.Q), expected, text)

    def test_single_minus_edge_has_no_left_moves(self):
        with self.assertRaises(EventOutOfSupport):
            apply_event(ExploredMap.finite(2, 1), PeelingEvent("Lp", 0))

    def test_full_needs_filler(self):
        emap = ExploredMap.finite(3, 5)
        with self.assertRaises(FillerMissing):
            apply_event(emap, PeelingEvent("Lm", 1), full=True)
        self.assertEqual(emap.steps, 0)

    def test_halfplane_frontier(self):
        emap = ExploredMap.halfplane(4)
        apply_event(emap, PeelingEvent("Cp"))
        self.assertEqual(emap.P, 6)
        apply_event(emap, PeelingEvent("Rm", 9))
        self.assertEqual(emap.P, 0)
        self.assertEqual(emap.Q, float("inf"))

    def test_replays_simulated_paths(self):
        config = default_config()
        config["tables"].update(boundary_exact_order=24, numeric_order=256, numeric_order_cap=1024)
        stop = StoppingSpec.first_of(StoppingSpec.t_m(0), StoppingSpec.fixed_steps(40))
        path = run_path("halfplane", (6, 0), stop, RngStream(21).generator(), config)
        emap = ExploredMap.halfplane(6)
        for i, event in enumerate(path.events, start=1):
            apply_event(emap, event)
            self.assertEqual(emap.P, path.p_values[i], f"step {i}: {event}")

        table = build_coeff_table(120, "evaluated", "critical", backend="float")
        path = run_path("finite", (3, 4), StoppingSpec.fixed_steps(3), RngStream(22).generator(), config, table)
        emap = ExploredMap.finite(3, 4)
        for i, event in enumerate(path.events, start=1):
            apply_event(emap, event)
            self.assertEqual((emap.P, emap.Q), (path.p_values[i], path.q_values[i]), f"step {i}: {event}")
        self.assertTrue(validate_map(emap.to_map())["euler"])


class TestTruncation(unittest.TestCase):
    def test_idempotent(self):
        emap = apply_event(ExploredMap.finite(3, 4), PeelingEvent("Cp"))
        once = truncate_map(emap)
        self.assertNotIn(HOLE, once.face_kind)
        self.assertEqual(canonical_form(truncate_colored(once)), canonical_form(once))
        self.assertEqual(len(once.internal_faces()), 1)

    def test_nothing_explored(self):
        m = truncate_map(ExploredMap.finite(2, 2))
        self.assertEqual(m.root, -1)


class TestBallSampler(unittest.TestCase):
    def test_radius_zero(self):
        b = ball_sampler_halfplane(3, 0, np.random.default_rng(0))
        self.assertEqual(b.theta, 0)
        self.assertEqual(b.n_faces(), 0)
        with self.assertRaises(ValueError):
            ball_sampler_halfplane(3, -1, np.random.default_rng(0))

    def test_stopping_times(self):
        config = default_config()
        config["tables"].update(boundary_exact_order=24, numeric_order=256, numeric_order_cap=1024)
        config["sampling"]["filler_max_faces"] = 30
        rng = np.random.default_rng(12)
        filler = CriticalFiller.from_config(rng, config)
        b = ball_sampler_halfplane(3, 2, rng, config, filler=filler)
        self.assertEqual(sorted(b.thetas), [0, 1, 2])
        self.assertLessEqual(b.thetas[1], b.thetas[2])
        self.assertEqual(b.theta, b.thetas[2])
        self.assertGreater(b.n_faces(), 0)

    def test_filler_needs_critical_float_table(self):
        with self.assertRaises(ValueError):
            CriticalFiller(build_coeff_table(4, "evaluated", 2), np.random.default_rng(0))


if __name__ == "__main__":
    unittest.main()

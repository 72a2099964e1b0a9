import unittest
from fractions import Fraction

from ising_peeling.config import default_config
from ising_peeling.services.exact_algebra import QuadSurd, constants_critical
from ising_peeling.services.tutte_series import (
    ExactCapExceeded,
    MemoryBudgetExceeded,
    NuMismatch,
    NuPolynomial,
    build_coeff_table,
    coeff,
    eval_partition,
    exact_critical_pair,
    verify_functional_equations,
    volume_exponent_probe,
)


class TestNuPolynomial(unittest.TestCase):
    def test_kronecker_round_trip(self):
        p = NuPolynomial([3, 0, 5])
        self.assertEqual(NuPolynomial.from_kronecker(p.evaluate_int(1 << 8), 8), p)

    def test_signed_kronecker(self):
        p = NuPolynomial([-3, 2])
        self.assertEqual(NuPolynomial.from_kronecker(p.evaluate_int(1 << 8), 8, signed=True), p)

    def test_arithmetic(self):
        a = NuPolynomial([0, 1])
        self.assertEqual(a * a + a, NuPolynomial([0, 1, 1]))
        self.assertEqual(str(NuPolynomial([0, 1, 1])), "1*v+1*v^2")


class TestSmallTables(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.poly = build_coeff_table(7, "exact")
        cls.two = build_coeff_table(7, "evaluated", 2)

    def test_edge_maps(self):
        self.assertEqual(coeff(self.poly, 0, 0, 0), NuPolynomial([1]))
        self.assertEqual(coeff(self.poly, 1, 1, 0), NuPolynomial([1]))
        self.assertEqual(coeff(self.poly, 0, 2, 0), NuPolynomial([0, 1]))

    def test_one_triangle_in_a_loop(self):
        # plus triangle (nu from the glued 2-gon) or minus triangle (nu^2)
        self.assertEqual(coeff(self.poly, 0, 1, 1), NuPolynomial([0, 1, 1]))
        self.assertEqual(coeff(self.poly, 1, 0, 1), NuPolynomial([0, 1, 1]))

    def test_support_and_parity(self):
        self.assertTrue(self.poly.coeff(0, 1, 0).is_zero())
        self.assertTrue(coeff(self.poly, 3, 3, 2).is_zero())
        with self.assertRaises(ValueError):
            coeff(self.poly, 1, 0, 8)

    def test_symmetry(self):
        for n in range(8):
            for p in range(4):
                for q in range(4):
                    self.assertEqual(coeff(self.poly, p, q, n), coeff(self.poly, q, p, n))

    def test_rational_backend_matches_polynomials(self):
        self.assertEqual(self.two.backend, "rational")
        for n in range(8):
            for p, q in ((1, 0), (1, 1), (0, 2), (2, 1), (3, 0)):
                self.assertEqual(coeff(self.two, p, q, n), coeff(self.poly, p, q, n).evaluate(Fraction(2)))
        self.assertEqual(coeff(self.two, 0, 1, 1), 6)

    def test_surd_backend_at_critical_point(self):
        table = build_coeff_table(5, "evaluated", "critical")
        self.assertEqual(table.backend, "surd")
        self.assertTrue(table.critical)
        nu = constants_critical().nu_c
        self.assertEqual(coeff(table, 0, 1, 1), nu + nu * nu)

    def test_float_backend_matches_exact(self):
        table = build_coeff_table(7, "evaluated", "critical", backend="float")
        nu = constants_critical().nu_c
        for n in (1, 3, 5, 7):
            exact = float(coeff(self.poly, 1, 0, n).evaluate(nu))
            self.assertAlmostEqual(float(coeff(table, 1, 0, n)) / exact, 1.0, places=10)


class TestTableGuards(unittest.TestCase):
    def test_exact_cap(self):
        with self.assertRaises(ExactCapExceeded):
            build_coeff_table(41, "exact", config=default_config())

    def test_memory_budget(self):
        config = default_config()
        config["tables"]["memory_budget_mb"] = 0.001
        with self.assertRaises(MemoryBudgetExceeded):
            build_coeff_table(20, "evaluated", 2, config)

    def test_evaluated_needs_nu(self):
        with self.assertRaises(ValueError):
            build_coeff_table(3, "evaluated")


class TestEvaluation(unittest.TestCase):
    def test_truncated_sum(self):
        table = build_coeff_table(3, "evaluated", 2)
        value = eval_partition(table, 0, 1, nu=2, t=0.01, tail_mode="none", order=1)
        self.assertAlmostEqual(float(value.value), 0.06, places=14)
        self.assertEqual(float(value.truncation_error), 0.0)

    def test_nu_mismatch(self):
        table = build_coeff_table(3, "evaluated", 2)
        with self.assertRaises(NuMismatch):
            eval_partition(table, 0, 1, nu=3, t=0.01)

    def test_exact_pair_odd_boundary(self):
        table = build_coeff_table(3, "exact")
        a, b = exact_critical_pair(table, 0, 1)
        nu = constants_critical().nu_c
        self.assertEqual(a, QuadSurd(0))
        c1 = coeff(table, 0, 1, 1).evaluate(nu)
        c3 = coeff(table, 0, 1, 3).evaluate(nu)
        self.assertEqual(b, c1 + c3 * constants_critical().t_c_squared)

    def test_volume_probe_at_critical_point(self):
        table = build_coeff_table(61, "evaluated", "critical", backend="float")
        rows = volume_exponent_probe(table, 41, 61)
        self.assertTrue(all(n % 2 == 1 for n, _ in rows))
        values = [v for _, v in rows]
        self.assertTrue(all(v > 0 for v in values))
        # slowly varying once rescaled by n^(7/3) t_c^n
        self.assertLess(max(values) / min(values), 1.5)


class TestFunctionalEquations(unittest.TestCase):
    def test_all_identities_hold(self):
        table = build_coeff_table(8, "exact")
        report = verify_functional_equations(table, 8)
        self.assertTrue(report["all_pass"], report["families"])
        self.assertIsNone(report["first_failing_order"])

    def test_corrupted_entry_is_detected(self):
        table = build_coeff_table(8, "exact")
        table.replace_entry(1, 0, 3, coeff(table, 1, 0, 3) + 1)
        report = verify_functional_equations(table, 8)
        self.assertFalse(report["all_pass"])
        self.assertLessEqual(report["first_failing_order"], 4)

    def test_needs_exact_table(self):
        with self.assertRaises(ValueError):
            verify_functional_equations(build_coeff_table(4, "evaluated", 2), 4)


if __name__ == "__main__":
    unittest.main()

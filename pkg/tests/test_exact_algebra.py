import unittest
from fractions import Fraction

import mpmath

from ising_peeling.services.exact_algebra import (
    PrecReal,
    QuadSurd,
    constant_record,
    constants_critical,
    surd_eval,
    surd_from_json,
    surd_sign,
    surd_to_json,
)


class TestQuadSurd(unittest.TestCase):
    def test_sqrt7_squares_to_seven(self):
        s = QuadSurd.sqrt7()
        self.assertEqual(s * s, 7)
        self.assertTrue((s * s).is_rational())

    def test_division_inverts_multiplication(self):
        x = QuadSurd(Fraction(3, 2), -5)
        y = QuadSurd(7, 1)
        self.assertEqual((x * y) / y, x)
        self.assertEqual(x * x.inv, 1)

    def test_mixed_rational_operands(self):
        s = QuadSurd.sqrt7()
        self.assertEqual(2 + 3 * s, QuadSurd(2, 3))
        self.assertEqual(1 - s, QuadSurd(1, -1))
        self.assertEqual(Fraction(1, 2) / QuadSurd(2), Fraction(1, 4))

    def test_division_by_zero(self):
        with self.assertRaises(ZeroDivisionError):
            QuadSurd(1, 1) / QuadSurd(0)
        with self.assertRaises(ZeroDivisionError):
            QuadSurd(0).inv

    def test_floats_are_rejected(self):
        with self.assertRaises(TypeError):
            QuadSurd(0.5)

    def test_str_parse_round_trip(self):
        x = QuadSurd(Fraction(-5, 3), Fraction(2, 7))
        self.assertEqual(str(QuadSurd(1, 2)), "1/1 + 2/1*sqrt7")
        self.assertEqual(QuadSurd.parse(str(x)), x)

    def test_parse_rejects_garbage(self):
        with self.assertRaises(ValueError):
            QuadSurd.parse("1 + sqrt5")

    def test_ordering_is_exact(self):
        self.assertLess(QuadSurd(2, -1), 0)
        self.assertGreater(QuadSurd(8, -3), 0)
        self.assertLess(QuadSurd(0, 1), 3)

    def test_power(self):
        x = QuadSurd(7, 1)
        self.assertEqual(x**3, x * x * x)
        self.assertEqual(x**-2 * x**2, 1)


class TestSignAndEval(unittest.TestCase):
    def test_sign_cases(self):
        self.assertEqual(surd_sign(QuadSurd(8, -3)), 1)
        self.assertEqual(surd_sign(QuadSurd(-7, 13)), 1)
        self.assertEqual(surd_sign(QuadSurd(2, -1)), -1)
        self.assertEqual(surd_sign(QuadSurd(0)), 0)
        self.assertEqual(surd_sign(Fraction(-1, 3)), -1)

    def test_eval_sqrt7(self):
        v = surd_eval(QuadSurd.sqrt7(), 128)
        self.assertIsInstance(v, PrecReal)
        self.assertTrue(v.decimal(20).startswith("2.64575131106459059"))

    def test_eval_without_cancellation(self):
        # 8 - 3 sqrt7 is about 0.0627
        x = QuadSurd(8, -3)
        v = surd_eval(x, 200)
        with mpmath.workprec(260):
            ref = 8 - 3 * mpmath.sqrt(7)
            self.assertLess(abs(v.value - ref) / ref, mpmath.mpf(2) ** -198)

    def test_eval_precision_floor(self):
        with self.assertRaises(ValueError):
            surd_eval(QuadSurd(1), 8)


class TestCriticalConstants(unittest.TestCase):
    def setUp(self):
        self.cc = constants_critical()

    def test_nu_c(self):
        self.assertEqual(self.cc.nu_c, QuadSurd(1, 2))
        self.assertAlmostEqual(float(self.cc.nu_c), 6.2915026, places=6)

    def test_t_c_and_u_c(self):
        self.assertAlmostEqual(float(self.cc.t_c()), 0.0131949, places=6)
        self.assertAlmostEqual(float(self.cc.u_c()), 0.1527287, places=6)
        self.assertAlmostEqual(float(self.cc.t_over_u), 0.0863938, places=6)

    def test_u_c_over_t_c(self):
        # u_c = (6/5)(7 + sqrt7) t_c
        self.assertEqual(1 / self.cc.t_over_u, Fraction(6, 5) * QuadSurd(7, 1))

    def test_squares_consistent(self):
        t = float(self.cc.t_c())
        self.assertAlmostEqual(t * t / float(self.cc.t_c_squared), 1.0, places=12)

    def test_mu_and_c_infty(self):
        mu = self.cc.mu()
        self.assertEqual(mu * mu, self.cc.mu_squared)
        self.assertEqual(self.cc.c_infty() ** 2, self.cc.c_infty_squared)
        self.assertEqual(self.cc.c_infty() / mu, Fraction(4, 3))
        self.assertAlmostEqual(float(mu), 0.0944911, places=6)
        self.assertAlmostEqual(float(self.cc.c_infty()), 0.1259882, places=6)

    def test_cm_probability(self):
        # P(Cm) = nu_c t_c / u_c = 5 (13 sqrt7 - 7) / 252
        p_cm = self.cc.nu_c * self.cc.t_over_u
        self.assertEqual(p_cm, Fraction(5, 252) * QuadSurd(-7, 13))
        self.assertAlmostEqual(float(p_cm), 0.543548, places=5)


class TestJson(unittest.TestCase):
    def test_nu_c_encoding(self):
        data = surd_to_json(QuadSurd(1, 2))
        self.assertEqual(data, {"a_num": 1, "a_den": 1, "b_num": 2, "b_den": 1})
        self.assertEqual(surd_from_json(data), QuadSurd(1, 2))

    def test_constant_record(self):
        rec = constant_record("mu", constants_critical().mu(), 64)
        self.assertEqual(rec["name"], "mu")
        self.assertEqual(rec["exact"]["b_den"], 28)
        self.assertTrue(rec["decimal"].startswith("0.0944911"))


if __name__ == "__main__":
    unittest.main()

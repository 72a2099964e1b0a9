import unittest
from fractions import Fraction

import numpy as np

from ising_peeling.config import default_config
from ising_peeling.services.critical_parametrization import (
    appendix_residual,
    boundary_series,
    c_infty_closed_form,
    cached_numeric_tables,
    column_table,
    critical_z1_z3,
    drift_and_tails,
    eval_param,
    peeling_normalization,
    numeric_tables,
    revert_u_hat,
    rp13_series,
    slice_series,
    values_at_uc,
)
from ising_peeling.services.exact_algebra import PrecReal, QuadSurd, constants_critical
from ising_peeling.services.tutte_series import build_coeff_table, coeff

S7 = QuadSurd.sqrt7()


class TestParametrizations(unittest.TestCase):
    def test_values_at_h_one(self):
        self.assertEqual(eval_param("u_hat", 1), 1)
        self.assertEqual(eval_param("z0_hat", 1), Fraction(3, 10) * (2 + S7))

    def test_values_at_h_zero(self):
        self.assertEqual(eval_param("u_hat", 0), 0)
        self.assertEqual(eval_param("z0_hat", 0), 1)
        self.assertEqual(eval_param("a_hat", 0), 1)

    def test_float_evaluation(self):
        import mpmath

        v = eval_param("z0_hat", PrecReal(mpmath.mpf(1), 96))
        self.assertAlmostEqual(float(v), 1.3937254, places=6)

    def test_unknown_name(self):
        with self.assertRaises(KeyError):
            eval_param("nope", 1)

    def test_reversion(self):
        h = revert_u_hat(6)
        self.assertEqual(h[0], 0)
        self.assertEqual(h[1], Fraction(3, 10))
        with self.assertRaises(ValueError):
            revert_u_hat(0)


class TestBoundarySeries(unittest.TestCase):
    def setUp(self):
        self.bs = boundary_series(12)

    def test_first_terms(self):
        self.assertEqual(self.bs.zeta0[0], 1)
        self.assertEqual(self.bs.alpha[0], 1)
        self.assertEqual(self.bs.alpha[1], Fraction(1, 3))
        self.assertEqual(self.bs.order, 13)

    def test_positive(self):
        for seq in (self.bs.zeta0, self.bs.zeta1, self.bs.alpha):
            self.assertTrue(all(c > 0 for c in seq))

    def test_too_short(self):
        with self.assertRaises(ValueError):
            boundary_series(1)

    def test_rows(self):
        rows = self.bs.rows()
        self.assertEqual(len(rows), 13)
        self.assertEqual(rows[1]["alpha"], Fraction(1, 3))


class TestExactIdentities(unittest.TestCase):
    def test_values_at_uc(self):
        v = values_at_uc()
        self.assertEqual(v.Z0_at_uc, Fraction(3, 10) * (2 + S7))
        self.assertEqual(v.Z1_at_uc, Fraction(3, 10) * (S7 - 2))
        self.assertEqual(v.b_ratio, Fraction(3, 5))

    def test_normalization(self):
        self.assertEqual(peeling_normalization(), 1)

    def test_drift_and_tails(self):
        d = drift_and_tails()
        self.assertEqual(d["mu"] * d["mu"], Fraction(1, 112))
        self.assertEqual(d["mu_sum"], S7 / 14)
        self.assertEqual(d["cx_over_cy"], (2 + 3 * S7) / (2 + S7))
        self.assertGreater(d["cx_over_cy"], 1)
        self.assertAlmostEqual(float(d["cx_over_cy"]), 2.139, places=3)

    def test_c_infty(self):
        c = c_infty_closed_form()
        self.assertEqual(c, S7 / 21)
        self.assertEqual(c, Fraction(4, 3) * constants_critical().mu())

    def test_critical_z1_z3(self):
        out = critical_z1_z3()
        self.assertEqual(out["t2"], constants_critical().t_c_squared)

    def test_appendix_residual(self):
        points = [Fraction(k, 10) for k in range(1, 11)]
        self.assertLess(float(appendix_residual(points, 256)), 1e-20)


class TestSeriesAgainstRecurrence(unittest.TestCase):
    def _check(self, nu):
        rs = rp13_series(nu, 8)
        table = build_coeff_table(13, "evaluated", nu)
        for n, c in rs.z1().items():
            self.assertEqual(c, coeff(table, 1, 0, n), f"z1 at n={n}")
        for n, c in rs.z3().items():
            self.assertEqual(c, coeff(table, 3, 0, n), f"z3 at n={n}")

    def test_nu_two(self):
        self._check(Fraction(2))
        self.assertEqual(rp13_series(2, 4).z1()[1], 6)

    def test_nu_three(self):
        self._check(Fraction(3))

    def test_critical_point(self):
        self._check("critical")
        self.assertEqual(rp13_series("critical", 4).nu, constants_critical().nu_c)

    def test_invalid_nu(self):
        with self.assertRaises(ValueError):
            rp13_series(1, 8)
        with self.assertRaises(ValueError):
            rp13_series(2, 61)


class TestKernelSeries(unittest.TestCase):
    def test_slice_constant_term(self):
        self.assertEqual(slice_series(6)[0], values_at_uc().Z0_at_uc)

    def test_columns(self):
        bs = boundary_series(8)
        cols = column_table(2, 6)
        for p in range(7):
            self.assertEqual(cols[(p, 0)], bs.zeta0[p])
            self.assertEqual(cols[(p, 1)], bs.zeta1[p])
            self.assertEqual(cols[(p, 2)], cols[(2, p)])
        with self.assertRaises(ValueError):
            column_table(3, 2)

    def test_numeric_tables_match_exact(self):
        tables = numeric_tables(256)
        bs = boundary_series(20)
        np.testing.assert_allclose(tables.zeta0[:21], [float(c) for c in bs.zeta0], rtol=1e-10)
        np.testing.assert_allclose(tables.alpha[:21], [float(c) for c in bs.alpha], rtol=1e-10)

    def test_numeric_cap(self):
        config = default_config()
        with self.assertRaises(ValueError):
            cached_numeric_tables(10**9, config)


if __name__ == "__main__":
    unittest.main()

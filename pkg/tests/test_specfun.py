import math
import sys
import unittest
from pathlib import Path

import numpy as np
from scipy import integrate, special, stats

# Add project root to path
sys.path.append(str(Path(__file__).parent.parent))

from pedsafe.core.errors import DomainError, NonConvergenceError
from pedsafe.specfun import (
    appell_f1,
    beta_fn,
    gauss_2f1,
    ln_beta,
    ln_gamma,
    normal_cdf,
    normal_quantile,
    reg_inc_beta,
    student_t_cdf,
    student_t_pdf,
    student_t_quantile,
)


class TestGammaBeta(unittest.TestCase):
    def test_ln_gamma_factorial(self):
        self.assertAlmostEqual(ln_gamma(5.0), math.log(24.0), places=13)

    def test_ln_beta_large_shapes_stay_finite(self):
        value = ln_beta(2000.5, 3000.25)
        self.assertTrue(math.isfinite(value))
        self.assertAlmostEqual(value, float(special.betaln(2000.5, 3000.25)), places=8)

    def test_beta_fn(self):
        self.assertAlmostEqual(beta_fn(2.0, 3.0), 1.0 / 12.0, places=14)

    def test_nonpositive_shape_rejected(self):
        with self.assertRaises(DomainError):
            ln_beta(0.0, 1.0)


class TestIncompleteBeta(unittest.TestCase):
    def test_uniform_is_identity(self):
        self.assertAlmostEqual(reg_inc_beta(1.0, 1.0, 0.3), 0.3, places=14)

    def test_against_scipy(self):
        for a, b, x in [(2.0, 3.0, 0.4), (0.5, 0.5, 0.01), (1.0, 151.0, 0.02), (30.5, 2970.5, 0.0105), (0.01, 1.0, 0.5)]:
            with self.subTest(a=a, b=b, x=x):
                self.assertAlmostEqual(reg_inc_beta(a, b, x), float(special.betainc(a, b, x)), delta=1e-10)

    def test_reflection(self):
        self.assertAlmostEqual(reg_inc_beta(3.5, 7.0, 0.3), 1.0 - reg_inc_beta(7.0, 3.5, 0.7), places=13)

    def test_vectorized_shape(self):
        xs = np.array([[0.0, 0.25], [0.5, 1.0]])
        out = reg_inc_beta(2.0, 2.0, xs)
        self.assertEqual(out.shape, (2, 2))
        self.assertEqual(out[0, 0], 0.0)
        self.assertEqual(out[1, 1], 1.0)
        self.assertAlmostEqual(out[1, 0], 0.5, places=14)

    def test_outside_unit_interval(self):
        with self.assertRaises(DomainError):
            reg_inc_beta(1.0, 1.0, 1.5)


class TestHypergeometric(unittest.TestCase):
    def test_gauss_log_identity(self):
        x = 0.6
        self.assertAlmostEqual(gauss_2f1(1.0, 1.0, 2.0, x), -math.log1p(-x) / x, places=12)

    def test_appell_reduces_to_gauss_on_axis(self):
        self.assertAlmostEqual(
            appell_f1(1.5, 2.0, 3.0, 4.0, 0.4, 0.0),
            gauss_2f1(1.5, 2.0, 4.0, 0.4),
            places=12,
        )

    def test_appell_diagonal(self):
        # F1(u, v1, v2; w; x, x) = 2F1(u, v1 + v2; w; x)
        self.assertAlmostEqual(
            appell_f1(1.2, 0.7, 1.1, 3.3, 0.35, 0.35),
            float(special.hyp2f1(1.2, 1.8, 3.3, 0.35)),
            places=11,
        )

    def test_appell_matches_euler_integral(self):
        # F1 = Γ(w)/(Γ(u)Γ(w−u)) ∫ t^(u−1) (1−t)^(w−u−1) (1−x1 t)^(−v1) (1−x2 t)^(−v2) dt for w > u > 0
        for u, v1, v2, w, x1, x2 in (
            (1.2, 0.7, 1.1, 3.3, 0.35, -0.5),
            (2.0, 1.5, -0.5, 4.0, 0.6, -0.3),
            (0.5, 2.0, 3.0, 1.7, -0.4, 0.5),
            (3.0, 4.0, 2.0, 5.5, 0.7, 0.2),
        ):
            with self.subTest(u=u, v1=v1, v2=v2, w=w, x1=x1, x2=x2):
                integral, _ = integrate.quad(
                    lambda t: (1 - x1 * t) ** -v1 * (1 - x2 * t) ** -v2,
                    0.0, 1.0, weight="alg", wvar=(u - 1, w - u - 1),
                )
                expected = integral / special.beta(u, w - u)
                self.assertAlmostEqual(appell_f1(u, v1, v2, w, x1, x2), expected, delta=1e-9 * abs(expected))

    def test_appell_cancellation_is_refused(self):
        with self.assertRaises(NonConvergenceError):
            appell_f1(1.0, 102.0, -97.0, 5.0, 0.8, 0.96)

    def test_appell_outside_unit_disk(self):
        with self.assertRaises(DomainError):
            appell_f1(1.0, 1.0, 1.0, 2.0, 1.0, 0.2)

    def test_appell_near_boundary_does_not_converge(self):
        with self.assertRaises(NonConvergenceError):
            appell_f1(1.0, 1.0, 1.0, 2.0, 0.9995, 0.2)

    def test_nonpositive_integer_w(self):
        with self.assertRaises(DomainError):
            gauss_2f1(1.0, 1.0, -2.0, 0.1)


class TestNormalAndStudent(unittest.TestCase):
    def test_normal_cdf(self):
        self.assertEqual(normal_cdf(0.0), 0.5)
        self.assertAlmostEqual(normal_cdf(-1.0), float(stats.norm.cdf(-1.0)), places=14)

    def test_normal_quantile(self):
        self.assertAlmostEqual(normal_quantile(0.975), 1.959963984540054, places=9)

    def test_student_t_against_scipy(self):
        for t, df in [(2.1213203435596424, 49.0), (-0.5, 3.0), (7.0, 1.0)]:
            with self.subTest(t=t, df=df):
                self.assertAlmostEqual(student_t_cdf(t, df), float(stats.t.cdf(t, df)), delta=1e-12)
                self.assertAlmostEqual(student_t_pdf(t, df), float(stats.t.pdf(t, df)), delta=1e-12)

    def test_student_t_large_df_approaches_normal(self):
        self.assertAlmostEqual(student_t_cdf(0.5, 1e6), normal_cdf(0.5), delta=1e-6)

    def test_student_t_quantile_inverts_cdf(self):
        q = student_t_quantile(0.8, 49.0)
        self.assertAlmostEqual(student_t_cdf(q, 49.0), 0.8, places=10)
        self.assertAlmostEqual(q, float(stats.t.ppf(0.8, 49.0)), places=8)


if __name__ == "__main__":
    unittest.main()

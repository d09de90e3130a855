from dataclasses import replace
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from engine.approx import (
    ConvergenceRow,
    PiecewiseFlatGeometry,
    RefinementSequence,
    check_circulant,
    circle_zeta_determinant,
    derham_map,
    determinant_ratio_experiment,
    dirichlet_interval_zeta_determinant,
    doubling_target,
    integrate_exact,
    interval_doubling,
    line_form,
    monotone_approach,
    q_ratio_check,
    roundoff_floor,
    symbol_stencil,
    whitney_coefficients,
    whitney_gram,
    whitney_ratio_closed_form,
)
from engine.exceptions import ComplexError, WeightError
from engine.hodge import laplacian
from engine.metric import whitney_weights
from engine.simplicial import build_complex, cycle_complex, path_complex


class TargetTests(SimpleTestCase):
    def test_zeta_determinants(self):
        self.assertEqual(circle_zeta_determinant(2.0), 4.0)
        self.assertEqual(dirichlet_interval_zeta_determinant(1.5), 3.0)
        self.assertAlmostEqual(doubling_target(1.0), 0.25)
        self.assertAlmostEqual(doubling_target(2.0), 1.0)


class GeometryTests(SimpleTestCase):
    def test_refine_halves_the_mesh(self):
        geometry = PiecewiseFlatGeometry(build_complex([(0, 1, 2)]), [3.0, 4.0, 5.0])
        subdivision, refined = geometry.refine()
        self.assertEqual(refined.complex.counts(), (6, 9, 4))
        self.assertAlmostEqual(refined.mesh, 2.5)
        # every child triangle is similar to the parent
        self.assertEqual(sorted(refined.lengths), sorted([1.5, 2.0, 2.5] * 3))
        self.assertIs(subdivision.complex, refined.complex)

    def test_degenerate_triangle(self):
        with self.assertRaises(WeightError):
            PiecewiseFlatGeometry(build_complex([(0, 1, 2)]), [1.0, 1.0, 2.0])

    def test_sequence(self):
        sequence = RefinementSequence.build(PiecewiseFlatGeometry.uniform(path_complex(2), 0.5), 3)
        self.assertEqual(len(sequence), 4)
        np.testing.assert_allclose(sequence.mesh_sizes(), [0.5, 0.25, 0.125, 0.0625])
        K = sequence[0].complex
        L = sequence.track(K.topological_boundary(), 3)
        self.assertEqual(sorted(L.vertices), [0, 2])


class WhitneyMapTests(SimpleTestCase):
    def test_derham_inverts_whitney(self):
        K = build_complex([(0, 1, 2)])
        for q in range(3):
            for i in range(K.count(q)):
                values = derham_map(K, whitney_coefficients(K, q, i)).flat
                np.testing.assert_allclose(values, np.eye(K.count(q))[i], atol=1e-14)

    def test_exact_integral(self):
        K = path_complex(2)
        form = whitney_coefficients(K, 1, 0)
        value = integrate_exact(form, K.level(1)[0])
        self.assertIsInstance(value, Fraction)
        self.assertEqual(value, 1)
        self.assertEqual(integrate_exact(form, (0,)), 0)

    def test_line_form(self):
        K = path_complex(4)
        coordinates = {v: v / 4 for v in K.vertices}
        values = derham_map(K, line_form(lambda x: 2 * x, coordinates), q=1).flat
        expected = [((k + 1) / 4) ** 2 - (k / 4) ** 2 for k in range(4)]
        np.testing.assert_allclose(values, expected, rtol=1e-10)
        np.testing.assert_allclose(derham_map(K, line_form(np.cos, coordinates), q=0).flat, np.cos(np.arange(5) / 4))

    def test_whitney_gram(self):
        geometry = PiecewiseFlatGeometry.uniform(path_complex(3), 0.5)
        np.testing.assert_allclose(whitney_gram(geometry.complex, geometry, 1), 2 * np.eye(3))
        with self.assertRaises(WeightError):
            whitney_gram(path_complex(3), geometry)

    def test_bad_degree(self):
        with self.assertRaises(ComplexError):
            derham_map(path_complex(2), line_form(np.cos, {}), q=2)


class DeterminantRatioTests(SimpleTestCase):
    def test_lumped_ratio_is_exact(self):
        for length, target in ((1.0, 0.25), (2.0, 1.0)):
            rows = determinant_ratio_experiment(length, n0=4, steps=7, preset="lumped")
            self.assertEqual([row.n for row in rows], [4, 8, 16, 32, 64, 128, 256, 512])
            for row in rows:
                self.assertLessEqual(row.abs_error, 1e-10)
                self.assertAlmostEqual(row.target, target)
            double = determinant_ratio_experiment(length, n0=4, steps=2, preset="lumped", precision="double")
            for row in double:
                self.assertAlmostEqual(row.ratio, target, places=10)

    def test_whitney_matches_the_closed_form(self):
        rows = determinant_ratio_experiment(1.0, n0=8, steps=6)
        self.assertEqual([row.n for row in rows], [8, 16, 32, 64, 128, 256, 512])
        for row in rows:
            closed = float(whitney_ratio_closed_form(1.0, row.n))
            self.assertAlmostEqual(row.ratio / closed, 1, places=12)
            self.assertLess(row.abs_error / row.target, 0.01)
            self.assertAlmostEqual(row.pipeline_ratio / row.ratio, 1, places=8)
        self.assertTrue(monotone_approach(rows))

    def test_double_precision_reaches_roundoff(self):
        rows = determinant_ratio_experiment(1.0, n0=8, steps=6, precision="double")
        self.assertTrue(all(row.precision == "double" for row in rows))
        self.assertTrue(monotone_approach(rows))
        for row in rows:
            self.assertEqual(row.ratio, row.pipeline_ratio)
            if row.n >= 32:
                self.assertLessEqual(row.abs_error, roundoff_floor(row.n, row.target))

    def test_double_precision_pipeline(self):
        high = determinant_ratio_experiment(1.5, n0=6, steps=1)
        double = determinant_ratio_experiment(1.5, n0=6, steps=1, precision="double")
        for a, b in zip(high, double):
            self.assertAlmostEqual(a.ratio / b.ratio, 1, places=8)

    def test_closed_form_at_n_eight(self):
        error = abs(float(whitney_ratio_closed_form(1.0, 8)) - 0.25)
        self.assertLess(error, 3e-5)
        self.assertGreater(error, 2e-5)

    def test_invalid(self):
        with self.assertRaises(ComplexError):
            determinant_ratio_experiment(n0=2)
        with self.assertRaises(WeightError):
            determinant_ratio_experiment(preset="diagonal")
        with self.assertRaises(ValueError):
            determinant_ratio_experiment(n0=4, steps=0, precision="quad")

    def test_interval_doubling(self):
        K_f, _, doubling = interval_doubling(path_complex(5))
        self.assertEqual(K_f.count(0), 5)
        self.assertTrue(doubling.complex.is_cycle())
        self.assertEqual(doubling.complex.count(0), 10)

    def test_check_circulant(self):
        K = cycle_complex(6)
        op = laplacian(K, whitney_weights(K, np.full(6, 0.25)))
        check_circulant(op, K, symbol_stencil("whitney", 0.25))
        with self.assertRaises(WeightError):
            check_circulant(op, K, symbol_stencil("lumped", 0.25))


def ratio_row(n, error, precision="double"):
    ratio = 0.25 + error
    return ConvergenceRow("lumped", 1.0, n, 1.0 / n, 0.0, 0.0, ratio, 0.25, error, ratio, precision, error)


class MonotoneApproachTests(SimpleTestCase):
    def test_roundoff_rows_only_match_the_closed_form(self):
        rows = [ratio_row(8, 1e-3), ratio_row(16, 1e-6), ratio_row(32, 1e-13), ratio_row(64, 4e-13)]
        self.assertTrue(monotone_approach(rows))
        self.assertFalse(monotone_approach([replace(row, precision="high") for row in rows]))

    def test_resolved_rows_must_come_first(self):
        self.assertFalse(monotone_approach([ratio_row(8, 1e-3), ratio_row(16, 1e-13), ratio_row(32, 1e-6)]))
        self.assertFalse(monotone_approach([ratio_row(8, 1e-6), ratio_row(16, 1e-3)]))

    def test_floor_grows_with_n(self):
        self.assertLess(roundoff_floor(8, 0.25), roundoff_floor(512, 0.25))
        self.assertEqual(roundoff_floor(64, 4.0), 4 * roundoff_floor(64, 0.25))


class QRatioTests(SimpleTestCase):
    def test_collar_ratio_is_one(self):
        for n in (6, 8, 12):
            row = q_ratio_check(1.0, n)
            self.assertTrue(row.collar_condition)
            self.assertAlmostEqual(row.ratio, 1, places=10)

    def test_short_path_breaks_the_collar_condition(self):
        self.assertFalse(q_ratio_check(1.0, 4).collar_condition)

    def test_lumped_is_trivial(self):
        row = q_ratio_check(1.0, 8, weights="lumped")
        self.assertAlmostEqual(row.ratio, 1)
        self.assertAlmostEqual(row.global_ratio, 1)

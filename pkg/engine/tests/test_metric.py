import numpy as np
from django.test import SimpleTestCase

from engine.exceptions import GluingError, NotPositiveDefiniteError, WeightError
from engine.metric import (
    WeightSystem,
    block_decompose,
    check_positive_definite,
    diagonal_weights,
    gram,
    induced_weights,
    is_local,
    lumped_weights_1d,
    mayer_vietoris_check,
    reassemble,
    restrict_to_boundary,
    triangle_element,
    whitney_weights,
    whitney_weights_1d,
    whitney_weights_2d,
)
from engine.presets import gluing_instance, grid_facets
from engine.simplicial import GluingMap, build_complex, glue, path_complex


def glued_path(n=4):
    K = path_complex(n)
    f = GluingMap(K.boundary_subcomplex([0], "L1"), K.boundary_subcomplex([n], "L2"), {0: n})
    return K, glue(K, f)[1]


class WeightSystemTests(SimpleTestCase):
    def test_whitney_interval(self):
        W = whitney_weights(path_complex(1), [1.0])
        np.testing.assert_allclose(W.degree(0), [[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
        np.testing.assert_allclose(W.degree(1), [[1.0]])

    def test_whitney_scales_with_length(self):
        W = whitney_weights(path_complex(2), [2.0, 2.0])
        np.testing.assert_allclose(np.diag(W.degree(0)), [2 / 3, 4 / 3, 2 / 3])
        np.testing.assert_allclose(np.diag(W.degree(1)), [0.5, 0.5])

    def test_dimension_specific_builders(self):
        K = path_complex(2)
        np.testing.assert_allclose(
            whitney_weights_1d(K, [1.0, 2.0]).degree(0), whitney_weights(K, [1.0, 2.0]).degree(0),
        )
        with self.assertRaises(WeightError):
            whitney_weights_2d(K, [1.0, 2.0])
        with self.assertRaises(WeightError):
            whitney_weights_1d(build_complex([(0, 1, 2)]), [1.0, 1.0, 1.0])

    def test_lumped(self):
        W = lumped_weights_1d(path_complex(2), [1.0, 3.0])
        np.testing.assert_allclose(np.diag(W.degree(0)), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(np.diag(W.degree(1)), [1.0, 1 / 3])
        self.assertTrue(W.is_diagonal())
        with self.assertRaises(WeightError):
            lumped_weights_1d(build_complex([(0, 1, 2)]), [1.0, 1.0, 1.0])

    def test_right_triangle_element(self):
        mass, edge_gram, area = triangle_element(1.0, 1.0, np.sqrt(2))
        self.assertAlmostEqual(area, 0.5)
        np.testing.assert_allclose(mass, (np.ones((3, 3)) + np.eye(3)) / 24)
        self.assertGreater(np.linalg.eigvalsh(edge_gram).min(), 0)

    def test_whitney_disk_is_local_and_positive(self):
        facets, lengths = grid_facets(3, 4)
        K = build_complex(facets)
        W = whitney_weights(K, [lengths[frozenset(e)] for e in K.level(1)])
        self.assertTrue(is_local(W))
        self.assertFalse(W.is_diagonal())
        for q in range(3):
            self.assertGreater(np.linalg.eigvalsh(W.degree(q)).min(), 0)

    def test_invalid_weights(self):
        K = path_complex(2)
        with self.assertRaises(WeightError):
            triangle_element(1.0, 1.0, 2.0)
        with self.assertRaises(WeightError):
            diagonal_weights(K, [[1.0, 0.0, 1.0], [1.0, 1.0]])
        with self.assertRaises(WeightError):
            WeightSystem(K, [np.array([[1.0, 0.2, 0], [0.1, 1, 0], [0, 0, 1]]), np.eye(2)])
        with self.assertRaises(WeightError):
            whitney_weights(K, [1.0, -1.0])
        with self.assertRaises(NotPositiveDefiniteError):
            WeightSystem(K, [np.array([[1.0, 2.0, 0], [2.0, 1, 0], [0, 0, 1]]), np.eye(2)])

    def test_check_positive_definite_reports_eigenvalue(self):
        with self.assertRaises(NotPositiveDefiniteError) as ctx:
            check_positive_definite(np.diag([1.0, -2.0]), "test form")
        self.assertAlmostEqual(ctx.exception.smallest_eigenvalue, -2.0)

    def test_non_local_pair(self):
        K = path_complex(2)
        W = diagonal_weights(K).with_entries({(0, 0, 2): 0.1})
        report = is_local(W)
        self.assertFalse(report)
        self.assertEqual(report.violation, (0, 0, 2))

    def test_restrict_to_boundary(self):
        K = path_complex(3)
        W = whitney_weights(K, [1.0, 2.0, 3.0])
        R = restrict_to_boundary(W, K.topological_boundary())
        np.testing.assert_allclose(np.diag(R.degree(0)), [1 / 3, 1.0])

    def test_nested_restrictions_agree(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            instance = gluing_instance("random-2d", rng)
            K = instance.complex
            W = whitney_weights(K, instance.lengths)
            L = K.topological_boundary()
            outer = restrict_to_boundary(W, L)
            M = outer.complex
            for part in L.components():
                direct = restrict_to_boundary(W, part)
                nested = restrict_to_boundary(outer, M.subcomplex(part.vertices))
                for q in range(direct.complex.dim + 1):
                    np.testing.assert_array_equal(nested.degree(q), direct.degree(q))
            again = restrict_to_boundary(outer, M.subcomplex(M.vertices))
            for q in range(M.dim + 1):
                np.testing.assert_array_equal(again.degree(q), outer.degree(q))

    def test_gram_of_trivial_bundle_is_weights(self):
        K = path_complex(3)
        W = whitney_weights(K, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(gram(K, W).matrix, W.degree(0))
        self.assertEqual(gram(K, W, q=1).tag, "Q_1")


class InducedWeightTests(SimpleTestCase):
    def test_mayer_vietoris_for_local_weights(self):
        K, projection = glued_path(4)
        W = whitney_weights(K, [1.0, 0.5, 0.7, 1.0])
        W_f = induced_weights(W, projection)
        self.assertLess(mayer_vietoris_check(W, projection, W_f), 1e-14)
        # both end elements are pushed to the seam, then the L2 term is split off
        seam = projection.image(0, 4)[0]
        self.assertAlmostEqual(W_f.degree(0)[seam, seam], 1 / 3)

    def test_weights_built_on_the_circle(self):
        lengths = [1.0, 0.5, 0.7, 1.0]
        K, projection = glued_path(4)
        W = whitney_weights(K, lengths)
        K_f = projection.target
        lengths_f = np.zeros(K_f.count(1))
        for e, length in enumerate(lengths):
            lengths_f[projection.image(1, e)[0]] = length
        circle = whitney_weights(K_f, lengths_f)
        seam = projection.image(0, 4)[0]
        # the circle carries the full seam weight, so the L2 term is counted twice
        scale = max(np.abs(m).max() for m in W.matrices)
        self.assertAlmostEqual(mayer_vietoris_check(W, projection, circle), W.degree(0)[4, 4] / scale)
        trimmed = circle.with_entries({(0, seam, seam): circle.degree(0)[seam, seam] - W.degree(0)[4, 4]})
        self.assertLess(mayer_vietoris_check(W, projection, trimmed), 1e-14)
        for q in range(2):
            np.testing.assert_allclose(trimmed.degree(q), induced_weights(W, projection).degree(q), atol=1e-15)

    def test_non_local_pairs_break_mayer_vietoris(self):
        K, projection = glued_path(4)
        W = diagonal_weights(K).with_entries({(0, 1, 3): 0.1})
        with self.assertLogs("engine.metric", level="WARNING"):
            W_f = induced_weights(W, projection)
        self.assertAlmostEqual(mayer_vietoris_check(W, projection, W_f), 0.1)

    def test_non_isometric_gluing(self):
        K, projection = glued_path(4)
        W = whitney_weights(K, [1.0, 1.0, 1.0, 2.0])
        with self.assertRaises(GluingError):
            induced_weights(W, projection)


class BlockDecompositionTests(SimpleTestCase):
    def test_reassemble(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((5, 5))
        Q = X @ X.T + 5 * np.eye(5)
        interior, seam = [0, 2, 3], [1, 4]
        np.testing.assert_allclose(reassemble(*block_decompose(Q, interior, seam), interior, seam), Q)

    def test_indices_must_partition(self):
        with self.assertRaises(WeightError):
            block_decompose(np.eye(3), [0], [1])

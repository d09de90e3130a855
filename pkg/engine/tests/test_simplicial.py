import numpy as np
from django.test import SimpleTestCase

from engine.exceptions import ComplexError, GluingError
from engine.presets import gluing_instance, grid_facets
from engine.simplicial import (
    DoubleComplex,
    double_complex,
    GluingMap,
    SimplicialComplex,
    build_complex,
    closed_double,
    cycle_complex,
    disjoint_union,
    glue,
    path_complex,
    permutation_sign,
    standard_subdivision,
    star,
)


def disk(rows=3, cols=3, periodic=False):
    facets, _ = grid_facets(rows, cols, periodic=periodic)
    return build_complex(facets)


class ComplexTests(SimpleTestCase):
    def test_permutation_sign(self):
        self.assertEqual(permutation_sign((0, 1, 2), (0, 1, 2)), 1)
        self.assertEqual(permutation_sign((1, 0, 2), (0, 1, 2)), -1)
        self.assertEqual(permutation_sign((1, 2, 0), (0, 1, 2)), 1)

    def test_boundary_of_boundary_vanishes(self):
        for K in (build_complex([(0, 1, 2)]), disk(), disk(4, 3, periodic=True)):
            product = K.boundary_matrix(1).matrix @ K.boundary_matrix(2).matrix
            self.assertFalse(np.any(product))

    def test_counts_and_euler_characteristic(self):
        self.assertEqual(build_complex([(0, 1, 2)]).counts(), (3, 3, 1))
        self.assertEqual(cycle_complex(5).euler_characteristic(), 0)
        self.assertEqual(path_complex(4).euler_characteristic(), 1)
        self.assertEqual(disk().euler_characteristic(), 1)
        self.assertEqual(disk(4, 3, periodic=True).euler_characteristic(), 0)

    def test_vertices_in_order_of_first_appearance(self):
        K = build_complex([(2, 0), (0, 5)])
        self.assertEqual(K.vertices, (2, 0, 5))

    def test_invalid_input(self):
        with self.assertRaises(ComplexError):
            build_complex([(0, 0, 1)])
        with self.assertRaises(ComplexError):
            build_complex([(0, 1), (0, 1, 2)])
        with self.assertRaises(ComplexError):
            SimplicialComplex([[(0,), (1,)], [(0, 2)]])
        with self.assertRaises(ComplexError):
            path_complex(0)
        with self.assertRaises(ComplexError):
            path_complex(3).index((0, 2))

    def test_cycle_order_walks_every_vertex(self):
        K = cycle_complex(6)
        vertices, edges, signs = K.cycle_order()
        self.assertEqual(sorted(vertices), list(range(6)))
        self.assertEqual(sorted(edges), list(range(6)))
        self.assertTrue(all(s in (1, -1) for s in signs))
        self.assertFalse(path_complex(3).is_cycle())

    def test_topological_boundary(self):
        L = path_complex(4).topological_boundary()
        self.assertEqual(sorted(L.vertices), [0, 4])
        self.assertEqual(len(disk(3, 3).topological_boundary().vertices), 8)
        self.assertTrue(cycle_complex(4).topological_boundary().is_empty())

    def test_boundary_subcomplex_rejects_interior_faces(self):
        K = disk(3, 3)
        with self.assertRaises(ComplexError):
            # the centre vertex lies on interior edges only
            K.boundary_subcomplex([(1, 1), (0, 1)])

    def test_star(self):
        K = build_complex([(0, 1, 2)])
        self.assertEqual(len(star(K, K.simplex(0, 0))), 4)
        self.assertEqual(len(star(K, K.simplex(2, 0))), 1)


class DoubleComplexTests(SimpleTestCase):
    def test_triangle(self):
        D = DoubleComplex(build_complex([(0, 1, 2)]))
        self.assertEqual(D.n_vertices, 7)
        self.assertEqual(D.n_edges, 9)
        self.assertEqual(D.n_cells, 3)

    def test_double_of_a_path(self):
        D = double_complex(path_complex(2))
        self.assertEqual((D.n_vertices, D.n_edges), (5, 4))

    def test_shortest_path_ends(self):
        K = path_complex(3)
        D = DoubleComplex(K)
        path = D.shortest_path((0, 0), (0, 3))
        self.assertEqual(path[0], (0, 0))
        self.assertEqual(path[-1], (0, 3))
        self.assertEqual(len(path), 7)


class GluingTests(SimpleTestCase):
    def test_path_glues_into_cycle(self):
        K = path_complex(4)
        f = GluingMap(K.boundary_subcomplex([0], "L1"), K.boundary_subcomplex([4], "L2"), {0: 4})
        K_f, projection = glue(K, f)
        self.assertEqual(K_f.counts(), (4, 4))
        self.assertTrue(K_f.is_cycle())
        seam = projection.seam()
        self.assertEqual(seam.vertices, (4,))
        P = projection.pullback_matrix(0)
        self.assertEqual(P.shape, (5, 4))
        np.testing.assert_array_equal(P.sum(axis=0), [1, 1, 1, 2])

    def test_incidence_is_transported(self):
        facets, _ = grid_facets(4, 3, periodic=True)
        K = build_complex(facets)
        f = GluingMap(
            K.boundary_subcomplex([(0, c) for c in range(3)], "L1"),
            K.boundary_subcomplex([(3, c) for c in range(3)], "L2"),
            {(0, c): (3, c) for c in range(3)},
        )
        self.assertTrue(f.check_incidence())
        K_f, _ = glue(K, f)
        self.assertEqual(K_f.euler_characteristic(), 0)
        product = K_f.boundary_matrix(1).matrix @ K_f.boundary_matrix(2).matrix
        self.assertFalse(np.any(product))

    def test_invalid_gluings(self):
        K = path_complex(4)
        L1 = K.boundary_subcomplex([0], "L1")
        L2 = K.boundary_subcomplex([4], "L2")
        with self.assertRaises(GluingError):
            GluingMap(L1, L2, {0: 3})
        with self.assertRaises(GluingError):
            GluingMap(L1, L1, {0: 0})
        short = path_complex(1)
        f = GluingMap(short.boundary_subcomplex([0]), short.boundary_subcomplex([1]), {0: 1})
        with self.assertRaises(GluingError):
            glue(short, f)

    def test_parallel_edges_are_rejected(self):
        K = path_complex(2)
        f = GluingMap(K.boundary_subcomplex([0]), K.boundary_subcomplex([2]), {0: 2})
        with self.assertRaises(GluingError):
            glue(K, f)

    def test_disjoint_union_labels(self):
        K = disjoint_union(path_complex(1), path_complex(2))
        self.assertEqual(K.vertices, ((0, 0), (0, 1), (1, 0), (1, 1), (1, 2)))

    def test_closed_double_of_interval_is_a_circle(self):
        K = path_complex(3)
        doubling = closed_double(K, K.topological_boundary())
        self.assertTrue(doubling.complex.is_cycle())
        self.assertEqual(doubling.complex.count(0), 6)
        for q, (idx, _) in enumerate(doubling.swap):
            np.testing.assert_array_equal(idx[idx], np.arange(doubling.complex.count(q)))

    def test_closed_double_counts(self):
        rng = np.random.default_rng(8)
        for k in range(60):
            instance = gluing_instance("random-2d" if k % 2 else "random-1d", rng)
            K_f, _ = glue(instance.complex, instance.gluing)
            for K in (instance.complex, K_f):
                L = K.topological_boundary()
                doubled = closed_double(K, L).complex
                with self.subTest(k=k, complex=repr(K)):
                    for q in range(K.dim + 1):
                        self.assertEqual(doubled.count(q), 2 * K.count(q) - L.count(q))


class SubdivisionTests(SimpleTestCase):
    def test_counts(self):
        self.assertEqual(standard_subdivision(build_complex([(0, 1, 2)])).complex.counts(), (6, 9, 4))
        self.assertEqual(standard_subdivision(path_complex(2)).complex.counts(), (5, 4))

    def test_euler_characteristic_is_preserved(self):
        K = disk(3, 4)
        refined = standard_subdivision(K).complex
        self.assertEqual(refined.euler_characteristic(), K.euler_characteristic())

    def test_refine_boundary(self):
        K = path_complex(3)
        subdivision = standard_subdivision(K)
        L = subdivision.refine(K.topological_boundary())
        self.assertEqual(sorted(L.vertices), [0, 3])

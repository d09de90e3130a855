import numpy as np
from django.test import SimpleTestCase

from engine.description import load_description, parse_description
from engine.exceptions import ComplexError, DescriptionError, TransportError, WeightError
from engine.presets import (
    GLUING_PRESETS,
    build_system,
    gluing_instance,
    holonomy_matrix,
    make_connection,
    make_weights,
    parse_angle,
    parse_connection,
    spectrum_complex,
)
from engine.simplicial import cycle_complex, path_complex

SQUARE = """
# a path of four unit edges glued into a square
facet 0 1
facet 1 2
facet 2 3
facet 3 4
boundary left 0
boundary right 4
glue left right 0:4
weights diagonal-unit
"""


class SpectrumComplexTests(SimpleTestCase):
    def test_families(self):
        self.assertEqual(spectrum_complex("cycle:5").complex.counts(), (5, 5))
        spec = spectrum_complex("path:3")
        self.assertEqual(sorted(spec.boundary.vertices), [0, 3])
        self.assertIsNone(spectrum_complex("triangle").boundary)
        self.assertEqual(spectrum_complex("fan:6").complex.counts(), (7, 12, 6))
        self.assertEqual(spectrum_complex("annulus:3x4").complex.euler_characteristic(), 0)

    def test_fan_lengths(self):
        spec = spectrum_complex("fan:6")
        # a regular hexagon has rim edges as long as its spokes
        np.testing.assert_allclose(spec.lengths, 1.0)

    def test_bad_names(self):
        for name in ("cycle:x", "fan:2", "disk:3", "sphere:4", "cycle:1"):
            with self.subTest(name=name), self.assertRaises(ComplexError):
                spectrum_complex(name)


class ConnectionPresetTests(SimpleTestCase):
    def test_parse_angle(self):
        self.assertAlmostEqual(parse_angle("pi"), np.pi)
        self.assertAlmostEqual(parse_angle("-pi/2"), -np.pi / 2)
        self.assertAlmostEqual(parse_angle("3pi/4"), 3 * np.pi / 4)
        self.assertAlmostEqual(parse_angle("2*pi/3"), 2 * np.pi / 3)
        self.assertAlmostEqual(parse_angle("0.5"), 0.5)
        with self.assertRaises(TransportError):
            parse_angle("half")

    def test_parse_connection(self):
        self.assertEqual(parse_connection("trivial"), ("trivial", None))
        self.assertEqual(parse_connection("holonomy:pi")[0], "holonomy")
        for spec in ("holonomy", "trivial:1", "magnetic"):
            with self.subTest(spec=spec), self.assertRaises(TransportError):
                parse_connection(spec)

    def test_holonomy_matrix(self):
        np.testing.assert_allclose(holonomy_matrix(np.pi), [[-1.0]])
        np.testing.assert_allclose(holonomy_matrix(np.pi / 2, field="complex"), [[1j]], atol=1e-15)
        U = holonomy_matrix(0.3, rank=3)
        np.testing.assert_allclose(U @ U.T, np.eye(3), atol=1e-15)
        self.assertEqual(U[2, 2], 1.0)

    def test_make_connection(self):
        K = cycle_complex(4)
        rng = np.random.default_rng(0)
        self.assertTrue(make_connection(K, "pure-gauge", 2, "complex", rng).is_flat())
        A = make_connection(K, "holonomy:pi")
        self.assertEqual(A.rank, 1)
        with self.assertRaises(TransportError):
            make_connection(path_complex(3), "holonomy:pi")


class WeightPresetTests(SimpleTestCase):
    def test_diagonal_copies_keep_gluings_isometric(self):
        K = path_complex(4)
        rng = np.random.default_rng(2)
        W = make_weights(K, "diagonal", rng=rng, copies=[(0, 0, 4)])
        self.assertEqual(W.degree(0)[0, 0], W.degree(0)[4, 4])

    def test_unknown(self):
        with self.assertRaises(WeightError):
            make_weights(path_complex(2), "sobolev")


class GluingPresetTests(SimpleTestCase):
    def test_every_preset_builds(self):
        for preset, spec in GLUING_PRESETS.items():
            with self.subTest(preset=preset):
                rng = np.random.default_rng(1)
                instance = gluing_instance(preset, rng)
                system = build_system(instance, spec.weights, spec.connection, 1, "real", 1.0, rng)
                self.assertTrue(system.A_f.is_flat())
                glued = len(instance.gluing.source.vertices)
                self.assertEqual(system.K_f.count(0), instance.complex.count(0) - glued)

    def test_square(self):
        instance = gluing_instance("c4", np.random.default_rng(0))
        self.assertEqual(instance.descriptor, "path:4")
        self.assertEqual(instance.copies(), [(0, 0, 4)])

    def test_unknown_preset(self):
        with self.assertRaises(ComplexError):
            gluing_instance("klein-bottle", np.random.default_rng(0))

    def test_lumped_needs_a_one_complex(self):
        rng = np.random.default_rng(0)
        with self.assertRaises(WeightError):
            build_system(gluing_instance("two-triangles", rng), "lumped", "trivial", 1, "real", 1.0, rng)


class DescriptionTests(SimpleTestCase):
    def test_square(self):
        desc = parse_description(SQUARE)
        self.assertEqual(desc.complex.counts(), (5, 4))
        instance = desc.gluing_instance()
        self.assertEqual(instance.gluing.vertex_map, {0: 4})
        self.assertTrue(instance.rest.is_empty())
        self.assertEqual(sorted(desc.marked_boundary().vertices), [0, 4])

    def test_lengths_weights_and_transports(self):
        desc = parse_description(
            "facet a b\nfacet b c\nlength a b 2.5\nweights whitney\n"
            "weight a,b b,c 0.0\nrank 1\nfield complex\ntransport a,b a 1j\n"
        )
        np.testing.assert_allclose(desc.edge_lengths(), [2.5, 1.0])
        W = desc.weight_system()
        np.testing.assert_allclose(W.degree(1), np.diag([0.4, 1.0]))
        A = desc.connection_on(desc.complex)
        self.assertEqual(A.field, "complex")
        np.testing.assert_allclose(A.transport((1, 0), (0, 0)), [[1j]])

    def test_diagonal_parameters(self):
        desc = parse_description("facet 0 1\nweights diagonal q0=2 q1=3\n")
        W = desc.weight_system()
        np.testing.assert_allclose(np.diag(W.degree(0)), [2.0, 2.0])
        np.testing.assert_allclose(np.diag(W.degree(1)), [3.0])

    def test_errors_carry_line_numbers(self):
        cases = {
            "facet 0 1\nsphere 3\n": "line 2",
            "facet 0 1\nlength 0 1 long\n": "line 2",
            "facet 0 1 2 3 4\n": "line 1",
            "facet 0 1\nconnection holonomy\n": "line 2",
            "facet 0 1\nrank 0\n": "line 2",
            "facet 0 1\nfield quaternion\n": "line 2",
        }
        for text, prefix in cases.items():
            with self.subTest(text=text), self.assertRaises(DescriptionError) as ctx:
                parse_description(text)
            self.assertTrue(str(ctx.exception).startswith(prefix))

    def test_file_level_errors(self):
        with self.assertRaises(DescriptionError):
            parse_description("# nothing here\n")
        with self.assertRaises(DescriptionError):
            parse_description("facet 0 1\nrest outer\n")
        with self.assertRaises(DescriptionError):
            parse_description("facet 0 1\nglue a b 0:1\n")
        with self.assertRaises(DescriptionError):
            parse_description("facet 0 1\n").gluing_instance()
        with self.assertRaises(DescriptionError):
            parse_description("facet 0 1\nlength 0 2 1.0\n").edge_lengths()
        with self.assertRaises(DescriptionError):
            load_description("/nonexistent/complex.txt")

    def test_transport_size(self):
        desc = parse_description("facet 0 1\nrank 2\ntransport 0,1 0 1 0 0\n")
        with self.assertRaises(DescriptionError):
            desc.connection_on(desc.complex)

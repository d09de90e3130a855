import json
import tempfile
from io import StringIO
from pathlib import Path

from django.test import SimpleTestCase

from engine.reports import melt, render_rows, write_report
from engine.serializers import DeterminantRowSerializer, ExperimentConfigSerializer, SpectrumRowSerializer

ROWS = [
    {"complex": "cycle:3", "operator": "laplacian_0", "kernel_dim": 1, "log_det_prime": 2.1972245773362196,
     "mass": 0.0, "log_det_massive": float("nan")},
    {"complex": "cycle:3", "operator": "laplacian_0", "kernel_dim": 1, "log_det_prime": 2.1972245773362196,
     "mass": 1.0, "log_det_massive": 3.4657359027997265},
]


class RenderTests(SimpleTestCase):
    def test_csv(self):
        lines = render_rows(DeterminantRowSerializer, ROWS, "csv").splitlines()
        self.assertEqual(lines[0], "complex,operator,kernel_dim,log_det_prime,mass,log_det_massive")
        self.assertEqual(lines[1], "cycle:3,laplacian_0,1,2.1972245773362196,0,")
        self.assertEqual(lines[2], "cycle:3,laplacian_0,1,2.1972245773362196,1,3.4657359027997265")

    def test_json_has_null_for_nan(self):
        data = json.loads(render_rows(DeterminantRowSerializer, ROWS, "json"))
        self.assertIsNone(data[0]["log_det_massive"])
        self.assertEqual(data[1]["log_det_massive"], 3.4657359027997265)

    def test_long(self):
        lines = render_rows(DeterminantRowSerializer, ROWS, "long").splitlines()
        self.assertEqual(lines[0], "complex,operator,mass,quantity,value")
        self.assertIn("cycle:3,laplacian_0,1,log_det_massive,3.4657359027997265", lines)
        self.assertEqual(len(lines), 1 + 2 * 3)

    def test_melt(self):
        records = list(melt([{"a": 1, "b": 2, "c": 3}], ("a",)))
        self.assertEqual(records, [[1, "b", 2], [1, "c", 3]])

    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            render_rows(SpectrumRowSerializer, [], "xml")

    def test_write_report(self):
        stream = StringIO()
        write_report("a,b\n", stream=stream)
        self.assertEqual(stream.getvalue(), "a,b\n")
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "report.csv"
            write_report("a,b\n", out=str(out))
            self.assertEqual(out.read_text(), "a,b\n")


class ConfigValidationTests(SimpleTestCase):
    def validate(self, **data):
        serializer = ExperimentConfigSerializer(data=data)
        return serializer.is_valid(), serializer

    def test_defaults(self):
        valid, serializer = self.validate(command="verify_gluing", preset="c4")
        self.assertTrue(valid)
        config = serializer.validated_data
        self.assertEqual((config["rank"], config["field"], config["seed"], config["format"]), (1, "real", 0, "csv"))

    def test_mass_list(self):
        valid, serializer = self.validate(command="verify_gluing", preset="c4", mass="0, 0.5,2")
        self.assertTrue(valid)
        self.assertEqual(serializer.validated_data["mass"], [0.0, 0.5, 2.0])
        for mass in ("-1", "nan", "heavy", ","):
            with self.subTest(mass=mass):
                self.assertFalse(self.validate(command="verify_gluing", preset="c4", mass=mass)[0])

    def test_invalid(self):
        cases = [
            dict(command="verify_gluing"),
            dict(command="verify_gluing", preset="c4", complex="square.txt"),
            dict(command="verify_gluing", preset="moebius"),
            dict(command="verify_gluing", preset="two-triangles", weights="lumped"),
            dict(command="verify_gluing", preset="c4", tolerance=0),
            dict(command="verify_gluing", preset="c4", connection="holonomy"),
            dict(command="verify_gluing", preset="c4", rank=0),
            dict(command="converge", preset="diagonal"),
            dict(command="converge", complex="square.txt"),
            dict(command="converge", preset="whitney", n0=2),
            dict(command="converge", preset="whitney", length=-1),
            dict(command="spectrum", preset="sphere:3"),
            dict(command="spectrum", preset="disk:3x3", weights="lumped"),
            dict(command="publish", preset="c4"),
        ]
        for data in cases:
            with self.subTest(data=data):
                self.assertFalse(self.validate(**data)[0])

    def test_valid_sources(self):
        self.assertTrue(self.validate(command="spectrum", preset="fan:5", degree=1)[0])
        self.assertTrue(self.validate(command="partition", complex="square.txt")[0])
        self.assertTrue(self.validate(command="converge", preset="lumped", precision="double")[0])

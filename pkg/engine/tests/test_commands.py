import csv
import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from engine.models import ExperimentRun
from engine.tests.test_presets import SQUARE


def run(command, **options):
    out, err = StringIO(), StringIO()
    call_command(command, stdout=out, stderr=err, **options)
    return out.getvalue(), err.getvalue()


def records(text):
    return list(csv.DictReader(StringIO(text)))


class VerifyGluingCommandTests(SimpleTestCase):
    def test_massive_square(self):
        out, _ = run("verify_gluing", preset="c4-massive")
        (row,) = records(out)
        self.assertEqual(row["asserted"], "true")
        self.assertLess(float(row["residual"]), 1e-10)

    def test_massless_square_passes_unasserted(self):
        out, _ = run("verify_gluing", preset="c4")
        (row,) = records(out)
        self.assertEqual(row["asserted"], "false")
        self.assertEqual(row["partition_residual"], "")

    def test_count_sets_the_number_of_rows(self):
        out, _ = run("verify_gluing", preset="random-2d", count=4, seed=1)
        rows = records(out)
        self.assertEqual([row["index"] for row in rows], ["0", "1", "2", "3"])
        self.assertEqual([row["mass"] for row in rows], ["0.10000000000000001", "1", "10", "0.10000000000000001"])

    def test_output_is_deterministic(self):
        options = dict(preset="random-1d", count=3, seed=11)
        self.assertEqual(run("verify_gluing", **options)[0], run("verify_gluing", **options)[0])
        self.assertEqual(
            run("verify_gluing", workers=3, **options)[0], run("verify_gluing", **options)[0],
        )

    def test_failed_check(self):
        with self.assertRaises(CommandError) as ctx:
            run("verify_gluing", preset="random-2d", count=2, tolerance=1e-300)
        self.assertEqual(ctx.exception.returncode, 1)

    def test_worst_row_goes_to_stderr(self):
        out, err = StringIO(), StringIO()
        with self.assertRaises(CommandError):
            call_command("verify_gluing", preset="cylinder", count=1, tolerance=1e-300, stdout=out, stderr=err)
        self.assertEqual(len(records(out.getvalue())), 1)
        self.assertEqual(json.loads(err.getvalue())["preset"], "cylinder")

    def test_bad_configuration(self):
        for options in (dict(preset="moebius"), dict(mass="-1"), dict(preset="two-triangles", weights="lumped")):
            with self.subTest(options=options), self.assertRaises(CommandError) as ctx:
                run("verify_gluing", **options)
            self.assertEqual(ctx.exception.returncode, 2)

    def test_description_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "square.txt"
            path.write_text(SQUARE)
            out, _ = run("verify_gluing", complex=str(path), mass="1")
            (row,) = records(out)
            self.assertEqual(row["complex"], "square.txt")
            self.assertLess(float(row["residual"]), 1e-10)
            with self.assertRaises(CommandError) as ctx:
                run("verify_gluing", complex=str(Path(tmp) / "missing.txt"))
            self.assertEqual(ctx.exception.returncode, 2)

    def test_formats(self):
        data = json.loads(run("verify_gluing", preset="c4-massive", format="json")[0])
        self.assertEqual(data[0]["preset"], "c4-massive")
        long = records(run("verify_gluing", preset="c4-massive", format="long")[0])
        self.assertEqual(set(long[0]), {"index", "preset", "complex", "mass", "quantity", "value"})

    def test_out_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rows.csv"
            out, _ = run("verify_gluing", preset="c4-massive", out=str(path))
            self.assertEqual(out, "")
            self.assertEqual(len(records(path.read_text())), 1)


class ConvergeCommandTests(SimpleTestCase):
    def test_lumped(self):
        rows = records(run("converge", preset="lumped", length=2.0, n0=4, steps=2)[0])
        self.assertEqual([row["n"] for row in rows], ["4", "8", "16"])
        for row in rows:
            self.assertAlmostEqual(float(row["ratio"]), 1.0, places=10)

    def test_whitney(self):
        rows = records(run("converge", n0=8, steps=2)[0])
        errors = [float(row["abs_error"]) for row in rows]
        self.assertEqual(errors, sorted(errors, reverse=True))
        self.assertTrue(all(row["collar_condition"] == "true" for row in rows))
        for row in rows:
            self.assertAlmostEqual(float(row["ratio"]) / float(row["closed_form"]), 1, places=12)

    def test_double_precision_to_512(self):
        rows = records(run("converge", n0=8, steps=6, precision="double")[0])
        self.assertEqual(rows[-1]["n"], "512")
        self.assertTrue(all(row["precision"] == "double" for row in rows))
        self.assertTrue(all(row["ratio"] == row["pipeline_ratio"] for row in rows))
        lumped = records(run("converge", preset="lumped", length=2.0, n0=4, steps=7, precision="double")[0])
        self.assertEqual(len(lumped), 8)

    def test_pipeline_ratio_is_reported(self):
        rows = records(run("converge", n0=8, steps=1)[0])
        for row in rows:
            self.assertAlmostEqual(float(row["pipeline_ratio"]) / float(row["ratio"]), 1, places=8)

    def test_bad_preset(self):
        with self.assertRaises(CommandError) as ctx:
            run("converge", preset="diagonal")
        self.assertEqual(ctx.exception.returncode, 2)


class SpectrumCommandTests(SimpleTestCase):
    def test_triangle_cycle(self):
        rows = records(run("spectrum")[0])
        values = [float(row["eigenvalue"]) for row in rows]
        self.assertAlmostEqual(values[0], 0, places=12)
        self.assertAlmostEqual(values[1], 3)
        self.assertAlmostEqual(values[2], 3)

    def test_dirichlet_path_determinants(self):
        rows = records(run("spectrum", preset="path:4", determinants=True, mass="0,1")[0])
        self.assertEqual(rows[0]["operator"], "dirichlet")
        self.assertEqual(rows[0]["log_det_massive"], "")
        self.assertAlmostEqual(float(rows[0]["log_det_prime"]), 1.3862943611198906)

    def test_bad_degree(self):
        with self.assertRaises(CommandError) as ctx:
            run("spectrum", preset="cycle:4", degree=2)
        self.assertEqual(ctx.exception.returncode, 2)


class PartitionCommandTests(SimpleTestCase):
    def test_quadrature(self):
        rows = records(run("partition", preset="path:3", quadrature=True, count=2, mass="0,0.5")[0])
        self.assertEqual(len(rows), 4)
        for row in rows:
            self.assertLess(float(row["residual"]), 1e-8)

    def test_needs_a_boundary(self):
        with self.assertRaises(CommandError) as ctx:
            run("partition", preset="cycle:4")
        self.assertEqual(ctx.exception.returncode, 2)


class RecordTests(TestCase):
    def test_record_run(self):
        run("verify_gluing", preset="c4-massive", record=True)
        record = ExperimentRun.objects.get()
        self.assertEqual((record.command, record.exit_code, record.row_count), ("verify_gluing", 0, 1))
        self.assertEqual(record.config["preset"], "c4-massive")
        self.assertEqual(str(record), "verify_gluing (exit 0, 1 rows)")

    def test_runs_are_not_recorded_by_default(self):
        run("verify_gluing", preset="c4-massive")
        self.assertFalse(ExperimentRun.objects.exists())

    def test_bad_configuration_is_recorded(self):
        with self.assertRaises(CommandError):
            run("verify_gluing", preset="moebius", record=True)
        self.assertEqual(ExperimentRun.objects.get().exit_code, 2)

from dataclasses import asdict

from engine.approx import (
    closed_form_ratio,
    determinant_ratio_experiment,
    monotone_approach,
    q_ratio_check,
    roundoff_floor,
)
from engine.serializers import ConvergenceRowSerializer

from ._common import CheckFailed, EngineCommand

EXACT_TOLERANCE = 1e-10
COLLAR_MIN_N = 6


class Command(EngineCommand):
    help = (
        "Determinant ratio (det' on the glued circle)^2 / det' on the double "
        "under refinement, with the collar Gram ratio. With --precision high "
        "the ratio is evaluated in mpmath from the circulant symbols of the "
        "assembled operators; pipeline_ratio is the double-precision "
        "eigenvalue value of the same operators."
    )
    row_serializer = ConvergenceRowSerializer
    preset_default = "whitney"

    def add_command_arguments(self, parser):
        parser.add_argument("--lambda", dest="length", type=float, default=1.0, help="Interval length")
        parser.add_argument("--n0", type=int, default=8)
        parser.add_argument("--steps", type=int, default=6)
        parser.add_argument("--precision", choices=["high", "double"], default="high")

    def run(self, config):
        preset, length = config["preset"], config.get("length", 1.0)
        precision = config.get("precision", "high")
        ratios = determinant_ratio_experiment(length, config.get("n0", 8), config.get("steps", 6), preset, precision)
        rows = []
        for ratio in ratios:
            q = q_ratio_check(length, ratio.n, weights=preset)
            row = asdict(ratio)
            row.pop("exact_error")
            row["closed_form"] = float(closed_form_ratio(preset, length, ratio.n))
            row.update(q_ratio=q.ratio, q_ratio_global=q.global_ratio, collar_condition=q.collar_condition)
            rows.append(row)

        if preset == "lumped":
            bad = [row for row in rows if not row["abs_error"] <= self.lumped_tolerance(row, precision)]
            if bad:
                worst = max(bad, key=lambda row: row["abs_error"])
                raise CheckFailed(f"Lumped ratio differs from length^2/4 at n={worst['n']}", rows, worst)
        elif not monotone_approach(ratios):
            worst = max(rows, key=lambda row: row["abs_error"])
            raise CheckFailed("Ratio errors do not decrease strictly under refinement", rows, worst)

        collar = [row for row in rows if row["n"] >= COLLAR_MIN_N]
        bad = [row for row in collar if not abs(row["q_ratio"] - 1) <= EXACT_TOLERANCE]
        if bad:
            raise CheckFailed(f"Collar Gram ratio differs from 1 at n={bad[0]['n']}", rows, bad[0])
        return rows

    @staticmethod
    def lumped_tolerance(row, precision):
        if precision == "double":
            return max(EXACT_TOLERANCE, roundoff_floor(row["n"], row["target"]))
        return EXACT_TOLERANCE

    def worst_residual(self, rows):
        return max((row["abs_error"] for row in rows), default=None)

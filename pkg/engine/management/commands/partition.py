import math

import numpy as np

from engine.exceptions import ComplexError
from engine.gaussian import assemble_action, log_partition, partition_by_quadrature
from engine.presets import make_connection, make_weights, random_cochain
from engine.serializers import PartitionRowSerializer

from ._common import CheckFailed, EngineCommand

NAN = float("nan")


class Command(EngineCommand):
    help = (
        "log Z_{K,L}(eta) for random boundary data on a complex with a marked "
        "boundary; --quadrature checks it against numerical integration."
    )
    row_serializer = PartitionRowSerializer
    preset_default = "path:2"

    def add_command_arguments(self, parser):
        parser.add_argument("--quadrature", action="store_true")

    def run(self, config):
        description, K, lengths, boundary = self.complex_source(config)
        if boundary is None:
            raise ComplexError("partition needs a complex with a marked boundary")
        name = config.get("preset") or config["complex"]
        field = description.field if description is not None else config["field"]
        rng = np.random.default_rng(config["seed"])
        if description is not None:
            W = description.weight_system(rng)
            A = description.connection_on(K, rng)
        else:
            W = make_weights(K, config.get("weights", "diagonal-unit"), lengths, rng)
            A = make_connection(K, config.get("connection", "trivial"), config["rank"], field, rng)

        forms = {mass: assemble_action(K, boundary, W, A, mass) for mass in self.masses(config, [0.0])}
        rows = []
        for index in range(config.get("count", 1)):
            draw = np.random.default_rng([config["seed"], index])
            for mass, F in forms.items():
                eta = random_cochain(F.boundary.size, field, draw)
                value = log_partition(F, eta)
                oracle = residual = NAN
                if config["quadrature"] and field == "real" and F.interior.size in (1, 2):
                    oracle = partition_by_quadrature(F, eta)
                    residual = abs(math.expm1(value.log - oracle))
                rows.append({
                    "complex": name,
                    "index": index,
                    "mass": mass,
                    "log_z": value.log,
                    "action": value.action,
                    "log_det": value.log_det,
                    "dimension": value.dimension,
                    "log_z_quadrature": oracle,
                    "residual": residual,
                })

        tolerance = self.tolerance(config)
        bad = [row for row in rows if row["residual"] > tolerance]
        if bad:
            worst = max(bad, key=lambda row: row["residual"])
            raise CheckFailed(f"Closed form and quadrature differ by {worst['residual']:.3e}", rows, worst)
        return rows

    def worst_residual(self, rows):
        values = [row["residual"] for row in rows if math.isfinite(row["residual"])]
        return max(values, default=None)

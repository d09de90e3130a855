from functools import partial

from engine.battery import evaluate_gluing, gluing_tasks, row_worst, run_battery, worst_row
from engine.description import load_description
from engine.serializers import GluingRowSerializer

from ._common import CheckFailed, EngineCommand


class Command(EngineCommand):
    help = (
        "Check the determinant, partition-function and critical-action gluing "
        "identities over a battery of instances."
    )
    row_serializer = GluingRowSerializer
    preset_default = "c4"

    def run(self, config):
        seed = config["seed"]
        masses = config.get("mass")
        if config.get("complex"):
            description = load_description(config["complex"])
            description.gluing_instance()
            tasks = gluing_tasks(
                "file", config.get("count"), seed, masses,
                description.weights, description.connection, description.rank, description.field,
            )
            evaluate = partial(evaluate_gluing, description=description)
        else:
            tasks = gluing_tasks(
                config["preset"], config.get("count"), seed, masses,
                config.get("weights"), config.get("connection"), config["rank"], config["field"],
            )
            evaluate = evaluate_gluing
        rows = run_battery(evaluate, tasks, config.get("workers"))

        tolerance = self.tolerance(config)
        worst, value = worst_row(rows)
        if worst is not None and value > tolerance:
            failing = sum(1 for row in rows if row_worst(row) > tolerance)
            raise CheckFailed(
                f"{failing} of {len(rows)} rows exceed tolerance {tolerance:g} (worst {value:.3e})",
                rows, worst,
            )
        return rows

    def worst_residual(self, rows):
        return worst_row(rows)[1]

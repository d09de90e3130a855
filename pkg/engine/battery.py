"""Instance batteries: tasks, the worker pool and per-instance verification rows."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .conf import engine_setting
from .exceptions import SingularFormError
from .gaussian import (
    dn_defect,
    glued_system,
    verify_critical_action_gluing,
    verify_determinant_gluing,
    verify_partition_gluing,
)
from .presets import GLUING_PRESETS, GluingPreset, build_system, gluing_instance, random_cochain

logger = logging.getLogger(__name__)

NAN = float("nan")
RESIDUAL_COLUMNS = (
    "residual",
    "partition_residual",
    "critical_residual",
    "schur_residual",
    "q_factored_residual",
)


def run_battery(fn, items, workers=None):
    """``[fn(item) for item in items]``, optionally on a thread pool. Results
    keep the order of ``items``."""
    workers = engine_setting("WORKERS") if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.info("Running %d tasks on %d workers", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class GluingTask:
    index: int
    seed: int
    preset: str
    weights: str
    connection: str
    rank: int
    field: str
    mass: float


def gluing_tasks(
    preset, count=None, seed=0, masses=None, weights=None, connection=None, rank=1, field="real", ranks=None,
):
    """One task per instance, masses taken in turn from the mass list. Options
    left as None fall back to the preset defaults; ``count`` defaults to one
    instance per mass. ``ranks`` advances once per pass over the masses, so
    every (rank, mass) pair comes up."""
    spec = GLUING_PRESETS.get(preset, GluingPreset(None))
    masses = list(masses or spec.masses or engine_setting("DEFAULT_MASSES"))
    ranks = list(ranks or [rank])
    count = len(masses) if count is None else count
    return [
        GluingTask(
            k, seed, preset, weights or spec.weights, connection or spec.connection,
            int(ranks[(k // len(masses)) % len(ranks)]), field, float(masses[k % len(masses)]),
        )
        for k in range(count)
    ]


def _guarded(check, *args):
    try:
        return check(*args)
    except SingularFormError as exc:
        logger.info("Residual not available: %s", exc)
        return None


def evaluate_gluing(task, description=None):
    """One report row: determinant, partition, critical-action and Schur checks.

    With a description the instance comes from the file instead of a preset.
    """
    rng = np.random.default_rng([task.seed, task.index])
    if description is None:
        instance = gluing_instance(task.preset, rng)
        system = build_system(instance, task.weights, task.connection, task.rank, task.field, task.mass, rng)
        rest_data = GLUING_PRESETS[task.preset].rest_data
    else:
        instance = description.gluing_instance()
        system = glued_system(
            instance.complex,
            instance.gluing,
            description.weight_system(rng, instance.copies()),
            lambda K_f: description.connection_on(K_f, rng),
            instance.rest,
            task.mass,
        )
        rest_data = True
    eta3 = None
    if rest_data and system.rest_indices_f.size:
        eta3 = random_cochain(system.rest_indices_f.size, task.field, rng)

    determinant = verify_determinant_gluing(system)
    partition = _guarded(verify_partition_gluing, system, eta3)
    critical = _guarded(verify_critical_action_gluing, system, eta3)
    defect = _guarded(dn_defect, system.form_K)
    schur = determinant.extra["schur_coherence"]
    if defect is not None:
        schur = max(schur, defect) if not math.isnan(schur) else defect

    kernels = determinant.kernel_dims or (None, None, None)
    row = asdict(task)
    row.update(
        complex=instance.descriptor,
        lhs=determinant.lhs,
        rhs=determinant.rhs,
        residual=determinant.residual,
        kernel_f=kernels[0],
        kernel_K=kernels[1],
        kernel_R=kernels[2],
        asserted=determinant.asserted,
        partition_residual=partition.residual if partition is not None else NAN,
        critical_residual=critical.residual if critical is not None else NAN,
        schur_residual=schur,
        q_factored_residual=determinant.extra["q_factored_residual"],
    )
    logger.debug("Row %d (%s, m^2=%g): residual %.3e", task.index, task.preset, task.mass, determinant.residual)
    return row


def row_worst(row):
    """Largest finite residual that the row asserts; NaN when there is none."""
    values = []
    for column in RESIDUAL_COLUMNS:
        if column == "residual" and not row.get("asserted", True):
            continue
        value = row.get(column)
        if value is not None and math.isfinite(value):
            values.append(value)
    return max(values) if values else NAN


def worst_row(rows, key=row_worst):
    scored = [(key(row), k) for k, row in enumerate(rows)]
    scored = [(value, k) for value, k in scored if math.isfinite(value)]
    if not scored:
        return None, NAN
    value, k = max(scored)
    return rows[k], value

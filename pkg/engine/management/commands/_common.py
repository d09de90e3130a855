"""Options, validation, output and exit codes shared by the engine commands.

Exit codes: 0 success, 1 failed check (worst row on stderr), 2 bad
configuration.
"""

import json
import logging
import math

import numpy as np
from django.core.management.base import BaseCommand, CommandError

from engine.conf import engine_setting
from engine.description import load_description
from engine.exceptions import (
    ComplexError,
    DescriptionError,
    QuadratureError,
    TransportError,
    WeightError,
)
from engine.models import ExperimentRun
from engine.presets import spectrum_complex
from engine.reports import render_rows, write_report
from engine.serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)

CONFIG_ERRORS = (ComplexError, DescriptionError, TransportError, WeightError)


class CheckFailed(Exception):
    """A run finished but a check did not hold; ``row`` is the worst offender."""

    def __init__(self, message, rows, row=None):
        super().__init__(message)
        self.rows = rows
        self.row = row


def _flatten_errors(errors, prefix=""):
    if isinstance(errors, dict):
        for key, value in errors.items():
            name = "" if key == "non_field_errors" else f"{key}: "
            yield from _flatten_errors(value, prefix + name)
    elif isinstance(errors, list):
        for item in errors:
            yield from _flatten_errors(item, prefix)
    else:
        yield f"{prefix}{errors}"


class EngineCommand(BaseCommand):
    row_serializer = None
    preset_default = None

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group()
        source.add_argument("--complex", help="Complex description file")
        source.add_argument("--preset", default=self.preset_default, help="Built-in preset name")
        parser.add_argument("--weights", help="diagonal-unit, diagonal, lumped or whitney")
        parser.add_argument("--rank", type=int)
        parser.add_argument("--field", choices=["real", "complex"])
        parser.add_argument("--connection", help="trivial, pure-gauge or holonomy:<angle>")
        parser.add_argument("--mass", help="Comma separated m^2 values")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--count", type=int)
        parser.add_argument("--tolerance", type=float)
        parser.add_argument("--format", choices=["csv", "json", "long"])
        parser.add_argument("--out", help="Write the report here instead of stdout")
        parser.add_argument("--workers", type=int)
        parser.add_argument("--record", action="store_true", help="Store an ExperimentRun")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def validated_config(self, options):
        fields = ExperimentConfigSerializer().fields
        data = {k: v for k, v in options.items() if k in fields and v is not None}
        # a file source replaces the default preset
        if data.get("complex"):
            data.pop("preset", None)
        data["command"] = self.command_name
        serializer = ExperimentConfigSerializer(data=data)
        if not serializer.is_valid():
            message = "; ".join(_flatten_errors(serializer.errors))
            self.record(options, 2)
            raise CommandError(message, returncode=2)
        return dict(serializer.validated_data)

    @property
    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    def tolerance(self, config):
        return config.get("tolerance") or engine_setting("DEFAULT_TOLERANCE")

    def masses(self, config, default=None):
        return config.get("mass") or default or engine_setting("DEFAULT_MASSES")

    def complex_source(self, config):
        """``ComplexSpec``-like source for the spectrum and partition commands."""
        if config.get("complex"):
            description = load_description(config["complex"])
            return description, description.complex, description.edge_lengths(), description.marked_boundary()
        spec = spectrum_complex(config["preset"])
        return None, spec.complex, spec.lengths, spec.boundary

    def handle(self, *args, **options):
        config = self.validated_config(options)
        try:
            rows = self.run(config)
            failure = None
        except CONFIG_ERRORS as exc:
            self.record(config, 2)
            raise CommandError(str(exc), returncode=2) from exc
        except CheckFailed as exc:
            rows, failure = exc.rows, exc
        except (np.linalg.LinAlgError, QuadratureError) as exc:
            self.record(config, 1)
            raise CommandError(str(exc), returncode=1) from exc

        text = render_rows(self.row_serializer, rows, config["format"])
        write_report(text, config.get("out"), self.stdout)
        worst = self.worst_residual(rows)
        if failure is None:
            self.record(config, 0, rows, worst)
            return
        if failure.row is not None:
            self.stderr.write(json.dumps(failure.row, default=str, indent=2))
        self.record(config, 1, rows, worst)
        raise CommandError(str(failure), returncode=1)

    def run(self, config):
        raise NotImplementedError

    def worst_residual(self, rows):
        return None

    def record(self, config, exit_code, rows=(), worst=None):
        if not config.get("record"):
            return
        fields = ExperimentConfigSerializer().fields
        config = {k: v for k, v in config.items() if k in fields and _is_plain(v)}
        if worst is not None and not math.isfinite(worst):
            worst = None
        ExperimentRun.objects.create(
            command=self.command_name,
            config=config,
            exit_code=exit_code,
            row_count=len(rows),
            worst_residual=worst,
        )


def _is_plain(value):
    return isinstance(value, (str, int, float, bool, list, type(None)))

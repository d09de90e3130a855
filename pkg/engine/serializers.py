# Command options are validated like API payloads, report rows are serialized
# like API responses
import math

from rest_framework.serializers import (
    BooleanField,
    CharField,
    ChoiceField,
    FloatField,
    IntegerField,
    Serializer,
    ValidationError,
)

from .exceptions import TransportError
from .presets import GLUING_PRESETS, WEIGHT_PRESETS, parse_connection

COMMANDS = ("verify_gluing", "converge", "spectrum", "partition")
FORMATS = ("csv", "json", "long")
CONVERGENCE_PRESETS = ("lumped", "whitney")
SPECTRUM_FAMILIES = ("cycle", "path", "triangle", "fan", "disk", "annulus")
FLAT_GLUING_PRESETS = ("two-triangles", "cylinder", "two-cylinders", "random-2d")
FLAT_FAMILIES = ("triangle", "fan", "disk", "annulus")


class ExperimentConfigSerializer(Serializer):
    command = ChoiceField(choices=COMMANDS)
    complex = CharField(required=False, allow_blank=False)
    preset = CharField(required=False, allow_blank=False)
    weights = ChoiceField(choices=WEIGHT_PRESETS, required=False)
    rank = IntegerField(min_value=1, default=1)
    field = ChoiceField(choices=("real", "complex"), default="real")
    connection = CharField(required=False)
    mass = CharField(required=False)
    seed = IntegerField(min_value=0, default=0)
    count = IntegerField(min_value=1, required=False)
    tolerance = FloatField(required=False)
    format = ChoiceField(choices=FORMATS, default="csv")
    out = CharField(required=False)
    workers = IntegerField(min_value=1, required=False)
    record = BooleanField(default=False)

    # converge
    length = FloatField(required=False)
    n0 = IntegerField(min_value=3, required=False)
    steps = IntegerField(min_value=1, required=False)
    precision = ChoiceField(choices=("high", "double"), required=False)

    # spectrum and partition
    degree = IntegerField(min_value=0, default=0)
    determinants = BooleanField(default=False)
    quadrature = BooleanField(default=False)

    def validate_tolerance(self, value):
        if not value > 0:
            raise ValidationError("Tolerance must be positive.")
        return value

    def validate_length(self, value):
        if not value > 0:
            raise ValidationError("Length must be positive.")
        return value

    def validate_mass(self, value):
        try:
            masses = [float(item) for item in value.split(",") if item.strip()]
        except ValueError:
            raise ValidationError("Mass must be a comma separated list of numbers.") from None
        if not masses:
            raise ValidationError("Mass list is empty.")
        if any(not math.isfinite(m) or m < 0 for m in masses):
            raise ValidationError("Masses must be finite and non-negative.")
        return masses

    def validate_connection(self, value):
        try:
            parse_connection(value)
        except TransportError as exc:
            raise ValidationError(str(exc)) from None
        return value

    def validate(self, attrs):
        command = attrs["command"]
        source, preset = attrs.get("complex"), attrs.get("preset")
        if source and preset:
            raise ValidationError("Give either --complex or --preset, not both.")
        if not source and not preset:
            raise ValidationError("One of --complex or --preset is required.")

        if command == "converge":
            if source:
                raise ValidationError("converge runs on the built-in interval geometry only.")
            if preset not in CONVERGENCE_PRESETS:
                raise ValidationError({"preset": f"converge needs one of {', '.join(CONVERGENCE_PRESETS)}."})
            return attrs

        flat = False
        if preset and command == "verify_gluing":
            if preset not in GLUING_PRESETS:
                raise ValidationError({"preset": f"Unknown gluing preset {preset!r}."})
            flat = preset in FLAT_GLUING_PRESETS
        elif preset:
            family = preset.partition(":")[0]
            if family not in SPECTRUM_FAMILIES:
                raise ValidationError({"preset": f"Unknown complex preset {preset!r}."})
            flat = family in FLAT_FAMILIES
        if flat and attrs.get("weights") == "lumped":
            raise ValidationError({"weights": "Lumped weights need a 1-complex."})
        return attrs


class FiniteFloatField(FloatField):
    """NaN and infinities become null."""

    def to_representation(self, value):
        if value is None:
            return None
        value = float(value)
        return value if math.isfinite(value) else None


class ReportRowSerializer(Serializer):
    key_fields = ()


class GluingRowSerializer(ReportRowSerializer):
    key_fields = ("index", "preset", "complex", "mass")

    index = IntegerField()
    seed = IntegerField()
    preset = CharField()
    complex = CharField()
    weights = CharField()
    connection = CharField()
    rank = IntegerField()
    field = CharField()
    mass = FiniteFloatField()
    lhs = FiniteFloatField()
    rhs = FiniteFloatField()
    residual = FiniteFloatField()
    kernel_f = IntegerField(allow_null=True)
    kernel_K = IntegerField(allow_null=True)
    kernel_R = IntegerField(allow_null=True)
    asserted = BooleanField()
    partition_residual = FiniteFloatField()
    critical_residual = FiniteFloatField()
    schur_residual = FiniteFloatField()
    q_factored_residual = FiniteFloatField()


class ConvergenceRowSerializer(ReportRowSerializer):
    key_fields = ("preset", "precision", "length", "n")

    preset = CharField()
    precision = CharField()
    length = FiniteFloatField()
    n = IntegerField()
    h = FiniteFloatField()
    log_det_f = FiniteFloatField()
    log_det_double = FiniteFloatField()
    ratio = FiniteFloatField()
    pipeline_ratio = FiniteFloatField()
    target = FiniteFloatField()
    abs_error = FiniteFloatField()
    closed_form = FiniteFloatField(allow_null=True)
    q_ratio = FiniteFloatField()
    q_ratio_global = FiniteFloatField()
    collar_condition = BooleanField()


class SpectrumRowSerializer(ReportRowSerializer):
    key_fields = ("complex", "operator", "degree", "index")

    complex = CharField()
    operator = CharField()
    degree = IntegerField()
    index = IntegerField()
    eigenvalue = FiniteFloatField()


class DeterminantRowSerializer(ReportRowSerializer):
    key_fields = ("complex", "operator", "mass")

    complex = CharField()
    operator = CharField()
    kernel_dim = IntegerField()
    log_det_prime = FiniteFloatField()
    mass = FiniteFloatField()
    log_det_massive = FiniteFloatField(allow_null=True)


class PartitionRowSerializer(ReportRowSerializer):
    key_fields = ("complex", "index", "mass")

    complex = CharField()
    index = IntegerField()
    mass = FiniteFloatField()
    log_z = FiniteFloatField()
    action = FiniteFloatField()
    log_det = FiniteFloatField()
    dimension = IntegerField()
    log_z_quadrature = FiniteFloatField(allow_null=True)
    residual = FiniteFloatField(allow_null=True)

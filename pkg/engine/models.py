from django.db import models


class ExperimentRun(models.Model):
    """One recorded command run (``--record``)."""

    command = models.CharField(max_length=50)
    config = models.JSONField(default=dict)
    exit_code = models.PositiveSmallIntegerField()
    row_count = models.PositiveIntegerField(default=0)
    # null when no row carries a finite residual
    worst_residual = models.FloatField(null=True, blank=True)
    created = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created"]

    def __str__(self):
        return f"{self.command} (exit {self.exit_code}, {self.row_count} rows)"

import logging

from django.db.models.signals import post_save
from django.dispatch import receiver

from .models import ExperimentRun

logger = logging.getLogger(__name__)


@receiver(post_save, sender=ExperimentRun)
def log_recorded_run(sender, instance, created, **kwargs):
    if created:
        logger.info("Recorded run %s: %s", instance.pk, instance)

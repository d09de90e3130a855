"""Access to the ``ENGINE`` settings dict.

The numerical modules import this instead of ``django.conf.settings`` so they
keep working when no settings module is configured (plain scripts, notebooks).
"""

from django.conf import settings

DEFAULTS = {
    "DEFAULT_TOLERANCE": 1e-8,
    "KERNEL_RTOL": 1e-10,
    "GRAM_RTOL": 1e-12,
    "FLATNESS_TOL": 1e-12,
    "WORKERS": 1,
    "DEFAULT_MASSES": [0.1, 1.0, 10.0],
}


def engine_setting(name):
    if name not in DEFAULTS:
        raise KeyError(f"Unknown engine setting {name!r}")
    if settings.configured:
        return getattr(settings, "ENGINE", {}).get(name, DEFAULTS[name])
    return DEFAULTS[name]

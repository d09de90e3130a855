"""
Django settings for the detgluing project.

The project has no web surface: Django provides the settings layer, the
management-command runner, the ORM for recorded experiment runs and the
test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
import dj_database_url
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv("SECRET_KEY", "fallback-secret-key")

DEBUG = os.getenv("DEBUG", "False") == "True"

ALLOWED_HOSTS = []


# Application definition
# Only what the commands and the run records need
INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "engine.apps.EngineConfig",
]


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    "default": dj_database_url.config(
        env="DATABASE_URL",
        default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}",
        conn_max_age=600,
    )
}

REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": [
        "rest_framework.renderers.JSONRenderer",
    ],
    "DEFAULT_PARSER_CLASSES": [
        "rest_framework.parsers.JSONParser",
    ],
    # NaN never reaches the renderer, report fields map it to null
    "STRICT_JSON": True,
    "COERCE_DECIMAL_TO_STRING": False,
}


def _float_list(value):
    return [float(item) for item in value.split(",") if item.strip()]


# Numerical engine
ENGINE = {
    "DEFAULT_TOLERANCE": float(os.getenv("ENGINE_TOLERANCE", "1e-8")),
    "KERNEL_RTOL": float(os.getenv("ENGINE_KERNEL_RTOL", "1e-10")),
    "GRAM_RTOL": float(os.getenv("ENGINE_GRAM_RTOL", "1e-12")),
    "FLATNESS_TOL": float(os.getenv("ENGINE_FLATNESS_TOL", "1e-12")),
    "WORKERS": int(os.getenv("ENGINE_WORKERS", "1")),
    "DEFAULT_MASSES": _float_list(os.getenv("ENGINE_MASSES", "0.1,1,10")),
}


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "engine": {
            "handlers": ["console"],
            "level": os.getenv("ENGINE_LOG_LEVEL", "WARNING"),
            "propagate": False,
        },
    },
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True


# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

"""
Django settings for kleingordon_backend project.

Generated by 'django-admin startproject' using Django 5.2.6.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

# Try to import decouple, if not available use default values
try:
    from decouple import config
except ImportError:
    # Fallback config function for testing environments
    def config(key, default=None, cast=None):
        value = os.environ.get(key, default)
        if cast and value is not None:
            if cast == bool:
                if isinstance(value, bool):
                    return value
                return str(value).lower() in ("true", "1", "yes", "on")
            else:
                return cast(value)
        return value


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config(
    "SECRET_KEY",
    default="django-insecure-3q!v7k2m#e0w^z8r6t@c4p1n9x$s5b_j%h&y+l(u)d=f-a*g",
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config("DEBUG", default=True, cast=bool)

ALLOWED_HOSTS = config(
    "ALLOWED_HOSTS",
    default="localhost,127.0.0.1",
    cast=lambda v: [s.strip() for s in str(v).split(",")],
)


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "wave_stability",
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

# Use PostgreSQL if available, fallback to SQLite for development
DB_ENGINE = config("DB_ENGINE", default="django.db.backends.sqlite3")
DB_NAME = config("DB_NAME", default=BASE_DIR / "db.sqlite3")
DB_USER = config("DB_USER", default="")
DB_PASSWORD = config("DB_PASSWORD", default="")
DB_HOST = config("DB_HOST", default="")
DB_PORT = config("DB_PORT", default="", cast=lambda v: int(v) if v else None)

if DB_ENGINE == "django.db.backends.postgresql":
    DATABASES = {
        "default": {
            "ENGINE": DB_ENGINE,
            "NAME": DB_NAME,
            "USER": DB_USER,
            "PASSWORD": DB_PASSWORD,
            "HOST": DB_HOST,
            "PORT": DB_PORT,
            "CONN_MAX_AGE": 600,
        }
    }
else:
    DATABASES = {
        "default": {
            "ENGINE": "django.db.backends.sqlite3",
            "NAME": BASE_DIR / "db.sqlite3",
        }
    }


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Numerical defaults for the wave stability toolkit.
# Every entry can be overridden by an environment variable prefixed with WAVE_.
WAVE_STABILITY = {
    "ODE_METHOD": config("WAVE_ODE_METHOD", default="DOP853"),
    "ODE_RTOL": config("WAVE_ODE_RTOL", default=1e-11, cast=float),
    "ODE_ATOL": config("WAVE_ODE_ATOL", default=1e-12, cast=float),
    "QUAD_TOL": config("WAVE_QUAD_TOL", default=1e-11, cast=float),
    "CRITICAL_GRID": config("WAVE_CRITICAL_GRID", default=1024, cast=int),
    "NEWTON_TOL": config("WAVE_NEWTON_TOL", default=1e-12, cast=float),
    "NEWTON_MAXITER": config("WAVE_NEWTON_MAXITER", default=50, cast=int),
    "SEPARATRIX_TOL": config("WAVE_SEPARATRIX_TOL", default=1e-10, cast=float),
    "SONIC_TOL": config("WAVE_SONIC_TOL", default=1e-10, cast=float),
    "ENERGY_RESIDUAL_TOL": config(
        "WAVE_ENERGY_RESIDUAL_TOL", default=1e-9, cast=float
    ),
    "CLOSURE_TOL": config("WAVE_CLOSURE_TOL", default=1e-8, cast=float),
    "PERIOD_MAX": config("WAVE_PERIOD_MAX", default=1e6, cast=float),
    "TE_RELATIVE_STEP": config("WAVE_TE_RELATIVE_STEP", default=1e-4, cast=float),
    "ABEL_ALARM": config("WAVE_ABEL_ALARM", default=1e-6, cast=float),
    "ABEL_TOL": config("WAVE_ABEL_TOL", default=1e-8, cast=float),
    "MAGNUS_STEP": config("WAVE_MAGNUS_STEP", default=1e-3, cast=float),
    "FAST_PATH_TOL": config("WAVE_FAST_PATH_TOL", default=1e-5, cast=float),
    "DEGENERATE_TOL": config("WAVE_DEGENERATE_TOL", default=1e-8, cast=float),
    "TANGENT_TOL": config("WAVE_TANGENT_TOL", default=1e-10, cast=float),
    "EVANS_TOL": config("WAVE_EVANS_TOL", default=1e-8, cast=float),
    "ROOT_SCAN_POINTS": config("WAVE_ROOT_SCAN_POINTS", default=400, cast=int),
    "ROOT_XTOL": config("WAVE_ROOT_XTOL", default=1e-10, cast=float),
    "HILL_SCAN_POINTS": config("WAVE_HILL_SCAN_POINTS", default=1200, cast=int),
    "NEAR_EQUILIBRIUM_OFFSET": config(
        "WAVE_NEAR_EQUILIBRIUM_OFFSET", default=1e-3, cast=float
    ),
    "SCAN_EXECUTOR": config("WAVE_SCAN_EXECUTOR", default="threads"),
    "SCAN_THREADS": config("WAVE_SCAN_THREADS", default=4, cast=int),
}

# Logging goes to stderr; stdout is reserved for JSON and CSV artifacts.
LOG_LEVEL = config("LOG_LEVEL", default="WARNING")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "plain",
        },
    },
    "loggers": {
        "wave_stability": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}

# Celery Configuration
CELERY_BROKER_URL = config("CELERY_BROKER_URL", default="redis://localhost:6379/0")
CELERY_RESULT_BACKEND = config(
    "CELERY_RESULT_BACKEND", default="redis://localhost:6379/0"
)
CELERY_ACCEPT_CONTENT = ["json"]
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_TIMEZONE = "UTC"
CELERY_TASK_ALWAYS_EAGER = config("CELERY_TASK_ALWAYS_EAGER", default=False, cast=bool)

"""
Django settings for riemann_hj project.

The project hosts a numerical library (apps manifolds, discretize, nonsmooth, hj)
and its command-line driver (app runs). Nothing is served over HTTP; the
database only backs the run ledger.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env file
load_dotenv(BASE_DIR / '.env')

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('SECRET_KEY', "django-insecure-riemann-hj-local-key-change-me")

DEBUG = os.environ.get('DEBUG', 'True').lower() == 'true'

ALLOWED_HOSTS = os.environ.get('ALLOWED_HOSTS', '').split(',') if os.environ.get('ALLOWED_HOSTS') else []


# Application definition

INSTALLED_APPS = [
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "rest_framework",
    "manifolds",
    "discretize",
    "nonsmooth",
    "hj",
    "runs",
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
]

ROOT_URLCONF = "riemann_hj.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]


# Database (run ledger only)

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / os.environ.get("RHJ_DB_NAME", "db.sqlite3"),
    }
}

LANGUAGE_CODE = "en"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Numerical defaults used by the management commands.
# Library functions carry their own keyword defaults; these only feed the CLI.
NUMERICS = {
    "TOL": float(os.environ.get("RHJ_TOL", "1e-9")),
    "SEED": int(os.environ.get("RHJ_SEED", "0")),
    "N": int(os.environ.get("RHJ_N", "1000")),
    "K": int(os.environ.get("RHJ_K", "8")),
    "MARGIN": float(os.environ.get("RHJ_MARGIN", "1e-6")),
    "SLACK_C": float(os.environ.get("RHJ_SLACK_C", "3.0")),
    "FAIL_FACTOR": float(os.environ.get("RHJ_FAIL_FACTOR", "10.0")),
    "OUTPUT_DIR": Path(os.environ.get("RHJ_OUTPUT_DIR", str(BASE_DIR / "runs_output"))),
    "FORMAT": os.environ.get("RHJ_FORMAT", "csv"),
}

REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
            'level': os.environ.get('RHJ_CONSOLE_LOG_LEVEL', 'WARNING'),
        },
        'file': {
            'class': 'logging.FileHandler',
            'filename': os.environ.get('RHJ_LOG_FILE', str(BASE_DIR / 'riemann_hj.log')),
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
        },
        'manifolds': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
        'discretize': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
        'nonsmooth': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
        'hj': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
        'runs': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}

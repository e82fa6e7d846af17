"""
Django settings for the ed_solver project.

The project has no web surface: Django provides the management-command CLI,
the RunSummary table and the test runner. Solver parameters are not settings,
they come from config files and presets (core/libs/experiment_config.py).
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-ed-solver-local-only')

DEBUG = os.getenv('DJANGO_DEBUG', 'false').lower() in ('1', 'true', 'yes')

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'core',  # solver libs, RunSummary model and management commands
]


# Database

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('ED_DB_PATH', BASE_DIR / 'db.sqlite3'),
    }
}


# Solver artifacts

ED_OUTPUT_DIR = Path(os.getenv('ED_OUTPUT_DIR', BASE_DIR / 'runs'))
ED_RECORD_RUNS = os.getenv('ED_RECORD_RUNS', 'false').lower() in ('1', 'true', 'yes')
ED_LOG_LEVEL = os.getenv('ED_LOG_LEVEL', 'INFO').upper()
ED_LOG_FORMAT = os.getenv('ED_LOG_FORMAT', 'simple')
if ED_LOG_FORMAT not in ('simple', 'verbose', 'json'):
    ED_LOG_FORMAT = 'simple'


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname}: {message}',
            'style': '{',
        },
        'json': {
            '()': 'pythonjsonlogger.jsonlogger.JsonFormatter',
            'format': '%(levelname)s %(asctime)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': ED_LOG_FORMAT,
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'core': {
            'handlers': ['console'],
            'level': ED_LOG_LEVEL,
            'propagate': False,
        },
        'django': {
            'handlers': ['console'],
            'level': 'ERROR',
            'propagate': False,
        },
    },
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Default primary key field type

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

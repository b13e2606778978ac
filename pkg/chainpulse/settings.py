"""
Django settings for the chainpulse project.

chainpulse has no web surface: Django provides the settings layer, the
management-command CLI and the test runner. Every tunable is read from the
environment (or a .env file) through python-decouple.
"""
from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='chainpulse-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'core.apps.CoreConfig',
    'ingest.apps.IngestConfig',
    'simulate.apps.SimulateConfig',
    'explore.apps.ExploreConfig',
    'forecast.apps.ForecastConfig',
    'classify.apps.ClassifyConfig',
    'cli.apps.CliConfig',
]

# Flat files are the only persistence; the test runner still expects a
# database alias, so an in-memory sqlite one is declared.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

LOG_LEVEL = config('CHAINPULSE_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in ('core', 'ingest', 'simulate', 'explore', 'forecast', 'classify', 'cli')
    },
}


# Bitcoin node (JSON-RPC) used by `ingest --collect`

RPC_URL = config('CHAINPULSE_RPC_URL', default='http://127.0.0.1:8332')
RPC_USER = config('CHAINPULSE_RPC_USER', default='')
RPC_PASS = config('CHAINPULSE_RPC_PASS', default='')
RPC_POLL_INTERVAL = config('CHAINPULSE_RPC_POLL_INTERVAL', default=1.0, cast=float)
RPC_TIMEOUT = config('CHAINPULSE_RPC_TIMEOUT', default=30.0, cast=float)
RPC_MAX_RETRIES = config('CHAINPULSE_RPC_MAX_RETRIES', default=3, cast=int)
RPC_BACKOFF = config('CHAINPULSE_RPC_BACKOFF', default=0.5, cast=float)


# Pipeline

DEFAULT_SEED = config('CHAINPULSE_DEFAULT_SEED', default=42, cast=int)
WORKERS = config('CHAINPULSE_WORKERS', default=4, cast=int)

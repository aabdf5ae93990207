from django.core.exceptions import ImproperlyConfigured

from os import environ
from pathlib import Path
from configparser import ConfigParser

BASE_DIR = Path(__file__).resolve().parent.parent
CONFIG_PATH = BASE_DIR / 'config' / environ.get('LAB_CONF', 'config_default.ini')

if not CONFIG_PATH.is_file():
    raise ImproperlyConfigured(f'Config file with specified path not found: {CONFIG_PATH}')

config = ConfigParser()
config.read(CONFIG_PATH)

# General

SECRET_KEY = config.get('django', 'secret_key')

DEBUG = config.get('django', 'debug', fallback='true') == 'true'

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',

    # own apps

    'core',
    'cones',
    'spacetime',
    'curves',
    'reach',
    'timesep',
    'stable',
    'certify',
    'scenarios',
]

# No database: all results are files

DATABASES = {}

REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'UNAUTHENTICATED_USER': None,
}

# Logging configuration

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,

    'formatters': {
        'formatter': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },

    'handlers': {
        'console_handler': {
            'level': 'DEBUG' if DEBUG else 'INFO',
            'class': 'logging.StreamHandler',
            'formatter': 'formatter',
        },
    },

    'root': {
        'handlers': ['console_handler'],
        'level': 'WARNING',
    },
}

if not DEBUG:
    LOGGING['handlers']['file_handler'] = {
        'level': 'INFO',
        'class': 'logging.handlers.RotatingFileHandler',
        'filename': 'lorentzlab.log',
        'formatter': 'formatter',
        'maxBytes': 10485760,  # 10 MB
    }
    LOGGING['root']['handlers'] = ['file_handler']

# Fixtures

FIXTURE_DIRS = BASE_DIR / 'fixtures',

SCENARIO_PACK = BASE_DIR / 'fixtures' / 'scenarios.yaml'

TIME_ZONE = 'UTC'

USE_TZ = True

# Cones

CONE_MEMBERSHIP_TOLERANCE = config.getfloat('cones', 'membership_tolerance', fallback=1e-6)
CONE_LINE_TOLERANCE = config.getfloat('cones', 'line_tolerance', fallback=1e-6)
CONE_CIRCLE_SAMPLES = config.getint('cones', 'circle_samples', fallback=720)
CONE_SPHERE_SAMPLES = config.getint('cones', 'sphere_samples', fallback=2562)

# Spacetime

NULL_TOLERANCE = config.getfloat('spacetime', 'null_tolerance', fallback=1e-9)
BISECTION_STEPS = config.getint('spacetime', 'bisection_steps', fallback=64)
SIGNATURE_SAMPLES = config.getint('spacetime', 'signature_samples', fallback=1000)
E1_CHECK_RESOLUTION = config.getint('spacetime', 'e1_check_resolution', fallback=64)

# Curves

CURVE_SUBDIV = config.getint('curves', 'subdiv', fallback=8)
FD_STEP = config.getfloat('curves', 'fd_step', fallback=1e-4)
WALK_INTERIOR_SHARE = config.getfloat('curves', 'walk_interior_share', fallback=0.7)

# Reach

REACH_RESOLUTION = config.getint('reach', 'resolution', fallback=32)
REACH_WINDOW = config.getint('reach', 'window', fallback=4)
REACH_EPS_T = config.getfloat('reach', 'eps_t', fallback=0.05)
REACH_SUBSTEPS = config.getint('reach', 'substeps', fallback=4)
REACH_STENCIL_RADIUS = config.getint('reach', 'stencil_radius', fallback=2)
REACH_TIME_SAMPLES = config.getint('reach', 'time_samples', fallback=8)
REACH_SOURCE_RESOLUTION = config.getint('reach', 'source_resolution', fallback=2)
REACH_DISTANCE_RADIUS = config.getint('reach', 'distance_radius', fallback=3)

# Time separation

TIMESEP_SEGMENTS = config.getint('timesep', 'segments', fallback=8)
TIMESEP_RESTARTS = config.getint('timesep', 'restarts', fallback=16)
TIMESEP_MAX_ITERATIONS = config.getint('timesep', 'max_iterations', fallback=400)
TIMESEP_ORACLE_RADIUS = config.getint('timesep', 'oracle_radius', fallback=4)
TIMESEP_REACH_RESOLUTION = config.getint('timesep', 'reach_resolution', fallback=16)

# Stable norm and stable time cone

STABLE_NORM_RESOLUTION = config.getint('stable', 'norm_resolution', fallback=8)
STABLE_NORM_STEPS = config.getint('stable', 'norm_steps', fallback=8)
STABLE_MAX_NODES = config.getint('stable', 'max_nodes', fallback=2000000)
STABLE_NORM_RADIUS = {
    2: config.getint('stable', 'norm_radius_2d', fallback=4),
    3: config.getint('stable', 'norm_radius_3d', fallback=2),
}
STABLE_BUDGET = {
    'geodesics': config.getint('stable', 'geodesics', fallback=512),
    'geodesic_length': config.getfloat('stable', 'geodesic_length', fallback=200.0),
    'geodesic_dt': config.getfloat('stable', 'geodesic_dt', fallback=0.05),
    'walks': config.getint('stable', 'walks', fallback=512),
    'walk_steps': config.getint('stable', 'walk_steps', fallback=10000),
    'walk_step_len': config.getfloat('stable', 'walk_step_len', fallback=0.05),
    'min_length': config.getfloat('stable', 'min_length', fallback=100.0),
    'frak_radius': config.getint('stable', 'frak_radius', fallback=0),
    'distance_samples': config.getint('stable', 'distance_samples', fallback=16),
}

# Certification

TRANSVERSAL_MARGIN = config.getfloat('certify', 'transversal_margin', fallback=1e-3)
FORM_RESOLUTION = config.getint('certify', 'form_resolution', fallback=16)
LIPSCHITZ_SEGMENTS = config.getint('certify', 'lipschitz_segments', fallback=8)
LIPSCHITZ_RESTARTS = config.getint('certify', 'lipschitz_restarts', fallback=8)
FOURIER_MODES = config.getint('certify', 'fourier_modes', fallback=0)

# Scenarios

SCENARIO_OUTPUT_DIR = Path(config.get('scenarios', 'output_dir', fallback='reports'))

# Celery

CELERY_BROKER_URL = config.get('celery', 'broker', fallback='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = config.get('celery', 'backend', fallback=CELERY_BROKER_URL)
CELERY_TASK_ALWAYS_EAGER = config.get('celery', 'always_eager', fallback='true') == 'true'
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_WORKER_CONCURRENCY = int(environ['LAB_THREADS']) if environ.get('LAB_THREADS') else None

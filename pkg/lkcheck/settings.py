"""
Django settings for the lkcheck project.

The project has no database and no web surface: Django provides the
management-command CLI, the settings layer and the test runner.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/stable/ref/settings/
"""

import os

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SECRET_KEY = 'lkcheck-has-no-sessions'

DEBUG = False

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'lkspaces',
]

DATABASES = {}

# Internationalization
# Reports never go through localization: '.' decimal point everywhere

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Quadrature defaults, overridable per run through the config file
LK_QUAD = {
    'rel_tol': 1e-9,
    'max_panels': 4000,
    'log_domain_bounds': (-40.0, 40.0),
    'sup_refine_iters': 60,
    'cell_width': 0.5,
    'gauss_order': 10,
}

# Verdicts of the verification harness
LK_PASS_POLICY = {
    'c_max': 1e3,
    'slope_max': 0.05,
    'exact_tol': 1e-8,
    'floor_tol': 1e-9,
}

# The six slowly varying weights the sweeps draw from
LK_SV_CATALOG = [
    '1',
    'lpow(1)',
    'lpow(-1)',
    'lpow(-2)',
    'iterlog(2,-1)',
    'explog(0.5)',
]

LK_DEFAULT_SEED = 1
LK_DEFAULT_JOBS = 1
LK_OUTPUT_DIR = os.path.join(BASE_DIR, 'reports')

# Override from local settings
try:
    from .local_settings import *
except ImportError:
    pass

import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "lkcheck.settings")
django.setup()

#!/usr/bin/env python3
import os
import sys

if __name__ == "__main__":
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "lkcheck.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django, which lkcheck uses for its command line "
            "and settings. Install the packages from requirements.txt first."
        ) from exc
    execute_from_command_line(sys.argv)

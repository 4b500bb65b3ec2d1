"""Production settings for the «Кубит Верификатор» project."""
from __future__ import annotations

import os

from . import base as base_settings

globals().update({name: getattr(base_settings, name) for name in base_settings.__all__})

LOGGING = base_settings.LOGGING
SIMULATOR_LOGGERS = base_settings.SIMULATOR_LOGGERS

DEBUG = False

if "DJANGO_SECRET_KEY" not in os.environ:
    raise RuntimeError(
        "DJANGO_SECRET_KEY must be configured for the production environment."
    )

# Logging configuration with rotating file handlers for production deployments.
LOGGING["loggers"]["django"]["handlers"] = ["console", "app_file"]
for name in SIMULATOR_LOGGERS:
    LOGGING["loggers"][name]["handlers"] = ["console", "app_file"]
LOGGING["root"]["handlers"] = ["console", "app_file"]

from __future__ import annotations

from django.apps import AppConfig


class LedgerConfig(AppConfig):
    """Runs, attack sweeps and distinguisher reports of the simulator."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "ledger"
    verbose_name = "Журнал запусков"

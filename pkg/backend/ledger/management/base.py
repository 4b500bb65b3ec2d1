"""Shared plumbing of the ledger commands: report output and error translation."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from django.core.management import BaseCommand, CommandError, CommandParser, color_style

from adversary.exceptions import AttackError
from composable.exceptions import CompositionError
from protocols.exceptions import ProtocolError
from quantum.conf import simulation_limits
from quantum.exceptions import QuantumError

from ..config import RunConfig, RunConfigError, load_run_config
from ..services import EXIT_ERROR

logger = logging.getLogger("ledger.commands")

SIMULATION_ERRORS = (RunConfigError, QuantumError, CompositionError, ProtocolError, AttackError)


def dump_report(report: Any) -> str:
    return json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True)


def report_path(path: str) -> Path:
    """Relative report paths are placed under ``QUANTUM_SIMULATION["reports_dir"]``."""

    output_file = Path(path)
    reports_dir = simulation_limits().reports_dir
    if not output_file.is_absolute() and reports_dir is not None:
        output_file = reports_dir / output_file
    output_file.parent.mkdir(parents=True, exist_ok=True)
    return output_file


class ReportCommand(BaseCommand):
    """Base for commands that print a console summary and optionally a JSON report."""

    def add_report_arguments(self, parser: CommandParser) -> None:  # pragma: no cover - CLI glue
        parser.add_argument(
            "--out",
            dest="out",
            help="Путь к файлу для сохранения отчёта.",
        )
        parser.add_argument(
            "--json",
            dest="as_json",
            action="store_true",
            help="Вывести отчёт в формате JSON вместо краткой сводки.",
        )
        parser.add_argument(
            "--no-record",
            dest="no_record",
            action="store_true",
            help="Не сохранять результат в журнал запусков.",
        )

    def load_config(self, path: str | None, *, required: bool = True) -> RunConfig | None:
        if not path:
            if required:
                raise CommandError("Укажите файл конфигурации (--config).", returncode=EXIT_ERROR)
            return None
        try:
            return load_run_config(path)
        except RunConfigError as exc:
            logger.error("Ошибка конфигурации %s: %s", path, exc)
            raise CommandError(f"Ошибка конфигурации: {exc}", returncode=EXIT_ERROR) from exc

    def fail(self, exc: Exception) -> CommandError:
        logger.error("Команда завершилась ошибкой: %s", exc)
        return CommandError(str(exc), returncode=EXIT_ERROR)

    def write_report(self, report: Any, path: str | None) -> None:
        if not path:
            return
        output_file = report_path(path)
        output_file.write_text(dump_report(report), encoding="utf-8")
        self.stdout.write(color_style().NOTICE(f"JSON-отчёт сохранён в {output_file.resolve()}"))

    def emit_json(self, report: Any) -> None:
        self.stdout.write(dump_report(report))

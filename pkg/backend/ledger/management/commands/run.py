"""Run one protocol from a configuration file."""

from __future__ import annotations

from typing import Any

from django.core.management import CommandError, CommandParser, color_style

from ledger.management.base import SIMULATION_ERRORS, ReportCommand
from ledger.models import ProtocolRun
from ledger.services import EXIT_ABORT, execute_run, record_run


class Command(ReportCommand):
    """Execute a protocol and report whether the client accepted."""

    help = (
        "Запустить протокол по JSON-конфигурации: выборкой с заданным зерном или полным перебором ветвей. "
        "Код завершения 0 — клиент принял, 3 — отказ (⊥), 1 — ошибка."
    )

    def add_arguments(self, parser: CommandParser) -> None:  # pragma: no cover - CLI glue
        parser.add_argument(
            "--config",
            dest="config",
            required=True,
            help="Путь к JSON-файлу конфигурации запуска.",
        )
        parser.add_argument(
            "--seed",
            dest="seed",
            type=int,
            help="Зерно генератора (перекрывает значение из конфигурации).",
        )
        parser.add_argument(
            "--mode",
            dest="mode",
            choices=ProtocolRun.Mode.values,
            help="Режим: sample — одна ветвь, enumerate — точный перебор.",
        )
        self.add_report_arguments(parser)

    def handle(self, *args: Any, **options: Any) -> None:
        style = color_style()
        config = self.load_config(options["config"])
        try:
            config = config.with_overrides(mode=options.get("mode"), seed=options.get("seed"))
            outcome = execute_run(config)
        except SIMULATION_ERRORS as exc:
            raise self.fail(exc) from exc

        report = outcome.as_dict()
        if not options.get("no_record"):
            report["run_id"] = record_run(outcome).pk
        self.write_report(outcome.as_dict(), options.get("out"))

        if options.get("as_json"):
            self.emit_json(report)
        else:
            self.render_console(report, style)

        if not outcome.accepted:
            raise CommandError("Клиент отказал: выход ⊥.", returncode=EXIT_ABORT)

    # --- helpers -----------------------------------------------------------------

    def render_console(self, report: dict[str, Any], style) -> None:
        self.stdout.write(style.MIGRATE_HEADING(f"Протокол {report['protocol']} ({report['mode']})"))
        if report["seed"] is not None:
            self.stdout.write(f"Зерно: {report['seed']}")
        if report["branches"] is not None:
            self.stdout.write(f"Ветвей: {report['branches']}, вероятность отказа: {report['abort_probability']:.3e}")
        if report["fingerprint"]:
            self.stdout.write(f"Отпечаток выхода: {report['fingerprint']}")
        verdict = style.SUCCESS("принято") if report["accepted"] else style.ERROR("отказ (⊥)")
        self.stdout.write(f"Результат: {verdict}")

"""Compare a real protocol with an ideal resource."""

from __future__ import annotations

from typing import Any

from django.core.management import CommandError, CommandParser, color_style

from ledger.management.base import SIMULATION_ERRORS, ReportCommand
from ledger.services import EXIT_ERROR, SIMULATORS, distinguish, record_distinguisher


class Command(ReportCommand):
    help = (
        "Вычислить точное преимущество различителя ε между реальной системой и идеальным ресурсом "
        "с симулятором. Вердикт PASS при ε не больше допуска."
    )

    def add_arguments(self, parser: CommandParser) -> None:  # pragma: no cover - CLI glue
        parser.add_argument(
            "--config",
            "--real",
            dest="config",
            required=True,
            help="Конфигурация реальной системы (протокол и состав участников).",
        )
        parser.add_argument(
            "--ideal",
            dest="ideal",
            help="Конфигурация идеальной стороны; по умолчанию та же, что и реальной.",
        )
        parser.add_argument(
            "--simulator",
            dest="simulator",
            choices=SIMULATORS,
            default="none",
            help="Симулятор на интерфейсах нечестных участников: sigma1, sigma2 или none.",
        )
        parser.add_argument(
            "--strict",
            dest="strict",
            action="store_true",
            help="Завершиться с кодом 1, если вердикт FAIL.",
        )
        self.add_report_arguments(parser)

    def handle(self, *args: Any, **options: Any) -> None:
        style = color_style()
        real = self.load_config(options["config"])
        ideal = self.load_config(options.get("ideal"), required=False) or real
        simulator = options.get("simulator") or "none"
        try:
            report, real_name, ideal_name = distinguish(real, ideal, simulator)
        except SIMULATION_ERRORS as exc:
            raise self.fail(exc) from exc

        payload = {"real": real_name, "ideal": ideal_name, "simulator": simulator, **report.as_dict()}
        if not options.get("no_record"):
            payload["report_id"] = record_distinguisher(report, real_name, ideal_name, simulator).pk
        self.write_report(payload, options.get("out"))

        if options.get("as_json"):
            self.emit_json(payload)
        else:
            verdict = style.SUCCESS("PASS") if report.verdict.value == "PASS" else style.ERROR("FAIL")
            self.stdout.write(f"{real_name} против {ideal_name} (симулятор: {simulator})")
            self.stdout.write(f"ε = {report.epsilon:.3e}, допуск {report.tolerance:.0e}: {verdict}")

        if options.get("strict") and report.verdict.value != "PASS":
            raise CommandError(f"Системы различимы: ε = {report.epsilon:.3e}.", returncode=EXIT_ERROR)

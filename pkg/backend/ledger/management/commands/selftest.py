"""Quick acceptance subset of the simulator."""

from __future__ import annotations

from typing import Any

from django.core.management import BaseCommand, CommandError, CommandParser, color_style

from ledger.management.base import dump_report
from ledger.models import Verdict
from ledger.services import EXIT_ERROR, SELFTEST_CHECKS, run_selftest


class Command(BaseCommand):
    help = (
        "Быстрая самопроверка: стабилизаторы графовых состояний, честный приём тестов, "
        "корректность RSP, равенство с симулятором 1 и проверка ловушками на одной вершине."
    )

    def add_arguments(self, parser: CommandParser) -> None:  # pragma: no cover - CLI glue
        parser.add_argument(
            "--only",
            dest="only",
            action="append",
            choices=[key for key, _, _ in SELFTEST_CHECKS],
            help="Выполнить только указанную проверку; можно указать несколько раз.",
        )
        parser.add_argument(
            "--json",
            dest="as_json",
            action="store_true",
            help="Вывести результаты в формате JSON.",
        )

    def handle(self, *args: Any, **options: Any) -> None:
        style = color_style()
        results = run_selftest(options.get("only"))
        if options.get("as_json"):
            self.stdout.write(dump_report(results))
        else:
            for result in results:
                verdict = style.SUCCESS("PASS") if result["verdict"] == Verdict.PASS else style.ERROR("FAIL")
                self.stdout.write(f"{result['title']}: {verdict}")
        failed = [result["check"] for result in results if result["verdict"] != Verdict.PASS]
        if failed:
            raise CommandError(f"Не пройдены проверки: {', '.join(failed)}.", returncode=EXIT_ERROR)

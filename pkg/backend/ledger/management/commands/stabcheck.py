"""Stabilizer-test suite on a graph from a file."""

from __future__ import annotations

from typing import Any

from django.core.management import CommandError, CommandParser, color_style

from ledger.config import RunConfigError, parse_json
from ledger.management.base import SIMULATION_ERRORS, ReportCommand
from ledger.models import Verdict
from ledger.services import EXIT_ERROR, check_stabilizers
from quantum.exceptions import QuantumError
from quantum.graphstate import Graph


class Command(ReportCommand):
    help = (
        "Проверить тесты стабилизаторов на графе: честный сервер принимается в обоих режимах, "
        "а подготовка-отправка и приём-измерение с симулятором σS одинаково обнаруживают атаки веса 1."
    )

    def add_arguments(self, parser: CommandParser) -> None:  # pragma: no cover - CLI glue
        parser.add_argument(
            "graph",
            help="Путь к JSON-файлу графа вида {\"vertices\": [...], \"edges\": [[a, b], ...]}.",
        )
        parser.add_argument(
            "--generators",
            dest="generators",
            action="store_true",
            help="Проверять только образующие (обязательно для графов больше 6 вершин).",
        )
        parser.add_argument(
            "--skip-attacks",
            dest="skip_attacks",
            action="store_true",
            help="Не сравнивать обнаружение атак, только честный приём.",
        )
        parser.add_argument(
            "--out",
            dest="out",
            help="Путь к JSON-файлу для сохранения отчёта.",
        )
        parser.add_argument(
            "--json",
            dest="as_json",
            action="store_true",
            help="Вывести отчёт в формате JSON.",
        )

    def handle(self, *args: Any, **options: Any) -> None:
        style = color_style()
        try:
            with open(options["graph"], encoding="utf-8") as handle:
                graph = Graph.from_dict(parse_json(handle.read()))
        except OSError as exc:
            raise CommandError(f"Не удалось прочитать файл графа: {exc}", returncode=EXIT_ERROR) from exc
        except (RunConfigError, QuantumError) as exc:
            raise self.fail(exc) from exc
        try:
            report = check_stabilizers(
                graph,
                generators_only=bool(options.get("generators")),
                with_attacks=not options.get("skip_attacks"),
            )
        except SIMULATION_ERRORS as exc:
            raise self.fail(exc) from exc

        self.write_report(report, options.get("out"))
        if options.get("as_json"):
            self.emit_json(report)
        else:
            self.render_console(report, style)

        if report["verdict"] != Verdict.PASS:
            raise CommandError("Проверка стабилизаторов не пройдена.", returncode=EXIT_ERROR)

    # --- helpers -----------------------------------------------------------------

    def render_console(self, report: dict[str, Any], style) -> None:
        graph = report["graph"]
        self.stdout.write(
            style.MIGRATE_HEADING(f"Граф: {len(graph['vertices'])} вершин, {len(graph['edges'])} рёбер")
        )
        for element in report["elements"]:
            verdict = style.SUCCESS("PASS") if element["verdict"] == Verdict.PASS else style.ERROR("FAIL")
            self.stdout.write(f"  {element['element']}: {verdict}")
        coloring = report["two_coloring"]
        if coloring["two_colorable"]:
            self.stdout.write("Граф двудольный: тесты протокола 3 применимы.")
        else:
            self.stdout.write(
                style.WARNING(
                    "Граф не двудольный (нечётный цикл "
                    f"{' – '.join(coloring['odd_cycle'])}): протокол 3 неприменим, проверены только общие тесты."
                )
            )
        passed = sum(element["verdict"] == Verdict.PASS for element in report["elements"])
        self.stdout.write(f"Итого: {passed} из {len(report['elements'])} PASS")

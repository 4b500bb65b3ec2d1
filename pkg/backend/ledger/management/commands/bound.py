"""Sweep Pauli attacks against trap-based verification and compare with the 8/9 bound."""

from __future__ import annotations

from typing import Any

from django.core.management import CommandError, CommandParser, color_style

from adversary.attacks import AttackStage
from ledger.management.base import SIMULATION_ERRORS, ReportCommand, report_path
from ledger.models import Verdict
from ledger.services import (
    EXIT_ERROR,
    bound_instance,
    export_sweep_to_csv,
    export_sweep_to_excel,
    record_sweep,
    run_sweep,
    sweep_summary_line,
    sweep_verdict,
)
from quantum.conf import simulation_limits


class Command(ReportCommand):
    help = (
        "Перебрать атаки Паули класса E ограниченного веса против проверки ловушками, "
        "вычислить точные p_accept и p_fail и сравнить их с оценкой 8/9."
    )

    def add_arguments(self, parser: CommandParser) -> None:  # pragma: no cover - CLI glue
        parser.add_argument(
            "--config",
            dest="config",
            help="JSON с базовым графом-путём (graph, graph_file) или углами (angles); по умолчанию одно ребро.",
        )
        parser.add_argument(
            "--weight",
            dest="weight",
            type=int,
            help="Максимальный вес атаки; 0 — только тождественная атака.",
        )
        parser.add_argument(
            "--stage",
            dest="stages",
            action="append",
            choices=[stage.value for stage in AttackStage],
            help="Стадия атаки; можно указать несколько раз (по умолчанию before_entangling).",
        )
        parser.add_argument(
            "--with-input",
            dest="with_input",
            action="store_true",
            help="Добавить квантовый вход на первую вершину базового графа.",
        )
        parser.add_argument(
            "--xlsx",
            dest="xlsx",
            help="Путь к XLSX-файлу со строками перебора.",
        )
        self.add_report_arguments(parser)

    def handle(self, *args: Any, **options: Any) -> None:
        style = color_style()
        config = self.load_config(options.get("config"), required=False)
        weight = options.get("weight")
        if weight is None:
            weight = simulation_limits().max_sweep_weight
        if weight < 0:
            raise CommandError("Вес атаки не может быть отрицательным.", returncode=EXIT_ERROR)
        stages = options.get("stages") or [AttackStage.BEFORE_ENTANGLING.value]
        try:
            instance = bound_instance(config, bool(options.get("with_input")))
            result = run_sweep(instance, weight, stages)
        except SIMULATION_ERRORS as exc:
            raise self.fail(exc) from exc

        out = options.get("out")
        if out:
            path = report_path(out)
            with path.open("w", encoding="utf-8", newline="") as handle:
                export_sweep_to_csv(result, handle)
            self.stdout.write(style.NOTICE(f"CSV-отчёт сохранён в {path.resolve()}"))
        if options.get("xlsx"):
            path = report_path(options["xlsx"])
            with path.open("wb") as handle:
                export_sweep_to_excel(result, handle)
            self.stdout.write(style.NOTICE(f"XLSX-отчёт сохранён в {path.resolve()}"))

        summary = {**result.summary(), "verdict": sweep_verdict(result), "with_input": instance.quantum_input}
        if not options.get("no_record"):
            summary["sweep_id"] = record_sweep(instance, result).pk

        if options.get("as_json"):
            self.emit_json(summary)
        else:
            line = sweep_summary_line(result)
            self.stdout.write(f"Атак: {len(result.rows)}, вес ≤ {result.max_weight}")
            self.stdout.write(style.SUCCESS(line) if summary["verdict"] == Verdict.PASS else style.ERROR(line))

        if summary["verdict"] != Verdict.PASS:
            raise CommandError("Оценка 8/9 нарушена.", returncode=EXIT_ERROR)

"""Persistent records of protocol runs, attack sweeps and distinguisher reports."""
from __future__ import annotations

from typing import Iterable

from django.db import models
from django.utils.translation import gettext_lazy as _


class Verdict(models.TextChoices):
    PASS = "PASS", _("Пройдено")
    FAIL = "FAIL", _("Не пройдено")


class ProtocolRun(models.Model):
    """One execution of a protocol from a run configuration."""

    class Protocol(models.TextChoices):
        RSP = "rsp", _("Удалённое приготовление состояния")
        PROTOCOL1 = "protocol1", _("Проверка ловушками (RM)")
        PROTOCOL3 = "protocol3", _("Проверка стабилизаторами (PS)")
        UBQC = "ubqc", _("Слепое делегирование (PS)")

    class Mode(models.TextChoices):
        SAMPLE = "sample", _("Выборка")
        ENUMERATE = "enumerate", _("Полный перебор")

    protocol = models.CharField(
        _("Протокол"),
        max_length=20,
        choices=Protocol.choices,
    )
    mode = models.CharField(
        _("Режим"),
        max_length=20,
        choices=Mode.choices,
        default=Mode.ENUMERATE,
    )
    # decimal string: SQLite keeps integers only up to 2^63 - 1
    seed = models.CharField(
        _("Зерно"),
        max_length=20,
        blank=True,
        help_text=_("64-битное зерно генератора в десятичной записи; обязательно в режиме выборки."),
    )
    accepted = models.BooleanField(
        _("Принято"),
        default=False,
        help_text=_("Клиент принял результат (для перебора: вероятность отказа равна нулю)."),
    )
    exit_code = models.PositiveSmallIntegerField(_("Код завершения"), default=0)
    abort_probability = models.FloatField(
        _("Вероятность отказа"),
        null=True,
        blank=True,
    )
    fingerprint = models.CharField(
        _("Отпечаток выхода"),
        max_length=64,
        blank=True,
    )
    outputs = models.JSONField(_("Классические выходы"), default=dict, blank=True)
    transcript = models.JSONField(_("Протокол сообщений"), default=list, blank=True)
    config = models.JSONField(_("Конфигурация"), default=dict, blank=True)
    created_at = models.DateTimeField(_("Создан"), auto_now_add=True)
    updated_at = models.DateTimeField(_("Обновлён"), auto_now=True)

    class Meta:
        verbose_name = _("Запуск протокола")
        verbose_name_plural = _("Запуски протоколов")
        ordering = ["-created_at", "-id"]

    def __str__(self) -> str:  # pragma: no cover - display helper
        return f"{self.get_protocol_display()} #{self.pk}"

    @property
    def seed_value(self) -> int | None:
        return int(self.seed) if self.seed else None


class AttackSweep(models.Model):
    """Exhaustive sweep of Pauli attacks against trap-based verification."""

    base_graph = models.JSONField(_("Базовый граф"), default=dict)
    with_input = models.BooleanField(_("С квантовым входом"), default=False)
    max_weight = models.PositiveSmallIntegerField(_("Максимальный вес"))
    attacks = models.PositiveIntegerField(_("Число атак"), default=0)
    max_p_fail = models.FloatField(_("Максимум p_fail"), default=0.0)
    max_bound = models.FloatField(_("Максимум оценки"), default=0.0)
    worst_attack = models.CharField(_("Худшая атака"), max_length=255, blank=True)
    violations = models.PositiveIntegerField(_("Нарушения оценки"), default=0)
    verdict = models.CharField(
        _("Вердикт"),
        max_length=4,
        choices=Verdict.choices,
        default=Verdict.PASS,
    )
    created_at = models.DateTimeField(_("Создан"), auto_now_add=True)

    class Meta:
        verbose_name = _("Перебор атак")
        verbose_name_plural = _("Переборы атак")
        ordering = ["-created_at", "-id"]

    def __str__(self) -> str:  # pragma: no cover - display helper
        return f"Перебор #{self.pk} (вес ≤ {self.max_weight})"

    def add_rows(self, rows: Iterable[dict]) -> list["AttackSweepRow"]:
        """Store report rows as produced by ``SweepResult.as_records``."""

        objects = [
            AttackSweepRow(
                sweep=self,
                order=index,
                attack=row["attack"],
                stage=row["stage"],
                p_accept=row["p_accept"],
                p_fail=row["p_fail"],
                bound=row["bound"],
                in_e=row["in_e"],
            )
            for index, row in enumerate(rows, start=1)
        ]
        return AttackSweepRow.objects.bulk_create(objects)


class AttackSweepRow(models.Model):
    sweep = models.ForeignKey(
        AttackSweep,
        on_delete=models.CASCADE,
        related_name="rows",
        verbose_name=_("Перебор"),
    )
    order = models.PositiveIntegerField(_("Порядок"))
    attack = models.CharField(_("Атака"), max_length=255)
    stage = models.CharField(_("Стадия"), max_length=32)
    p_accept = models.FloatField(_("p_accept"))
    p_fail = models.FloatField(_("p_fail"))
    bound = models.FloatField(_("Оценка"))
    in_e = models.BooleanField(_("Класс E"), default=True)

    class Meta:
        verbose_name = _("Строка перебора")
        verbose_name_plural = _("Строки перебора")
        ordering = ["sweep", "order"]
        constraints = [
            models.UniqueConstraint(fields=["sweep", "order"], name="ledger_sweep_row_order_unique"),
        ]

    def __str__(self) -> str:  # pragma: no cover - display helper
        return f"{self.attack} [{self.stage}]"


class DistinguisherReport(models.Model):
    """Distinguishing advantage between a real system and an ideal one."""

    real_name = models.CharField(_("Реальная система"), max_length=255)
    ideal_name = models.CharField(_("Идеальная система"), max_length=255)
    simulator = models.CharField(_("Симулятор"), max_length=32, blank=True)
    epsilon = models.FloatField(_("ε"))
    tolerance = models.FloatField(_("Допуск"))
    verdict = models.CharField(_("Вердикт"), max_length=4, choices=Verdict.choices)
    worst_assignment = models.JSONField(_("Худший вход"), null=True, blank=True)
    created_at = models.DateTimeField(_("Создан"), auto_now_add=True)

    class Meta:
        verbose_name = _("Отчёт о различимости")
        verbose_name_plural = _("Отчёты о различимости")
        ordering = ["-created_at", "-id"]

    def __str__(self) -> str:  # pragma: no cover - display helper
        return f"{self.real_name} ≈ {self.ideal_name}: {self.verdict}"

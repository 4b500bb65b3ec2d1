# Generated by Django 5.0.14 on 2026-10-17 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="AttackSweep",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("base_graph", models.JSONField(default=dict, verbose_name="Базовый граф")),
                ("with_input", models.BooleanField(default=False, verbose_name="С квантовым входом")),
                ("max_weight", models.PositiveSmallIntegerField(verbose_name="Максимальный вес")),
                ("attacks", models.PositiveIntegerField(default=0, verbose_name="Число атак")),
                ("max_p_fail", models.FloatField(default=0.0, verbose_name="Максимум p_fail")),
                ("max_bound", models.FloatField(default=0.0, verbose_name="Максимум оценки")),
                ("worst_attack", models.CharField(blank=True, max_length=255, verbose_name="Худшая атака")),
                ("violations", models.PositiveIntegerField(default=0, verbose_name="Нарушения оценки")),
                (
                    "verdict",
                    models.CharField(
                        choices=[("PASS", "Пройдено"), ("FAIL", "Не пройдено")],
                        default="PASS",
                        max_length=4,
                        verbose_name="Вердикт",
                    ),
                ),
                ("created_at", models.DateTimeField(auto_now_add=True, verbose_name="Создан")),
            ],
            options={
                "verbose_name": "Перебор атак",
                "verbose_name_plural": "Переборы атак",
                "ordering": ["-created_at", "-id"],
            },
        ),
        migrations.CreateModel(
            name="DistinguisherReport",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("real_name", models.CharField(max_length=255, verbose_name="Реальная система")),
                ("ideal_name", models.CharField(max_length=255, verbose_name="Идеальная система")),
                ("simulator", models.CharField(blank=True, max_length=32, verbose_name="Симулятор")),
                ("epsilon", models.FloatField(verbose_name="ε")),
                ("tolerance", models.FloatField(verbose_name="Допуск")),
                (
                    "verdict",
                    models.CharField(
                        choices=[("PASS", "Пройдено"), ("FAIL", "Не пройдено")],
                        max_length=4,
                        verbose_name="Вердикт",
                    ),
                ),
                ("worst_assignment", models.JSONField(blank=True, null=True, verbose_name="Худший вход")),
                ("created_at", models.DateTimeField(auto_now_add=True, verbose_name="Создан")),
            ],
            options={
                "verbose_name": "Отчёт о различимости",
                "verbose_name_plural": "Отчёты о различимости",
                "ordering": ["-created_at", "-id"],
            },
        ),
        migrations.CreateModel(
            name="ProtocolRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                (
                    "protocol",
                    models.CharField(
                        choices=[
                            ("rsp", "Удалённое приготовление состояния"),
                            ("protocol1", "Проверка ловушками (RM)"),
                            ("protocol3", "Проверка стабилизаторами (PS)"),
                            ("ubqc", "Слепое делегирование (PS)"),
                        ],
                        max_length=20,
                        verbose_name="Протокол",
                    ),
                ),
                (
                    "mode",
                    models.CharField(
                        choices=[("sample", "Выборка"), ("enumerate", "Полный перебор")],
                        default="enumerate",
                        max_length=20,
                        verbose_name="Режим",
                    ),
                ),
                (
                    "seed",
                    models.CharField(
                        blank=True,
                        help_text="64-битное зерно генератора в десятичной записи; обязательно в режиме выборки.",
                        max_length=20,
                        verbose_name="Зерно",
                    ),
                ),
                (
                    "accepted",
                    models.BooleanField(
                        default=False,
                        help_text="Клиент принял результат (для перебора: вероятность отказа равна нулю).",
                        verbose_name="Принято",
                    ),
                ),
                ("exit_code", models.PositiveSmallIntegerField(default=0, verbose_name="Код завершения")),
                ("abort_probability", models.FloatField(blank=True, null=True, verbose_name="Вероятность отказа")),
                ("fingerprint", models.CharField(blank=True, max_length=64, verbose_name="Отпечаток выхода")),
                ("outputs", models.JSONField(blank=True, default=dict, verbose_name="Классические выходы")),
                ("transcript", models.JSONField(blank=True, default=list, verbose_name="Протокол сообщений")),
                ("config", models.JSONField(blank=True, default=dict, verbose_name="Конфигурация")),
                ("created_at", models.DateTimeField(auto_now_add=True, verbose_name="Создан")),
                ("updated_at", models.DateTimeField(auto_now=True, verbose_name="Обновлён")),
            ],
            options={
                "verbose_name": "Запуск протокола",
                "verbose_name_plural": "Запуски протоколов",
                "ordering": ["-created_at", "-id"],
            },
        ),
        migrations.CreateModel(
            name="AttackSweepRow",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("order", models.PositiveIntegerField(verbose_name="Порядок")),
                ("attack", models.CharField(max_length=255, verbose_name="Атака")),
                ("stage", models.CharField(max_length=32, verbose_name="Стадия")),
                ("p_accept", models.FloatField(verbose_name="p_accept")),
                ("p_fail", models.FloatField(verbose_name="p_fail")),
                ("bound", models.FloatField(verbose_name="Оценка")),
                ("in_e", models.BooleanField(default=True, verbose_name="Класс E")),
                (
                    "sweep",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="rows",
                        to="ledger.attacksweep",
                        verbose_name="Перебор",
                    ),
                ),
            ],
            options={
                "verbose_name": "Строка перебора",
                "verbose_name_plural": "Строки перебора",
                "ordering": ["sweep", "order"],
                "constraints": [
                    models.UniqueConstraint(fields=("sweep", "order"), name="ledger_sweep_row_order_unique"),
                ],
            },
        ),
    ]

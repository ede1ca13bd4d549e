# Generated by Django 4.2 on 2026-10-19 09:00

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
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
                ("seed", models.BigIntegerField()),
                ("preset", models.CharField(max_length=20)),
                ("output_dir", models.CharField(max_length=500, unique=True)),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("complete", "Complete"),
                            ("partial", "Partial"),
                            ("imported", "Imported"),
                        ],
                        default="complete",
                        max_length=20,
                    ),
                ),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={
                "db_table": "busybot_run",
                "ordering": ["-created_at"],
            },
        ),
        migrations.CreateModel(
            name="MetricCell",
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
                ("section", models.CharField(max_length=20)),
                ("split", models.CharField(max_length=20)),
                ("variant", models.CharField(max_length=40)),
                ("metric", models.CharField(max_length=40)),
                ("value", models.FloatField(null=True)),
                ("position", models.PositiveIntegerField(default=0)),
                (
                    "run",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="cells",
                        to="busybot.experimentrun",
                    ),
                ),
            ],
            options={
                "db_table": "busybot_metric_cell",
                "ordering": ["run", "position"],
                "indexes": [
                    models.Index(
                        fields=["run", "section"],
                        name="busybot_met_run_id_4f2a1c_idx",
                    ),
                ],
                "unique_together": {("run", "section", "split", "variant", "metric")},
            },
        ),
    ]

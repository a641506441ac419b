# Generated by Django 5.2.8 on 2026-10-19 09:14

from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="RunLog",
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
                    "command",
                    models.CharField(
                        choices=[
                            ("sample", "Sample"),
                            ("graph", "Graph"),
                            ("solve", "Solve"),
                            ("checks", "Check suites"),
                            ("pullback_demo", "Pullback demo"),
                        ],
                        db_index=True,
                        max_length=30,
                    ),
                ),
                ("suite", models.CharField(blank=True, default="", max_length=50)),
                ("config", models.JSONField(blank=True, default=dict)),
                ("seed", models.IntegerField(default=0)),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("running", "Running"),
                            ("ok", "OK"),
                            ("fail", "Failed"),
                            ("error", "Input error"),
                        ],
                        default="running",
                        max_length=20,
                    ),
                ),
                ("max_residual", models.FloatField(blank=True, null=True)),
                ("report_path", models.CharField(blank=True, default="", max_length=500)),
                ("error_message", models.TextField(blank=True, null=True)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("finished_at", models.DateTimeField(blank=True, null=True)),
            ],
            options={
                "verbose_name": "Run Log",
                "verbose_name_plural": "Run Logs",
                "ordering": ["-created_at"],
                "indexes": [
                    models.Index(
                        fields=["command", "created_at"],
                        name="runs_command_created_idx",
                    ),
                    models.Index(
                        fields=["status", "created_at"],
                        name="runs_status_created_idx",
                    ),
                ],
            },
        ),
    ]

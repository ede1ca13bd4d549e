from django.db import models


class ExperimentRun(models.Model):
    STATUS_CHOICES = [
        ("complete", "Complete"),
        ("partial", "Partial"),
        ("imported", "Imported"),
    ]

    seed = models.BigIntegerField()
    preset = models.CharField(max_length=20)
    output_dir = models.CharField(max_length=500, unique=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default="complete")
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"{self.preset} seed {self.seed} ({self.status})"

    class Meta:
        db_table = "busybot_run"
        ordering = ["-created_at"]


class MetricCell(models.Model):
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name="cells")
    section = models.CharField(max_length=20)
    split = models.CharField(max_length=20)
    variant = models.CharField(max_length=40)
    metric = models.CharField(max_length=40)
    value = models.FloatField(null=True)
    position = models.PositiveIntegerField(default=0)

    def __str__(self):
        return f"{self.section}/{self.split}/{self.variant}/{self.metric} = {self.value}"

    class Meta:
        db_table = "busybot_metric_cell"
        ordering = ["run", "position"]
        unique_together = ("run", "section", "split", "variant", "metric")
        indexes = [
            models.Index(fields=["run", "section"], name="busybot_met_run_id_4f2a1c_idx"),
        ]

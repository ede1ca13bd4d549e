import json
from pathlib import Path

import pandas as pd
from django.core.management.base import BaseCommand, CommandError

from busybot.harness.report import METRIC_COLUMNS, store_report


class Command(BaseCommand):
    help = "Import a run's metrics.csv into the database, replacing that run's cells"

    def add_arguments(self, parser):
        parser.add_argument("paths", nargs="+", help="metrics.csv files or run directories")

    def handle(self, *args, **options):
        for raw in options["paths"]:
            path = Path(raw)
            csv_path = path / "metrics.csv" if path.is_dir() else path
            if not csv_path.exists():
                raise CommandError(f"{csv_path} does not exist", returncode=1)
            frame = pd.read_csv(csv_path)
            if list(frame.columns) != METRIC_COLUMNS:
                raise CommandError(f"{csv_path}: expected columns {METRIC_COLUMNS}", returncode=1)

            run_dir = csv_path.parent
            seed, preset = 0, "desk"
            config_path = run_dir / "config.json"
            if config_path.exists():
                with open(config_path) as handle:
                    saved = json.load(handle)
                seed, preset = saved.get("seed", seed), saved.get("preset", preset)

            run = store_report(frame, seed, preset, run_dir, status="imported")
            self.stdout.write(self.style.SUCCESS(
                f"Loaded {len(frame)} metric cells for run {run.pk} ({run_dir})"
            ))

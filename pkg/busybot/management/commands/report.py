from pathlib import Path

import pandas as pd
from django.core.management.base import CommandError

from busybot.harness.artifacts import RunLayout
from busybot.harness.report import (
    METRIC_COLUMNS, REPORT_FORMATS, MetricsReport, metrics_from_raw, render_text, report_from_db,
    write_report,
)
from busybot.management.base import ExperimentCommand
from busybot.models import ExperimentRun


class Command(ExperimentCommand):
    help = "Write metric CSV, text tables and SVG plots for a run"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        source = parser.add_mutually_exclusive_group()
        source.add_argument("--run-id", type=int, help="Rebuild from the database cells of this run")
        source.add_argument("--from-csv", help="Rebuild from a metrics.csv file")
        parser.add_argument("--formats", nargs="+", choices=REPORT_FORMATS, default=list(REPORT_FORMATS))
        parser.add_argument("--target", help="Output directory (default: the run's report folder)")

    def run(self, options):
        if options["run_id"] is not None:
            try:
                run = ExperimentRun.objects.get(pk=options["run_id"])
            except ExperimentRun.DoesNotExist:
                raise CommandError(f"run {options['run_id']} not found", returncode=1)
            report = report_from_db(run)
            target = Path(options["target"] or Path(run.output_dir) / "report")
        elif options["from_csv"]:
            frame = pd.read_csv(options["from_csv"])
            if list(frame.columns) != METRIC_COLUMNS:
                raise CommandError(f"{options['from_csv']}: expected columns {METRIC_COLUMNS}",
                                   returncode=1)
            report = MetricsReport(frame)
            target = Path(options["target"] or Path(options["from_csv"]).parent / "report")
        else:
            layout = RunLayout(self.load_config(options).run_dir)
            if not layout.root.exists():
                raise CommandError(f"no run directory at {layout.root}", returncode=1)
            report = metrics_from_raw(layout)
            target = Path(options["target"] or layout.report_dir)
        written = write_report(report, target, options["formats"])
        if "text" in options["formats"]:
            self.stdout.write(render_text(report))
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(written)} report files to {target}"))

from django.core.management.base import CommandError

from busybot.harness.pipeline import STAGES
from busybot.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Run interaction training, reasoning and planning end to end and write the report"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--stages", nargs="+", choices=STAGES, default=list(STAGES),
                            help="Subset of stages to run, in pipeline order")

    def run(self, options):
        pipeline = self.pipeline(options)
        stages = [s for s in STAGES if s in options["stages"]]
        report = pipeline.run(stages)
        for stage in stages:
            marker = "FAILED" if stage in report.failures else "ok"
            self.stdout.write(f"  {stage:<18} {marker:<7} {pipeline.seconds.get(stage, 0.0):8.1f}s")
        if report.failures:
            raise CommandError(
                f"{len(report.failures)} stage(s) failed, partial report in {pipeline.layout.root}",
                returncode=1,
            )
        self.stdout.write(self.style.SUCCESS(
            f"Pipeline complete: {len(report.frame)} metric cells in {pipeline.layout.metrics}"
        ))

from django.core.management.base import CommandError

from busybot.harness.acceptance import CHECKS, run_acceptance
from busybot.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Run the exact oracle checks and the scaled ordering reproductions"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--checks", nargs="+", choices=CHECKS, default=list(CHECKS))
        parser.add_argument("--workdir", help="Where the acceptance runs keep their files")
        parser.add_argument("--environment-boards", type=int, default=10_000)

    def run(self, options):
        config = self.load_config(options)
        results = run_acceptance(config, options["checks"], options["workdir"],
                                 options["environment_boards"])
        for result in results:
            style = self.style.SUCCESS if result.passed else self.style.ERROR
            self.stdout.write(style(result.line()))
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise CommandError(f"{len(failed)} acceptance criteria failed: {', '.join(failed)}",
                               returncode=1)

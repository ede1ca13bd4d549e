"""Shared flags and error handling for the experiment commands."""

import logging

from django.core.management.base import BaseCommand, CommandError

from busybot.exceptions import BusybotError, ConfigurationError
from busybot.harness.config import PRESET_NAMES, load_config
from busybot.harness.pipeline import Pipeline

logger = logging.getLogger(__name__)


class ExperimentCommand(BaseCommand):
    """A command working on one run directory, selected by --seed, --preset and --out-dir.

    ``config_flags`` lists ``(flag, section, field, argparse kwargs)``. A flag
    given on the command line overrides ``<section>.<field>`` after the config
    file. ``as_list`` marks a tuple field; the flag value becomes its only item.
    """

    config_flags = ()

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, help="Master seed (default: BUSYBOT_SEED)")
        parser.add_argument("--preset", choices=PRESET_NAMES, help="Experiment scale preset")
        parser.add_argument("--out-dir", help="Directory holding run folders")
        parser.add_argument("--config", dest="config_file", help="JSON file overriding config fields")
        parser.add_argument("--no-record", action="store_true",
                            help="Do not mirror metric cells into the database")
        for flag, section, name, kwargs in self.config_flags:
            kwargs = {k: v for k, v in kwargs.items() if k != "as_list"}
            parser.add_argument(flag, dest=name, help=f"Overrides {section}.{name}", **kwargs)

    def flag_overrides(self, options):
        overrides = {}
        for _, section, name, kwargs in self.config_flags:
            value = options.get(name)
            if value is None:
                continue
            if kwargs.get("as_list"):
                value = [value]
            overrides.setdefault(section, {})[name] = value
        return overrides

    def load_config(self, options):
        return load_config(seed=options["seed"], preset=options["preset"],
                           out_dir=options["out_dir"], path=options["config_file"],
                           overrides=self.flag_overrides(options))

    def pipeline(self, options):
        return Pipeline(self.load_config(options), record=not options["no_record"])

    def handle(self, *args, **options):
        try:
            return self.run(options)
        except ConfigurationError as exc:
            raise CommandError(f"configuration error: {exc}", returncode=2) from exc
        except BusybotError as exc:
            logger.exception("%s failed", self.__module__.rsplit(".", 1)[-1])
            raise CommandError(str(exc), returncode=1) from exc

    def run(self, options):
        raise NotImplementedError


class StageCommand(ExperimentCommand):
    """Runs one pipeline stage, loading earlier stages' files from the run directory."""

    stage = None

    def run(self, options):
        pipeline = self.pipeline(options)
        report = pipeline.run((self.stage,))
        if self.stage in report.failures:
            raise CommandError(f"stage {self.stage} failed: {report.failures[self.stage]}",
                               returncode=1)
        self.stdout.write(self.style.SUCCESS(
            f"{self.stage} finished in {pipeline.seconds[self.stage]:.1f}s -> {pipeline.layout.root}"
        ))
        return None

"""Training, novel-configuration and novel-object board sets."""

import logging
from dataclasses import dataclass, replace

from busybot.board.env import BusyBoard
from busybot.board.generate import generate_board_retrying, in_instance_pool
from busybot.exceptions import GenerationError
from busybot.harness.seeding import stream

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "novel_config", "novel_object")
SPLIT_TITLES = {"train": "Training", "novel_config": "Novel Config", "novel_object": "Novel Object"}
SEED_SPACE = 2**31 - 1


@dataclass
class BoardSplit:
    name: str
    generation: object
    specs: list

    @property
    def seeds(self):
        return [spec.seed for spec in self.specs]

    def spec(self, k):
        return self.specs[k % len(self.specs)]

    def board(self, k, rng):
        return BusyBoard.from_spec(self.spec(k), rng)

    def __len__(self):
        return len(self.specs)


def split_generation(config, name):
    pool = "heldout" if name == "novel_object" else "train"
    return replace(config.generation, instance_pool=pool)


def _draw_split(name, generation, size, rng, used):
    specs = []
    while len(specs) < size:
        candidate = int(rng.integers(SEED_SPACE))
        if candidate in used:
            continue
        try:
            spec, seed = generate_board_retrying(candidate, generation)
        except GenerationError as exc:
            logger.debug("%s: seed %d skipped: %s", name, candidate, exc)
            continue
        if seed in used:
            continue
        if name == "novel_object" and not any(
            in_instance_pool(obj, "heldout", generation.scale) for obj in spec.objects
        ):
            continue
        used.update({candidate, seed})
        specs.append(spec)
    return specs


def build_splits(config):
    """The three board sets; deterministic in the master seed and disjoint in board seeds."""
    rng = stream(config.seed, "splits")
    sizes = config.splits.as_dict()
    used = set()
    splits = {}
    for name in SPLIT_NAMES:
        generation = split_generation(config, name)
        splits[name] = BoardSplit(name, generation, _draw_split(name, generation, sizes[name], rng, used))
        logger.info("%s split: %d boards (%s instances)", name, sizes[name], generation.instance_pool)
    return splits

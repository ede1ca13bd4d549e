"""Small boards and configurations shared by the tests."""

import numpy as np

from busybot.board.env import BusyBoard
from busybot.board.generate import GenerationConfig, generate_board_retrying
from busybot.harness.config import EvaluationConfig, ExperimentConfig, SplitSizes
from busybot.interact.training import InteractionConfig
from busybot.plan.episode import PlanConfig
from busybot.reason.training import ReasonConfig

SMALL = GenerationConfig(height=16, width=20, units=("one_to_one",))
MULTIDIR = GenerationConfig(height=16, width=24, units=("multidir:3",))
MULTILINK = GenerationConfig(height=16, width=24, units=("multilink:2",))


def small_spec(seed=0, config=SMALL):
    spec, _ = generate_board_retrying(seed, config)
    return spec


def small_board(seed=0, config=SMALL, rng=None):
    return BusyBoard.from_spec(small_spec(seed, config), rng or np.random.default_rng(seed))


def tiny_interaction(**changes):
    values = dict(
        epochs=4, warmup_epochs=1, phase2_start=2, phase3_start=3, boards_per_epoch=1,
        actions_per_board=3, buffer_capacity=50, position_iterations=1, position_batch=4,
        direction_iterations=1, direction_batch=4, position_decay=2, direction_decay=1,
        position_down=(4, 8), position_up=(4, 2), direction_channels=(4, 8), direction_hidden=(8,),
    )
    values.update(changes)
    return InteractionConfig(**values)


def tiny_reason(**changes):
    values = dict(boards=2, block_size=1, total_steps=6, inference_steps=4, epochs=2, batch=2,
                  width=8, action_width=8, embedding=8)
    values.update(changes)
    return ReasonConfig(**values)


def tiny_experiment(out_dir, seed=0, **changes):
    values = dict(
        seed=seed, preset="desk", out_dir=str(out_dir),
        splits=SplitSizes(4, 2, 2),
        generation=SMALL,
        interaction=tiny_interaction(),
        reason=tiny_reason(),
        plan=PlanConfig(tasks=1, max_steps=2, explore_steps=6, kinds=("one-to-one",)),
        evaluation=EvaluationConfig(interaction_boards=2, interaction_steps=3, reason_boards=2),
    )
    values.update(changes)
    return ExperimentConfig(**values)

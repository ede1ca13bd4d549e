"""Procedural busyboard simulator."""

from busybot.board.spec import (  # noqa: F401
    DIRECTIONS, MAX_OBJECTS, MAX_STAGES, Action, BoardSpec, BoardState, ObjectSpec,
    RelationGraph, action_at, cell_of, direction_candidates, opposite_direction,
)
from busybot.board.generate import (  # noqa: F401
    GenerationConfig, assign_relations, generate_board, generate_board_retrying,
    rerandomize_relations,
)
from busybot.board.kinematics import (  # noqa: F401
    Outcome, apply_action, apply_with_retry, oracle_actions, reset,
)
from busybot.board.render import Observation, default_delta, image_diff_reward, render  # noqa: F401
from busybot.board.goals import TASK_KINDS, sample_goal  # noqa: F401
from busybot.board.env import BusyBoard  # noqa: F401

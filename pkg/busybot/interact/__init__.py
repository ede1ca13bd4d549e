"""Self-supervised affordance learning."""

from busybot.interact.nets import (  # noqa: F401
    DirectionNet, PositionNet, encode_position_gaussian, infer_direction_scores,
    infer_position_affordance,
)
from busybot.interact.exploration import ExplorationState, linear_epsilon, ucb_adjust  # noqa: F401
from busybot.interact.replay import ReplayBuffer, ReplayEntry, replay_push, replay_sample_balanced  # noqa: F401
from busybot.interact.policy import InteractionPolicy, execute_selection, select_action  # noqa: F401
from busybot.interact.candidates import cluster_hot_cells, extract_action_candidates  # noqa: F401
from busybot.interact.training import InteractionConfig, train_interaction  # noqa: F401
from busybot.interact.evaluation import eval_interaction, score_interactions  # noqa: F401

"""Interventional relation discovery and dynamics learning."""

from busybot.reason.features import build_node_features, stage_descriptors  # noqa: F401
from busybot.reason.nets import (  # noqa: F401
    ActionEncoder, DynamicsNet, InferenceNet, SceneGraphEstimate, SpatialEncoder, encode_actions,
    predict_next, rollout, slot_actions, spatial_encode,
)
from busybot.reason.dataset import Trajectory, collect_reason_dataset  # noqa: F401
from busybot.reason.training import ReasonConfig, ReasonModel, reason_loss, train_reason  # noqa: F401
from busybot.reason.evaluation import eval_edges, eval_predictions, evaluate_reasoning  # noqa: F401

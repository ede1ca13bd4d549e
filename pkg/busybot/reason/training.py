"""Joint training of the inference and dynamics networks."""

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np
import pandas as pd

from busybot.exceptions import ConfigurationError, ContractError
from busybot.learncore import tensor as T
from busybot.learncore.checkpoint import load_checkpoint, save_checkpoint
from busybot.learncore.optim import Adam
from busybot.learncore.params import ParamSet
from busybot.reason.dataset import stack
from busybot.reason.nets import (
    DynamicsNet, InferenceNet, SceneGraphEstimate, complete_graph, slot_actions,
)

logger = logging.getLogger(__name__)

GUARD_FACTOR = 10.0
GUARD_WINDOW = 50


@dataclass(frozen=True)
class ReasonConfig:
    boards: int = 400
    block_size: int = 20
    total_steps: int = 30
    inference_steps: int = 23
    epochs: int = 60
    batch: int = 16
    lr: float = 5e-4
    width: int = 32
    action_width: int = 32
    embedding: int = 32
    edge_threshold: float = 0.5
    use_inference: bool = True
    candidate_source: str = "learned"

    def validate(self):
        if not 2 <= self.inference_steps < self.total_steps:
            raise ConfigurationError(
                f"inference steps {self.inference_steps} must lie in [2, {self.total_steps})"
            )
        if self.boards < 1 or self.batch < 1 or self.block_size < 1:
            raise ConfigurationError("boards, batch and block size must be positive")
        if not 0.0 < self.edge_threshold < 1.0:
            raise ConfigurationError(f"edge threshold {self.edge_threshold} outside (0, 1)")
        if self.candidate_source not in ("learned", "random", "oracle"):
            raise ConfigurationError(f"unknown candidate source {self.candidate_source!r}")
        return self


class ReasonModel:
    """Inference (φ) and dynamics (ψ) networks over one parameter set."""

    def __init__(self, config, rng=None):
        self.config = config
        self.params = ParamSet(rng)
        self.inference = None
        if config.use_inference:
            self.inference = InferenceNet(self.params, config.width, config.action_width,
                                          config.embedding)
        self.dynamics = DynamicsNet(self.params, config.width, config.action_width, config.embedding)

    def graph_tensors(self, nodes, actions, acted, occupied):
        """Edge tensors for a batch of inference blocks, (B, N, N, 2) and (B, N, N, E)."""
        if self.inference is None:
            edge_types, embeddings = complete_graph(occupied, self.config.embedding)
            return T.as_tensor(edge_types), T.as_tensor(embeddings)
        return self.inference(nodes, actions, acted, occupied)

    def infer(self, trajectory):
        split = trajectory.split
        edge_types, embeddings = self.graph_tensors(
            trajectory.nodes[None, :split], trajectory.actions[None, :split],
            trajectory.acted[None, :split], trajectory.occupied[None],
        )
        return SceneGraphEstimate(edge_types.data[0], embeddings.data[0], self.config.edge_threshold)

    def save(self, path):
        save_checkpoint(path, self.params)

    def load(self, path):
        load_checkpoint(path, self.params)
        return self


def reason_loss(model, trajectories):
    """Teacher-forced masked MSE of next-frame predictions over the horizon."""
    if not trajectories:
        raise ContractError("reason_loss needs at least one trajectory")
    split = trajectories[0].split
    nodes = stack(trajectories, "nodes")
    actions = stack(trajectories, "actions")
    acted = stack(trajectories, "acted")
    occupied = stack(trajectories, "occupied")
    edge_types, embeddings = model.graph_tensors(nodes[:, :split], actions[:, :split],
                                                 acted[:, :split], occupied)
    steps = slice(split - 1, nodes.shape[1] - 1)
    current, target = nodes[:, steps], nodes[:, split:]
    slotted = slot_actions(actions[:, steps], acted[:, steps])
    graph_types = edge_types.reshape((edge_types.shape[0], 1) + edge_types.shape[1:])
    graph_embed = embeddings.reshape((embeddings.shape[0], 1) + embeddings.shape[1:])
    keep = occupied[:, None, :]
    prediction = model.dynamics(current, slotted, graph_types, graph_embed, keep)
    mask = np.broadcast_to(keep[..., None], target.shape).astype(np.float64)
    return T.mse(prediction, target, mask=mask)


class ExplosionGuard:
    """Rejects a batch loss above ``factor`` times the median of recently accepted losses."""

    def __init__(self, factor=GUARD_FACTOR, window=GUARD_WINDOW):
        self.factor = factor
        self.history = deque(maxlen=window)
        self.skipped = 0

    def accept(self, loss):
        if not np.isfinite(loss) or (self.history and loss > self.factor * np.median(self.history)):
            self.skipped += 1
            return False
        self.history.append(loss)
        return True


@dataclass
class ReasonResult:
    model: ReasonModel
    curve: pd.DataFrame
    skipped: int


def train_reason(trajectories, config, rng, log_path=None):
    config = config.validate()
    if not trajectories:
        raise ContractError("train_reason needs a non-empty dataset")
    model = ReasonModel(config, np.random.default_rng(rng.integers(2**32)))
    optimizer = Adam(model.params, config.lr)
    guard = ExplosionGuard()
    rows = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(trajectories))
        losses = []
        for start in range(0, len(order), config.batch):
            batch = [trajectories[int(k)] for k in order[start:start + config.batch]]
            loss = reason_loss(model, batch)
            value = loss.item()
            if not guard.accept(value):
                logger.warning("epoch %d: skipped batch with loss %.4g (median %.4g)", epoch, value,
                               np.median(guard.history) if guard.history else float("nan"))
                continue
            T.backward(loss, model.params)
            optimizer.step()
            losses.append(value)
        if losses:
            mean = float(np.mean(losses))
        else:
            mean = rows[-1][1] if rows else float(np.median(guard.history or [0.0]))
        rows.append([epoch, mean, guard.skipped])
        logger.info("reasoning epoch %d loss %.6f skipped %d", epoch, mean, guard.skipped)
    curve = pd.DataFrame(rows, columns=["epoch", "loss", "skipped"])
    if log_path is not None:
        curve.to_csv(log_path, index=False)
    return ReasonResult(model, curve, guard.skipped)

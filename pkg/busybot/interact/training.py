"""Three-phase self-supervised curriculum for the interaction networks."""

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np
import pandas as pd

from busybot.exceptions import ConfigurationError
from busybot.interact.exploration import ExplorationState, linear_epsilon
from busybot.interact.nets import encode_position_gaussian
from busybot.interact.policy import REWARD_SOURCES, InteractionPolicy, execute_selection, select_action
from busybot.interact.replay import UNTRIED, ReplayBuffer
from busybot.learncore import tensor as T
from busybot.learncore.optim import Adam

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["epoch", "phase", "epsilon", "position_loss", "direction_loss", "rolling_precision"]
ROLLING_EPOCHS = 5


@dataclass(frozen=True)
class InteractionConfig:
    epochs: int = 100
    warmup_epochs: int = 2
    phase2_start: int = 25
    phase3_start: int = 30
    boards_per_epoch: int = 4
    actions_per_board: int = 10
    buffer_capacity: int = 1600
    position_iterations: int = 8
    position_batch: int = 16
    direction_iterations: int = 24
    direction_batch: int = 32
    lr: float = 5e-4
    joint_lr: float = 1e-4
    position_decay: int = 10
    direction_decay: int = 20
    window: int = 3
    ucb_c: float = 0.5
    use_ucb: bool = True
    reward_source: str = "image"
    input_mode: str = "depth"
    sigma: float = 2.0
    position_down: tuple = (16, 32)
    position_up: tuple = (16, 2)
    upsample: str = "nearest"
    direction_channels: tuple = (16, 32, 64, 64)
    direction_hidden: tuple = (64, 64)
    tau: float = 0.7
    candidate_k: int = 8
    keep_colors: bool = True

    def validate(self):
        if not 0 <= self.warmup_epochs <= self.phase2_start <= self.phase3_start <= self.epochs:
            raise ConfigurationError(
                "phase boundaries must satisfy 0 <= warmup <= phase2 <= phase3 <= epochs, got "
                f"{self.warmup_epochs}/{self.phase2_start}/{self.phase3_start}/{self.epochs}"
            )
        if self.reward_source not in REWARD_SOURCES:
            raise ConfigurationError(f"unknown reward source {self.reward_source!r}")
        if self.input_mode not in ("depth", "rgb"):
            raise ConfigurationError(f"unknown input mode {self.input_mode!r}")
        if self.boards_per_epoch < 1 or self.actions_per_board < 1:
            raise ConfigurationError("each epoch needs at least one board and one action")
        return self

    def phase(self, epoch):
        if epoch < self.phase2_start:
            return 1
        return 2 if epoch < self.phase3_start else 3

    def phase_lr(self, phase):
        return self.joint_lr if phase == 3 else self.lr


@dataclass
class InteractionResult:
    policy: InteractionPolicy
    log: pd.DataFrame
    buffer: ReplayBuffer


def position_loss(policy, batch):
    x = np.stack([e.observation for e in batch]).astype(np.float64)
    rows = np.array([e.cell[0] for e in batch])
    cols = np.array([e.cell[1] for e in batch])
    scores = policy.position(x)[np.arange(len(batch)), rows, cols]
    return T.bce(scores, np.array([e.position_label for e in batch], dtype=np.float64))


def direction_loss(policy, batch):
    shape = batch[0].observation.shape[1:]
    x = np.stack([
        np.concatenate([e.observation, encode_position_gaussian(e.cell, shape, policy.sigma)])
        for e in batch
    ]).astype(np.float64)
    rewards = np.stack([e.rewards for e in batch]).astype(np.float64)
    mask = rewards != UNTRIED
    return T.bce(policy.direction(x), np.where(mask, rewards, 0.0), mask=mask)


def _fit(policy_part, optimizer, loss_fn, buffer, iterations, batch_size, rng, label):
    losses = []
    for _ in range(iterations):
        batch = buffer.sample_balanced(batch_size, rng, label=label)
        loss = loss_fn(batch)
        T.backward(loss, policy_part.params)
        optimizer.step()
        losses.append(loss.item())
    return float(np.mean(losses)) if losses else float("nan")


def train_interaction(board_factory, config, rng, log_path=None):
    """Run the curriculum; ``board_factory(epoch, index)`` returns a fresh BusyBoard."""
    config = config.validate()
    first = board_factory(0, 0)
    height, width = first.spec.height, first.spec.width
    policy = InteractionPolicy.build(height, width, config, np.random.default_rng(rng.integers(2**32)))
    buffer = ReplayBuffer(config.buffer_capacity)
    position_opt = Adam(policy.position.params, config.lr)
    direction_opt = Adam(policy.direction.params, config.lr)
    expl = ExplorationState(height, width, window=config.window, c=config.ucb_c)
    recent = deque(maxlen=ROLLING_EPOCHS * config.boards_per_epoch * config.actions_per_board)
    rows = []
    for epoch in range(config.epochs):
        phase = config.phase(epoch)
        warmup = epoch < config.warmup_epochs
        expl.epsilon = linear_epsilon(epoch, config.warmup_epochs, config.position_decay)
        expl.epsilon_direction = linear_epsilon(epoch, config.phase3_start, config.direction_decay)
        for index in range(config.boards_per_epoch):
            board = first if epoch == 0 and index == 0 else board_factory(epoch, index)
            expl.new_board()
            for _ in range(config.actions_per_board):
                selection = select_action(policy, board.observe(), board.spec, expl, phase, rng,
                                          use_ucb=config.use_ucb, random_position=warmup)
                entry, outcome = execute_selection(board, selection, policy, config.reward_source,
                                                   config.keep_colors)
                buffer.push(entry)
                recent.append(outcome.effective)
        p_loss = d_loss = float("nan")
        if not warmup:
            lr = config.phase_lr(phase)
            position_opt.lr = lr
            p_loss = _fit(policy.position, position_opt, lambda b: position_loss(policy, b), buffer,
                          config.position_iterations, config.position_batch, rng,
                          lambda e: e.position_label)
            if phase >= 2:
                direction_opt.lr = lr
                d_loss = _fit(policy.direction, direction_opt, lambda b: direction_loss(policy, b),
                              buffer, config.direction_iterations, config.direction_batch, rng,
                              lambda e: e.reward)
        precision = float(np.mean(recent)) if recent else 0.0
        rows.append([epoch, phase, expl.epsilon, p_loss, d_loss, precision])
        if not warmup and not (np.isfinite(p_loss) and (phase == 1 or np.isfinite(d_loss))):
            logger.warning("epoch %d: non-finite interaction loss", epoch)
        logger.info("interaction epoch %d phase %d eps %.2f position %.4f direction %.4f precision %.3f",
                    epoch, phase, expl.epsilon, p_loss, d_loss, precision)
    if config.keep_colors and config.reward_source == "image":
        wrong = buffer.mislabeled(first.delta)
        if wrong:
            logger.warning("%d of %d replay rewards disagree with their stored images", len(wrong),
                           len(buffer))
    log = pd.DataFrame(rows, columns=LOG_COLUMNS)
    if log_path is not None:
        log.to_csv(log_path, index=False)
    return InteractionResult(policy, log, buffer)

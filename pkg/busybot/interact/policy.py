"""Action selection and execution for the interaction agent."""

import logging
from dataclasses import dataclass

import numpy as np

from busybot.board.kinematics import apply_action
from busybot.board.render import image_diff_reward, render
from busybot.board.spec import DIRECTIONS, action_at
from busybot.exceptions import ConfigurationError, ContractError
from busybot.interact.exploration import ucb_adjust
from busybot.interact.nets import DirectionNet, PositionNet, direction_input
from busybot.interact.replay import UNTRIED, ReplayEntry
from busybot.learncore.checkpoint import load_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)

PHASES = (1, 2, 3)
REWARD_SOURCES = ("image", "joint")


class InteractionPolicy:
    """The position and direction networks plus how observations are fed to them."""

    def __init__(self, position, direction, input_mode="depth", sigma=2.0):
        if input_mode not in ("depth", "rgb"):
            raise ConfigurationError(f"unknown input mode {input_mode!r}")
        self.position = position
        self.direction = direction
        self.input_mode = input_mode
        self.sigma = sigma

    @classmethod
    def build(cls, height, width, config, rng):
        position = PositionNet(height, width, config.position_down, config.position_up,
                               upsample=config.upsample, rng=rng)
        direction = DirectionNet(height, width, config.direction_channels, config.direction_hidden,
                                 rng=rng)
        return cls(position, direction, config.input_mode, config.sigma)

    def affordance(self, obs):
        return self.position(obs.policy_input(self.input_mode)[None]).data[0]

    def direction_scores(self, obs, cell):
        x = direction_input(obs, cell, self.sigma, self.input_mode)
        return self.direction(x[None]).data[0]

    def save(self, directory):
        directory.mkdir(parents=True, exist_ok=True)
        save_checkpoint(directory / "position.npz", self.position.params)
        save_checkpoint(directory / "direction.npz", self.direction.params)

    def load(self, directory):
        load_checkpoint(directory / "position.npz", self.position.params)
        load_checkpoint(directory / "direction.npz", self.direction.params)
        return self


@dataclass
class Selection:
    cell: tuple
    action: object
    directions: tuple  # directions to try, first one is the selected index
    random_position: bool


def _random_cell(rng, shape):
    return tuple(int(v) for v in np.unravel_index(int(rng.integers(shape[0] * shape[1])), shape))


def select_action(policy, obs, spec, expl, phase, rng, use_ucb=True, random_position=False):
    """ε-greedy (+UCB) position, then a direction according to the curriculum phase."""
    if phase not in PHASES:
        raise ContractError(f"phase must be one of {PHASES}, got {phase!r}")
    explore = random_position or rng.random() < expl.epsilon
    if explore:
        cell = _random_cell(rng, obs.shape)
    else:
        scores = policy.affordance(obs)
        if use_ucb:
            scores = ucb_adjust(scores, expl)
        cell = tuple(int(v) for v in np.unravel_index(int(np.argmax(scores)), scores.shape))
    expl.record(cell)
    if phase == 1:
        directions = tuple(range(len(DIRECTIONS)))
    elif phase == 2 or rng.random() < expl.epsilon_direction:
        directions = (int(rng.integers(len(DIRECTIONS))),)
    else:
        directions = (int(np.argmax(policy.direction_scores(obs, cell))),)
    return Selection(cell, action_at(spec, cell, directions[0], obs.depth), directions, explore)


def _reward(reward_source, outcome, before, after, delta):
    if reward_source == "joint":
        return int(outcome.effective)
    return image_diff_reward(before, after, delta)


def execute_selection(board, selection, policy, reward_source="image", keep_colors=True):
    """Run a selection on ``board`` and package the result as a replay entry.

    With several directions to try (phase 1) every direction is simulated
    from the same state and the lowest-index rewarded one is committed.
    Returns (entry, outcome of the committed action).
    """
    if reward_source not in REWARD_SOURCES:
        raise ConfigurationError(f"unknown reward source {reward_source!r}")
    before = board.observe()
    rewards = np.full(len(DIRECTIONS), UNTRIED, dtype=np.int8)
    if len(selection.directions) > 1:
        for direction in selection.directions:
            state, outcome = apply_action(board.state, selection.action.with_direction(direction))
            after = render(state) if reward_source == "image" else None
            rewards[direction] = _reward(reward_source, outcome, before, after, board.delta)
        rewarded = [d for d in selection.directions if rewards[d] == 1]
        committed = rewarded[0] if rewarded else selection.directions[0]
        outcome, _ = board.step(selection.action.with_direction(committed))
        reward = int(rewards[committed])
    else:
        committed = selection.directions[0]
        outcome, _, _, _ = board.step_with_retry(selection.action)
        reward = _reward(reward_source, outcome, before, board.observe(), board.delta)
        rewards[committed] = reward
    entry = ReplayEntry(
        observation=before.policy_input(policy.input_mode).astype(np.float32),
        cell=selection.cell,
        point=selection.action.position,
        direction=committed,
        reward=reward,
        rewards=rewards,
        color_before=before.color if keep_colors else None,
        color_after=board.observe().color if keep_colors else None,
    )
    return entry, outcome

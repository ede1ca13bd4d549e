from dataclasses import dataclass, field

import numpy as np

from busybot.exceptions import ContractError

EPSILON_FLOOR = 0.1
UCB_C = 0.5


@dataclass
class ExplorationState:
    """Per-board visit counts and the current ε values.

    ``t`` counts actions taken on the current board, starting at 1.
    """

    height: int
    width: int
    window: int = 3
    c: float = UCB_C
    epsilon: float = 1.0
    epsilon_direction: float = 1.0
    t: int = 1
    counts: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((self.height, self.width))
        for value in (self.epsilon, self.epsilon_direction):
            if not 0.0 <= value <= 1.0:
                raise ContractError(f"epsilon {value} outside [0, 1]")

    def new_board(self):
        self.counts = np.zeros((self.height, self.width))
        self.t = 1

    def record(self, cell):
        """Count a selection in the M x M window around ``cell`` and advance t."""
        i, j = cell
        top, left = i - self.window // 2, j - self.window // 2
        rows = slice(max(top, 0), min(top + self.window, self.height))
        cols = slice(max(left, 0), min(left + self.window, self.width))
        self.counts[rows, cols] += 1
        self.t += 1


def ucb_adjust(affordance, expl):
    if expl.t < 1:
        raise ContractError(f"UCB step counter must be >= 1, got {expl.t}")
    bonus = expl.c * np.sqrt(np.log(expl.t) / np.maximum(expl.counts, 1.0))
    return np.asarray(affordance) + bonus


def linear_epsilon(epoch, start, span, floor=EPSILON_FLOOR):
    """1 before and at ``start``, decaying linearly to ``floor`` at ``start + span``."""
    if epoch <= start:
        return 1.0
    if span <= 0 or epoch >= start + span:
        return floor
    return 1.0 - (1.0 - floor) * (epoch - start) / span

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from busybot.board.render import color_diff_reward
from busybot.exceptions import ContractError, StateError

UNTRIED = -1


@dataclass
class ReplayEntry:
    observation: np.ndarray  # 4 x H x W policy input, float32
    cell: tuple
    point: tuple
    direction: int
    reward: int
    rewards: np.ndarray = field(default=None, repr=False)  # per direction, UNTRIED where not tried
    color_before: np.ndarray = field(default=None, repr=False)
    color_after: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.reward not in (0, 1):
            raise ContractError(f"reward must be 0 or 1, got {self.reward!r}")
        if self.rewards is None:
            self.rewards = np.full(18, UNTRIED, dtype=np.int8)
            self.rewards[self.direction] = self.reward

    @property
    def position_label(self):
        return int(self.rewards.max() == 1)

    def image_reward(self, delta):
        """The image-difference reward recomputed from the stored colour pair."""
        if self.color_before is None or self.color_after is None:
            raise StateError("entry was stored without colours")
        return color_diff_reward(self.color_before, self.color_after, delta)


class ReplayBuffer:
    """Bounded FIFO of interaction outcomes."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ContractError(f"replay capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._entries = deque(maxlen=capacity)

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __getitem__(self, index):
        return self._entries[index]

    def push(self, entry):
        self._entries.append(entry)

    def positive_fraction(self):
        if not self._entries:
            return 0.0
        return sum(e.position_label for e in self._entries) / len(self._entries)

    def sample_balanced(self, n, rng, label=lambda e: e.position_label):
        """⌈n/2⌉ positives and ⌊n/2⌋ zeros, each drawn with replacement.

        Falls back to uniform sampling when either class is empty.
        """
        if not self._entries:
            raise StateError("cannot sample from an empty replay buffer")
        entries = list(self._entries)
        positives = [e for e in entries if label(e) == 1]
        zeros = [e for e in entries if label(e) == 0]
        if not positives or not zeros:
            return [entries[int(k)] for k in rng.integers(len(entries), size=n)]
        half = (n + 1) // 2
        picked = [positives[int(k)] for k in rng.integers(len(positives), size=half)]
        picked += [zeros[int(k)] for k in rng.integers(len(zeros), size=n - half)]
        return picked

    def mislabeled(self, delta):
        """Indices of entries whose stored reward disagrees with their colour pair."""
        return [k for k, e in enumerate(self._entries) if e.reward != e.image_reward(delta)]


def replay_push(buffer, entry):
    buffer.push(entry)
    return buffer


def replay_sample_balanced(buffer, n, rng):
    return buffer.sample_balanced(n, rng)

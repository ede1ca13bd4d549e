from busybot.board.generate import generate_board_retrying
from busybot.board.kinematics import apply_action, apply_with_retry, oracle_actions, reset
from busybot.board.render import default_delta, image_diff_reward, render


class BusyBoard:
    """A board plus its current state, with the observation cached per state."""

    def __init__(self, spec, state):
        self.spec = spec
        self.state = state
        self.delta = default_delta(spec.height, spec.width)
        self._observation = None

    @classmethod
    def create(cls, seed, config, rng):
        spec, _ = generate_board_retrying(seed, config)
        return cls(spec, reset(spec, rng))

    @classmethod
    def from_spec(cls, spec, rng):
        return cls(spec, reset(spec, rng))

    def copy(self):
        board = BusyBoard(self.spec, self.state.copy())
        board._observation = self._observation
        return board

    def observe(self):
        if self._observation is None:
            self._observation = render(self.state)
        return self._observation

    def _advance(self, state):
        self.state = state
        self._observation = None
        return self.observe()

    def step(self, action):
        """Execute one action; returns (outcome, image reward)."""
        before = self.observe()
        state, outcome = apply_action(self.state, action)
        after = self._advance(state)
        return outcome, image_diff_reward(before, after, self.delta)

    def step_with_retry(self, action):
        """Execute ``action`` or, if ineffective, its opposite.

        Returns (outcome, image reward, executed action, observation before).
        """
        before = self.observe()
        state, outcome, executed = apply_with_retry(self.state, action)
        after = self._advance(state)
        return outcome, image_diff_reward(before, after, self.delta), executed, before

    def oracle_actions(self):
        return oracle_actions(self.state, self.observe().depth)

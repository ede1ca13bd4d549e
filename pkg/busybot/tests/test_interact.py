import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, tag
from hypothesis import given
from hypothesis import strategies as st

from busybot.board.spec import PRESS_DIRECTION, action_at, cell_of
from busybot.exceptions import ConfigurationError, ContractError, StateError
from busybot.interact.candidates import cluster_hot_cells, extract_action_candidates
from busybot.interact.evaluation import eval_interaction, score_interactions
from busybot.interact.exploration import ExplorationState, linear_epsilon, ucb_adjust
from busybot.interact.nets import DirectionNet, PositionNet, encode_position_gaussian
from busybot.interact.policy import InteractionPolicy, Selection, execute_selection, select_action
from busybot.interact.replay import UNTRIED, ReplayBuffer, ReplayEntry
from busybot.interact.training import LOG_COLUMNS, _fit, train_interaction
from busybot.tests.factories import small_board, tiny_interaction


def _entry(reward, cell=(0, 0), direction=0):
    return ReplayEntry(np.zeros((4, 2, 2), dtype=np.float32), cell, (0.5, 0.5, 0.0), direction, reward)


def _tiny_policy(seed=0):
    return InteractionPolicy.build(16, 20, tiny_interaction(), np.random.default_rng(seed))


class ExplorationTests(SimpleTestCase):
    def test_ucb_bonus(self):
        expl = ExplorationState(2, 2, t=10)
        expl.counts[0, 0] = 4
        adjusted = ucb_adjust(np.zeros((2, 2)), expl)
        self.assertAlmostEqual(adjusted[0, 0], 0.5 * np.sqrt(np.log(10) / 4))
        self.assertAlmostEqual(adjusted[1, 1], 0.5 * np.sqrt(np.log(10)))

    def test_ucb_requires_positive_step(self):
        expl = ExplorationState(2, 2)
        expl.t = 0
        with self.assertRaises(ContractError):
            ucb_adjust(np.zeros((2, 2)), expl)

    def test_epsilon_bounds(self):
        with self.assertRaises(ContractError):
            ExplorationState(2, 2, epsilon=1.5)

    def test_window_counts_clip_at_the_border(self):
        expl = ExplorationState(5, 5)
        expl.record((0, 0))
        expl.record((2, 2))
        self.assertEqual(expl.counts.sum(), 4 + 9)
        self.assertEqual(expl.counts[1, 1], 2)
        self.assertEqual(expl.t, 3)
        expl.new_board()
        self.assertEqual(expl.counts.sum(), 0)
        self.assertEqual(expl.t, 1)

    def test_linear_epsilon_schedule(self):
        self.assertEqual(linear_epsilon(3, 5, 10), 1.0)
        self.assertAlmostEqual(linear_epsilon(10, 5, 10), 0.55)
        self.assertEqual(linear_epsilon(40, 5, 10), 0.1)


class ReplayTests(SimpleTestCase):
    def test_fifo_eviction(self):
        buffer = ReplayBuffer(3)
        for k in range(5):
            buffer.push(_entry(0, cell=(k, 0)))
        self.assertEqual([e.cell[0] for e in buffer], [2, 3, 4])

    def test_balanced_sample(self):
        buffer = ReplayBuffer(20)
        buffer.push(_entry(1))
        for _ in range(9):
            buffer.push(_entry(0))
        batch = buffer.sample_balanced(7, np.random.default_rng(0))
        self.assertEqual(sum(e.position_label for e in batch), 4)
        self.assertAlmostEqual(buffer.positive_fraction(), 0.1)

    def test_uniform_fallback_without_positives(self):
        buffer = ReplayBuffer(4)
        buffer.push(_entry(0))
        self.assertEqual(len(buffer.sample_balanced(5, np.random.default_rng(0))), 5)

    def test_empty_buffer(self):
        with self.assertRaises(StateError):
            ReplayBuffer(2).sample_balanced(2, np.random.default_rng(0))
        with self.assertRaises(ContractError):
            ReplayBuffer(0)

    def test_entry_contract(self):
        with self.assertRaises(ContractError):
            _entry(2)
        entry = _entry(1, direction=4)
        self.assertEqual(entry.rewards[4], 1)
        self.assertEqual(int((entry.rewards == UNTRIED).sum()), 17)


class NetworkTests(SimpleTestCase):
    def test_position_net_output(self):
        net = PositionNet(16, 20, (4, 8), (4, 2), rng=np.random.default_rng(0))
        out = net(np.random.default_rng(1).normal(size=(2, 4, 16, 20))).data
        self.assertEqual(out.shape, (2, 16, 20))
        self.assertTrue(np.all((out >= 0) & (out <= 1)))

    def test_position_net_rejects_indivisible_grid(self):
        with self.assertRaises(ConfigurationError):
            PositionNet(15, 20, (4, 8), (4, 2))
        net = PositionNet(16, 20, (4, 8), (4, 2))
        with self.assertRaises(ConfigurationError):
            net(np.zeros((1, 3, 16, 20)))

    def test_direction_net_output(self):
        net = DirectionNet(16, 20, (4, 8), (8,), rng=np.random.default_rng(0))
        out = net(np.zeros((3, 5, 16, 20))).data
        self.assertEqual(out.shape, (3, 18))
        self.assertTrue(np.all((out > 0) & (out < 1)))

    def test_gaussian_encoding_peaks_on_cell(self):
        encoding = encode_position_gaussian((3, 4), (8, 10), 2.0)
        self.assertEqual(encoding.shape, (1, 8, 10))
        self.assertEqual(encoding[0, 3, 4], 1.0)
        self.assertEqual(np.unravel_index(encoding[0].argmax(), (8, 10)), (3, 4))
        with self.assertRaises(ContractError):
            encode_position_gaussian((8, 0), (8, 10), 2.0)

    def test_policy_checkpoint(self):
        policy, other = _tiny_policy(0), _tiny_policy(1)
        obs = small_board(0).observe()
        with tempfile.TemporaryDirectory() as tmp:
            policy.save(Path(tmp) / "policy")
            other.load(Path(tmp) / "policy")
        np.testing.assert_array_equal(policy.affordance(obs), other.affordance(obs))


class CandidateTests(SimpleTestCase):
    def test_one_cell_per_blob(self):
        affordance = np.zeros((10, 10))
        affordance[1, 1], affordance[1, 2] = 0.9, 0.95
        affordance[8, 7], affordance[8, 8] = 0.85, 0.8
        self.assertEqual(cluster_hot_cells(affordance, 0.7, 2), [(1, 2), (8, 7)])

    def test_nothing_hot(self):
        self.assertEqual(cluster_hot_cells(np.full((4, 4), 0.2), 0.7, 3), [])

    def test_single_cluster_is_hottest_cell(self):
        affordance = np.zeros((4, 4))
        affordance[2, 3], affordance[0, 0] = 0.99, 0.8
        self.assertEqual(cluster_hot_cells(affordance, 0.7, 1), [(2, 3)])

    def test_invalid_arguments(self):
        with self.assertRaises(ContractError):
            cluster_hot_cells(np.zeros((2, 2)), 1.0, 2)
        with self.assertRaises(ContractError):
            cluster_hot_cells(np.zeros((2, 2)), 0.5, 0)

    def test_candidates_are_actions_on_the_board(self):
        board = small_board(0)
        obs = board.observe()
        for action in extract_action_candidates(_tiny_policy(), obs, board.spec, tau=0.01, k=3):
            cell_of(board.spec, action)


class SelectionTests(SimpleTestCase):
    def setUp(self):
        self.board = small_board(2)
        self.policy = _tiny_policy()
        self.rng = np.random.default_rng(0)

    def test_phase_one_tries_every_direction(self):
        expl = ExplorationState(16, 20)
        selection = select_action(self.policy, self.board.observe(), self.board.spec, expl, 1, self.rng)
        self.assertEqual(selection.directions, tuple(range(18)))
        self.assertTrue(selection.random_position)
        self.assertEqual(expl.t, 2)

    def test_phase_three_greedy(self):
        obs = self.board.observe()
        expl = ExplorationState(16, 20, epsilon=0.0, epsilon_direction=0.0)
        selection = select_action(self.policy, obs, self.board.spec, expl, 3, self.rng, use_ucb=False)
        affordance = self.policy.affordance(obs)
        self.assertEqual(selection.cell, np.unravel_index(int(affordance.argmax()), affordance.shape))
        best = int(np.argmax(self.policy.direction_scores(obs, selection.cell)))
        self.assertEqual(selection.directions, (best,))
        self.assertFalse(selection.random_position)

    def test_unknown_phase(self):
        with self.assertRaises(ContractError):
            select_action(self.policy, self.board.observe(), self.board.spec,
                          ExplorationState(16, 20), 4, self.rng)

    def test_phase_one_commits_the_rewarded_direction(self):
        option = next(o for o in self.board.oracle_actions())
        cell = cell_of(self.board.spec, option.action)
        action = action_at(self.board.spec, cell, 0, self.board.observe().depth)
        entry, outcome = execute_selection(self.board, Selection(cell, action, tuple(range(18)), False),
                                           self.policy)
        self.assertTrue(outcome.effective)
        self.assertEqual(entry.direction, PRESS_DIRECTION)
        self.assertEqual(entry.reward, 1)
        self.assertEqual(int(entry.rewards.sum()), 1)
        self.assertEqual(entry.position_label, 1)

    def test_joint_reward_source(self):
        empty = next((i, j) for i in range(16) for j in range(20) if self.board.spec.object_at(i, j) is None)
        action = action_at(self.board.spec, empty, PRESS_DIRECTION, self.board.observe().depth)
        entry, outcome = execute_selection(self.board, Selection(empty, action, (PRESS_DIRECTION,), True),
                                           self.policy, reward_source="joint", keep_colors=False)
        self.assertFalse(outcome.effective)
        self.assertEqual(entry.reward, 0)
        self.assertIsNone(entry.color_before)
        with self.assertRaises(StateError):
            entry.image_reward(self.board.delta)
        with self.assertRaises(ConfigurationError):
            execute_selection(self.board, Selection(empty, action, (5,), True), self.policy, "sound")


class EvaluationTests(SimpleTestCase):
    def test_micro_averaging(self):
        score = score_interactions([([True, False, True], {0}, 2), ([False], set(), 1)])
        self.assertEqual(score.precision, 0.5)
        self.assertAlmostEqual(score.recall, 1 / 3)

    def test_empty_records(self):
        score = score_interactions([])
        self.assertEqual((score.precision, score.recall), (0.0, 0.0))

    def test_greedy_rollout(self):
        boards = [small_board(k) for k in range(2)]
        score = eval_interaction(_tiny_policy(), boards, 3, tiny_interaction(), np.random.default_rng(0))
        self.assertEqual(score.actions, 6)
        self.assertEqual(score.interactable, 2)
        with self.assertRaises(ContractError):
            eval_interaction(_tiny_policy(), [], 3, tiny_interaction(), np.random.default_rng(0))


class TrainingTests(SimpleTestCase):
    def test_curriculum_log(self):
        config = tiny_interaction()
        rng = np.random.default_rng(0)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "log.csv"
            result = train_interaction(lambda epoch, index: small_board(epoch, rng=rng), config, rng, path)
            self.assertTrue(path.exists())
        self.assertEqual(list(result.log.columns), LOG_COLUMNS)
        self.assertEqual(list(result.log.phase), [1, 1, 2, 3])
        self.assertTrue(np.isnan(result.log.position_loss.iloc[0]))
        self.assertTrue(np.isfinite(result.log.position_loss.iloc[1]))
        self.assertTrue(np.isfinite(result.log.direction_loss.iloc[3]))
        self.assertEqual(len(result.buffer), 12)

    def test_replay_rewards_match_stored_images(self):
        config = tiny_interaction(boards_per_epoch=5, actions_per_board=10, buffer_capacity=200)
        rng = np.random.default_rng(1)
        result = train_interaction(lambda epoch, index: small_board(5 * epoch + index, rng=rng),
                                   config, rng)
        self.assertEqual(len(result.buffer), 200)
        self.assertEqual(result.buffer.mislabeled(small_board(0).delta), [])

    def test_direction_net_is_frozen_before_phase_two(self):
        config = tiny_interaction(epochs=2, phase2_start=2, phase3_start=2)
        boards = np.random.default_rng(9)
        result = train_interaction(lambda epoch, index: small_board(epoch, rng=boards), config,
                                   np.random.default_rng(3))
        seed = np.random.default_rng(3).integers(2**32)
        untrained = InteractionPolicy.build(16, 20, config, np.random.default_rng(seed))
        trained = result.policy.direction.params.state_dict()
        for name, value in untrained.direction.params.state_dict().items():
            np.testing.assert_array_equal(trained[name], value)
        changed = result.policy.position.params.state_dict()
        self.assertTrue(any(not np.array_equal(changed[name], value)
                            for name, value in untrained.position.params.state_dict().items()))

    def test_joint_lr_only_from_phase_three(self):
        config = tiny_interaction(lr=1e-3, joint_lr=1e-5)
        self.assertEqual([config.phase_lr(p) for p in (1, 2, 3)], [1e-3, 1e-3, 1e-5])
        seen = []

        def recording_fit(part, optimizer, *args):
            seen.append((isinstance(part, DirectionNet), optimizer.lr))
            return _fit(part, optimizer, *args)

        rng = np.random.default_rng(0)
        with mock.patch("busybot.interact.training._fit", side_effect=recording_fit):
            train_interaction(lambda epoch, index: small_board(epoch, rng=rng), config, rng)
        self.assertEqual(seen, [(False, 1e-3), (False, 1e-3), (True, 1e-3), (False, 1e-5), (True, 1e-5)])

    def test_phase_boundaries_validated(self):
        with self.assertRaises(ConfigurationError):
            tiny_interaction(phase2_start=4, phase3_start=3).validate()
        with self.assertRaises(ConfigurationError):
            tiny_interaction(reward_source="sound").validate()


@tag("property")
class ExplorationPropertyTests(SimpleTestCase):
    @given(st.floats(0, 1), st.integers(1, 10_000), st.integers(0, 50))
    def test_ucb_never_lowers_affordance(self, p, t, n):
        expl = ExplorationState(1, 1, t=t)
        expl.counts[0, 0] = n
        adjusted = ucb_adjust(np.array([[p]]), expl)[0, 0]
        self.assertAlmostEqual(adjusted, p + 0.5 * np.sqrt(np.log(t) / max(n, 1)), places=12)
        self.assertGreaterEqual(adjusted, p)

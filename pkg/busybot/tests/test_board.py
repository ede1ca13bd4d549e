from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase, tag
from hypothesis import given
from hypothesis import strategies as st

from busybot.board.env import BusyBoard
from busybot.board.generate import (
    GenerationConfig, generate_board, generate_board_retrying, in_instance_pool, is_multi_stage,
    rerandomize_relations,
)
from busybot.board.goals import sample_goal
from busybot.board.io import spec_from_dict, spec_to_dict
from busybot.board.kinematics import apply_action, apply_with_retry, reset
from busybot.board.render import changed_cells, default_delta, image_diff_reward, render
from busybot.board.spec import DIRECTIONS, PRESS_DIRECTION, Action, Rect, action_at, cell_of, opposite_direction
from busybot.exceptions import ConfigurationError, ContractError, TaskGenerationError
from busybot.tests.factories import MULTIDIR, MULTILINK, SMALL, small_board, small_spec


def _press_option(board):
    return next(o for o in board.oracle_actions()
                if board.spec.object(o.object_id).category == "switch-small")


class GenerationTests(SimpleTestCase):
    def test_same_seed_same_board(self):
        self.assertEqual(spec_to_dict(generate_board(11, SMALL)), spec_to_dict(generate_board(11, SMALL)))

    def test_footprints_keep_a_margin(self):
        for seed in range(15):
            spec, _ = generate_board_retrying(seed)
            for a in spec.objects:
                for b in spec.objects:
                    if a.object_id < b.object_id:
                        self.assertFalse(a.footprint.intersects(b.footprint, margin=1))

    def test_every_responder_has_one_controller(self):
        for seed in range(15):
            spec, _ = generate_board_retrying(seed)
            controllers = {}
            for edge in spec.relations.edges:
                controllers.setdefault(edge.responder_id, set()).add(edge.trigger_id)
            self.assertEqual(sorted(controllers), sorted(r.object_id for r in spec.responders))
            self.assertTrue(all(len(c) == 1 for c in controllers.values()))
            self.assertTrue(all(spec.object(e.trigger_id).is_trigger for e in spec.relations.edges))

    def test_multidir_unit_drives_multi_stage_responder(self):
        spec = small_spec(2, MULTIDIR)
        lever = spec.triggers[0]
        responder = spec.object(spec.relations.edges[0].responder_id)
        self.assertEqual(lever.category, "switch-multidir")
        self.assertTrue(is_multi_stage(responder))
        self.assertEqual(len(spec.relations.edges), 3)

    def test_multilink_unit_has_one_edge_per_link(self):
        spec = small_spec(4, MULTILINK)
        switch = spec.triggers[0]
        self.assertEqual(len(switch.links), 2)
        self.assertEqual(sorted(e.link_id for e in spec.relations.edges), [0, 1])

    def test_rerandomized_relations_keep_layout(self):
        spec = generate_board_retrying(5)[0]
        other = rerandomize_relations(spec, np.random.default_rng(1))
        self.assertEqual(other.objects, spec.objects)
        self.assertEqual(len(other.relations.edges), len(spec.relations.edges))

    def test_heldout_pool_never_overlaps_training_pool(self):
        heldout = replace(SMALL, instance_pool="heldout", height=24, width=30)
        for seed in range(5):
            spec, _ = generate_board_retrying(seed, heldout)
            for obj in spec.objects:
                self.assertTrue(in_instance_pool(obj, "heldout"))
                self.assertFalse(in_instance_pool(obj, "train"))

    def test_invalid_configuration(self):
        with self.assertRaises(ConfigurationError):
            GenerationConfig(min_objects=1).validate()
        with self.assertRaises(ConfigurationError):
            GenerationConfig(units=("bogus",)).validate()
        with self.assertRaises(ConfigurationError):
            GenerationConfig(units=("multidir:9",)).validate()
        with self.assertRaises(ConfigurationError):
            GenerationConfig(instance_pool="unseen").validate()

    def test_spec_json_round_trip(self):
        spec = generate_board_retrying(8)[0]
        self.assertEqual(spec_to_dict(spec_from_dict(spec_to_dict(spec))), spec_to_dict(spec))


class KinematicsTests(SimpleTestCase):
    def test_oracle_actions_are_effective_and_rewarded(self):
        for seed in range(6):
            board = small_board(seed, MULTIDIR if seed % 2 else SMALL)
            for option in board.oracle_actions():
                trial = board.copy()
                outcome, reward = trial.step(option.action)
                self.assertTrue(outcome.effective)
                self.assertEqual(reward, 1)
                self.assertEqual(trial.state.joints[option.object_id][option.link_id], option.joint)
                for responder, stage in option.effects.items():
                    self.assertEqual(trial.state.stages[responder], stage)

    def test_input_state_is_not_mutated(self):
        board = small_board(1)
        before = board.state.copy()
        apply_action(board.state, _press_option(board).action)
        self.assertEqual(board.state.joints, before.joints)
        self.assertEqual(board.state.stages, before.stages)

    def test_press_toggles_back(self):
        board = small_board(3)
        option = _press_option(board)
        start = board.state.copy()
        board.step(option.action)
        board.step(_press_option(board).action)
        self.assertEqual(board.state.joints, start.joints)
        self.assertEqual(board.state.stages, start.stages)

    def test_action_on_bare_board_is_ineffective(self):
        board = small_board(2)
        empty = next((i, j) for i in range(board.spec.height) for j in range(board.spec.width)
                     if board.spec.object_at(i, j) is None)
        outcome, reward = board.step(action_at(board.spec, empty, PRESS_DIRECTION, board.observe().depth))
        self.assertFalse(outcome.effective)
        self.assertEqual(reward, 0)

    def test_retry_uses_opposite_direction(self):
        board = small_board(6)
        upward = _press_option(board).action.with_direction(opposite_direction(PRESS_DIRECTION))
        state, outcome, executed = apply_with_retry(board.state, upward)
        self.assertTrue(outcome.effective)
        self.assertEqual(executed.direction, PRESS_DIRECTION)
        self.assertEqual(state.step, board.state.step + 1)

    def test_failed_retry_counts_one_step(self):
        board = small_board(2)
        empty = next((i, j) for i in range(board.spec.height) for j in range(board.spec.width)
                     if board.spec.object_at(i, j) is None)
        action = action_at(board.spec, empty, PRESS_DIRECTION, board.observe().depth)
        state, outcome, executed = apply_with_retry(board.state, action)
        self.assertFalse(outcome.effective)
        self.assertIs(executed, action)
        self.assertEqual(state.step, board.state.step + 1)

    def test_step_with_retry_returns_observation_before(self):
        board = small_board(6)
        first = board.observe()
        outcome, reward, _, before = board.step_with_retry(_press_option(board).action)
        self.assertIs(before, first)
        self.assertTrue(outcome.effective)
        self.assertEqual(reward, 1)

    def test_disconnected_responders_do_not_change(self):
        config = replace(SMALL, responder_effects=False)
        board = BusyBoard.from_spec(small_spec(7, config), np.random.default_rng(0))
        stages = dict(board.state.stages)
        outcome, reward = board.step(_press_option(board).action)
        self.assertTrue(outcome.effective)
        self.assertEqual(outcome.responder_changes, ())
        self.assertEqual(board.state.stages, stages)
        self.assertEqual(reward, 0)

    def test_reset_is_consistent_with_relations(self):
        spec = small_spec(9, MULTIDIR)
        state = reset(spec, np.random.default_rng(4))
        edges = {next(iter(e.stage_map)): e for e in spec.relations.edges}
        joint = state.joints[spec.triggers[0].object_id][0]
        responder = edges[joint].responder_id
        self.assertEqual(state.stages[responder], edges[joint].stage_map[joint])


class RenderTests(SimpleTestCase):
    def test_default_delta(self):
        self.assertEqual(default_delta(60, 80), 4)
        self.assertEqual(default_delta(480, 640), 256)

    def test_render_shapes(self):
        board = small_board(0)
        obs = board.observe()
        self.assertEqual(obs.depth.shape, (16, 20))
        self.assertEqual(obs.color.shape, (3, 16, 20))
        self.assertEqual(obs.policy_input().shape, (4, 16, 20))
        self.assertEqual(obs.policy_input("rgb").shape, (4, 16, 20))
        np.testing.assert_allclose(np.linalg.norm(obs.normals, axis=0), 1.0)

    def test_reward_threshold_is_strict(self):
        obs = render(small_board(0).state)
        other = replace(obs, color=obs.color.copy())
        other.color[:, 0, :3] += 0.5
        self.assertEqual(int(changed_cells(obs, other).sum()), 3)
        self.assertEqual(image_diff_reward(obs, other, 3), 0)
        self.assertEqual(image_diff_reward(obs, other, 2), 1)

    def test_mismatched_shapes_rejected(self):
        obs = small_board(0).observe()
        other = small_board(0, MULTIDIR).observe()
        with self.assertRaises(ContractError):
            changed_cells(obs, other)

    def test_cells_off_the_board(self):
        spec = small_spec(0)
        with self.assertRaises(ContractError):
            cell_of(spec, Action((-1.0, 2.0, 0.0), 0))
        with self.assertRaises(ContractError):
            action_at(spec, (16, 0), 0, np.zeros((16, 20)))
        with self.assertRaises(ContractError):
            Action((0.0, 0.0, 0.0), 18)

    def test_rect_intersection_margin(self):
        a, b = Rect(0, 0, 2, 2), Rect(0, 3, 2, 2)
        self.assertFalse(a.intersects(b))
        self.assertTrue(a.intersects(b, margin=1))


class GoalTests(SimpleTestCase):
    def test_goal_differs_from_start(self):
        board = small_board(1)
        goal, obs = sample_goal(board.spec, board.state, np.random.default_rng(2), "one-to-one")
        self.assertNotEqual(goal.stages, board.state.stages)
        self.assertEqual(obs.shape, (16, 20))

    def test_one_to_many_needs_compatible_trigger(self):
        board = small_board(1)
        with self.assertRaises(TaskGenerationError):
            sample_goal(board.spec, board.state, np.random.default_rng(2), "one-to-many")

    def test_unknown_kind(self):
        board = small_board(1)
        with self.assertRaises(ContractError):
            sample_goal(board.spec, board.state, np.random.default_rng(2), "many-to-many")

    def test_disconnected_board_has_no_goal(self):
        config = replace(SMALL, responder_effects=False)
        board = BusyBoard.from_spec(small_spec(1, config), np.random.default_rng(0))
        with self.assertRaises(TaskGenerationError):
            sample_goal(board.spec, board.state, np.random.default_rng(2), "one-to-one")


@tag("property")
class DirectionPropertyTests(SimpleTestCase):
    @given(st.integers(0, len(DIRECTIONS) - 1))
    def test_opposite_is_involution(self, index):
        opposite = opposite_direction(index)
        self.assertEqual(opposite_direction(opposite), index)
        np.testing.assert_allclose(DIRECTIONS[opposite], -DIRECTIONS[index])

    @given(st.integers(0, 10_000))
    def test_generation_is_deterministic(self, seed):
        first, used = generate_board_retrying(seed, SMALL)
        again, used_again = generate_board_retrying(seed, SMALL)
        self.assertEqual(used, used_again)
        self.assertEqual(spec_to_dict(first), spec_to_dict(again))

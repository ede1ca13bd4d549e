import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from busybot.board.env import BusyBoard
from busybot.board.spec import PRESS_DIRECTION, action_at
from busybot.exceptions import ConfigurationError, ContractError, EpisodeError, TaskGenerationError
from busybot.learncore.params import ParamSet
from busybot.plan.agents import (
    busybot_filter, diff_slots, oracle_agent_step, predictive_agent_step, relation_agent_step,
)
from busybot.plan.episode import PlanConfig, PlanResult, Planner, run_episode, success_rate
from busybot.plan.tasks import generate_tasks, load_tasks, save_tasks
from busybot.reason.dataset import acted_slot, oracle_candidates
from busybot.reason.features import NODE_SLOTS, build_node_features, occupancy
from busybot.reason.nets import DynamicsNet, SceneGraphEstimate
from busybot.reason.training import ReasonModel
from busybot.tests.factories import MULTIDIR, MULTILINK, small_board, small_spec, tiny_reason


def true_graph(spec):
    types = np.zeros((NODE_SLOTS, NODE_SLOTS, 2))
    types[..., 0] = 1.0
    for trigger, responder in spec.relations.object_edges():
        types[trigger, responder] = (0.0, 1.0)
    return SceneGraphEstimate(types, np.zeros((NODE_SLOTS, NODE_SLOTS, 4)))


def _tasks(kind="one-to-one", config=None, count=3, seed=0):
    if config is None:
        return generate_tasks(lambda k: small_spec(k), kind, count, np.random.default_rng(seed))
    return generate_tasks(lambda k: small_spec(k, config), kind, count, np.random.default_rng(seed))


class TaskTests(SimpleTestCase):
    def test_goals_differ_from_start(self):
        for task in _tasks():
            self.assertNotEqual(task.goal.stages, task.initial.stages)
            self.assertEqual(task.goal.nodes.shape[0], NODE_SLOTS)

    def test_boards_without_compatible_trigger_fail(self):
        with self.assertRaises(TaskGenerationError):
            _tasks("one-to-many", count=1)
        with self.assertRaises(ContractError):
            _tasks("all-to-all", count=1)

    def test_task_file(self):
        tasks = _tasks("one-to-many", MULTILINK, count=2)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "tasks.json"
            save_tasks(path, tasks)
            loaded = load_tasks(path)
        for original, restored in zip(tasks, loaded):
            self.assertEqual(restored.goal.stages, original.goal.stages)
            self.assertEqual(restored.initial.joints, original.initial.joints)
            self.assertEqual(restored.initial.stages, original.initial.stages)
            np.testing.assert_allclose(restored.goal.nodes, original.goal.nodes)


class OracleTests(SimpleTestCase):
    def test_oracle_solves_one_to_one(self):
        results = [run_episode("oracle", task, None, np.random.default_rng(0)) for task in _tasks()]
        self.assertEqual(success_rate(results), 1.0)
        self.assertTrue(all(r.terminated_by == "goal" for r in results))

    def test_oracle_solves_one_to_many(self):
        for config in (MULTIDIR, MULTILINK):
            for task in _tasks("one-to-many", config, count=2):
                result = run_episode("oracle", task, None, np.random.default_rng(0))
                self.assertEqual(result.success_fraction, 1.0)

    def test_oracle_success_rate_over_a_task_set(self):
        tasks = _tasks(count=10, seed=7) + _tasks("one-to-many", MULTILINK, count=4, seed=7)
        results = [run_episode("oracle", task, None, np.random.default_rng(0)) for task in tasks]
        self.assertEqual(success_rate(results), 1.0)

    def test_unreachable_stage(self):
        task = _tasks(count=1)[0]
        responder = next(iter(task.goal.stages))
        with self.assertRaises(EpisodeError):
            oracle_agent_step(task.initial, {responder: 7})

    def test_nothing_left_to_do(self):
        task = _tasks(count=1)[0]
        self.assertIsNone(oracle_agent_step(task.initial, dict(task.initial.stages)))


class AgentTests(SimpleTestCase):
    def setUp(self):
        self.task = _tasks(count=1)[0]
        self.spec = self.task.spec
        self.graph = true_graph(self.spec)
        self.planner = Planner(oracle_candidates, None, explore_steps=6, inference_steps=4)

    def test_diff_slots_are_changed_responders(self):
        nodes = build_node_features(self.task.goal.observation, self.spec)
        self.assertEqual(diff_slots(nodes, self.task.goal.nodes, self.graph), [])
        start = BusyBoard(self.spec, self.task.initial.copy())
        changed = [r for r, s in self.task.goal.stages.items() if self.task.initial.stages[r] != s]
        current = build_node_features(start.observe(), self.spec)
        self.assertEqual(diff_slots(current, self.task.goal.nodes, self.graph), changed)

    def test_relation_agent_picks_a_controller(self):
        board = small_board(0)
        candidates = oracle_candidates(board, None)
        responder = self.spec.responders[0].object_id
        trigger, _ = self.spec.relations.controller_of(responder)
        action = relation_agent_step(self.graph, responder, candidates, self.spec, np.random.default_rng(0))
        self.assertEqual(acted_slot(self.spec, action), trigger)
        self.assertIsNone(relation_agent_step(self.graph, responder, [], self.spec, np.random.default_rng(0)))

    def test_relation_agent_with_true_graph(self):
        result = run_episode("relation", self.task, self.planner, np.random.default_rng(0), graph=self.graph)
        self.assertEqual(result.success_fraction, 1.0)
        self.assertEqual(result.steps, 1)

    def test_relation_agent_budget_is_the_diff_size(self):
        empty = SceneGraphEstimate(np.stack([np.ones((NODE_SLOTS, NODE_SLOTS)),
                                             np.zeros((NODE_SLOTS, NODE_SLOTS))], axis=-1),
                                   np.zeros((NODE_SLOTS, NODE_SLOTS, 4)))
        result = run_episode("relation", self.task, self.planner, np.random.default_rng(0), graph=empty)
        self.assertEqual(result.steps, 0)
        self.assertEqual(result.terminated_by, "relation-agent-exhausted")
        self.assertLess(result.success_fraction, 1.0)

    def test_busybot_filter_keeps_controller_actions(self):
        board = small_board(0)
        candidates = oracle_candidates(board, None)
        empty = next((i, j) for i in range(16) for j in range(20) if self.spec.object_at(i, j) is None)
        stray = action_at(self.spec, empty, PRESS_DIRECTION, board.observe().depth)
        responder = self.spec.responders[0].object_id
        kept = busybot_filter(candidates + [stray], self.graph, [responder], self.spec)
        self.assertEqual(kept, candidates)
        self.assertEqual(busybot_filter([stray], self.graph, [responder], self.spec), [stray])
        self.assertEqual(busybot_filter(candidates, self.graph, [], self.spec), candidates)

    def test_predictive_agent_returns_a_candidate(self):
        dynamics = DynamicsNet(ParamSet(np.random.default_rng(0)), width=8, action_width=8, embedding=4)
        board = small_board(0)
        candidates = oracle_candidates(board, None)
        nodes = build_node_features(board.observe(), self.spec)
        occupied = occupancy(self.spec)
        action = predictive_agent_step(candidates, dynamics, self.graph, nodes, self.task.goal.nodes,
                                       self.spec, occupied)
        self.assertIn(action, candidates)
        self.assertIsNone(predictive_agent_step([], dynamics, self.graph, nodes, self.task.goal.nodes,
                                                self.spec, occupied))

    def test_predictive_ties_go_to_the_first_candidate(self):
        with mock.patch("busybot.plan.agents.predicted_distances", return_value=np.array([2.0, 1.0, 1.0])):
            action = predictive_agent_step(["a", "b", "c"], None, self.graph, None, None, self.spec,
                                           occupancy(self.spec))
        self.assertEqual(action, "b")

    def test_learned_agents_stop_at_the_step_budget(self):
        model = ReasonModel(tiny_reason(), np.random.default_rng(0))
        idle = Planner(lambda board, rng: [], model, explore_steps=6, inference_steps=4)
        for agent in ("predictive", "busybot"):
            result = run_episode(agent, self.task, idle, np.random.default_rng(0), max_steps=8,
                                 graph=self.graph)
            self.assertEqual(result.steps, 8)
            self.assertEqual(result.terminated_by, "budget")
            self.assertEqual(result.actions, [])
            self.assertLess(result.success_fraction, 1.0)

    def test_busybot_filter_never_drops_the_goal_action(self):
        for task in _tasks(count=5, seed=3):
            board = BusyBoard(task.spec, task.initial.copy())
            graph = true_graph(task.spec)
            goal_action = oracle_agent_step(task.initial, task.goal.stages)
            nodes = build_node_features(board.observe(), task.spec)
            diff = diff_slots(nodes, task.goal.nodes, graph)
            kept = busybot_filter(oracle_candidates(board, None), graph, diff, task.spec)
            self.assertIn(acted_slot(task.spec, goal_action), {acted_slot(task.spec, a) for a in kept})

    def test_unknown_agent(self):
        with self.assertRaises(ContractError):
            run_episode("telepathic", self.task, self.planner, np.random.default_rng(0))


class MetricTests(SimpleTestCase):
    def test_partial_success(self):
        result = PlanResult(0, "oracle", final_stages={1: 0, 2: 1}, goal_stages={1: 1, 2: 1})
        self.assertEqual(result.success_fraction, 0.5)
        self.assertEqual(success_rate([result, PlanResult(1, "oracle")]), 0.75)
        with self.assertRaises(ContractError):
            success_rate([])

    def test_config_validation(self):
        with self.assertRaises(ConfigurationError):
            PlanConfig(agents=("relation", "lucky")).validate()
        with self.assertRaises(ConfigurationError):
            PlanConfig(tasks=0).validate()
        self.assertEqual(PlanConfig().validate().max_steps, 8)

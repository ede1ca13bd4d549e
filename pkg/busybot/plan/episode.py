"""Episode execution and the object-level success metric."""

import logging
from dataclasses import dataclass, field

import numpy as np

from busybot.board.env import BusyBoard
from busybot.exceptions import ConfigurationError, ContractError
from busybot.plan.agents import (
    AGENT_KINDS, busybot_agent_step, diff_slots, oracle_agent_step, predictive_agent_step,
    relation_agent_step,
)
from busybot.reason.dataset import record_trajectory
from busybot.reason.features import build_node_features, occupancy

logger = logging.getLogger(__name__)

MAX_STEPS = 8


@dataclass(frozen=True)
class PlanConfig:
    tasks: int = 50
    max_steps: int = MAX_STEPS
    explore_steps: int = 30
    kinds: tuple = ("one-to-one", "one-to-many")
    agents: tuple = AGENT_KINDS

    def validate(self):
        if self.tasks < 1 or self.max_steps < 1:
            raise ConfigurationError("planning needs at least one task and one step")
        unknown = set(self.agents) - set(AGENT_KINDS)
        if unknown:
            raise ConfigurationError(f"unknown agents {sorted(unknown)}")
        unknown = set(self.kinds) - {"one-to-one", "one-to-many"}
        if unknown:
            raise ConfigurationError(f"unknown task kinds {sorted(unknown)}")
        return self


@dataclass
class PlanResult:
    task_id: int
    agent: str
    actions: list = field(default_factory=list)
    observations: list = field(default_factory=list)
    final_stages: dict = field(default_factory=dict)
    goal_stages: dict = field(default_factory=dict)
    steps: int = 0
    terminated_by: str = "budget"

    @property
    def success_fraction(self):
        if not self.goal_stages:
            return 1.0
        matched = sum(self.final_stages[r] == s for r, s in self.goal_stages.items())
        return matched / len(self.goal_stages)


@dataclass
class Planner:
    """What the learned agents use: a candidate source plus the reasoning model."""

    candidate_source: object
    model: object = None
    explore_steps: int = 30
    inference_steps: int = 23

    def infer_graph(self, task, rng):
        """Explore a copy of the task board from its initial state and read the graph off."""
        board = BusyBoard(task.spec, task.initial.copy())
        trajectory = record_trajectory(board, self.candidate_source, rng, self.explore_steps,
                                       self.inference_steps)
        return self.model.infer(trajectory)


def _goal_reached(board, goal):
    return all(board.state.stages[r] == s for r, s in goal.stages.items())


def run_episode(agent, task, planner, rng, max_steps=MAX_STEPS, graph=None):
    if agent not in AGENT_KINDS:
        raise ContractError(f"unknown agent {agent!r}")
    board = BusyBoard(task.spec, task.initial.copy())
    result = PlanResult(task.task_id, agent, goal_stages=dict(task.goal.stages))
    occupied = occupancy(task.spec)
    if agent != "oracle" and graph is None:
        graph = planner.infer_graph(task, rng)
    diff = []
    if agent == "relation":
        diff = diff_slots(build_node_features(board.observe(), task.spec), task.goal.nodes, graph)
        budget = len(diff)
    else:
        budget = max_steps
    for step in range(budget):
        if _goal_reached(board, task.goal):
            break
        obs = board.observe()
        if agent == "oracle":
            action = oracle_agent_step(board.state, task.goal.stages)
        else:
            nodes = build_node_features(obs, task.spec)
            candidates = planner.candidate_source(board, rng)
            if agent == "relation":
                action = relation_agent_step(graph, diff[step], candidates, task.spec, rng)
            elif agent == "predictive":
                action = predictive_agent_step(candidates, planner.model.dynamics, graph, nodes,
                                               task.goal.nodes, task.spec, occupied)
            else:
                current_diff = diff_slots(nodes, task.goal.nodes, graph)
                action = busybot_agent_step(candidates, graph, planner.model.dynamics, nodes,
                                            task.goal.nodes, current_diff, task.spec, occupied)
        result.steps += 1
        if action is None:
            continue
        board.step_with_retry(action)
        result.actions.append(action)
        result.observations.append(board.observe())
    result.final_stages = dict(board.state.stages)
    if _goal_reached(board, task.goal):
        result.terminated_by = "goal"
    elif agent == "relation":
        result.terminated_by = "relation-agent-exhausted"
    logger.debug("task %d %s: %d steps, %s", task.task_id, agent, result.steps, result.terminated_by)
    return result


def success_rate(results):
    if not results:
        raise ContractError("success_rate needs at least one episode")
    return float(np.mean([r.success_fraction for r in results]))

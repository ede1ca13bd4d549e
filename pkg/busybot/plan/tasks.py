"""Goal-conditioned planning tasks and their task file."""

import json
import logging
from dataclasses import dataclass

import numpy as np

from busybot.board.goals import TASK_KINDS, sample_goal
from busybot.board.io import spec_from_dict, spec_to_dict
from busybot.board.kinematics import reset, stages_from_joints
from busybot.board.spec import BoardState
from busybot.exceptions import ConfigurationError, ContractError, TaskGenerationError
from busybot.reason.features import build_node_features

logger = logging.getLogger(__name__)

TASK_FORMAT_VERSION = 1


@dataclass
class GoalSpec:
    observation: object
    nodes: np.ndarray
    stages: dict  # hidden ground truth, read by the harness only


@dataclass
class Task:
    task_id: int
    kind: str
    spec: object
    initial: BoardState
    goal: GoalSpec
    goal_joints: dict

    @property
    def board_seed(self):
        return self.spec.seed


def make_task(task_id, kind, spec, rng):
    initial = reset(spec, rng)
    goal_state, goal_obs = sample_goal(spec, initial, rng, kind)
    goal = GoalSpec(goal_obs, build_node_features(goal_obs, spec), dict(goal_state.stages))
    return Task(task_id, kind, spec, initial, goal, {k: list(v) for k, v in goal_state.joints.items()})


def generate_tasks(spec_factory, kind, count, rng, attempts_per_task=20):
    """``count`` tasks of ``kind``; boards without a compatible trigger are skipped.

    ``spec_factory(k)`` returns the k-th candidate BoardSpec.
    """
    if kind not in TASK_KINDS:
        raise ContractError(f"unknown task kind {kind!r}")
    tasks, k = [], 0
    while len(tasks) < count:
        if k >= count * attempts_per_task:
            raise TaskGenerationError(f"only {len(tasks)} of {count} {kind} tasks could be generated")
        spec = spec_factory(k)
        k += 1
        try:
            tasks.append(make_task(len(tasks), kind, spec, rng))
        except TaskGenerationError as exc:
            logger.debug("board %d skipped for %s tasks: %s", spec.seed, kind, exc)
    return tasks


def task_to_dict(task):
    return {
        "task_id": task.task_id,
        "kind": task.kind,
        "board_seed": task.board_seed,
        "initial_joints": {str(k): list(v) for k, v in sorted(task.initial.joints.items())},
        "goal_stages": {str(k): v for k, v in sorted(task.goal.stages.items())},
        "goal_joints": {str(k): list(v) for k, v in sorted(task.goal_joints.items())},
        "board": spec_to_dict(task.spec),
    }


def save_tasks(path, tasks):
    with open(path, "w") as handle:
        json.dump({"format_version": TASK_FORMAT_VERSION, "tasks": [task_to_dict(t) for t in tasks]},
                  handle, indent=2, sort_keys=True)


def load_tasks(path):
    from busybot.board.render import render

    with open(path) as handle:
        data = json.load(handle)
    if data.get("format_version") != TASK_FORMAT_VERSION:
        raise ConfigurationError(f"{path}: unsupported task file format")
    tasks = []
    for item in data["tasks"]:
        spec = spec_from_dict(item["board"])
        joints = {int(k): list(v) for k, v in item["initial_joints"].items()}
        initial = BoardState(spec, joints, stages_from_joints(spec, joints), 0)
        goal_stages = {int(k): v for k, v in item["goal_stages"].items()}
        goal_joints = {int(k): list(v) for k, v in item["goal_joints"].items()}
        goal_state = BoardState(spec, goal_joints, goal_stages, 0)
        goal_obs = render(goal_state)
        goal = GoalSpec(goal_obs, build_node_features(goal_obs, spec), goal_stages)
        tasks.append(Task(item["task_id"], item["kind"], spec, initial, goal, goal_joints))
    return tasks

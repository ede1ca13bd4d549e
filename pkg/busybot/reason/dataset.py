"""Interaction trajectories for relation discovery."""

import logging
from dataclasses import dataclass

import numpy as np

from busybot.board.env import BusyBoard
from busybot.board.generate import rerandomize_relations
from busybot.board.spec import DIRECTIONS, action_at, cell_of
from busybot.exceptions import ContractError
from busybot.interact.candidates import extract_action_candidates
from busybot.reason.features import (
    NODE_DIM, NODE_SLOTS, build_node_features, occupancy, responder_mask, stage_descriptors,
)

logger = logging.getLogger(__name__)

TOTAL_STEPS = 30
INFERENCE_STEPS = 23
BLOCK_SIZE = 20


@dataclass
class Trajectory:
    board_seed: int
    nodes: np.ndarray  # T_total x N x D, frame t observed before action t
    actions: np.ndarray  # T_total x 6 normalized action vectors
    acted: np.ndarray  # T_total acted slot, -1 for none
    effective: np.ndarray  # T_total
    stages: np.ndarray  # T_total x N, -1 outside responders
    stage_table: np.ndarray  # N x MAX_STAGES x D
    stage_counts: np.ndarray  # N
    occupied: np.ndarray  # N
    responders: np.ndarray  # N
    relations: tuple  # object-level (trigger, responder) pairs
    split: int = INFERENCE_STEPS

    def __post_init__(self):
        if not 2 <= self.split < self.length:
            raise ContractError(f"split {self.split} must lie in [2, {self.length})")

    @property
    def length(self):
        return self.nodes.shape[0]

    @property
    def horizon(self):
        return self.length - self.split


def normalized_action(spec, action):
    x, y, z = action.position
    return np.concatenate([
        [x / (spec.width * spec.cell_size), y / (spec.height * spec.cell_size), z / 10.0],
        DIRECTIONS[action.direction],
    ])


def acted_slot(spec, action):
    obj = spec.object_at(*cell_of(spec, action))
    return -1 if obj is None else obj.object_id


def random_cell_action(board, rng):
    obs = board.observe()
    cell = tuple(int(v) for v in np.unravel_index(int(rng.integers(obs.depth.size)), obs.shape))
    return action_at(board.spec, cell, int(rng.integers(len(DIRECTIONS))), obs.depth)


def learned_candidates(policy, tau=0.7, k=8):
    def source(board, rng):
        return extract_action_candidates(policy, board.observe(), board.spec, tau, k)

    return source


def oracle_candidates(board, rng):
    return [option.action for option in board.oracle_actions()]


def random_candidates(board, rng):
    return [random_cell_action(board, rng)]


def _fallback_action(board, rng):
    """Uniform random cell among those standing above the board surface."""
    obs = board.observe()
    raised = np.flatnonzero(obs.depth.reshape(-1) > 0)
    if raised.size == 0:
        return random_cell_action(board, rng)
    cell = tuple(int(v) for v in np.unravel_index(int(raised[int(rng.integers(raised.size))]), obs.shape))
    return action_at(board.spec, cell, int(rng.integers(len(DIRECTIONS))), obs.depth)


def record_trajectory(board, candidate_source, rng, steps=TOTAL_STEPS, split=INFERENCE_STEPS):
    spec = board.spec
    table, counts = stage_descriptors(board.state)
    responders = responder_mask(spec)
    nodes = np.zeros((steps, NODE_SLOTS, NODE_DIM))
    actions = np.zeros((steps, 6))
    acted = np.full(steps, -1, dtype=np.int64)
    effective = np.zeros(steps, dtype=bool)
    stages = np.full((steps, NODE_SLOTS), -1, dtype=np.int64)
    for t in range(steps):
        nodes[t] = build_node_features(board.observe(), spec)
        for obj in spec.responders:
            stages[t, obj.object_id] = board.state.stages[obj.object_id]
        candidates = candidate_source(board, rng)
        if candidates:
            action = candidates[int(rng.integers(len(candidates)))]
        else:
            action = _fallback_action(board, rng)
        outcome, _, executed, _ = board.step_with_retry(action)
        actions[t] = normalized_action(spec, executed)
        acted[t] = acted_slot(spec, executed)
        effective[t] = outcome.effective
    return Trajectory(
        board_seed=spec.seed, nodes=nodes, actions=actions, acted=acted, effective=effective,
        stages=stages, stage_table=table, stage_counts=counts, occupied=occupancy(spec),
        responders=responders, relations=tuple(spec.relations.object_edges()), split=split,
    )


def collect_reason_dataset(board_factory, candidate_source, board_count, rng,
                           block_size=BLOCK_SIZE, steps=TOTAL_STEPS, split=INFERENCE_STEPS):
    """Trajectories over blocks of boards sharing layout and colors but not relations.

    ``board_factory(block)`` returns the block's base BoardSpec.
    """
    trajectories = []
    for start in range(0, board_count, block_size):
        base = board_factory(start // block_size)
        for _ in range(min(block_size, board_count - start)):
            spec = rerandomize_relations(base, rng)
            board = BusyBoard.from_spec(spec, rng)
            trajectories.append(record_trajectory(board, candidate_source, rng, steps, split))
        logger.info("collected %d/%d trajectories", len(trajectories), board_count)
    rate = np.mean([t.effective.mean() for t in trajectories]) if trajectories else 0.0
    logger.info("dataset effective-action rate %.3f", rate)
    return trajectories


def stack(trajectories, field):
    return np.stack([getattr(t, field) for t in trajectories])



"""Discrete link kinematics and relation propagation."""

import logging
from dataclasses import dataclass

import numpy as np

from busybot.board.spec import DIRECTIONS, PRESS_DIRECTION, BoardState, action_at, cell_of, opposite_direction

logger = logging.getLogger(__name__)

PRESS_TOLERANCE_DEG = 30.0
_DOWN = np.array((0.0, 0.0, -1.0))


@dataclass(frozen=True)
class Outcome:
    effective: bool
    moved_link: object = None  # (object id, link id)
    responder_changes: tuple = ()  # (responder id, old stage, new stage)


def _press_permitted(direction):
    cosine = float(np.clip(DIRECTIONS[direction] @ _DOWN, -1.0, 1.0))
    return np.degrees(np.arccos(cosine)) <= PRESS_TOLERANCE_DEG + 1e-9


def target_joint(link, joint, direction):
    """Joint state ``direction`` would move ``link`` into, or None if ineffective."""
    if link.motion == "press":
        return 1 - joint if _press_permitted(direction) else None
    if direction in link.directions:
        target = link.directions.index(direction)
        return target if target != joint else None
    return None


def link_at(state, i, j):
    for obj in state.spec.triggers:
        for link in obj.links:
            if link.rect_at(state.joints[obj.object_id][link.link_id]).contains(i, j):
                return obj, link
    return None


def stages_from_joints(spec, joints):
    stages = {r.object_id: 0 for r in spec.responders}
    for edge in spec.relations.edges:
        joint = joints[edge.trigger_id][edge.link_id]
        if joint in edge.stage_map:
            stages[edge.responder_id] = edge.stage_map[joint]
    return stages


def reset(spec, rng):
    joints = {
        obj.object_id: [int(rng.choice(link.joint_states)) for link in obj.links]
        for obj in spec.triggers
    }
    return BoardState(spec, joints, stages_from_joints(spec, joints), 0)


def apply_action(state, action):
    """Advance ``state`` by one action; the input state is never mutated."""
    spec = state.spec
    i, j = cell_of(spec, action)
    successor = state.copy()
    successor.step += 1
    hit = link_at(state, i, j)
    if hit is None:
        return successor, Outcome(False)
    obj, link = hit
    target = target_joint(link, state.joints[obj.object_id][link.link_id], action.direction)
    if target is None:
        return successor, Outcome(False)
    successor.joints[obj.object_id][link.link_id] = target
    changes = []
    if spec.responder_effects:
        for edge in spec.relations.edges_from(obj.object_id, link.link_id):
            if target not in edge.stage_map:
                continue
            old, new = successor.stages[edge.responder_id], edge.stage_map[target]
            if old != new:
                successor.stages[edge.responder_id] = new
                changes.append((edge.responder_id, old, new))
    return successor, Outcome(True, (obj.object_id, link.link_id), tuple(changes))


def apply_with_retry(state, action):
    """Try ``action``; when ineffective, try the exact opposite direction.

    Returns (state, outcome, executed action).
    """
    successor, outcome = apply_action(state, action)
    if outcome.effective:
        return successor, outcome, action
    reverse = action.with_direction(opposite_direction(action.direction))
    retried, retry_outcome = apply_action(state, reverse)
    if retry_outcome.effective:
        return retried, retry_outcome, reverse
    return retried, retry_outcome, action


@dataclass(frozen=True)
class OracleAction:
    action: object
    object_id: int
    link_id: int
    joint: int  # joint state reached
    effects: dict  # responder id -> stage reached


def oracle_actions(state, depth=None):
    """Every effective action in ``state``, one per reachable joint state."""
    from busybot.board.render import render

    spec = state.spec
    if depth is None:
        depth = render(state).depth
    options = []
    for obj in spec.triggers:
        for link in obj.links:
            joint = state.joints[obj.object_id][link.link_id]
            rect = link.rect_at(joint)
            cell = (rect.row + rect.height // 2, rect.col + rect.width // 2)
            if link.motion == "press":
                moves = [(PRESS_DIRECTION, 1 - joint)]
            else:
                moves = [(d, k) for k, d in enumerate(link.directions) if k != joint]
            for direction, reached in moves:
                effects = {}
                if spec.responder_effects:
                    effects = {
                        e.responder_id: e.stage_map[reached]
                        for e in spec.relations.edges_from(obj.object_id, link.link_id)
                        if reached in e.stage_map
                    }
                options.append(OracleAction(action_at(spec, cell, direction, depth),
                                            obj.object_id, link.link_id, reached, effects))
    return options

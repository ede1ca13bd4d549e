"""Relation, predictive, BusyBot and oracle planning agents."""

import logging

import numpy as np

from busybot.board.kinematics import oracle_actions
from busybot.exceptions import EpisodeError
from busybot.reason.dataset import acted_slot, normalized_action
from busybot.reason.features import APPEARANCE_DIM, build_node_features
from busybot.reason.nets import predict_next

logger = logging.getLogger(__name__)

AGENT_KINDS = ("relation", "predictive", "busybot", "oracle")
DIFF_THRESHOLD = 1e-6


def diff_slots(nodes_now, goal_nodes, graph):
    """Inferred responders whose appearance differs from the goal, ascending."""
    changed = np.linalg.norm(nodes_now[:, :APPEARANCE_DIM] - goal_nodes[:, :APPEARANCE_DIM], axis=1)
    return [slot for slot in graph.responders() if changed[slot] > DIFF_THRESHOLD]


def diff_responders(obs_now, obs_goal, spec, graph):
    return diff_slots(build_node_features(obs_now, spec), build_node_features(obs_goal, spec), graph)


def candidates_on(spec, candidates, trigger):
    return [k for k, action in enumerate(candidates) if acted_slot(spec, action) == trigger]


def relation_agent_step(graph, target, candidates, spec, rng):
    """Random inbound trigger of ``target``, then a random candidate on it; None to skip."""
    triggers = [t for t in graph.controllers_of(target) if candidates_on(spec, candidates, t)]
    if not triggers:
        logger.warning("relation agent: no candidate on any controller of slot %d", target)
        return None
    trigger = triggers[int(rng.integers(len(triggers)))]
    options = candidates_on(spec, candidates, trigger)
    return candidates[options[int(rng.integers(len(options)))]]


def predicted_distances(candidates, dynamics, graph, nodes_now, goal_nodes, spec, occupied, slots):
    distances = []
    for action in candidates:
        prediction = predict_next(dynamics, nodes_now, normalized_action(spec, action),
                                  acted_slot(spec, action), graph, occupied)
        distances.append(float(np.linalg.norm(prediction[slots] - goal_nodes[slots])))
    return np.array(distances)


def predictive_agent_step(candidates, dynamics, graph, nodes_now, goal_nodes, spec, occupied):
    """Candidate whose one-step prediction lands closest to the goal on responder slots."""
    if not candidates:
        logger.warning("predictive agent: no candidates, step skipped")
        return None
    slots = graph.responders() or list(np.flatnonzero(occupied))
    distances = predicted_distances(candidates, dynamics, graph, nodes_now, goal_nodes, spec,
                                    occupied, slots)
    return candidates[int(np.argmin(distances))]


def busybot_filter(candidates, graph, diff, spec):
    triggers = {i for i, j in graph.edges() if j in diff}
    kept = [a for a in candidates if acted_slot(spec, a) in triggers]
    return kept or list(candidates)


def busybot_agent_step(candidates, graph, dynamics, nodes_now, goal_nodes, diff, spec, occupied):
    if not candidates:
        logger.warning("busybot agent: no candidates, step skipped")
        return None
    kept = busybot_filter(candidates, graph, diff, spec)
    if len(kept) == 1:
        return kept[0]
    return predictive_agent_step(kept, dynamics, graph, nodes_now, goal_nodes, spec, occupied)


def oracle_agent_step(state, goal_stages):
    """Ground-truth action moving the first differing responder to its goal stage."""
    diff = sorted(r for r, stage in goal_stages.items() if state.stages[r] != stage)
    if not diff:
        return None
    target = diff[0]
    for option in oracle_actions(state):
        if option.effects.get(target) == goal_stages[target]:
            return option.action
    raise EpisodeError(f"goal stage {goal_stages[target]} of responder {target} is unreachable")

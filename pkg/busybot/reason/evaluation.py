import logging
from dataclasses import dataclass

import numpy as np

from busybot.exceptions import ContractError
from busybot.reason.features import nearest_stage
from busybot.reason.nets import predict_next, rollout

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgeScore:
    precision: float
    recall: float
    predicted: int
    truth: int
    correct: int


def eval_edges(estimates, truths, threshold=0.5):
    """Micro-averaged Edge-P / Edge-R; ``truths`` holds object-level (trigger, responder) pairs."""
    if len(estimates) != len(truths):
        raise ContractError(f"{len(estimates)} estimates for {len(truths)} boards")
    predicted = truth = correct = 0
    for estimate, edges in zip(estimates, truths):
        found = estimate.edges(threshold)
        edges = {tuple(e) for e in edges}
        predicted += len(found)
        truth += len(edges)
        correct += len(found & edges)
    precision = correct / predicted if predicted else 1.0
    recall = correct / truth if truth else 1.0
    return EdgeScore(precision, recall, predicted, truth, correct)


def stage_accuracy(predictions, trajectory, frames):
    """(correct, total) of nearest-stage matches for responder slots at ``frames``."""
    correct = total = 0
    for prediction, frame in zip(predictions, frames):
        for slot in np.flatnonzero(trajectory.responders):
            guess = nearest_stage(prediction[slot], trajectory.stage_table[slot],
                                  trajectory.stage_counts[slot])
            correct += int(guess == trajectory.stages[frame, slot])
            total += 1
    return correct, total


def horizon_predictions(dynamics, graph, trajectory, mode="one-step"):
    first = trajectory.split - 1
    steps = range(first, trajectory.length - 1)
    if mode == "one-step":
        return [
            predict_next(dynamics, trajectory.nodes[t], trajectory.actions[t], int(trajectory.acted[t]),
                         graph, trajectory.occupied)
            for t in steps
        ]
    if mode == "rollout":
        return list(rollout(dynamics, graph, trajectory.nodes[first],
                            trajectory.actions[first:-1], trajectory.acted[first:-1],
                            trajectory.occupied))
    raise ContractError(f"unknown prediction mode {mode!r}")


def eval_predictions(dynamics, graphs, trajectories, mode="one-step"):
    """Pred-A over every responder slot and horizon frame."""
    correct = total = 0
    for graph, trajectory in zip(graphs, trajectories):
        predictions = horizon_predictions(dynamics, graph, trajectory, mode)
        hits, count = stage_accuracy(predictions, trajectory, range(trajectory.split, trajectory.length))
        correct += hits
        total += count
    return correct / total if total else 0.0


def evaluate_reasoning(model, trajectories):
    """Edge-P, Edge-R and both Pred-A variants for a trained model."""
    graphs = [model.infer(t) for t in trajectories]
    scores = {
        "pred_a": eval_predictions(model.dynamics, graphs, trajectories, "one-step"),
        "pred_a_rollout": eval_predictions(model.dynamics, graphs, trajectories, "rollout"),
    }
    if model.inference is not None:
        edges = eval_edges(graphs, [t.relations for t in trajectories], model.config.edge_threshold)
        scores.update(edge_p=edges.precision, edge_r=edges.recall)
    logger.info("reasoning eval: %s", ", ".join(f"{k} {v:.3f}" for k, v in scores.items()))
    return scores, graphs

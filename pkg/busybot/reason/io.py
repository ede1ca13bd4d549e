"""Trajectory dataset files and scene-graph reports."""

import json

import numpy as np

from busybot.exceptions import ConfigurationError
from busybot.reason.dataset import Trajectory, stack

DATASET_FORMAT_VERSION = 1
_ARRAY_FIELDS = ("nodes", "actions", "acted", "effective", "stages", "stage_table",
                 "stage_counts", "occupied", "responders")


def save_dataset(path, trajectories):
    if not trajectories:
        raise ConfigurationError("refusing to write an empty trajectory dataset")
    first = trajectories[0]
    longest = max(len(t.relations) for t in trajectories)
    relations = np.full((len(trajectories), max(longest, 1), 2), -1, dtype="<i8")
    for k, t in enumerate(trajectories):
        if t.relations:
            relations[k, : len(t.relations)] = t.relations
    header = np.array([DATASET_FORMAT_VERSION, first.nodes.shape[1], first.nodes.shape[2],
                       first.split, first.length, len(trajectories)], dtype="<i8")
    arrays = {name: stack(trajectories, name) for name in _ARRAY_FIELDS}
    with open(path, "wb") as handle:
        np.savez(handle, header=header, relations=relations,
                 seeds=np.array([t.board_seed for t in trajectories], dtype="<i8"), **arrays)


def load_dataset(path):
    with np.load(path) as archive:
        version, _, _, split, _, count = (int(v) for v in archive["header"])
        if version != DATASET_FORMAT_VERSION:
            raise ConfigurationError(f"{path}: unsupported dataset format {version}")
        arrays = {name: archive[name] for name in _ARRAY_FIELDS}
        relations, seeds = archive["relations"], archive["seeds"]
    trajectories = []
    for k in range(count):
        pairs = tuple((int(a), int(b)) for a, b in relations[k] if a >= 0)
        trajectories.append(Trajectory(board_seed=int(seeds[k]), relations=pairs, split=split,
                                       **{name: arrays[name][k] for name in _ARRAY_FIELDS}))
    return trajectories


def scene_graph_report(estimate, board_seed):
    probability = estimate.relation_probability
    rows, cols = np.nonzero(~np.eye(probability.shape[0], dtype=bool))
    return {
        "board_seed": int(board_seed),
        "threshold": estimate.threshold,
        "pairs": [
            {"source": int(i), "target": int(j), "probability": round(float(probability[i, j]), 6)}
            for i, j in zip(rows, cols)
            if probability[i, j] > 0.0
        ],
    }


def write_scene_graph_reports(path, estimates, trajectories):
    with open(path, "w") as handle:
        json.dump([scene_graph_report(e, t.board_seed) for e, t in zip(estimates, trajectories)],
                  handle, indent=2)

"""Per-object node features built from a rendered observation."""

import numpy as np

from busybot.board.render import render
from busybot.board.spec import MAX_OBJECTS, MAX_STAGES, PALETTE

APPEARANCE_DIM = 16
POSITION_DIM = 3
NODE_DIM = APPEARANCE_DIM + POSITION_DIM
NODE_SLOTS = MAX_OBJECTS


def appearance_descriptor(obs, rect, grid_cells):
    rows, cols = rect.slices()
    color = obs.color[:, rows, cols].reshape(3, -1)
    depth = obs.depth[rows, cols].reshape(-1)
    distances = np.linalg.norm(color.T[:, None, :] - PALETTE[None], axis=2)
    histogram = np.bincount(distances.argmin(axis=1), minlength=len(PALETTE)) / depth.size
    return np.concatenate([
        color.mean(axis=1),
        histogram,
        [depth.mean() / 10.0, depth.var() / 10.0, 10.0 * rect.area / grid_cells,
         rect.width / rect.height, 0.0],
    ])


def object_position(spec, obj):
    row, col = obj.footprint.center
    return np.array([col / spec.width, row / spec.height, obj.base_height / 10.0])


def build_node_features(obs, spec):
    """N x D block; triggers keep only their position, vacant slots stay zero."""
    nodes = np.zeros((NODE_SLOTS, NODE_DIM))
    grid_cells = spec.height * spec.width
    for obj in spec.objects:
        if not obj.is_trigger:
            nodes[obj.object_id, :APPEARANCE_DIM] = appearance_descriptor(obs, obj.footprint, grid_cells)
        nodes[obj.object_id, APPEARANCE_DIM:] = object_position(spec, obj)
    return nodes


def occupancy(spec):
    mask = np.zeros(NODE_SLOTS, dtype=bool)
    mask[: len(spec.objects)] = True
    return mask


def responder_mask(spec):
    mask = np.zeros(NODE_SLOTS, dtype=bool)
    for obj in spec.responders:
        mask[obj.object_id] = True
    return mask


def stage_descriptors(state):
    """(N, MAX_STAGES, D) canonical node features of every responder stage, plus stage counts."""
    spec = state.spec
    table = np.zeros((NODE_SLOTS, MAX_STAGES, NODE_DIM))
    counts = np.zeros(NODE_SLOTS, dtype=np.int64)
    for obj in spec.responders:
        counts[obj.object_id] = obj.stage_count
        for stage in range(obj.stage_count):
            variant = state.copy()
            variant.stages[obj.object_id] = stage
            table[obj.object_id, stage] = build_node_features(render(variant), spec)[obj.object_id]
    return table, counts


def nearest_stage(descriptor, table, count):
    distances = np.linalg.norm(table[:count] - descriptor, axis=1)
    return int(np.argmin(distances))

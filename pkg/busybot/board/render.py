"""Top-down grid renderer and the image-difference reward."""

from dataclasses import dataclass

import numpy as np

from busybot.board.spec import FIXTURE_COLOR, PALETTE, SWITCH_COLOR
from busybot.exceptions import ContractError

DIFF_TOLERANCE = 1e-9
TEXTURE_CONTRAST = 0.12


@dataclass(frozen=True)
class Observation:
    depth: np.ndarray  # H x W
    normals: np.ndarray  # 3 x H x W
    color: np.ndarray  # 3 x H x W

    @property
    def shape(self):
        return self.depth.shape

    def policy_input(self, mode="depth"):
        """4-channel network input: depth + normals, or rgb + gray."""
        if mode == "depth":
            return np.concatenate([self.depth[None], self.normals])
        if mode == "rgb":
            gray = self.color.mean(axis=0, keepdims=True)
            return np.concatenate([self.color, gray])
        raise ContractError(f"unknown input mode {mode!r}")


def _texture(texture, height, width):
    i, j = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    patterns = (
        np.zeros((height, width)),
        (i // 2) % 2,
        (j // 2) % 2,
        (i // 2 + j // 2) % 2,
        ((i + j) // 3) % 2,
    )
    return 1.0 - TEXTURE_CONTRAST * patterns[texture]


def _side_strip(rect, orientation):
    """The 1-cell strip of ``rect`` on the side named by ``orientation``."""
    rows, cols = rect.slices()
    if orientation == 0:
        return slice(rows.stop - 1, rows.stop), cols
    if orientation == 1:
        return rows, slice(cols.stop - 1, cols.stop)
    if orientation == 2:
        return slice(rows.start, rows.start + 1), cols
    return rows, slice(cols.start, cols.start + 1)


def _paint(depth, color, region, height, rgb):
    depth[region] = height
    color[(slice(None),) + region] = np.asarray(rgb)[:, None, None]


def _paint_trigger(obj, joints, depth, color):
    _paint(depth, color, obj.footprint.slices(), obj.base_height, SWITCH_COLOR)
    for link, joint in zip(obj.links, joints):
        lift = 1.0 if link.motion == "press" else 2.0
        height = obj.base_height + lift + link.height_offset(joint)
        _paint(depth, color, link.rect_at(joint).slices(), height, SWITCH_COLOR)


def _paint_responder(obj, stage, depth, color):
    region = obj.footprint.slices()
    base = obj.base_height
    if obj.category == "lamp":
        _paint(depth, color, region, base + 1.0, PALETTE[obj.palette[stage]])
        _paint(depth, color, _side_strip(obj.footprint, obj.orientation), base + 2.0, FIXTURE_COLOR)
    elif obj.category == "door":
        if stage == 0:
            _paint(depth, color, region, base + 2.0, PALETTE[obj.palette[0]])
        else:
            _paint(depth, color, region, base, PALETTE[obj.palette[1]])
            _paint(depth, color, _side_strip(obj.footprint, obj.orientation), base + 4.0,
                   PALETTE[obj.palette[0]])
    else:
        segment = obj.footprint.height
        for k in range(obj.stage_count):
            cells = obj.footprint.row, obj.footprint.col + k * segment
            block = (slice(cells[0], cells[0] + segment), slice(cells[1], cells[1] + segment))
            if k == stage:
                _paint(depth, color, block, base + 2.0, PALETTE[obj.palette[0]])
            else:
                _paint(depth, color, block, base, PALETTE[obj.palette[1 + k]])


def surface_normals(depth, cell_size=1.0):
    """Unit normals of the height field from central differences of depth."""
    d_row, d_col = np.gradient(depth, cell_size)
    normals = np.stack([-d_col, -d_row, np.ones_like(depth)])
    return normals / np.linalg.norm(normals, axis=0, keepdims=True)


def render(state):
    spec = state.spec
    depth = np.zeros((spec.height, spec.width))
    base = PALETTE[spec.board_color][:, None, None] * _texture(spec.texture, spec.height, spec.width)
    color = np.array(base)
    for obj in spec.objects:
        if obj.is_trigger:
            _paint_trigger(obj, state.joints[obj.object_id], depth, color)
        else:
            _paint_responder(obj, state.stages[obj.object_id], depth, color)
    return Observation(depth, surface_normals(depth, spec.cell_size), np.clip(color, 0.0, 1.0))


def default_delta(height, width):
    return int(round(4 * height * width / 4800))


def changed_color_cells(color, other):
    if color.shape != other.shape:
        raise ContractError(f"observation shapes differ: {color.shape} vs {other.shape}")
    return np.any(np.abs(color - other) > DIFF_TOLERANCE, axis=0)


def changed_cells(obs, other):
    return changed_color_cells(obs.color, other.color)


def color_diff_reward(color, other, delta):
    return int(np.count_nonzero(changed_color_cells(color, other)) > delta)


def image_diff_reward(obs, other, delta):
    """1 when more than ``delta`` cells changed color, else 0."""
    return color_diff_reward(obs.color, other.color, delta)

"""Board description types, palettes and the canonical action directions."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from busybot.exceptions import ContractError

TRIGGER_CATEGORIES = ("switch-small", "switch-multidir", "switch-multilink")
RESPONDER_CATEGORIES = ("lamp", "door", "tracktoy")
CATEGORIES = TRIGGER_CATEGORIES + RESPONDER_CATEGORIES

MAX_OBJECTS = 10
MAX_STAGES = 4

PALETTE = np.array(
    [
        (0.90, 0.20, 0.20),
        (0.20, 0.65, 0.25),
        (0.20, 0.35, 0.85),
        (0.95, 0.80, 0.15),
        (0.60, 0.25, 0.70),
        (0.10, 0.70, 0.75),
        (0.95, 0.55, 0.10),
        (0.45, 0.30, 0.20),
    ]
)
SWITCH_COLOR = np.array((0.96, 0.96, 0.96))
FIXTURE_COLOR = np.array((0.18, 0.18, 0.18))
TEXTURE_COUNT = 5


def _canonical_directions():
    axes = [v for i in range(3) for v in (np.eye(3)[i], -np.eye(3)[i])]
    diagonals = []
    for a, b in ((0, 1), (0, 2), (1, 2)):
        for sa, sb in product((1.0, -1.0), repeat=2):
            v = np.zeros(3)
            v[a], v[b] = sa, sb
            diagonals.append(v / np.sqrt(2.0))
    return np.array(axes + diagonals)


DIRECTIONS = _canonical_directions()
DIRECTIONS.setflags(write=False)
PRESS_DIRECTION = 5  # (0, 0, -1)
HORIZONTAL_AXES = (0, 1, 2, 3)  # +x, -x, +y, -y


def direction_candidates():
    """The 18 unit directions: ±x, ±y, ±z, then the 12 normalized edge diagonals."""
    return DIRECTIONS.copy()


def opposite_direction(index):
    vector = -DIRECTIONS[index]
    return int(np.argmin(np.linalg.norm(DIRECTIONS - vector, axis=1)))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned cell rectangle: rows [row, row + height), cols [col, col + width)."""

    row: int
    col: int
    height: int
    width: int

    def shifted(self, d_row, d_col):
        return Rect(self.row + d_row, self.col + d_col, self.height, self.width)

    def contains(self, i, j):
        return self.row <= i < self.row + self.height and self.col <= j < self.col + self.width

    def intersects(self, other, margin=0):
        return not (
            self.row + self.height + margin <= other.row
            or other.row + other.height + margin <= self.row
            or self.col + self.width + margin <= other.col
            or other.col + other.width + margin <= self.col
        )

    def dilated(self, amount=1):
        return Rect(self.row - amount, self.col - amount, self.height + 2 * amount, self.width + 2 * amount)

    def slices(self):
        return slice(self.row, self.row + self.height), slice(self.col, self.col + self.width)

    @property
    def area(self):
        return self.height * self.width

    @property
    def center(self):
        return self.row + self.height / 2.0, self.col + self.width / 2.0


@dataclass(frozen=True)
class LinkSpec:
    link_id: int
    rect: Rect  # geometry at joint state 0 offset (0, 0)
    motion: str  # "press" or "slide"
    geometry: dict  # joint state -> (d_row, d_col, d_height)
    directions: tuple  # effective direction indices

    @property
    def joint_states(self):
        return tuple(sorted(self.geometry))

    def rect_at(self, joint):
        d_row, d_col, _ = self.geometry[joint]
        return self.rect.shifted(d_row, d_col)

    def height_offset(self, joint):
        return self.geometry[joint][2]


@dataclass(frozen=True)
class ObjectSpec:
    object_id: int
    category: str
    footprint: Rect
    base_height: float
    orientation: int  # quarter turns about z, θ_z = orientation * π/2
    links: tuple = ()
    stage_count: int = 2
    palette: tuple = ()  # color ids

    @property
    def role(self):
        return "trigger" if self.category in TRIGGER_CATEGORIES else "responder"

    @property
    def is_trigger(self):
        return self.role == "trigger"

    @property
    def theta_z(self):
        return self.orientation * np.pi / 2.0


@dataclass(frozen=True)
class RelationEdge:
    trigger_id: int
    link_id: int
    direction: object  # canonical direction index, or None for toggles
    responder_id: int
    stage_map: dict  # trigger joint state -> responder stage


@dataclass(frozen=True)
class RelationGraph:
    edges: tuple

    def object_edges(self):
        return sorted({(e.trigger_id, e.responder_id) for e in self.edges})

    def controller_of(self, responder_id):
        sources = {(e.trigger_id, e.link_id) for e in self.edges if e.responder_id == responder_id}
        return sources.pop() if len(sources) == 1 else None

    def edges_from(self, trigger_id, link_id=None):
        return [
            e for e in self.edges
            if e.trigger_id == trigger_id and (link_id is None or e.link_id == link_id)
        ]

    def edges_into(self, responder_id):
        return [e for e in self.edges if e.responder_id == responder_id]


@dataclass(frozen=True)
class BoardSpec:
    height: int
    width: int
    cell_size: float
    board_color: int
    texture: int
    objects: tuple
    relations: RelationGraph
    seed: int
    responder_effects: bool = True

    def object(self, object_id):
        return self.objects[object_id]

    @property
    def triggers(self):
        return [o for o in self.objects if o.is_trigger]

    @property
    def responders(self):
        return [o for o in self.objects if not o.is_trigger]

    def object_at(self, i, j):
        for obj in self.objects:
            if obj.footprint.contains(i, j):
                return obj
        return None


@dataclass
class BoardState:
    spec: BoardSpec = field(repr=False)
    joints: dict  # object id -> list of joint states per link
    stages: dict  # responder id -> stage index
    step: int = 0

    def copy(self):
        return BoardState(
            self.spec,
            {k: list(v) for k, v in self.joints.items()},
            dict(self.stages),
            self.step,
        )

    def stage_vector(self):
        return tuple(self.stages[o.object_id] for o in self.spec.responders)


@dataclass(frozen=True)
class Action:
    position: tuple  # world (x, y, z)
    direction: int

    def __post_init__(self):
        if not 0 <= self.direction < len(DIRECTIONS):
            raise ContractError(f"direction index {self.direction} outside [0, 18)")

    def with_direction(self, direction):
        return Action(self.position, direction)

    def as_vector(self):
        return np.concatenate([np.asarray(self.position, dtype=np.float64), DIRECTIONS[self.direction]])


def cell_of(spec, action):
    x, y = action.position[0], action.position[1]
    i, j = int(np.floor(y / spec.cell_size)), int(np.floor(x / spec.cell_size))
    if not (0 <= i < spec.height and 0 <= j < spec.width):
        raise ContractError(f"action position {action.position[:2]} is off the board")
    return i, j


def action_at(spec, cell, direction, depth):
    i, j = cell
    if not (0 <= i < spec.height and 0 <= j < spec.width):
        raise ContractError(f"cell {cell} is off the board")
    return Action(
        ((j + 0.5) * spec.cell_size, (i + 0.5) * spec.cell_size, float(depth[i, j])),
        int(direction),
    )

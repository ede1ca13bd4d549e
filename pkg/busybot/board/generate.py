"""Procedural board generation and trigger→responder relation assignment."""

import logging
from dataclasses import dataclass

import numpy as np

from busybot.board.spec import (
    HORIZONTAL_AXES, MAX_OBJECTS, MAX_STAGES, PRESS_DIRECTION, PALETTE, TEXTURE_COUNT,
    BoardSpec, LinkSpec, ObjectSpec, Rect, RelationEdge, RelationGraph,
)
from busybot.exceptions import ConfigurationError, GenerationError

logger = logging.getLogger(__name__)

UNIT_KINDS = ("one_to_one", "multidir", "multilink")

# Cell sizes per instance pool before grid scaling. "heldout" never overlaps "train".
INSTANCE_POOLS = {
    "train": {
        "button": (2,),
        "lever": (2,),
        "lamp": (4, 5),
        "door": (4, 5, 6),
        "segment": (3,),
    },
    "heldout": {
        "button": (3,),
        "lever": (3,),
        "lamp": (6, 7),
        "door": (7, 8),
        "segment": (4,),
    },
}

BASE_HEIGHT = {
    "switch-small": 2.0,
    "switch-multidir": 2.0,
    "switch-multilink": 2.0,
    "lamp": 1.0,
    "door": 1.0,
    "tracktoy": 1.0,
}

# slide axis index -> (d_row, d_col) of the latched lever
_SLIDE_OFFSETS = {0: (0, 1), 1: (0, -1), 2: (1, 0), 3: (-1, 0)}


@dataclass(frozen=True)
class GenerationConfig:
    height: int = 60
    width: int = 80
    cell_size: float = 1.0
    min_objects: int = 2
    max_objects: int = 10
    units: tuple = ()
    one_to_one_weight: float = 0.5
    multidir_weight: float = 0.25
    multilink_weight: float = 0.25
    instance_pool: str = "train"
    responder_effects: bool = True
    placement_retries: int = 100

    def validate(self):
        if not 2 <= self.min_objects <= self.max_objects <= MAX_OBJECTS:
            raise ConfigurationError(
                f"object bounds must satisfy 2 <= min <= max <= {MAX_OBJECTS}, "
                f"got {self.min_objects}..{self.max_objects}"
            )
        if self.instance_pool not in INSTANCE_POOLS:
            raise ConfigurationError(f"unknown instance pool {self.instance_pool!r}")
        if self.height < 8 or self.width < 8:
            raise ConfigurationError(f"grid {self.height}x{self.width} is too small")
        for unit in self.units:
            _parse_unit(unit)
        return self

    @property
    def scale(self):
        return max(1, self.height // 60)


def _parse_unit(unit):
    kind, _, arg = unit.partition(":")
    if kind not in UNIT_KINDS:
        raise ConfigurationError(f"unknown relation unit {unit!r}")
    count = int(arg) if arg else None
    if count is not None and not 2 <= count <= MAX_STAGES:
        raise ConfigurationError(f"unit {unit!r}: count must lie in [2, {MAX_STAGES}]")
    return kind, count


def _unit_cost(kind, count):
    return 1 + count if kind == "multilink" else 2


def _plan_units(rng, config):
    if config.units:
        return [_parse_unit(u) for u in config.units]
    budget = int(rng.integers(config.min_objects, config.max_objects + 1))
    weights = {
        "one_to_one": config.one_to_one_weight,
        "multidir": config.multidir_weight,
        "multilink": config.multilink_weight,
    }
    units, used = [], 0
    while True:
        remaining = budget - used
        options = [k for k in UNIT_KINDS if weights[k] > 0 and _unit_cost(k, 2) <= remaining]
        if not options:
            break
        p = np.array([weights[k] for k in options])
        kind = options[int(rng.choice(len(options), p=p / p.sum()))]
        if kind == "multilink":
            count = int(rng.integers(2, min(MAX_STAGES, remaining - 1) + 1))
        elif kind == "multidir":
            count = int(rng.integers(2, MAX_STAGES + 1))
        else:
            count = None
        units.append((kind, count))
        used += _unit_cost(kind, count or 2)
    return units or [("one_to_one", None)]


def _distinct_colors(rng, count):
    return tuple(int(c) for c in rng.permutation(len(PALETTE))[:count])


class _Shape:
    """Footprint size plus a builder placing the object at a given corner."""

    def __init__(self, height, width, build):
        self.height, self.width, self.build = height, width, build


def _switch_small(rng, pool, scale):
    button = int(rng.choice(pool["button"])) * scale
    side = button + 2

    def build(row, col, object_id):
        link = LinkSpec(0, Rect(row + 1, col + 1, button, button), "press",
                        {0: (0, 0, 0.0), 1: (0, 0, -1.0)}, (PRESS_DIRECTION,))
        return ObjectSpec(object_id, "switch-small", Rect(row, col, side, side),
                          BASE_HEIGHT["switch-small"], 0, (link,), 2, ())

    return _Shape(side, side, build)


def _switch_multidir(rng, pool, scale, stages):
    lever = int(rng.choice(pool["lever"])) * scale
    side = lever + 2
    axes = tuple(int(a) for a in rng.permutation(HORIZONTAL_AXES)[:stages])

    def build(row, col, object_id):
        geometry = {k: (*_SLIDE_OFFSETS[a], 0.0) for k, a in enumerate(axes)}
        link = LinkSpec(0, Rect(row + 1, col + 1, lever, lever), "slide", geometry, axes)
        return ObjectSpec(object_id, "switch-multidir", Rect(row, col, side, side),
                          BASE_HEIGHT["switch-multidir"], 0, (link,), stages, ())

    return _Shape(side, side, build)


def _switch_multilink(rng, pool, scale, links):
    button = int(rng.choice(pool["button"])) * scale
    height, width = button + 2, links * (button + 1) + 1

    def build(row, col, object_id):
        specs = tuple(
            LinkSpec(k, Rect(row + 1, col + 1 + k * (button + 1), button, button), "press",
                     {0: (0, 0, 0.0), 1: (0, 0, -1.0)}, (PRESS_DIRECTION,))
            for k in range(links)
        )
        return ObjectSpec(object_id, "switch-multilink", Rect(row, col, height, width),
                          BASE_HEIGHT["switch-multilink"], 0, specs, 2, ())

    return _Shape(height, width, build)


def _rotatable(rng, pool_sizes, scale, category, stages):
    rows = int(rng.choice(pool_sizes)) * scale
    cols = int(rng.choice(pool_sizes)) * scale
    orientation = int(rng.integers(4))
    if orientation % 2:
        rows, cols = cols, rows
    palette = _distinct_colors(rng, stages)

    def build(row, col, object_id):
        return ObjectSpec(object_id, category, Rect(row, col, rows, cols),
                          BASE_HEIGHT[category], orientation, (), stages, palette)

    return _Shape(rows, cols, build)


def _tracktoy(rng, pool, scale, stages):
    segment = int(rng.choice(pool["segment"])) * scale
    palette = _distinct_colors(rng, stages + 1)  # car, then one color per segment

    def build(row, col, object_id):
        return ObjectSpec(object_id, "tracktoy", Rect(row, col, segment, segment * stages),
                          BASE_HEIGHT["tracktoy"], 0, (), stages, palette)

    return _Shape(segment, segment * stages, build)


def _single_stage_responder(rng, pool, scale):
    if rng.random() < 0.5:
        return _rotatable(rng, pool["lamp"], scale, "lamp", 2)
    return _rotatable(rng, pool["door"], scale, "door", 2)


def _multi_stage_responder(rng, pool, scale, stages):
    if stages >= 3 and rng.random() < 0.5:
        return _rotatable(rng, pool["lamp"], scale, "lamp", stages)
    return _tracktoy(rng, pool, scale, stages)


def _unit_shapes(rng, kind, count, pool, scale):
    if kind == "one_to_one":
        return [_switch_small(rng, pool, scale), _single_stage_responder(rng, pool, scale)]
    if kind == "multidir":
        stages = count or int(rng.integers(2, MAX_STAGES + 1))
        return [_switch_multidir(rng, pool, scale, stages),
                _multi_stage_responder(rng, pool, scale, stages)]
    links = count or int(rng.integers(2, MAX_STAGES + 1))
    return [_switch_multilink(rng, pool, scale, links)] + [
        _single_stage_responder(rng, pool, scale) for _ in range(links)
    ]


def _place(rng, shapes, config):
    placed = []
    for object_id, shape in enumerate(shapes):
        if shape.height > config.height or shape.width > config.width:
            raise GenerationError(f"object {shape.height}x{shape.width} exceeds the board")
        for attempt in range(config.placement_retries):
            row = int(rng.integers(0, config.height - shape.height + 1))
            col = int(rng.integers(0, config.width - shape.width + 1))
            candidate = Rect(row, col, shape.height, shape.width)
            if not any(candidate.intersects(o.footprint, margin=1) for o in placed):
                placed.append(shape.build(row, col, object_id))
                break
        else:
            raise GenerationError(
                f"could not place object {object_id} after {config.placement_retries} attempts"
            )
        if attempt:
            logger.debug("object %d placed after %d retries", object_id, attempt)
    return placed


def is_multi_stage(obj):
    return obj.category == "tracktoy" or (obj.category == "lamp" and obj.stage_count > 2)


def assign_relations(objects, rng):
    """Pair every trigger with responders; each responder gets exactly one source."""
    triggers = [o for o in objects if o.is_trigger]
    responders = [o for o in objects if not o.is_trigger]
    if not triggers or not responders:
        raise GenerationError("relations need at least one trigger and one responder")
    multi = [responders[i] for i in rng.permutation(len(responders)) if is_multi_stage(responders[i])]
    single = [responders[i] for i in rng.permutation(len(responders)) if not is_multi_stage(responders[i])]
    edges = []

    multidirs = sorted((t for t in triggers if t.category == "switch-multidir"),
                       key=lambda t: (-t.stage_count, t.object_id))
    for trigger in multidirs:
        feasible = [r for r in multi if r.stage_count >= trigger.stage_count]
        if not feasible:
            raise GenerationError(f"no multi-stage responder for trigger {trigger.object_id}")
        responder = feasible[int(rng.integers(len(feasible)))]
        multi.remove(responder)
        stages = rng.permutation(responder.stage_count)[: trigger.stage_count]
        link = trigger.links[0]
        for k, direction in enumerate(link.directions):
            edges.append(RelationEdge(trigger.object_id, link.link_id, int(direction),
                                      responder.object_id, {k: int(stages[k])}))

    toggles = [t for t in triggers if t.category == "switch-multilink"] + [
        t for t in triggers if t.category == "switch-small"
    ]
    for trigger in toggles:
        if len(single) < len(trigger.links):
            raise GenerationError(
                f"trigger {trigger.object_id} needs {len(trigger.links)} single-stage responders"
            )
        for link in trigger.links:
            responder = single.pop(int(rng.integers(len(single))))
            polarity = int(rng.integers(2))
            edges.append(RelationEdge(trigger.object_id, link.link_id, None, responder.object_id,
                                      {0: polarity, 1: 1 - polarity}))

    if multi or single:
        left = sorted(r.object_id for r in multi + single)
        raise GenerationError(f"responders {left} would need a second controlling trigger")
    return RelationGraph(tuple(edges))


def generate_board(seed, config=None):
    """Deterministically build a board from ``(seed, config)``."""
    config = (config or GenerationConfig()).validate()
    rng = np.random.default_rng(seed)
    pool = INSTANCE_POOLS[config.instance_pool]
    board_color = int(rng.integers(len(PALETTE)))
    texture = int(rng.integers(TEXTURE_COUNT))
    shapes = []
    for kind, count in _plan_units(rng, config):
        shapes.extend(_unit_shapes(rng, kind, count, pool, config.scale))
    if len(shapes) > config.max_objects and not config.units:
        raise GenerationError(f"{len(shapes)} objects exceed the configured maximum")
    shapes = [shapes[i] for i in rng.permutation(len(shapes))]
    objects = tuple(_place(rng, shapes, config))
    relations = assign_relations(objects, rng)
    return BoardSpec(config.height, config.width, config.cell_size, board_color, texture,
                     objects, relations, int(seed), config.responder_effects)


def generate_board_retrying(seed, config=None, attempts=20):
    """Resample derived seeds until generation succeeds; returns (spec, used seed)."""
    for offset in range(attempts):
        candidate = int(seed) + offset * 1_000_003
        try:
            return generate_board(candidate, config), candidate
        except GenerationError as exc:
            logger.debug("seed %d rejected: %s", candidate, exc)
    raise GenerationError(f"no valid board within {attempts} seeds from {seed}")


def rerandomize_relations(spec, rng):
    """Same objects, colors and layout; fresh relation graph."""
    return BoardSpec(spec.height, spec.width, spec.cell_size, spec.board_color, spec.texture,
                     spec.objects, assign_relations(spec.objects, rng), spec.seed,
                     spec.responder_effects)


_POOL_KEYS = {
    "switch-small": "button",
    "switch-multilink": "button",
    "switch-multidir": "lever",
    "lamp": "lamp",
    "door": "door",
    "tracktoy": "segment",
}


def instance_sizes(obj, scale=1):
    """The pool sizes an object was built from, with the grid scale undone."""
    rect = obj.footprint
    if obj.is_trigger:
        return ((rect.height - 2) // scale,)
    if obj.category == "tracktoy":
        return (rect.height // scale,)
    return (rect.height // scale, rect.width // scale)


def in_instance_pool(obj, pool, scale=1):
    sizes = INSTANCE_POOLS[pool][_POOL_KEYS[obj.category]]
    return all(size in sizes for size in instance_sizes(obj, scale))

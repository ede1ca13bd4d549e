"""Board spec JSON files and observation dumps."""

import json

import numpy as np

from busybot.board.render import Observation
from busybot.board.spec import BoardSpec, LinkSpec, ObjectSpec, Rect, RelationEdge, RelationGraph
from busybot.exceptions import ConfigurationError

SPEC_FORMAT_VERSION = 1
OBSERVATION_FORMAT_VERSION = 1


def _rect(rect):
    return [rect.row, rect.col, rect.height, rect.width]


def spec_to_dict(spec):
    return {
        "format_version": SPEC_FORMAT_VERSION,
        "seed": spec.seed,
        "height": spec.height,
        "width": spec.width,
        "cell_size": spec.cell_size,
        "board_color": spec.board_color,
        "texture": spec.texture,
        "responder_effects": spec.responder_effects,
        "objects": [
            {
                "id": o.object_id,
                "category": o.category,
                "footprint": _rect(o.footprint),
                "base_height": o.base_height,
                "orientation": o.orientation,
                "stage_count": o.stage_count,
                "palette": list(o.palette),
                "links": [
                    {
                        "id": link.link_id,
                        "rect": _rect(link.rect),
                        "motion": link.motion,
                        "geometry": {str(k): list(v) for k, v in sorted(link.geometry.items())},
                        "directions": list(link.directions),
                    }
                    for link in o.links
                ],
            }
            for o in spec.objects
        ],
        "relations": [
            {
                "trigger": e.trigger_id,
                "link": e.link_id,
                "direction": e.direction,
                "responder": e.responder_id,
                "stage_map": {str(k): v for k, v in sorted(e.stage_map.items())},
            }
            for e in spec.relations.edges
        ],
    }


def spec_from_dict(data):
    if data.get("format_version") != SPEC_FORMAT_VERSION:
        raise ConfigurationError(f"unsupported board spec format {data.get('format_version')!r}")
    objects = tuple(
        ObjectSpec(
            o["id"], o["category"], Rect(*o["footprint"]), float(o["base_height"]),
            o["orientation"],
            tuple(
                LinkSpec(
                    link["id"], Rect(*link["rect"]), link["motion"],
                    {int(k): (int(v[0]), int(v[1]), float(v[2])) for k, v in link["geometry"].items()},
                    tuple(link["directions"]),
                )
                for link in o["links"]
            ),
            o["stage_count"], tuple(o["palette"]),
        )
        for o in data["objects"]
    )
    edges = tuple(
        RelationEdge(e["trigger"], e["link"], e["direction"], e["responder"],
                     {int(k): v for k, v in e["stage_map"].items()})
        for e in data["relations"]
    )
    return BoardSpec(data["height"], data["width"], float(data["cell_size"]), data["board_color"],
                     data["texture"], objects, RelationGraph(edges), data["seed"],
                     data.get("responder_effects", True))


def save_spec(path, spec):
    with open(path, "w") as handle:
        json.dump(spec_to_dict(spec), handle, indent=2, sort_keys=True)


def load_spec(path):
    with open(path) as handle:
        return spec_from_dict(json.load(handle))


def save_observation(path, obs):
    with open(path, "wb") as handle:
        np.savez(
            handle,
            format_version=np.array([OBSERVATION_FORMAT_VERSION], dtype="<i8"),
            shape=np.array(obs.depth.shape, dtype="<i8"),
            depth=obs.depth.astype("<f8"),
            normals=obs.normals.astype("<f8"),
            color=obs.color.astype("<f8"),
        )


def load_observation(path):
    with np.load(path) as archive:
        if int(archive["format_version"][0]) != OBSERVATION_FORMAT_VERSION:
            raise ConfigurationError(f"{path}: unsupported observation format")
        height, width = (int(v) for v in archive["shape"])
        depth = archive["depth"].reshape(height, width)
        return Observation(depth, archive["normals"].reshape(3, height, width),
                           archive["color"].reshape(3, height, width))

"""Where a run keeps its raw files."""

import json
from dataclasses import dataclass
from pathlib import Path

from busybot.board.io import spec_from_dict, spec_to_dict
from busybot.exceptions import ConfigurationError

BOARDS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RunLayout:
    root: Path

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))

    def prepare(self):
        for sub in ("boards", "interaction", "reason", "plan", "report"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        return self

    def boards(self, split):
        return self.root / "boards" / f"{split}.json"

    @property
    def interaction_log(self):
        return self.root / "interaction" / "log.csv"

    @property
    def policy_dir(self):
        return self.root / "interaction" / "policy"

    def interaction_eval(self, split):
        return self.root / "interaction" / f"eval_{split}.csv"

    @property
    def reason_dataset(self):
        return self.root / "reason" / "train.npz"

    @property
    def reason_curve(self):
        return self.root / "reason" / "curve.csv"

    @property
    def reason_model(self):
        return self.root / "reason" / "model.npz"

    def reason_trajectories(self, split):
        return self.root / "reason" / f"trajectories_{split}.npz"

    def reason_eval(self, split):
        return self.root / "reason" / f"eval_{split}.csv"

    def scene_graphs(self, split):
        return self.root / "reason" / f"scene_graphs_{split}.json"

    def tasks(self, split, kind):
        return self.root / "plan" / f"tasks_{split}_{kind}.json"

    @property
    def planning_results(self):
        return self.root / "plan" / "results.csv"

    @property
    def metrics(self):
        return self.root / "metrics.csv"

    @property
    def runtime(self):
        return self.root / "runtime.json"

    @property
    def config(self):
        return self.root / "config.json"

    @property
    def report_dir(self):
        return self.root / "report"


def save_board_set(path, specs):
    with open(path, "w") as handle:
        json.dump({"format_version": BOARDS_FORMAT_VERSION, "boards": [spec_to_dict(s) for s in specs]},
                  handle, indent=2, sort_keys=True)


def load_board_set(path):
    with open(path) as handle:
        data = json.load(handle)
    if data.get("format_version") != BOARDS_FORMAT_VERSION:
        raise ConfigurationError(f"{path}: unsupported board set format")
    return [spec_from_dict(item) for item in data["boards"]]

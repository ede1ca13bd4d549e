"""Parameter checkpoints: one little-endian float64 array per parameter name."""

import numpy as np

from busybot.exceptions import ConfigurationError

FORMAT_VERSION = 1
_VERSION_KEY = "__format_version__"


def save_checkpoint(path, params):
    arrays = {name: np.asarray(value, dtype="<f8") for name, value in params.state_dict().items()}
    arrays[_VERSION_KEY] = np.array([FORMAT_VERSION], dtype="<i8")
    with open(path, "wb") as handle:
        np.savez(handle, **arrays)


def load_checkpoint(path, params):
    with np.load(path) as archive:
        if _VERSION_KEY not in archive or int(archive[_VERSION_KEY][0]) != FORMAT_VERSION:
            raise ConfigurationError(f"{path}: unsupported checkpoint format")
        state = {name: archive[name] for name in archive.files if name != _VERSION_KEY}
    params.load_state_dict(state)
    return params

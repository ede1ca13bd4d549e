from collections import OrderedDict

import numpy as np

from busybot.exceptions import ConfigurationError
from busybot.learncore.tensor import parameter


def glorot_bound(shape):
    if len(shape) == 1:
        return 0.0
    receptive = int(np.prod(shape[2:])) if len(shape) > 2 else 1
    fan_out, fan_in = shape[0] * receptive, shape[1] * receptive
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


class ParamSet:
    """Named parameters of one or more networks.

    Gradients live on the parameter tensors (``tensor.grad``) and always have
    the parameter's shape once ``zero_grad`` or ``backward`` has run.
    """

    def __init__(self, rng=None):
        self._params = OrderedDict()
        self._rng = rng if rng is not None else np.random.default_rng(0)

    def create(self, name, shape, init="glorot"):
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter name {name!r}")
        shape = tuple(int(s) for s in shape)
        if init == "glorot":
            bound = glorot_bound(shape)
            data = self._rng.uniform(-bound, bound, size=shape) if bound else np.zeros(shape)
        elif init == "zeros":
            data = np.zeros(shape)
        else:
            raise ConfigurationError(f"unknown initializer {init!r}")
        tensor = parameter(data, name=name)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def subset(self, prefix):
        """A view over the parameters whose names start with ``prefix``."""
        view = ParamSet(self._rng)
        for name, tensor in self._params.items():
            if name.startswith(prefix):
                view._params[name] = tensor
        return view

    def num_values(self):
        return sum(t.size for t in self._params.values())

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.grad = np.zeros(tensor.shape)

    def gradients(self):
        return {name: t.grad for name, t in self._params.items()}

    def state_dict(self):
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_state_dict(self, state):
        missing = set(self._params) - set(state)
        if missing:
            raise ConfigurationError(f"checkpoint lacks parameters: {sorted(missing)}")
        for name, tensor in self._params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ConfigurationError(
                    f"parameter {name!r}: checkpoint shape {value.shape} != {tensor.shape}"
                )
            tensor.data = value.copy()

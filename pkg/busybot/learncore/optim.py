from dataclasses import dataclass, field

import numpy as np

from busybot.exceptions import ContractError


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ContractError("Adam betas must lie in (0, 1)")


def adam_step(params, state, lr):
    """One bias-corrected Adam update. Gradients are read, never cleared."""
    for name, tensor in params.items():
        if tensor.grad is None:
            raise ContractError(f"parameter {name!r} has no gradient")
    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, tensor in params.items():
        grad = tensor.grad
        m = state.first.get(name, np.zeros(tensor.shape))
        v = state.second.get(name, np.zeros(tensor.shape))
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first[name], state.second[name] = m, v
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        tensor.data = tensor.data - update
    return params, state


class Adam:
    def __init__(self, params, lr):
        self.params = params
        self.lr = lr
        self.state = AdamState()

    def step(self):
        adam_step(self.params, self.state, self.lr)

    def zero_grad(self):
        self.params.zero_grad()

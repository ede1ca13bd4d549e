import numpy as np

from busybot.learncore.tensor import backward

STEP = 1e-5


def grad_check(params, loss_fn, sample_count=64, rng=None):
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn`` must rebuild the forward pass from ``params`` and return a
    scalar tensor; coordinates are sampled uniformly over all parameters.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    backward(loss_fn(), params)
    analytic = {name: t.grad.copy() for name, t in params.items()}
    coords = [(name, i) for name, t in params.items() for i in range(t.size)]
    picks = rng.choice(len(coords), size=min(sample_count, len(coords)), replace=False)
    worst = 0.0
    for pick in picks:
        name, index = coords[pick]
        tensor = params[name]
        original = tensor.data.reshape(-1)[index]
        shifted = tensor.data.copy().reshape(-1)
        shifted[index] = original + STEP
        tensor.data = shifted.reshape(tensor.shape)
        upper = loss_fn().item()
        shifted[index] = original - STEP
        tensor.data = shifted.reshape(tensor.shape)
        lower = loss_fn().item()
        shifted[index] = original
        tensor.data = shifted.reshape(tensor.shape)
        numeric = (upper - lower) / (2.0 * STEP)
        exact = analytic[name].reshape(-1)[index]
        worst = max(worst, abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-8))
    return worst

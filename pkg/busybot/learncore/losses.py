"""Scalar loss helpers with the clamping and contract checks of the tensor losses."""

import math

import numpy as np

from busybot.exceptions import ContractError
from busybot.learncore.tensor import BCE_CLIP


def loss_bce(prediction, target):
    if target not in (0, 1):
        raise ContractError(f"bce target must be 0 or 1, got {target!r}")
    p = min(max(float(prediction), BCE_CLIP), 1.0 - BCE_CLIP)
    return -(target * math.log(p) + (1 - target) * math.log(1.0 - p))


def loss_mse(prediction, target):
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ContractError(f"mse: shapes differ {prediction.shape} vs {target.shape}")
    return float(np.mean((prediction - target) ** 2))

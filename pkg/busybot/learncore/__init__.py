from busybot.learncore.tensor import (  # noqa: F401
    Tensor, as_tensor, backward, bce, concat, conv1d, conv2d, dense, max_pool2d,
    mean_aggregate, mse, pairwise_concat, relu, sigmoid, softmax, upsample2d,
)
from busybot.learncore.params import ParamSet  # noqa: F401
from busybot.learncore.optim import Adam, AdamState, adam_step  # noqa: F401
from busybot.learncore.losses import loss_bce, loss_mse  # noqa: F401
from busybot.learncore.gradcheck import grad_check  # noqa: F401
from busybot.learncore.checkpoint import load_checkpoint, save_checkpoint  # noqa: F401

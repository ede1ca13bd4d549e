"""Position affordance U-Net and direction scoring network."""

import numpy as np

from busybot.exceptions import ConfigurationError, ContractError
from busybot.learncore import tensor as T
from busybot.learncore.layers import MLP, Conv2d, Module
from busybot.learncore.params import ParamSet

INPUT_CHANNELS = 4


def _check_grid(x, height, width, channels):
    if x.ndim != 4 or x.shape[1:] != (channels, height, width):
        raise ConfigurationError(
            f"expected input (N, {channels}, {height}, {width}), got {tuple(x.shape)}"
        )


class _DoubleConv(Module):
    def __init__(self, params, name, in_channels, out_channels):
        self.first = Conv2d(params, f"{name}.0", in_channels, out_channels)
        self.second = Conv2d(params, f"{name}.1", out_channels, out_channels)

    def forward(self, x):
        return T.relu(self.second(T.relu(self.first(x))))


class PositionNet(Module):
    """Encoder-decoder producing a per-cell affordance in [0, 1].

    ``down`` lists encoder widths (the first block runs at full resolution,
    each later one after a 2x2 max-pool). ``up`` lists one width per decoder
    level followed by the 2 output logits.
    """

    def __init__(self, height, width, down=(16, 32), up=(16, 2), in_channels=INPUT_CHANNELS,
                 upsample="nearest", rng=None):
        if len(up) != len(down) or up[-1] != 2:
            raise ConfigurationError(f"decoder widths {up} must have {len(down)} entries ending in 2")
        factor = 2 ** (len(down) - 1)
        if height % factor or width % factor:
            raise ConfigurationError(f"grid {height}x{width} is not divisible by {factor}")
        self.height, self.width, self.in_channels = height, width, in_channels
        self.upsample = upsample
        self.params = ParamSet(rng)
        self.encoder = []
        previous = in_channels
        for level, channels in enumerate(down):
            self.encoder.append(_DoubleConv(self.params, f"position.down{level}", previous, channels))
            previous = channels
        self.decoder = []
        for level in range(len(down) - 2, -1, -1):
            out = up[len(down) - 2 - level]
            self.decoder.append(
                _DoubleConv(self.params, f"position.up{level}", previous + down[level], out)
            )
            previous = out
        self.head = Conv2d(self.params, "position.head", previous, 2)

    def forward(self, x):
        """(N, C, H, W) input -> (N, H, W) affordance."""
        x = T.as_tensor(x)
        _check_grid(x, self.height, self.width, self.in_channels)
        skips = []
        for level, block in enumerate(self.encoder):
            if level:
                x = T.max_pool2d(x)
            x = block(x)
            skips.append(x)
        for block, skip in zip(self.decoder, reversed(skips[:-1])):
            x = block(T.concat([T.upsample2d(x, self.upsample), skip], axis=1))
        probabilities = T.softmax(self.head(x), axis=1)
        return probabilities[:, 1]


def encode_position_gaussian(cell, shape, sigma):
    """Unnormalized Gaussian bump peaking at 1 on ``cell``."""
    height, width = shape
    i, j = cell
    if not (0 <= i < height and 0 <= j < width):
        raise ContractError(f"cell {cell} outside a {height}x{width} grid")
    if sigma <= 0:
        raise ContractError(f"sigma must be positive, got {sigma}")
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    squared = (rows - i) ** 2 + (cols - j) ** 2
    return np.exp(-squared / (2.0 * sigma**2))[None]


class DirectionNet(Module):
    """Convolutional trunk + MLP head scoring the 18 direction candidates."""

    def __init__(self, height, width, channels=(16, 32, 64, 64), hidden=(64, 64),
                 in_channels=INPUT_CHANNELS + 1, directions=18, rng=None):
        self.height, self.width, self.in_channels = height, width, in_channels
        self.params = ParamSet(rng)
        self.convs = []
        previous = in_channels
        h, w = height, width
        for k, out in enumerate(channels):
            self.convs.append(Conv2d(self.params, f"direction.conv{k}", previous, out))
            previous = out
            if k:
                h, w = h // 2, w // 2
        if h < 1 or w < 1:
            raise ConfigurationError(f"grid {height}x{width} too small for {len(channels)} conv layers")
        self.head = MLP(self.params, "direction.head", (previous * h * w,) + tuple(hidden) + (directions,))

    def forward(self, x):
        """(N, C, H, W) input -> (N, 18) scores."""
        x = T.as_tensor(x)
        _check_grid(x, self.height, self.width, self.in_channels)
        for k, conv in enumerate(self.convs):
            x = T.relu(conv(x))
            if k:
                x = T.max_pool2d(x)
        return T.sigmoid(self.head(x.reshape(x.shape[0], -1)))


def infer_position_affordance(net, obs, mode="depth"):
    return net(obs.policy_input(mode)[None]).data[0]


def direction_input(obs, cell, sigma, mode="depth"):
    encoding = encode_position_gaussian(cell, obs.shape, sigma)
    return np.concatenate([obs.policy_input(mode), encoding])


def infer_direction_scores(net, obs, encoding, mode="depth"):
    x = np.concatenate([obs.policy_input(mode), np.asarray(encoding).reshape((1,) + obs.shape)])
    return net(x[None]).data[0]

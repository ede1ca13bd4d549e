"""Trainable building blocks. Each module registers its parameters in a shared ParamSet."""

from busybot.learncore import tensor as T


class Module:
    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


class Dense(Module):
    def __init__(self, params, name, in_features, out_features, zero_init=False):
        self.weight = params.create(f"{name}.weight", (out_features, in_features),
                                    init="zeros" if zero_init else "glorot")
        self.bias = params.create(f"{name}.bias", (out_features,), init="zeros")

    def forward(self, x):
        return T.dense(x, self.weight, self.bias)


class Conv2d(Module):
    def __init__(self, params, name, in_channels, out_channels, stride=1, pad=1):
        self.kernel = params.create(f"{name}.kernel", (out_channels, in_channels, 3, 3))
        self.bias = params.create(f"{name}.bias", (out_channels,), init="zeros")
        self.stride = stride
        self.pad = pad

    def forward(self, x):
        return T.conv2d(x, self.kernel, self.bias, stride=self.stride, pad=self.pad)


class Conv1d(Module):
    def __init__(self, params, name, in_channels, out_channels):
        self.kernel = params.create(f"{name}.kernel", (out_channels, in_channels, 3))
        self.bias = params.create(f"{name}.bias", (out_channels,), init="zeros")

    def forward(self, x):
        return T.conv1d(x, self.kernel, self.bias)


class MLP(Module):
    """Dense layers with ReLU between them; the last layer is linear unless told otherwise."""

    def __init__(self, params, name, sizes, final_relu=False, zero_last=False):
        self.layers = [
            Dense(params, f"{name}.{i}", sizes[i], sizes[i + 1],
                  zero_init=zero_last and i == len(sizes) - 2)
            for i in range(len(sizes) - 1)
        ]
        self.final_relu = final_relu

    def forward(self, x):
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1 or self.final_relu:
                x = T.relu(x)
        return x

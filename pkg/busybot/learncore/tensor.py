"""Reverse-mode differentiation over numpy arrays.

A ``Tensor`` wraps a float64 array and, when it depends on a parameter,
records the closure that pushes its gradient back to its parents. ``backward``
walks the recorded graph in reverse topological order.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from busybot.exceptions import ConfigurationError, ContractError, NumericError, StateError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.name = name
        # constants never keep their parents alive
        self._parents = tuple(parents) if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, grad):
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + grad

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, negate(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), negate(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return negate(self)

    def __getitem__(self, index):
        return take(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean_aggregate(self, axis=axis, keepdims=keepdims)

    def transpose(self, *axes):
        return transpose(self, axes)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def parameter(data, name=None):
    return Tensor(data, requires_grad=True, name=name)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# elementwise ----------------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def _backward(out):
        if a.requires_grad:
            a._accumulate(_unbroadcast(out.grad, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(out.grad, b.shape))

    return Tensor(a.data + b.data, (a, b), _backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def _backward(out):
        if a.requires_grad:
            a._accumulate(_unbroadcast(out.grad * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(out.grad * a.data, b.shape))

    return Tensor(a.data * b.data, (a, b), _backward)


def negate(a):
    a = as_tensor(a)

    def _backward(out):
        a._accumulate(-out.grad)

    return Tensor(-a.data, (a,), _backward)


def relu(x):
    x = as_tensor(x)
    mask = x.data > 0

    def _backward(out):
        x._accumulate(out.grad * mask)

    return Tensor(np.where(mask, x.data, 0.0), (x,), _backward)


def sigmoid(x):
    x = as_tensor(x)
    y = 0.5 * (1.0 + np.tanh(0.5 * x.data))

    def _backward(out):
        x._accumulate(out.grad * y * (1.0 - y))

    return Tensor(y, (x,), _backward)


def softmax(x, axis=-1):
    """Softmax along ``axis`` with max-subtraction."""
    x = as_tensor(x)
    if x.size == 0:
        raise ContractError("softmax needs at least one logit")
    if not np.all(np.isfinite(x.data)):
        raise NumericError("softmax received non-finite logits")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def _backward(out):
        dot = (out.grad * y).sum(axis=axis, keepdims=True)
        x._accumulate(y * (out.grad - dot))

    return Tensor(y, (x,), _backward)


# shape ----------------------------------------------------------------------


def reshape(x, shape):
    x = as_tensor(x)
    source = x.shape

    def _backward(out):
        x._accumulate(out.grad.reshape(source))

    return Tensor(x.data.reshape(shape), (x,), _backward)


def transpose(x, axes):
    x = as_tensor(x)
    axes = tuple(axes) if axes else tuple(reversed(range(x.ndim)))
    inverse = np.argsort(axes)

    def _backward(out):
        x._accumulate(out.grad.transpose(inverse))

    return Tensor(x.data.transpose(axes), (x,), _backward)


def take(x, index):
    """Basic or advanced indexing; gradients scatter-add back."""
    x = as_tensor(x)

    def _backward(out):
        grad = np.zeros_like(x.data)
        np.add.at(grad, index, out.grad)
        x._accumulate(grad)

    return Tensor(x.data[index], (x,), _backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def _backward(out):
        for t, g in zip(tensors, np.split(out.grad, splits, axis=axis)):
            if t.requires_grad:
                t._accumulate(g)

    return Tensor(data, tensors, _backward)


def broadcast_to(x, shape):
    x = as_tensor(x)

    def _backward(out):
        x._accumulate(_unbroadcast(out.grad, x.shape))

    return Tensor(np.broadcast_to(x.data, shape).copy(), (x,), _backward)


def pairwise_concat(x):
    """(..., N, E) -> (..., N, N, 2E) with entry [i, j] = x_i ⊕ x_j."""
    x = as_tensor(x)
    n = x.shape[-2]
    lead = x.shape[:-2]
    senders = broadcast_to(reshape(x, lead + (n, 1, x.shape[-1])), lead + (n, n, x.shape[-1]))
    receivers = broadcast_to(reshape(x, lead + (1, n, x.shape[-1])), lead + (n, n, x.shape[-1]))
    return concat([senders, receivers], axis=-1)


# reductions -----------------------------------------------------------------


def reduce_sum(x, axis=None, keepdims=False):
    x = as_tensor(x)

    def _backward(out):
        grad = out.grad
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        x._accumulate(np.broadcast_to(grad, x.shape))

    return Tensor(x.data.sum(axis=axis, keepdims=keepdims), (x,), _backward)


def mean_aggregate(x, axis=None, keepdims=False):
    """Mean over ``axis``; used for temporal pooling and node aggregation."""
    x = as_tensor(x)
    count = x.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])

    def _backward(out):
        grad = out.grad / count
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        x._accumulate(np.broadcast_to(grad, x.shape))

    return Tensor(x.data.mean(axis=axis, keepdims=keepdims), (x,), _backward)


# layers ---------------------------------------------------------------------


def dense(x, weights, bias):
    """y[..., m] = sum_d w[m, d] x[..., d] + b[m]."""
    x, weights, bias = as_tensor(x), as_tensor(weights), as_tensor(bias)
    if weights.ndim != 2 or x.shape[-1] != weights.shape[1] or bias.shape != (weights.shape[0],):
        raise ConfigurationError(
            f"dense: input {x.shape[-1:]} incompatible with weights {weights.shape} "
            f"and bias {bias.shape}"
        )

    def _backward(out):
        g = out.grad
        if x.requires_grad:
            x._accumulate(g @ weights.data)
        if weights.requires_grad:
            weights._accumulate(g.reshape(-1, g.shape[-1]).T @ x.data.reshape(-1, x.shape[-1]))
        if bias.requires_grad:
            bias._accumulate(g.reshape(-1, g.shape[-1]).sum(axis=0))

    return Tensor(x.data @ weights.data.T + bias.data, (x, weights, bias), _backward)


def conv2d(x, kernel, bias=None, stride=1, pad=1):
    """3x3 cross-correlation over (N, C, H, W) or (C, H, W) input."""
    x, kernel = as_tensor(x), as_tensor(kernel)
    bias = as_tensor(np.zeros(kernel.shape[0]) if bias is None else bias)
    if kernel.ndim != 4 or kernel.shape[2:] != (3, 3):
        raise ConfigurationError(f"conv2d: kernel must be K x C x 3 x 3, got {kernel.shape}")
    if stride < 1 or pad < 0:
        raise ConfigurationError(f"conv2d: stride {stride} / pad {pad} out of range")
    squeeze = x.ndim == 3
    data = x.data[None] if squeeze else x.data
    if data.ndim != 4 or data.shape[1] != kernel.shape[1]:
        raise ConfigurationError(
            f"conv2d: input channels {data.shape[1:2]} do not match kernel channels {kernel.shape[1]}"
        )
    n, c, h, w = data.shape
    h_out = (h + 2 * pad - 3) // stride + 1
    w_out = (w + 2 * pad - 3) // stride + 1
    if h_out < 1 or w_out < 1:
        raise ConfigurationError(f"conv2d: input {h}x{w} too small for pad {pad}")
    padded = np.pad(data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(padded, (3, 3), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :h_out, :w_out]
    out = np.tensordot(windows, kernel.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    out = out + bias.data[None, :, None, None]

    def _backward(node):
        g = node.grad[None] if squeeze else node.grad
        if kernel.requires_grad:
            kernel._accumulate(np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3])))
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            cols = np.tensordot(g, kernel.data, axes=([1], [0]))  # n, h', w', c, 3, 3
            grad_padded = np.zeros_like(padded)
            for i in range(3):
                for j in range(3):
                    grad_padded[
                        :, :, i : i + stride * h_out : stride, j : j + stride * w_out : stride
                    ] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            grad = grad_padded[:, :, pad : pad + h, pad : pad + w]
            x._accumulate(grad[0] if squeeze else grad)

    return Tensor(out[0] if squeeze else out, (x, kernel, bias), _backward)


def conv1d(x, kernel, bias=None):
    """Temporal convolution, kernel 3, stride 1, 'same' padding.

    x: (..., T, C_in), kernel: (C_out, C_in, 3) -> (..., T, C_out).
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    bias = as_tensor(np.zeros(kernel.shape[0]) if bias is None else bias)
    if kernel.ndim != 3 or kernel.shape[2] != 3 or x.shape[-1] != kernel.shape[1]:
        raise ConfigurationError(
            f"conv1d: input channels {x.shape[-1:]} incompatible with kernel {kernel.shape}"
        )
    lead = x.shape[:-2]
    t, c = x.shape[-2:]
    flat = x.data.reshape((-1, t, c))
    padded = np.pad(flat, ((0, 0), (1, 1), (0, 0)))
    windows = sliding_window_view(padded, 3, axis=1)  # b, t, c, 3
    out = np.tensordot(windows, kernel.data, axes=([2, 3], [1, 2])) + bias.data

    def _backward(node):
        g = node.grad.reshape((-1, t, kernel.shape[0]))
        if kernel.requires_grad:
            kernel._accumulate(np.tensordot(g, windows, axes=([0, 1], [0, 1])))
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=(0, 1)))
        if x.requires_grad:
            cols = np.tensordot(g, kernel.data, axes=([2], [0]))  # b, t, c, 3
            grad_padded = np.zeros_like(padded)
            for k in range(3):
                grad_padded[:, k : k + t, :] += cols[:, :, :, k]
            x._accumulate(grad_padded[:, 1 : 1 + t, :].reshape(x.shape))

    return Tensor(out.reshape(lead + (t, kernel.shape[0])), (x, kernel, bias), _backward)


def max_pool2d(x):
    """2x2 max pooling, stride 2; odd trailing rows/columns are dropped."""
    x = as_tensor(x)
    h, w = x.shape[-2:]
    h2, w2 = h // 2, w // 2
    if h2 < 1 or w2 < 1:
        raise ConfigurationError(f"max_pool2d: input {h}x{w} too small")
    cropped = x.data[..., : 2 * h2, : 2 * w2]
    blocks = cropped.reshape(cropped.shape[:-2] + (h2, 2, w2, 2))
    blocks = np.moveaxis(blocks, -3, -2).reshape(cropped.shape[:-2] + (h2, w2, 4))
    winner = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, winner[..., None], axis=-1)[..., 0]

    def _backward(node):
        grad_blocks = np.zeros(blocks.shape)
        np.put_along_axis(grad_blocks, winner[..., None], node.grad[..., None], axis=-1)
        grad_blocks = grad_blocks.reshape(cropped.shape[:-2] + (h2, w2, 2, 2))
        grad_blocks = np.moveaxis(grad_blocks, -2, -3).reshape(cropped.shape)
        grad = np.zeros(x.shape)
        grad[..., : 2 * h2, : 2 * w2] = grad_blocks
        x._accumulate(grad)

    return Tensor(out, (x,), _backward)


def _upsample_matrix(size, mode):
    rows = np.zeros((2 * size, size))
    if mode == "nearest":
        rows[np.arange(2 * size), np.arange(2 * size) // 2] = 1.0
        return rows
    # bilinear, half-pixel centers, edge clamped
    for i in range(2 * size):
        src = min(max((i + 0.5) / 2.0 - 0.5, 0.0), size - 1)
        lo = int(np.floor(src))
        hi = min(lo + 1, size - 1)
        frac = src - lo
        rows[i, lo] += 1.0 - frac
        rows[i, hi] += frac
    return rows


def upsample2d(x, mode="nearest"):
    """2x spatial upsampling of (..., H, W); ``mode`` is nearest or bilinear."""
    if mode not in ("nearest", "bilinear"):
        raise ConfigurationError(f"upsample2d: unknown mode {mode!r}")
    x = as_tensor(x)
    h, w = x.shape[-2:]
    uh, uw = _upsample_matrix(h, mode), _upsample_matrix(w, mode)
    out = np.matmul(np.matmul(uh, x.data), uw.T)

    def _backward(node):
        x._accumulate(np.matmul(np.matmul(uh.T, node.grad), uw))

    return Tensor(out, (x,), _backward)


# losses ---------------------------------------------------------------------

BCE_CLIP = 1e-7


def bce(prediction, target, mask=None):
    """Mean binary cross-entropy of probabilities against {0, 1} targets."""
    prediction = as_tensor(prediction)
    target = np.asarray(target, dtype=np.float64)
    if not np.all((target == 0.0) | (target == 1.0)):
        raise ContractError("bce targets must be 0 or 1")
    weight = np.ones(prediction.shape) if mask is None else np.asarray(mask, dtype=np.float64)
    count = max(weight.sum(), 1.0)
    p = np.clip(prediction.data, BCE_CLIP, 1.0 - BCE_CLIP)
    value = -(weight * (target * np.log(p) + (1.0 - target) * np.log(1.0 - p))).sum() / count
    clipped = (prediction.data < BCE_CLIP) | (prediction.data > 1.0 - BCE_CLIP)

    def _backward(node):
        grad = weight * (p - target) / (p * (1.0 - p)) / count
        prediction._accumulate(np.where(clipped, 0.0, grad) * node.grad)

    return Tensor(value, (prediction,), _backward)


def mse(prediction, target, mask=None):
    """Mean squared error; with a mask the mean runs over masked-in entries."""
    prediction = as_tensor(prediction)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ContractError(f"mse: shapes differ {prediction.shape} vs {target.shape}")
    weight = np.ones(target.shape) if mask is None else np.broadcast_to(mask, target.shape)
    count = max(float(weight.sum()), 1.0)
    diff = (prediction.data - target) * weight
    value = (diff**2).sum() / count

    def _backward(node):
        prediction._accumulate(2.0 * diff / count * node.grad)

    return Tensor(value, (prediction,), _backward)


# differentiation --------------------------------------------------------------


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss, params=None):
    """Populate ``.grad`` of every parameter reachable from the scalar ``loss``.

    When ``params`` is given its gradients are reset first, so parameters the
    loss does not depend on end up with zero gradients.
    """
    if not isinstance(loss, Tensor) or loss.size != 1:
        raise ContractError("backward expects a single scalar loss tensor")
    if not loss._parents:
        raise StateError("backward called without a recorded forward pass")
    if params is not None:
        params.zero_grad()
    order = _topological(loss)
    for node in order:
        if node._backward is not None:
            node.grad = None
    loss.grad = np.ones(loss.shape)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node)

"""Layer primitives with exact backward passes.

Tensors are channels-first: images are (N, C, H, W), feature vectors (N, F).

Every layer has two forward paths. ``forward`` remembers what ``backward`` needs
and is for training; ``apply`` computes the same output without touching layer
state, so a model with fixed weights can serve several threads at once.
"""

from __future__ import annotations

from typing import Any, Callable, NamedTuple

import numpy as np

from sonicgesture.core.errors import ShapeError
from sonicgesture.core.interfaces import Layer

STANDARDIZE_EPSILON = 1e-8


def _pad_amounts(kernel: int) -> tuple[int, int]:
    before = (kernel - 1) // 2
    return before, kernel - 1 - before


def _check_conv_shapes(x: np.ndarray, weights: np.ndarray, bias: np.ndarray | None) -> None:
    if x.ndim != 4 or weights.ndim != 4:
        raise ShapeError(
            f"conv2d expects x (N,C,H,W) and weights (O,C,kh,kw), got x{x.shape} "
            f"weights{weights.shape}"
        )
    if x.shape[1] != weights.shape[1]:
        raise ShapeError(
            f"conv2d channel mismatch: x{x.shape} has {x.shape[1]} channels, "
            f"weights{weights.shape} expect {weights.shape[1]}"
        )
    if bias is not None and bias.shape != (weights.shape[0],):
        raise ShapeError(f"conv2d bias{bias.shape} does not match weights{weights.shape}")


def _pad(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    top, bottom = _pad_amounts(kh)
    left, right = _pad_amounts(kw)
    return np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)))


def conv2d_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """
    Stride-1 cross-correlation with zero "same" padding.

    y[n, o, i, j] = bias[o] + sum_{c,u,v} weights[o, c, u, v] * x_padded[n, c, i + u, j + v]
    """
    _check_conv_shapes(x, weights, bias)
    n, _, height, width = x.shape
    out_ch, _, kh, kw = weights.shape
    padded = _pad(x, kh, kw)
    y = np.zeros((n, height, width, out_ch), dtype=np.result_type(x, weights))
    for u in range(kh):
        for v in range(kw):
            window = padded[:, :, u : u + height, v : v + width]
            y += np.tensordot(window, weights[:, :, u, v], axes=([1], [1]))
    y += bias
    return np.ascontiguousarray(y.transpose(0, 3, 1, 2))


def conv2d_backward(
    x: np.ndarray, weights: np.ndarray, dy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (dx, dweights, dbias) for ``conv2d_forward`` given dL/dy."""
    _check_conv_shapes(x, weights, None)
    n, channels, height, width = x.shape
    out_ch, _, kh, kw = weights.shape
    if dy.shape != (n, out_ch, height, width):
        raise ShapeError(
            f"conv2d gradient dy{dy.shape} does not match output {(n, out_ch, height, width)}"
        )
    padded = _pad(x, kh, kw)
    d_padded = np.zeros_like(padded, dtype=np.result_type(x, dy))
    d_weights = np.zeros_like(weights, dtype=np.result_type(weights, dy))
    for u in range(kh):
        for v in range(kw):
            window = padded[:, :, u : u + height, v : v + width]
            d_weights[:, :, u, v] = np.tensordot(dy, window, axes=([0, 2, 3], [0, 2, 3]))
            spread = np.tensordot(dy, weights[:, :, u, v], axes=([1], [0]))
            d_padded[:, :, u : u + height, v : v + width] += spread.transpose(0, 3, 1, 2)
    top, _ = _pad_amounts(kh)
    left, _ = _pad_amounts(kw)
    dx = d_padded[:, :, top : top + height, left : left + width]
    return np.ascontiguousarray(dx), d_weights, dy.sum(axis=(0, 2, 3))


class PoolIndex(NamedTuple):
    """Winning position (0..3, row-major in the 2x2 window) plus the pooled input's shape."""

    argmax: np.ndarray
    input_shape: tuple[int, ...]


def maxpool2x2(x: np.ndarray) -> tuple[np.ndarray, PoolIndex]:
    """
    2x2 max pooling, stride 2.

    Odd heights or widths drop their last row or column. Ties go to the first
    position in row-major order.
    """
    if x.ndim != 4:
        raise ShapeError(f"maxpool2x2 expects (N,C,H,W), got {x.shape}")
    n, channels, height, width = x.shape
    ph, pw = height // 2, width // 2
    if ph == 0 or pw == 0:
        raise ShapeError(f"maxpool2x2 input {x.shape} is smaller than one 2x2 window")
    windows = (
        x[:, :, : 2 * ph, : 2 * pw]
        .reshape(n, channels, ph, 2, pw, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, channels, ph, pw, 4)
    )
    argmax = windows.argmax(axis=-1)
    y = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
    return y, PoolIndex(argmax=argmax, input_shape=tuple(x.shape))


def maxpool_backward(index: PoolIndex, dy: np.ndarray) -> np.ndarray:
    """Route each pooled gradient to the input position that won the max."""
    if dy.shape != index.argmax.shape:
        raise ShapeError(f"maxpool gradient dy{dy.shape} does not match {index.argmax.shape}")
    n, channels, ph, pw = dy.shape
    d_windows = np.zeros((n, channels, ph, pw, 4), dtype=dy.dtype)
    np.put_along_axis(d_windows, index.argmax[..., None], dy[..., None], axis=-1)
    dx = np.zeros(index.input_shape, dtype=dy.dtype)
    dx[:, :, : 2 * ph, : 2 * pw] = (
        d_windows.reshape(n, channels, ph, pw, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, channels, 2 * ph, 2 * pw)
    )
    return dx


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim == 2:
        if labels.shape[1] != n_classes:
            raise ShapeError(f"one-hot labels{labels.shape} do not match {n_classes} classes")
        return labels.astype(np.float64)
    encoded = np.zeros((labels.shape[0], n_classes))
    encoded[np.arange(labels.shape[0]), labels.astype(np.int64)] = 1.0
    return encoded


def softmax_crossentropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """
    Mean categorical cross-entropy and its gradient with respect to the logits.

    ``labels`` are class indices (N,) or one-hot rows (N, K). The gradient is
    (softmax(logits) - onehot) / N.
    """
    if logits.ndim != 2:
        raise ShapeError(f"logits must be (N, K), got {logits.shape}")
    target = _one_hot(labels, logits.shape[1])
    if target.shape[0] != logits.shape[0]:
        raise ShapeError(f"labels{target.shape} do not match logits{logits.shape}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_norm - (shifted * target).sum(axis=1)))
    grad = (softmax(logits) - target) / logits.shape[0]
    return loss, grad.astype(logits.dtype, copy=False)


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Shift and scale every (example, channel) plane to zero mean and unit variance.

    Returns the output and the per-plane scale sqrt(var + eps). A constant plane
    becomes all zeros.
    """
    if x.ndim != 4:
        raise ShapeError(f"standardize expects (N,C,H,W), got {x.shape}")
    centred = x - x.mean(axis=(2, 3), keepdims=True)
    scale = np.sqrt(np.mean(centred * centred, axis=(2, 3), keepdims=True) + STANDARDIZE_EPSILON)
    return (centred / scale).astype(x.dtype, copy=False), scale


def standardize_backward(y: np.ndarray, scale: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """dL/dx = (dy - mean(dy) - y * mean(dy * y)) / scale, per plane."""
    if dy.shape != y.shape:
        raise ShapeError(f"standardize gradient dy{dy.shape} does not match {y.shape}")
    mean_dy = dy.mean(axis=(2, 3), keepdims=True)
    mean_dy_y = (dy * y).mean(axis=(2, 3), keepdims=True)
    return ((dy - mean_dy - y * mean_dy_y) / scale).astype(dy.dtype, copy=False)


class Standardize:
    """Per-image input normalisation ahead of the first convolution."""

    kind = "standardize"

    def __init__(self) -> None:
        self._y: np.ndarray | None = None
        self._scale: np.ndarray | None = None

    def apply(self, x: np.ndarray) -> np.ndarray:
        return standardize(x)[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._y, self._scale = standardize(x)
        return self._y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._y is None or self._scale is None:
            raise RuntimeError("backward called before forward")
        return standardize_backward(self._y, self._scale, dy)

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def spec(self) -> dict[str, Any]:
        return {"kind": self.kind}


class Conv2D:
    kind = "conv2d"

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: int = 3,
        rng: np.random.Generator | None = None,
    ) -> None:
        rng = rng or np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        fan_in = in_channels * kernel * kernel
        self._params = {
            "weight": he_uniform(rng, (out_channels, in_channels, kernel, kernel), fan_in),
            "bias": np.zeros(out_channels),
        }
        self._grads = {name: np.zeros_like(value) for name, value in self._params.items()}
        self._x: np.ndarray | None = None

    def apply(self, x: np.ndarray) -> np.ndarray:
        return conv2d_forward(x, self._params["weight"], self._params["bias"])

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return self.apply(x)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward called before forward")
        dx, dw, db = conv2d_backward(self._x, self._params["weight"], dy)
        self._grads["weight"] = dw
        self._grads["bias"] = db
        return dx

    def params(self) -> dict[str, np.ndarray]:
        return self._params

    def grads(self) -> dict[str, np.ndarray]:
        return self._grads

    def spec(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": self.kernel,
        }


class MaxPool2x2:
    kind = "maxpool2x2"

    def __init__(self) -> None:
        self._index: PoolIndex | None = None

    def apply(self, x: np.ndarray) -> np.ndarray:
        return maxpool2x2(x)[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, self._index = maxpool2x2(x)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._index is None:
            raise RuntimeError("backward called before forward")
        return maxpool_backward(self._index, dy)

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def spec(self) -> dict[str, Any]:
        return {"kind": self.kind}


class ReLU:
    kind = "relu"

    def __init__(self) -> None:
        self._mask: np.ndarray | None = None

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.where(x > 0, x, 0.0).astype(x.dtype, copy=False)

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0).astype(x.dtype, copy=False)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise RuntimeError("backward called before forward")
        return np.where(self._mask, dy, 0.0).astype(dy.dtype, copy=False)

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def spec(self) -> dict[str, Any]:
        return {"kind": self.kind}


class Flatten:
    kind = "flatten"

    def __init__(self) -> None:
        self._shape: tuple[int, ...] | None = None

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(x.shape[0], -1)

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = tuple(x.shape)
        return self.apply(x)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._shape is None:
            raise RuntimeError("backward called before forward")
        return dy.reshape(self._shape)

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def spec(self) -> dict[str, Any]:
        return {"kind": self.kind}


class Dense:
    kind = "dense"

    def __init__(
        self, in_features: int, out_features: int, rng: np.random.Generator | None = None
    ) -> None:
        rng = rng or np.random.default_rng(0)
        self.in_features = in_features
        self.out_features = out_features
        self._params = {
            "weight": he_uniform(rng, (in_features, out_features), in_features),
            "bias": np.zeros(out_features),
        }
        self._grads = {name: np.zeros_like(value) for name, value in self._params.items()}
        self._x: np.ndarray | None = None

    def apply(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(
                f"dense expects (N, {self.in_features}), got {x.shape} "
                f"for weights{self._params['weight'].shape}"
            )
        return x @ self._params["weight"] + self._params["bias"]

    def forward(self, x: np.ndarray) -> np.ndarray:
        y = self.apply(x)
        self._x = x
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward called before forward")
        if dy.shape != (self._x.shape[0], self.out_features):
            raise ShapeError(
                f"dense gradient dy{dy.shape} does not match output "
                f"{(self._x.shape[0], self.out_features)}"
            )
        self._grads["weight"] = self._x.T @ dy
        self._grads["bias"] = dy.sum(axis=0)
        return dy @ self._params["weight"].T

    def params(self) -> dict[str, np.ndarray]:
        return self._params

    def grads(self) -> dict[str, np.ndarray]:
        return self._grads

    def spec(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "in_features": self.in_features,
            "out_features": self.out_features,
        }


class Sequential:
    """Layers applied in order; backward runs them in reverse."""

    def __init__(self, layers: list[Layer]) -> None:
        self.layers = layers

    def apply(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.apply(x)
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def named_params(self, prefix: str = "") -> list[tuple[str, np.ndarray]]:
        return [
            (f"{prefix}{i}.{name}", value)
            for i, layer in enumerate(self.layers)
            for name, value in layer.params().items()
        ]

    def named_grads(self, prefix: str = "") -> list[tuple[str, np.ndarray]]:
        return [
            (f"{prefix}{i}.{name}", value)
            for i, layer in enumerate(self.layers)
            for name, value in layer.grads().items()
        ]

    def specs(self) -> list[dict[str, Any]]:
        return [layer.spec() for layer in self.layers]


LAYER_BUILDERS: dict[str, Callable[[dict[str, Any]], Layer]] = {
    "standardize": lambda s: Standardize(),
    "conv2d": lambda s: Conv2D(s["in_channels"], s["out_channels"], s.get("kernel", 3)),
    "maxpool2x2": lambda s: MaxPool2x2(),
    "relu": lambda s: ReLU(),
    "flatten": lambda s: Flatten(),
    "dense": lambda s: Dense(s["in_features"], s["out_features"]),
}


def layer_from_spec(spec: dict[str, Any]) -> Layer:
    """Rebuild a layer (with throwaway weights) from its ``spec()`` dict."""
    builder = LAYER_BUILDERS.get(str(spec.get("kind")))
    if builder is None:
        raise ValueError(f"unknown layer kind '{spec.get('kind')}'")
    return builder(spec)

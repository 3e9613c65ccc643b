"""Builders for the single-channel, early-fusion and late-fusion networks.

All three share one trunk recipe: per-image standardisation of each input
channel, then for each width in the channel plan a 3x3 "same" convolution,
ReLU and 2x2 max pool, then flatten. With the default plan
[8, 16, 32, 64, 64] a 100x100 input ends as 3x3x64 = 576 features.

- single: trunk on the (1, 100, 100) mixdown image, dense(576 -> 6)
- early:  the same trunk with 3 input channels (top, bottom, mixdown)
- late:   one 1-channel trunk per microphone, initialised from different
          seeds; their features are concatenated (1152) before dense(1152 -> 6)

Softmax is applied by ``predict`` and by the training loss, not by the model.
``forward``/``backward`` are the training path and keep per-layer state;
``logits`` keeps none, so prediction may share one model across threads.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from sonicgesture.core.errors import ShapeError
from sonicgesture.core.interfaces import Layer
from sonicgesture.core.models import (
    CLASS_ORDER,
    IMAGE_SIZE,
    NUM_CLASSES,
    FusionMode,
    GestureClass,
    ModelInput,
)
from sonicgesture.core.seeding import rng_for
from sonicgesture.nn.layers import (
    Conv2D,
    Dense,
    Flatten,
    MaxPool2x2,
    ReLU,
    Sequential,
    Standardize,
    softmax,
)

DEFAULT_CHANNELS: tuple[int, ...] = (8, 16, 32, 64, 64)
HEAD_INIT_INDEX = 2

INPUT_CHANNELS: dict[FusionMode, tuple[int, ...]] = {
    FusionMode.SINGLE: (1,),
    FusionMode.EARLY: (3,),
    FusionMode.LATE: (1, 1),
}


def pooled_size(input_size: int, n_pools: int) -> int:
    size = input_size
    for _ in range(n_pools):
        size //= 2
    return size


def build_trunk(
    in_channels: int, channels: Sequence[int], rng: np.random.Generator, kernel: int = 3
) -> Sequential:
    layers: list[Layer] = [Standardize()]
    previous = in_channels
    for width in channels:
        layers.extend([Conv2D(previous, width, kernel, rng), ReLU(), MaxPool2x2()])
        previous = width
    layers.append(Flatten())
    return Sequential(layers)


class FusionModel:
    """One or two convolutional trunks feeding a single dense head that emits 6 logits."""

    def __init__(
        self,
        mode: FusionMode,
        trunks: list[Sequential],
        head: Dense,
        input_size: int = IMAGE_SIZE,
        channels: Sequence[int] = DEFAULT_CHANNELS,
    ) -> None:
        if len(trunks) != len(INPUT_CHANNELS[mode]):
            raise ValueError(f"{mode.value} fusion needs {len(INPUT_CHANNELS[mode])} trunk(s)")
        self.mode = mode
        self.trunks = trunks
        self.head = head
        self.input_size = input_size
        self.channels = tuple(channels)
        self._block_sizes: list[int] = []

    @property
    def input_shapes(self) -> tuple[tuple[int, int, int], ...]:
        return tuple((c, self.input_size, self.input_size) for c in INPUT_CHANNELS[self.mode])

    def _check_inputs(self, inputs: Sequence[np.ndarray]) -> None:
        shapes = tuple(tuple(x.shape[1:]) for x in inputs)
        if shapes != self.input_shapes or len({x.shape[0] for x in inputs}) != 1:
            raise ShapeError(
                f"{self.mode.value} model expects batches of {self.input_shapes}, "
                f"got {tuple(tuple(x.shape) for x in inputs)}"
            )

    def features(self, inputs: Sequence[np.ndarray]) -> np.ndarray:
        """Concatenated trunk outputs, (N, features)."""
        self._check_inputs(inputs)
        blocks = [trunk.forward(x) for trunk, x in zip(self.trunks, inputs)]
        self._block_sizes = [b.shape[1] for b in blocks]
        return blocks[0] if len(blocks) == 1 else np.concatenate(blocks, axis=1)

    def forward(self, inputs: Sequence[np.ndarray]) -> np.ndarray:
        return self.head.forward(self.features(inputs))

    def logits(self, inputs: Sequence[np.ndarray]) -> np.ndarray:
        """Same values as ``forward`` without recording anything for ``backward``."""
        self._check_inputs(inputs)
        blocks = [trunk.apply(x) for trunk, x in zip(self.trunks, inputs)]
        features = blocks[0] if len(blocks) == 1 else np.concatenate(blocks, axis=1)
        return self.head.apply(features)

    def backward(self, d_logits: np.ndarray) -> tuple[np.ndarray, ...]:
        d_features = self.head.backward(d_logits)
        splits = np.cumsum(self._block_sizes)[:-1]
        return tuple(
            trunk.backward(block)
            for trunk, block in zip(self.trunks, np.split(d_features, splits, axis=1))
        )

    def named_params(self) -> list[tuple[str, np.ndarray]]:
        named: list[tuple[str, np.ndarray]] = []
        for t, trunk in enumerate(self.trunks):
            named.extend(trunk.named_params(prefix=f"trunk{t}."))
        named.extend((f"head.{k}", v) for k, v in self.head.params().items())
        return named

    def named_grads(self) -> list[tuple[str, np.ndarray]]:
        named: list[tuple[str, np.ndarray]] = []
        for t, trunk in enumerate(self.trunks):
            named.extend(trunk.named_grads(prefix=f"trunk{t}."))
        named.extend((f"head.{k}", v) for k, v in self.head.grads().items())
        return named

    def parameter_count(self) -> int:
        return int(sum(value.size for _, value in self.named_params()))

    def astype(self, dtype: np.dtype | type | str) -> "FusionModel":
        """Cast every parameter in place; returns self."""
        layers = [layer for trunk in self.trunks for layer in trunk.layers] + [self.head]
        for layer in layers:
            for name, value in layer.params().items():
                layer.params()[name] = value.astype(dtype)
        return self

    @property
    def dtype(self) -> np.dtype:
        return self.head.params()["weight"].dtype

    def spec(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "input_size": self.input_size,
            "channels": list(self.channels),
            "trunks": [trunk.specs() for trunk in self.trunks],
            "head": [self.head.spec(), {"kind": "softmax"}],
        }


def build_model(
    mode: FusionMode,
    seed: int,
    input_size: int = IMAGE_SIZE,
    channels: Sequence[int] = DEFAULT_CHANNELS,
) -> FusionModel:
    """
    Build a freshly initialised model for ``mode``.

    Trunk t draws its weights from ``rng_for(seed, "init", t)`` and the head from
    index 2, so single and early models built from one seed share a head.
    """
    mode = FusionMode(mode)
    if not channels:
        raise ValueError("channel plan must have at least one convolution")
    side = pooled_size(input_size, len(channels))
    if side < 1:
        raise ValueError(
            f"input_size {input_size} collapses to nothing after {len(channels)} 2x2 pools"
        )
    trunks = [
        build_trunk(in_ch, channels, rng_for(seed, "init", t))
        for t, in_ch in enumerate(INPUT_CHANNELS[mode])
    ]
    n_features = len(trunks) * channels[-1] * side * side
    head = Dense(n_features, NUM_CLASSES, rng_for(seed, "init", HEAD_INIT_INDEX))
    return FusionModel(mode, trunks, head, input_size=input_size, channels=channels)


def model_from_spec(spec: dict[str, Any]) -> FusionModel:
    """Rebuild the architecture described by ``FusionModel.spec()`` (weights are placeholders)."""
    return build_model(
        FusionMode(spec["mode"]),
        seed=0,
        input_size=int(spec["input_size"]),
        channels=tuple(int(c) for c in spec["channels"]),
    )


def predict_batch(
    model: FusionModel, inputs: Sequence[np.ndarray], batch_size: int = 64
) -> tuple[np.ndarray, np.ndarray]:
    """Class indices and probabilities for a batch; argmax ties go to the lowest index."""
    n = inputs[0].shape[0]
    probabilities = np.zeros((n, NUM_CLASSES))
    for start in range(0, n, batch_size):
        chunk = [x[start : start + batch_size].astype(model.dtype, copy=False) for x in inputs]
        probabilities[start : start + batch_size] = softmax(model.logits(chunk))
    return probabilities.argmax(axis=1), probabilities


def predict(model: FusionModel, mi: ModelInput) -> tuple[GestureClass, np.ndarray]:
    if mi.mode is not model.mode:
        raise ShapeError(f"{mi.mode.value} input given to a {model.mode.value} model")
    labels, probabilities = predict_batch(model, [t[None] for t in mi.tensors])
    return CLASS_ORDER[int(labels[0])], probabilities[0]

"""Central finite-difference checks of analytic gradients (double precision)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from sonicgesture.nn.fusion import FusionModel
from sonicgesture.nn.layers import softmax_crossentropy

DEFAULT_EPSILON = 1e-6
DEFAULT_TOLERANCE = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||), 0.0 when both vanish."""
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / scale


def _coordinates(
    shape: tuple[int, ...], samples: int | None, rng: np.random.Generator
) -> list[tuple[int, ...]]:
    total = int(np.prod(shape))
    if samples is None or samples >= total:
        flat = np.arange(total)
    else:
        flat = np.sort(rng.choice(total, size=samples, replace=False))
    return [tuple(int(i) for i in np.unravel_index(k, shape)) for k in flat]


def numeric_gradient(
    loss: Callable[[], float],
    array: np.ndarray,
    coordinates: Sequence[tuple[int, ...]],
    epsilon: float = DEFAULT_EPSILON,
) -> np.ndarray:
    """dL/d array at ``coordinates`` by perturbing ``array`` in place (restored afterwards)."""
    values = np.zeros(len(coordinates))
    for k, index in enumerate(coordinates):
        original = array[index]
        array[index] = original + epsilon
        plus = loss()
        array[index] = original - epsilon
        minus = loss()
        array[index] = original
        values[k] = (plus - minus) / (2.0 * epsilon)
    return values


@dataclass
class GradCheckResult:
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return self.max_error <= tolerance


def check_layer(
    layer: Any,
    x: np.ndarray,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    samples: int | None = None,
) -> GradCheckResult:
    """
    Compare a layer's backward pass against finite differences of L = sum(y * r).

    ``r`` is a fixed random projection, so every output element contributes.
    """
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    projection = rng.standard_normal(layer.forward(x).shape)

    def loss() -> float:
        return float(np.sum(layer.forward(x) * projection))

    layer.forward(x)
    dx = layer.backward(projection)
    analytic = {"input": dx}
    analytic.update({name: grad.copy() for name, grad in layer.grads().items()})

    result = GradCheckResult()
    targets = {"input": x, **layer.params()}
    for name, array in targets.items():
        coords = _coordinates(array.shape, samples, rng)
        numeric = numeric_gradient(loss, array, coords, epsilon)
        picked = np.array([analytic[name][c] for c in coords])
        result.errors[name] = relative_error(picked, numeric)
    return result


def check_model(
    model: FusionModel,
    inputs: Sequence[np.ndarray],
    labels: np.ndarray,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    samples: int | None = 20,
) -> GradCheckResult:
    """
    Gradient check of softmax cross-entropy through a whole model.

    At most ``samples`` coordinates per parameter tensor are checked; pass
    ``None`` to check every coordinate.
    """
    rng = np.random.default_rng(seed)
    batch = [np.array(x, dtype=np.float64) for x in inputs]

    def loss() -> float:
        value, _ = softmax_crossentropy(model.forward(batch), labels)
        return value

    _, grad = softmax_crossentropy(model.forward(batch), labels)
    model.backward(grad)
    analytic = {name: g.copy() for name, g in model.named_grads()}

    result = GradCheckResult()
    for name, array in model.named_params():
        coords = _coordinates(array.shape, samples, rng)
        numeric = numeric_gradient(loss, array, coords, epsilon)
        picked = np.array([analytic[name][c] for c in coords])
        result.errors[name] = relative_error(picked, numeric)
    return result

"""Neural network layers with hand-derived forward and backward passes.

Conventions that the gradient checks depend on:

* Convolution is cross-correlation (no kernel flip), the usual network
  convention.
* "Same" zero padding: for kernel k and stride s the total pad is
  ``(ceil(L/s) - 1) * s + k - L``, split left = total // 2, remainder
  right.  Output length is always ``ceil(L/s)``.
* Batch norm in training mode normalizes each channel over (batch,
  position) with the population variance, and updates running stats as
  ``running = (1 - momentum) * running + momentum * batch``.
* ReLU and leaky ReLU use subgradient 0 at exactly 0.
* Dropout is inverted: survivors are scaled by 1/(1-rate) at train time,
  inference is the identity.

Layers cache what they need during ``forward`` and consume the cache in
``backward``; a layer instance therefore belongs to a single training
loop at a time.  Parameter arrays are exposed via ``params()`` and
gradients via ``grads()`` after a backward pass.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import Rng
from .tensor import ShapeError


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def conv_output_length(length: int, stride: int) -> int:
    """Output positions of a same-padded convolution: ceil(length/stride)."""
    return -(-length // stride)


class Conv1d:
    """1-D convolution, kernel size 3 unless told otherwise, same padding."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3, stride: int = 1, name: str = "conv"):
        if stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {stride}")
        if kernel_size < 1:
            raise ValueError("kernel_size must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.name = name
        self.weight = np.zeros((out_channels, in_channels, kernel_size))
        self.bias = np.zeros(out_channels)
        self._cache = None
        self._plans: dict[int, tuple[int, int, np.ndarray]] = {}  # by input length
        self._grads: dict[str, np.ndarray] = {}

    def init_params(self, rng: Rng | None) -> None:
        """He-normal weights (std = sqrt(2/fan_in)), zero bias."""
        if rng is None:
            return
        fan_in = self.in_channels * self.kernel_size
        draws = rng.normal(self.weight.size, 0.0, math.sqrt(2.0 / fan_in))
        self.weight = draws.reshape(self.weight.shape)
        self.bias = np.zeros(self.out_channels)

    def _padding(self, length: int) -> tuple[int, int, np.ndarray]:
        plan = self._plans.get(length)
        if plan is None:
            out_len = conv_output_length(length, self.stride)
            total = max((out_len - 1) * self.stride + self.kernel_size - length, 0)
            left = total // 2
            positions = (
                np.arange(out_len)[:, None] * self.stride + np.arange(self.kernel_size)[None, :]
            )
            plan = self._plans[length] = (left, total - left, positions)
        return plan

    def forward(self, x: np.ndarray, training: bool = False, rng: Rng | None = None) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"{self.name}: expected (batch, {self.in_channels}, length), got {x.shape}"
            )
        batch, _, length = x.shape
        left, right, positions = self._padding(length)
        if left or right:
            xp = np.zeros((batch, self.in_channels, length + left + right))
            xp[:, :, left : left + length] = x
        else:
            xp = x
        cols = xp[:, :, positions]  # (B, Cin, Lout, K)
        # (B, Lout, Cout) <- contract (Cin, K)
        out = np.tensordot(cols, self.weight, axes=([1, 3], [1, 2]))
        out = out.transpose(0, 2, 1) + self.bias[None, :, None]
        self._cache = (cols, x.shape, left, right, positions)
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward called without cached forward")
        cols, x_shape, left, right, positions = self._cache
        batch, _, length = x_shape
        if grad_out.shape != (batch, self.out_channels, cols.shape[2]):
            raise ShapeError(
                f"{self.name}: grad_out shape {grad_out.shape} does not match forward output"
            )
        self._grads["bias"] = grad_out.sum(axis=(0, 2))
        # (Cout, Cin, K) <- contract (B, Lout)
        self._grads["weight"] = np.tensordot(grad_out, cols, axes=([0, 2], [0, 2]))
        # scatter the column gradients back onto the padded input
        grad_cols = np.tensordot(grad_out, self.weight, axes=([1], [0]))  # (B, Lout, Cin, K)
        grad_cols = grad_cols.transpose(0, 2, 1, 3)
        grad_xp = np.zeros((batch, self.in_channels, length + left + right))
        np.add.at(grad_xp, (slice(None), slice(None), positions), grad_cols)
        return grad_xp[:, :, left : left + length]

    def params(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}

    def grads(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.weight": self._grads["weight"], f"{self.name}.bias": self._grads["bias"]}


class BatchNorm1d:
    """Per-channel batch normalization over (batch, position)."""

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1, name: str = "bn"):
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.name = name
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self._cache = None
        self._grads: dict[str, np.ndarray] = {}

    def init_params(self, rng: Rng | None) -> None:
        pass  # gamma=1, beta=0 from construction

    def forward(self, x: np.ndarray, training: bool = False, rng: Rng | None = None) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.channels:
            raise ShapeError(f"{self.name}: expected (batch, {self.channels}, length), got {x.shape}")
        if training:
            n = x.shape[0] * x.shape[2]
            if n < 2:
                raise ValueError(f"{self.name}: training mode needs batch*length >= 2, got {n}")
            mean = x.mean(axis=(0, 2))
            centered = x - mean[None, :, None]
            var = np.einsum("bcl,bcl->c", centered, centered) / n  # population
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            centered = x - self.running_mean[None, :, None]
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = centered * inv_std[None, :, None]
        if training:
            self._cache = (x_hat, inv_std)
        return self.gamma[None, :, None] * x_hat + self.beta[None, :, None]

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward needs a training-mode forward first")
        x_hat, inv_std = self._cache
        if grad_out.shape != x_hat.shape:
            raise ShapeError(f"{self.name}: grad_out shape {grad_out.shape} != {x_hat.shape}")
        n = x_hat.shape[0] * x_hat.shape[2]
        self._grads["gamma"] = (grad_out * x_hat).sum(axis=(0, 2))
        self._grads["beta"] = grad_out.sum(axis=(0, 2))
        g = grad_out * self.gamma[None, :, None]
        mean_g = g.mean(axis=(0, 2))
        mean_gx = (g * x_hat).mean(axis=(0, 2))
        return inv_std[None, :, None] * (
            g - mean_g[None, :, None] - x_hat * mean_gx[None, :, None]
        )

    def params(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.gamma": self.gamma, f"{self.name}.beta": self.beta}

    def grads(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.gamma": self._grads["gamma"], f"{self.name}.beta": self._grads["beta"]}


class Activation:
    """Elementwise relu or leaky_relu."""

    KINDS = ("relu", "leaky_relu")

    def __init__(self, kind: str = "relu", alpha: float = 0.01, name: str = "act"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation {kind!r}; choose from {self.KINDS}")
        self.kind = kind
        self.alpha = alpha
        self.name = name
        self._mask = None

    def init_params(self, rng: Rng | None) -> None:
        pass

    def forward(self, x: np.ndarray, training: bool = False, rng: Rng | None = None) -> np.ndarray:
        slope = 0.0 if self.kind == "relu" else self.alpha
        self._mask = np.where(x > 0, 1.0, slope)
        return x * self._mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise RuntimeError(f"{self.name}: backward called without cached forward")
        return grad_out * self._mask

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}


class Flatten:
    """(batch, channels, length) -> (batch, channels*length), channel-major."""

    def __init__(self, name: str = "flatten"):
        self.name = name
        self._shape = None

    def init_params(self, rng: Rng | None) -> None:
        pass

    def forward(self, x: np.ndarray, training: bool = False, rng: Rng | None = None) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out.reshape(self._shape)

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}


class Dense:
    """Affine layer y = x W^T + b on (batch, features) inputs."""

    def __init__(self, in_features: int, out_features: int, name: str = "dense"):
        self.in_features = in_features
        self.out_features = out_features
        self.name = name
        self.weight = np.zeros((out_features, in_features))
        self.bias = np.zeros(out_features)
        self._x = None
        self._grads: dict[str, np.ndarray] = {}

    def init_params(self, rng: Rng | None) -> None:
        if rng is None:
            return
        draws = rng.normal(self.weight.size, 0.0, math.sqrt(2.0 / self.in_features))
        self.weight = draws.reshape(self.weight.shape)
        self.bias = np.zeros(self.out_features)

    def forward(self, x: np.ndarray, training: bool = False, rng: Rng | None = None) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"{self.name}: expected (batch, {self.in_features}), got {x.shape}")
        self._x = x
        return x @ self.weight.T + self.bias

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError(f"{self.name}: backward called without cached forward")
        if grad_out.shape != (self._x.shape[0], self.out_features):
            raise ShapeError(f"{self.name}: grad_out shape {grad_out.shape} mismatched")
        self._grads["weight"] = grad_out.T @ self._x
        self._grads["bias"] = grad_out.sum(axis=0)
        return grad_out @ self.weight

    def params(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}

    def grads(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.weight": self._grads["weight"], f"{self.name}.bias": self._grads["bias"]}


class Dropout:
    """Inverted dropout; inactive (identity) at rate 0 or in inference."""

    def __init__(self, rate: float = 0.0, name: str = "dropout"):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.name = name
        self._mask = None

    def init_params(self, rng: Rng | None) -> None:
        pass

    def forward(self, x: np.ndarray, training: bool = False, rng: Rng | None = None) -> np.ndarray:
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError(f"{self.name}: training with rate > 0 requires an rng")
        keep = rng.uniform(x.size).reshape(x.shape) >= self.rate
        self._mask = keep / (1.0 - self.rate)
        return x * self._mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return grad_out
        return grad_out * self._mask

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

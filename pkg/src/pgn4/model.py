"""The PGN4 network: four strided conv blocks, a 128-unit dense layer, sigmoid head.

Architecture (input length F = number of selected features):

    input (batch, 1, F)
      -> conv1 1->16, stride 1 -> BN -> activation
      -> conv2 16->16, stride 2 -> BN -> activation
      -> conv3 16->32, stride 1 -> BN -> activation
      -> conv4 32->32, stride 2 -> BN -> activation
      -> flatten (width 32 * ceil(ceil(F/2)/2))
      -> dense -> 128 -> activation -> dropout (default off)
      -> head 128 -> 1 -> sigmoid

All kernels are size 3 with same padding; the stride-2 layers do the
downsampling a pooling layer would otherwise do.  Blocks are ordered
conv -> BN -> activation.  Weights are He-normal, biases zero.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import container
from .layers import Activation, BatchNorm1d, Conv1d, Dense, Dropout, Flatten, sigmoid
from .rng import Rng
from .tensor import ShapeError

# (out_channels, stride) for the four conv blocks
CONV_PLAN = ((16, 1), (16, 2), (32, 1), (32, 2))
HIDDEN_UNITS = 128


class SequentialNet:
    """A layer stack ending in a single logit, squashed to a probability.

    ``forward`` returns per-sample probabilities of the positive class;
    ``backward`` takes dLoss/dprob, folds in the sigmoid derivative, and
    runs the chain in reverse.  Parameters are exposed as an ordered
    name -> array dict whose arrays Adam updates in place.
    """

    method_id = "net"

    def __init__(self, layers: list, n_features: int):
        self.layers = layers
        self.n_features = n_features
        self._probs = None

    def _adapt_input(self, X: np.ndarray) -> np.ndarray:
        return X

    def forward(self, X: np.ndarray, training: bool = False, rng: Rng | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected (batch, {self.n_features}) features, got {X.shape}")
        h = self._adapt_input(X)
        for layer in self.layers:
            h = layer.forward(h, training=training, rng=rng)
        if h.shape[1] != 1:
            raise ShapeError(f"head produced {h.shape[1]} outputs, expected 1")
        self._probs = sigmoid(h[:, 0])
        return self._probs

    def backward(self, dloss_dprob: np.ndarray) -> dict[str, np.ndarray]:
        if self._probs is None:
            raise RuntimeError("backward called without a cached forward pass")
        p = self._probs
        dz = (dloss_dprob * p * (1.0 - p))[:, None]  # through the sigmoid
        grad = dz
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        out: dict[str, np.ndarray] = {}
        for layer in self.layers:
            out.update(layer.grads())
        return out

    def parameters(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for layer in self.layers:
            out.update(layer.params())
        return out

    def set_parameters(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(values) != set(params):
            raise ValueError("parameter name set does not match the model")
        for name, arr in params.items():
            new = np.asarray(values[name], dtype=np.float64)
            if new.shape != arr.shape:
                raise ShapeError(f"{name}: shape {new.shape} != {arr.shape}")
            arr[...] = new

    def score(self, X: np.ndarray) -> np.ndarray:
        """Inference-mode probabilities; the common classifier surface."""
        return self.forward(X, training=False)


class Pgn4Model(SequentialNet):
    """The four-conv-block detector over a 1-D arrangement of features."""

    method_id = "pgn4"

    def __init__(self, input_length: int, activation: str = "relu",
                 dropout_rate: float = 0.0, leaky_alpha: float = 0.01):
        if input_length < 4:
            raise ValueError(
                f"input_length must be >= 4 (second stride-2 block needs kernel "
                f"support), got {input_length}"
            )
        self.input_length = input_length
        self.activation = activation
        self.dropout_rate = dropout_rate
        self.leaky_alpha = leaky_alpha

        def act(name):
            return Activation(activation, alpha=leaky_alpha, name=name)

        layers = []
        in_ch, length = 1, input_length
        self.conv_lengths: list[int] = []
        for i, (out_ch, stride) in enumerate(CONV_PLAN, start=1):
            layers.append(Conv1d(in_ch, out_ch, kernel_size=3, stride=stride, name=f"conv{i}"))
            layers.append(BatchNorm1d(out_ch, name=f"bn{i}"))
            layers.append(act(f"act{i}"))
            length = -(-length // stride)
            self.conv_lengths.append(length)
            in_ch = out_ch
        self.flatten_width = in_ch * length
        layers.append(Flatten())
        layers.append(Dense(self.flatten_width, HIDDEN_UNITS, name="dense1"))
        layers.append(act("act_dense"))
        layers.append(Dropout(dropout_rate, name="dropout"))
        layers.append(Dense(HIDDEN_UNITS, 1, name="head"))
        super().__init__(layers, n_features=input_length)

    def _adapt_input(self, X: np.ndarray) -> np.ndarray:
        return X[:, None, :]  # single input channel

    @property
    def batchnorms(self) -> list[BatchNorm1d]:
        return [l for l in self.layers if isinstance(l, BatchNorm1d)]

    def running_stats(self) -> dict[str, np.ndarray]:
        out = {}
        for bn in self.batchnorms:
            out[f"{bn.name}.running_mean"] = bn.running_mean
            out[f"{bn.name}.running_var"] = bn.running_var
        return out


def build_pgn4(
    input_length: int,
    rng: Rng | None,
    activation: str = "relu",
    dropout_rate: float = 0.0,
    leaky_alpha: float = 0.01,
) -> Pgn4Model:
    """Construct and initialize a PGN4 model.

    With ``rng=None`` all weights stay zero (useful for tests and for
    loading saved parameters); otherwise He-normal initialization draws
    from the given stream in layer order.
    """
    model = Pgn4Model(input_length, activation, dropout_rate, leaky_alpha)
    for layer in model.layers:
        layer.init_params(rng)
    return model


def save_model(model: Pgn4Model, path: str | Path, extra_meta: dict | None = None) -> None:
    """Serialize parameters, BN running stats, and config to one file.

    ``extra_meta`` entries (provenance, preprocessing) ride along in the
    header and are ignored on load.
    """
    meta = {
        "input_length": model.input_length,
        "activation": model.activation,
        "dropout_rate": model.dropout_rate,
        "leaky_alpha": model.leaky_alpha,
    }
    meta.update(extra_meta or {})
    arrays = dict(model.parameters())
    arrays.update(model.running_stats())
    container.save_container(path, model.method_id, meta, arrays)


def load_model(path: str | Path) -> Pgn4Model:
    """Rebuild a saved PGN4 model bit-exactly."""
    method, meta, arrays = container.load_container(path)
    if method != "pgn4":
        raise container.ContainerError(f"{path}: contains a {method!r} model, not pgn4")
    model = build_pgn4(
        meta["input_length"],
        rng=None,
        activation=meta["activation"],
        dropout_rate=meta["dropout_rate"],
        leaky_alpha=meta["leaky_alpha"],
    )
    stats = model.running_stats()
    model.set_parameters({k: v for k, v in arrays.items() if k not in stats})
    for bn in model.batchnorms:
        bn.running_mean = arrays[f"{bn.name}.running_mean"].copy()
        bn.running_var = arrays[f"{bn.name}.running_var"].copy()
    return model

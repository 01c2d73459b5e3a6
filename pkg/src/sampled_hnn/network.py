"""Fully connected tanh network with a scalar linear readout.

All evaluation is batch-major: inputs ``X`` have shape ``(n, 2d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DimensionError

ACTIVATIONS = ("tanh",)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HiddenLayer:
    W: np.ndarray  # (n_out, n_in)
    b: np.ndarray  # (n_out,)

    def __post_init__(self):
        W, b = _readonly(self.W), _readonly(self.b)
        if W.ndim != 2 or b.shape != (W.shape[0],):
            raise DimensionError(f"layer weights {W.shape} and biases {b.shape} are inconsistent")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class SampledNetwork:
    layers: tuple[HiddenLayer, ...]
    readout_W: Optional[np.ndarray] = None
    readout_b: float = 0.0
    activation: str = "tanh"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionError("a network needs at least one hidden layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.n_in != prev.n_out:
                raise DimensionError(f"layer widths do not chain: {prev.n_out} -> {nxt.n_in}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}")
        readout = np.zeros(layers[-1].n_out) if self.readout_W is None else self.readout_W
        readout = _readonly(np.ravel(readout))
        if readout.shape != (layers[-1].n_out,):
            raise DimensionError(f"readout has {readout.size} weights, last hidden layer has {layers[-1].n_out} neurons")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "readout_W", readout)
        object.__setattr__(self, "readout_b", float(self.readout_b))

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_in

    @property
    def d(self) -> int:
        return self.n_inputs // 2

    @property
    def widths(self) -> list[int]:
        return [layer.n_out for layer in self.layers]

    def with_readout(self, W, b, **meta) -> "SampledNetwork":
        return replace(self, readout_W=W, readout_b=b, meta={**self.meta, **meta})


def _inputs(net: SampledNetwork, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[1] != net.n_inputs:
        raise DimensionError(f"network expects inputs of width {net.n_inputs}, got shape {X.shape}")
    return X


def forward_hidden(net: SampledNetwork, X) -> np.ndarray:
    """Last hidden layer outputs, shape ``(n, N_L)``."""
    out = _inputs(net, X)
    for layer in net.layers:
        out = np.tanh(out @ layer.W.T + layer.b)
    return out


def hidden_outputs_and_jacobian(net: SampledNetwork, X) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Phi, dPhi)`` with ``dPhi`` of shape ``(n, N_L, 2d)``."""
    out = _inputs(net, X)
    jac = None
    for layer in net.layers:
        out = np.tanh(out @ layer.W.T + layer.b)
        slope = 1.0 - out**2
        if jac is None:
            jac = slope[:, :, None] * layer.W[None, :, :]
        else:
            jac = slope[:, :, None] * np.einsum("ij,njk->nik", layer.W, jac)
    return out, jac


def grad_hidden(net: SampledNetwork, X) -> np.ndarray:
    """Input Jacobians of the last hidden layer, shape ``(n, N_L, 2d)``."""
    return hidden_outputs_and_jacobian(net, X)[1]


def forward(net: SampledNetwork, X) -> np.ndarray:
    """Predicted Hamiltonian values, shape ``(n,)``."""
    return forward_hidden(net, X) @ net.readout_W + net.readout_b


def predict_gradH(net: SampledNetwork, X) -> np.ndarray:
    """Gradient of the network output with respect to its inputs, shape ``(n, 2d)``."""
    out = _inputs(net, X)
    # reverse-mode pass: cheaper than forming the full Jacobian
    acts = []
    for layer in net.layers:
        out = np.tanh(out @ layer.W.T + layer.b)
        acts.append(out)
    g = np.broadcast_to(net.readout_W, acts[-1].shape)
    for layer, a in zip(reversed(net.layers), reversed(acts)):
        g = (g * (1.0 - a**2)) @ layer.W
    return g

"""Learning from flow-map pairs with finite differences, plus post-hoc correction.

Given pairs ``(x_i, phi_h(x_i))`` the gradient rows of the readout system are
evaluated at the mixed point ``(q_i', p_i)`` (``q_i'`` the position after one
step) with targets ``J^{-1} (phi_h(x_i) - x_i) / h``. A network fitted this way
learns the Hamiltonian whose symplectic Euler map matches the flow, which is
off from the true one by ``-(h/2) dH/dq . dH/dp + O(h^2)``; ``corrected_H``
adds that term back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DomainBox, _frozen, jinv_apply, sample_domain
from .errors import DimensionError
from .integrators import flow_map
from .linsolve import FitConfig, LinearSystem, assemble_from, train
from .network import SampledNetwork, forward, predict_gradH


@dataclass(frozen=True)
class FlowDataset:
    points: np.ndarray
    next_points: np.ndarray
    h: float
    anchor_point: np.ndarray
    anchor_value: float
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step size must be positive, got {self.h}")
        pts, nxt = _frozen(self.points), _frozen(self.next_points)
        if pts.ndim != 2 or pts.shape != nxt.shape or pts.shape[1] % 2:
            raise DimensionError(f"flow pairs must both have shape (K, 2d); got {pts.shape} and {nxt.shape}")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(nxt))):
            raise ValueError("flow pairs contain non-finite values")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "next_points", nxt)
        object.__setattr__(self, "anchor_point", _frozen(self.anchor_point))
        object.__setattr__(self, "anchor_value", float(self.anchor_value))
        object.__setattr__(self, "h", float(self.h))
        if self.values is not None:
            object.__setattr__(self, "values", _frozen(self.values))

    @property
    def K(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1] // 2


def make_flow_dataset(system, box: DomainBox, n: int, h: float, rng) -> FlowDataset:
    """Uniform points over ``box`` paired with their reference-flow images after time ``h``."""
    X = sample_domain(box, n, rng)
    values = system.H(X)
    return FlowDataset(X, flow_map(system, X, h), h, X[0], values[0], values)


def fd_rows(flow: FlowDataset) -> tuple[np.ndarray, np.ndarray]:
    """Evaluation points ``(q_next, p)`` and targets ``J^{-1} (x_next - x) / h``."""
    d = flow.d
    mixed = np.concatenate([flow.next_points[:, :d], flow.points[:, d:]], axis=1)
    return mixed, jinv_apply((flow.next_points - flow.points) / flow.h)


def assemble_fd_system(net: SampledNetwork, flow: FlowDataset) -> LinearSystem:
    if net.n_inputs != flow.points.shape[1]:
        raise DimensionError(f"network takes {net.n_inputs} inputs, flow points have {flow.points.shape[1]}")
    mixed, targets = fd_rows(flow)
    return assemble_from(net, mixed, targets, flow.anchor_point, flow.anchor_value)


def train_fd(flow: FlowDataset, config: FitConfig) -> tuple[SampledNetwork, float]:
    return train(flow, config, assemble=assemble_fd_system)


def correction_term(net: SampledNetwork, X, h: float) -> np.ndarray:
    g = predict_gradH(net, X)
    d = g.shape[-1] // 2
    return 0.5 * h * np.einsum("ij,ij->i", g[:, :d], g[:, d:])


def corrected_H(net: SampledNetwork, X, h: float, anchor=None) -> np.ndarray:
    """``Phi + (h/2) <dPhi/dq, dPhi/dp>`` at the rows of ``X``.

    The correction shifts the value at the anchor point as well. Passing
    ``anchor=(x0, H0)`` removes that shift so the corrected function again
    takes the known value ``H0`` at ``x0``; without it the integration
    constant carries an ``O(h)`` offset.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    values = forward(net, X) + correction_term(net, X, h)
    if anchor is not None:
        x0, H0 = anchor
        x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
        values = values + (H0 - (forward(net, x0) + correction_term(net, x0, h))[0])
    return values

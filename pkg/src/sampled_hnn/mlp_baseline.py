"""Sampled-MLP baseline: a sampled hidden layer regressing the velocity field directly.

Unlike the Hamiltonian network this model outputs ``(qdot, pdot)`` with a
``2d``-column linear readout, so its vector field is in general not
Hamiltonian. It shares the hidden-layer samplers and the least-squares solver.
"""

from dataclasses import dataclass

import numpy as np

from .core import as_generator, jinv_apply, seed_streams
from .linsolve import FitConfig, LinearSystem, sample_hidden, solve_least_squares
from .network import SampledNetwork, forward_hidden


@dataclass(frozen=True)
class SampledMLP:
    hidden: SampledNetwork
    readout_W: np.ndarray  # (N_L, 2d)
    readout_b: np.ndarray  # (2d,)

    def velocity(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = forward_hidden(self.hidden, X.reshape(-1, X.shape[-1])) @ self.readout_W + self.readout_b
        return out.reshape(X.shape)

    def gradient(self, X) -> np.ndarray:
        """``J^{-1}`` times the velocity, so symplectic Euler can consume it like a gradient."""
        return jinv_apply(self.velocity(X))


def fit_sampled_mlp(dataset, config: FitConfig) -> SampledMLP:
    """Fit on ``dataset.derivatives``; ``swim`` and ``a-swim`` fall back to U-SWIM pairs."""
    sampler = config.sampler if config.sampler in ("elm", "u-swim") else "u-swim"
    rng = as_generator(seed_streams(config.seed)["stage1"])
    hidden = SampledNetwork(sample_hidden(sampler, dataset.points, config, rng))
    features = forward_hidden(hidden, dataset.points)
    A = np.column_stack([features, np.ones(len(features))])
    coefs = np.column_stack(
        [
            solve_least_squares(LinearSystem(A, target), config.reg, config.solver_mode)
            for target in dataset.derivatives.T
        ]
    )
    return SampledMLP(hidden, coefs[:-1], coefs[-1])

"""Linear readout fit and the end-to-end sampling pipelines.

With hidden layers fixed, the network gradient is linear in the readout
``w = [W_{L+1}; b_{L+1}]``. Matching it to ``J^{-1} xdot`` at every training
point, plus one row pinning the value at an anchor point, gives the system
``A w = u`` with ``A`` of shape ``(2dK + 1, N_L + 1)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .core import as_generator, jinv_apply, seed_streams
from .errors import ConfigError, DimensionError, NumericError
from .network import SampledNetwork, forward, forward_hidden, hidden_outputs_and_jacobian
from .samplers import TANH_CONSTANTS, elm_layers, swim_layers, uswim_layers

SAMPLERS = ("elm", "u-swim", "swim", "a-swim")
SOLVER_MODES = ("ridge", "cutoff")


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if self.A.ndim != 2 or self.u.shape != (self.A.shape[0],):
            raise DimensionError(f"system matrix {self.A.shape} and right-hand side {self.u.shape} disagree")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of one training run.

    ``reg`` is the Tikhonov weight in ``ridge`` mode and the relative
    singular-value cutoff in ``cutoff`` mode. ``elm_bias_range`` defaults to
    the extent of the training inputs when left unset.
    """

    sampler: str = "a-swim"
    widths: tuple[int, ...] = (1000,)
    reg: float = 1e-13
    seed: int = 0
    solver_mode: str = "cutoff"
    elm_bias_range: Optional[tuple[float, float]] = None
    pool_size: Optional[int] = None
    eps: Optional[float] = None

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"sampler must be one of {', '.join(SAMPLERS)}, got {self.sampler!r}", "sampler")
        widths = (self.widths,) if isinstance(self.widths, int) else tuple(int(w) for w in self.widths)
        if not widths or min(widths) < 1:
            raise ConfigError(f"widths must be a non-empty list of positive ints, got {self.widths!r}", "widths")
        object.__setattr__(self, "widths", widths)
        if not self.reg >= 0:
            raise ConfigError(f"regularization must be >= 0, got {self.reg}", "reg")
        if self.solver_mode not in SOLVER_MODES:
            raise ConfigError(f"solver_mode must be one of {SOLVER_MODES}, got {self.solver_mode!r}", "solver_mode")


def _check_input_width(net: SampledNetwork, data):
    if net.n_inputs != data.points.shape[1]:
        raise DimensionError(f"network takes {net.n_inputs} inputs, data points have {data.points.shape[1]}")


def _stack_system(jac: np.ndarray, targets: np.ndarray, anchor_features: np.ndarray, anchor_value: float) -> LinearSystem:
    K, N, D = jac.shape
    A = np.zeros((K * D + 1, N + 1))
    # row 2d*i + k holds d(Phi_L)/dx_k at point i
    A[:-1, :N] = jac.transpose(0, 2, 1).reshape(K * D, N)
    A[-1, :N] = anchor_features
    A[-1, N] = 1.0
    u = np.empty(K * D + 1)
    u[:-1] = targets.reshape(-1)
    u[-1] = anchor_value
    return LinearSystem(A, u)


def assemble_from(net: SampledNetwork, eval_points, targets, anchor_point, anchor_value) -> LinearSystem:
    """Gradient rows of the last hidden layer at ``eval_points`` against ``targets``
    (shape ``(K, 2d)``), followed by the anchor row."""
    _, jac = hidden_outputs_and_jacobian(net, eval_points)
    anchor = forward_hidden(net, anchor_point)[0]
    return _stack_system(jac, np.asarray(targets, dtype=np.float64), anchor, anchor_value)


def assemble_system(net: SampledNetwork, dataset) -> LinearSystem:
    """Build ``A`` and ``u`` from the hidden layers of ``net`` and ``dataset``."""
    _check_input_width(net, dataset)
    return assemble_from(net, dataset.points, jinv_apply(dataset.derivatives), dataset.anchor_point, dataset.anchor_value)


def solve_least_squares(system: LinearSystem, reg: float = 0.0, mode: str = "ridge", full_output: bool = False):
    """Minimize ``|A w - u|^2 + reg |w|^2`` (``ridge``) or solve with a relative
    singular-value cutoff ``reg`` (``cutoff``).

    ``reg = 0`` returns the minimum-norm least-squares solution, discarding
    singular values below ``eps * max(A.shape) * s_max`` as LAPACK's gelsd does.
    A QR factorization of ``[A | u]`` reduces the problem to the triangular
    factor, whose SVD then gives the regularized solution. With
    ``full_output`` a dict of diagnostics is returned alongside ``w``.
    """
    if mode not in SOLVER_MODES:
        raise ValueError(f"unknown solver mode {mode!r}")
    if not reg >= 0:
        raise ValueError(f"regularization must be nonnegative, got {reg}")
    A, u = system.A, system.u
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(u))):
        raise NumericError("least-squares system contains non-finite entries")
    m, n = A.shape
    if m > n + 1:
        R = scipy.linalg.qr(np.column_stack([A, u]), mode="r", check_finite=False)[0]
        R, c = R[:n, :n], R[:n, n]
    else:
        R, c = A, u
    try:
        U, s, Vt = scipy.linalg.svd(R, full_matrices=False, check_finite=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        U, s, Vt = scipy.linalg.svd(R, full_matrices=False, check_finite=False, lapack_driver="gesvd")
    smax = s[0] if s.size else 0.0
    if mode == "ridge" and reg > 0:
        filt = s / (s**2 + reg)
    else:
        cutoff = reg * smax if mode == "cutoff" and reg > 0 else np.finfo(float).eps * max(m, n) * smax
        keep = s > cutoff
        filt = np.zeros_like(s)
        filt[keep] = 1.0 / s[keep]
    w = Vt.T @ (filt * (U.T @ c))
    if not np.all(np.isfinite(w)):
        raise NumericError("least-squares solution is not finite")
    if not full_output:
        return w
    positive = s[s > 0]
    info = {
        "singular_values": s,
        "condition": float(smax / positive[-1]) if positive.size else float("inf"),
        "rank": int(np.count_nonzero(filt)),
    }
    return w, info


def fit_readout(net: SampledNetwork, dataset, reg: float = 0.0, mode: str = "ridge", assemble: Callable = assemble_system) -> SampledNetwork:
    """Solve for the readout of ``net`` and return the fitted network.

    ``meta`` records the total residual ``|A w - u|``, the anchor-row residual,
    the mean per-point residual of the gradient rows and the condition number.
    """
    system = assemble(net, dataset)
    w, info = solve_least_squares(system, reg, mode, full_output=True)
    r = system.A @ w - system.u
    dim = net.n_inputs
    per_point = np.linalg.norm(r[:-1].reshape(-1, dim), axis=1)
    return net.with_readout(
        w[:-1],
        w[-1],
        residual=float(np.linalg.norm(r)),
        anchor_residual=float(r[-1]),
        gradient_residual=float(per_point.mean()),
        condition=info["condition"],
        rank=info["rank"],
    )


def sample_hidden(sampler: str, inputs, config: FitConfig, rng, values=None):
    """Hidden layers for one sampling pass (no least-squares fit)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if sampler == "elm":
        bias_range = config.elm_bias_range
        if bias_range is None:
            bias_range = (float(inputs.min()), float(inputs.max()))
        return elm_layers(inputs.shape[1], config.widths, bias_range, rng)
    if sampler == "u-swim":
        return uswim_layers(inputs, config.widths, TANH_CONSTANTS, rng)
    if sampler == "swim":
        if values is None:
            raise ConfigError("SWIM sampling needs function values at the training inputs", "sampler")
        return swim_layers(inputs, values, config.widths, TANH_CONSTANTS, config.eps, config.pool_size, rng)
    raise ConfigError(f"no single-pass sampler named {sampler!r}", "sampler")


def train(dataset, config: FitConfig, assemble: Callable = assemble_system, approx_values=None) -> tuple[SampledNetwork, float]:
    """Sample hidden layers, fit the readout and return ``(network, wall_seconds)``.

    ``elm`` and ``u-swim`` sample once without function values; ``swim``
    samples with the true values in ``dataset.values``; ``a-swim`` fits a
    U-SWIM network first, predicts values on the training inputs, resamples
    every hidden layer with the SWIM density on those predictions and fits
    again. ``approx_values`` overrides the first-stage predictions.

    ``assemble`` builds the linear system; the finite-difference variant
    plugs in here. Wall time covers sampling, assembly and solves.
    """
    streams = seed_streams(config.seed)
    inputs = dataset.points
    fit = lambda net: fit_readout(net, dataset, config.reg, config.solver_mode, assemble)  # noqa: E731

    start = time.perf_counter()
    if config.sampler in ("elm", "u-swim"):
        net = fit(SampledNetwork(sample_hidden(config.sampler, inputs, config, as_generator(streams["stage1"]))))
    elif config.sampler == "swim":
        if dataset.values is None:
            raise ConfigError("sampler 'swim' is supervised and needs true Hamiltonian values in the dataset", "sampler")
        net = fit(SampledNetwork(sample_hidden("swim", inputs, config, as_generator(streams["stage2"]), dataset.values)))
    else:
        first = fit(SampledNetwork(sample_hidden("u-swim", inputs, config, as_generator(streams["stage1"]))))
        stage_one_time = time.perf_counter() - start
        values = forward(first, inputs) if approx_values is None else np.asarray(approx_values, dtype=np.float64)
        net = fit(SampledNetwork(sample_hidden("swim", inputs, config, as_generator(streams["stage2"]), values)))
        net = net.with_readout(net.readout_W, net.readout_b, stage_one_time_s=stage_one_time,
                               stage_one_residual=first.meta["residual"])
    elapsed = time.perf_counter() - start
    net = net.with_readout(net.readout_W, net.readout_b, sampler=config.sampler, seed=config.seed, train_time_s=elapsed)
    return net, elapsed

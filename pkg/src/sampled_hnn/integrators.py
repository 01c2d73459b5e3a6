"""Symplectic Euler and a high-accuracy reference flow.

Gradient oracles are callables ``grad(x) -> dH/dx`` acting on arrays of
shape ``(..., 2d)``; a catalog ``SystemSpec.grad`` or a fitted network's
``predict_gradH`` both qualify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import j_apply
from .errors import StepFailure

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 100
REFERENCE_SUBSTEP = 1e-4


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_steps + 1, 2d)
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step size must be positive, got {self.h}")
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")

    def __len__(self):
        return len(self.times)


def symplectic_euler_step(grad: Callable, x, h: float, separable: bool = False,
                          tol: float = FIXED_POINT_TOL, max_iter: int = FIXED_POINT_MAX_ITER) -> np.ndarray:
    """One step of symplectic Euler with the gradient evaluated at ``(q_{n+1}, p_n)``.

        q_{n+1} = q_n + h dH/dp(q_{n+1}, p_n)
        p_{n+1} = p_n - h dH/dq(q_{n+1}, p_n)

    The position update is implicit unless ``dH/dp`` does not depend on ``q``;
    with ``separable=True`` it is evaluated explicitly, otherwise it is solved
    by fixed-point iteration (which also terminates after two sweeps for
    separable systems).
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1] // 2
    q0, p0 = x[..., :d], x[..., d:]
    oracle = grad
    grad = lambda y: np.asarray(oracle(y), dtype=np.float64).reshape(y.shape)  # noqa: E731
    g = grad(x)
    q1 = q0 + h * g[..., d:]
    if not separable:
        for _ in range(max_iter):
            g = grad(np.concatenate([q1, p0], axis=-1))
            q_next = q0 + h * g[..., d:]
            delta = np.max(np.abs(q_next - q1)) if q1.size else 0.0
            q1 = q_next
            if delta <= tol * (1.0 + np.max(np.abs(q1))):
                break
        else:
            raise StepFailure(f"fixed-point iteration did not converge in {max_iter} iterations (last change {delta:.3e})")
    g = grad(np.concatenate([q1, p0], axis=-1))
    p1 = p0 - h * g[..., :d]
    out = np.concatenate([q1, p1], axis=-1)
    if not np.all(np.isfinite(out)):
        raise StepFailure("symplectic Euler produced non-finite values")
    return out


def integrate(grad: Callable, x0, h: float, n_steps: int, separable: bool = False) -> Trajectory:
    """Apply ``symplectic_euler_step`` ``n_steps`` times starting from ``x0``."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    x = np.asarray(x0, dtype=np.float64)
    states = np.empty((n_steps + 1,) + x.shape)
    states[0] = x
    for k in range(n_steps):
        try:
            x = symplectic_euler_step(grad, x, h, separable=separable)
        except StepFailure as exc:
            raise StepFailure(f"step {k} failed: {exc}", step=k) from exc
        states[k + 1] = x
    return Trajectory(h * np.arange(n_steps + 1), states, h)


def _rk4(field: Callable, x: np.ndarray, dt: float, n: int) -> np.ndarray:
    for _ in range(n):
        k1 = field(x)
        k2 = field(x + 0.5 * dt * k1)
        k3 = field(x + 0.5 * dt * k2)
        k4 = field(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def _field_of(system) -> Callable:
    if callable(system) and not hasattr(system, "vector_field"):
        return system
    return system.vector_field


def flow_map(system, X, t: float, max_substep: float = REFERENCE_SUBSTEP) -> np.ndarray:
    """Advance every row of ``X`` by time ``t`` with classical RK4 at substeps <= ``max_substep``."""
    X = np.asarray(X, dtype=np.float64)
    if t == 0:
        return X.copy()
    n = max(1, math.ceil(abs(t) / max_substep - 1e-9))
    return _rk4(_field_of(system), X, t / n, n)


def reference_flow(system, x0, h_out: float, n_steps: int, max_substep: float = REFERENCE_SUBSTEP) -> Trajectory:
    """Near-exact trajectory of ``system`` sampled every ``h_out``.

    ``system`` is a catalog ``SystemSpec`` or a velocity callable.
    """
    field = _field_of(system)
    n_sub = max(1, math.ceil(h_out / max_substep - 1e-9))
    dt = h_out / n_sub
    x = np.asarray(x0, dtype=np.float64)
    states = np.empty((n_steps + 1,) + x.shape)
    states[0] = x
    for k in range(n_steps):
        x = _rk4(field, x, dt, n_sub)
        states[k + 1] = x
    return Trajectory(h_out * np.arange(n_steps + 1), states, h_out)


def energy_series(traj: Trajectory, H: Callable) -> np.ndarray:
    return np.asarray(H(traj.states), dtype=np.float64).reshape(len(traj))


def max_relative_drift(energies) -> float:
    e = np.asarray(energies, dtype=np.float64)
    return float(np.max(np.abs(e - e[0])) / abs(e[0]))


def hamiltonian_field(grad: Callable) -> Callable:
    """Velocity field ``J grad H`` of a gradient oracle."""
    return lambda x: j_apply(grad(x))

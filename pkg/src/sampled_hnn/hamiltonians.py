"""Catalog of closed-form target Hamiltonians with analytic gradients.

Every function here works on batches: ``x`` has shape ``(..., 2d)`` with
positions first and momenta last.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .core import DomainBox, j_apply
from .errors import CatalogError, DimensionError


def _pendulum_H(x, f):
    q, p = x[..., 0], x[..., 1]
    return 0.5 * p**2 + (1.0 - np.cos(f * q))


def _pendulum_grad(x, f):
    q, p = x[..., 0], x[..., 1]
    return np.stack([f * np.sin(f * q), p], axis=-1)


def _lotka_volterra_H(x, beta, alpha, delta, gamma):
    q, p = x[..., 0], x[..., 1]
    return beta * np.exp(q) - alpha * q + delta * np.exp(p) - gamma * p


def _lotka_volterra_grad(x, beta, alpha, delta, gamma):
    q, p = x[..., 0], x[..., 1]
    return np.stack([beta * np.exp(q) - alpha, delta * np.exp(p) - gamma], axis=-1)


def _double_pendulum_H(x):
    q1, q2, p1, p2 = np.moveaxis(x, -1, 0)
    delta = q1 - q2
    num = p1**2 + 2.0 * p2**2 - 2.0 * p1 * p2 * np.cos(delta)
    den = 2.0 * (1.0 + np.sin(delta) ** 2)
    return num / den - 2.0 * np.cos(q1) - np.cos(q2)


def _double_pendulum_grad(x):
    q1, q2, p1, p2 = np.moveaxis(x, -1, 0)
    delta = q1 - q2
    s, c = np.sin(delta), np.cos(delta)
    D = 1.0 + s**2
    N = p1**2 + 2.0 * p2**2 - 2.0 * p1 * p2 * c
    # derivative of the kinetic term N / (2D) with respect to delta
    dT = p1 * p2 * s / D - N * s * c / D**2
    return np.stack(
        [
            dT + 2.0 * np.sin(q1),
            -dT + np.sin(q2),
            (p1 - p2 * c) / D,
            (2.0 * p2 - p1 * c) / D,
        ],
        axis=-1,
    )


def _henon_heiles_H(x, alpha):
    q1, q2, p1, p2 = np.moveaxis(x, -1, 0)
    return 0.5 * (p1**2 + p2**2) + 0.5 * (q1**2 + q2**2) + alpha * (q1**2 * q2 - q2**3 / 3.0)


def _henon_heiles_grad(x, alpha):
    q1, q2, p1, p2 = np.moveaxis(x, -1, 0)
    return np.stack(
        [q1 + 2.0 * alpha * q1 * q2, q2 + alpha * (q1**2 - q2**2), p1, p2],
        axis=-1,
    )


def _harmonic_H(x):
    return 0.5 * np.sum(x**2, axis=-1)


def _harmonic_grad(x):
    return np.array(x, dtype=np.float64, copy=True)


@dataclass(frozen=True)
class SystemSpec:
    name: str
    d: int
    params: Mapping[str, float]
    default_domain: DomainBox
    _H: Callable = field(repr=False, compare=False)
    _grad: Callable = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return 2 * self.d

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"{self.name} expects phase points of length {self.dim}, got {x.shape[-1]}")
        return x

    def H(self, x) -> np.ndarray:
        return self._H(self._check(x), **self.params)

    def grad(self, x) -> np.ndarray:
        return self._grad(self._check(x), **self.params)

    def vector_field(self, x) -> np.ndarray:
        return j_apply(self.grad(x))


_PI = np.pi

# name -> (d, H, grad, params, default domain intervals)
_CATALOG = {
    "single_pendulum": (1, _pendulum_H, _pendulum_grad, {"f": 1.0}, [(-2 * _PI, 2 * _PI), (-1.0, 1.0)]),
    "single_pendulum_freq": (1, _pendulum_H, _pendulum_grad, {"f": 1.0}, [(-_PI, _PI), (-0.5, 0.5)]),
    "lotka_volterra_zero": (
        1,
        _lotka_volterra_H,
        _lotka_volterra_grad,
        {"beta": -1.0, "alpha": -2.0, "delta": -1.0, "gamma": -1.0},
        [(-2.0, 2.0), (-2.0, 2.0)],
    ),
    "lotka_volterra_five": (
        1,
        _lotka_volterra_H,
        _lotka_volterra_grad,
        {"beta": 0.025, "alpha": 3.5, "delta": 0.07, "gamma": 10.0},
        [(0.0, 8.0), (0.0, 8.0)],
    ),
    "double_pendulum": (
        2,
        _double_pendulum_H,
        _double_pendulum_grad,
        {},
        [(-_PI, _PI), (-_PI, _PI), (-1.0, 1.0), (-1.0, 1.0)],
    ),
    "henon_heiles": (2, _henon_heiles_H, _henon_heiles_grad, {"alpha": 1.0}, [(-5.0, 5.0)] * 4),
    # not part of the benchmark catalog; used as an analytic test oracle
    "harmonic_oscillator": (1, _harmonic_H, _harmonic_grad, {}, [(-1.0, 1.0), (-1.0, 1.0)]),
}

SYSTEM_NAMES = tuple(n for n in _CATALOG if n != "harmonic_oscillator")


def get_system(name: str, f: float | None = None) -> SystemSpec:
    """Look up a catalog system by id.

    ``f`` sets the frequency of ``single_pendulum_freq`` and is rejected for
    every other system.
    """
    try:
        d, H, grad, params, intervals = _CATALOG[name]
    except KeyError:
        raise CatalogError(f"unknown system {name!r}; choose one of {', '.join(_CATALOG)}") from None
    params = dict(params)
    if f is not None:
        if name != "single_pendulum_freq":
            raise CatalogError(f"frequency parameter is only defined for single_pendulum_freq, not {name!r}")
        params["f"] = float(f)
    return SystemSpec(name, d, MappingProxyType(params), DomainBox.from_intervals(*intervals), H, grad)


def _resolve(system) -> SystemSpec:
    return system if isinstance(system, SystemSpec) else get_system(system)


def eval_H(system, x) -> np.ndarray:
    return _resolve(system).H(x)


def eval_gradH(system, x) -> np.ndarray:
    return _resolve(system).grad(x)


def vector_field(system, x) -> np.ndarray:
    return _resolve(system).vector_field(x)

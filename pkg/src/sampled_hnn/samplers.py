"""Hidden-layer construction: data-agnostic ELM and the data-driven SWIM family.

SWIM neurons are built from pairs of training points. For a pair whose layer
inputs are ``x1`` and ``x2`` the neuron is

    w = s1 * (x2 - x1) / |x2 - x1|**2,    b = -<w, x1> - s2,

so that with tanh constants the activation is -1/2 at ``x1``, +1/2 at ``x2``
and 0 at their midpoint. U-SWIM draws pairs uniformly; SWIM draws them with
probability proportional to ``|f(x2) - f(x1)| / max(|x2 - x1|, eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import as_generator
from .errors import DegenerateDataError, DegeneratePairError, SamplingExhaustedError
from .network import HiddenLayer

DEFAULT_EPS = 1e-10
RETRY_FACTOR = 100


@dataclass(frozen=True)
class ActivationConstants:
    s1: float
    s2: float


TANH_CONSTANTS = ActivationConstants(s1=np.log(3.0), s2=np.log(3.0) / 2.0)


@dataclass(frozen=True)
class PairCandidate:
    i: int
    j: int
    density: float

    def __post_init__(self):
        if self.i == self.j:
            raise DegeneratePairError("a pair needs two different indices")
        if not self.density >= 0:
            raise ValueError("density must be nonnegative")


def elm_layer(n_in: int, n_out: int, bias_low: float, bias_high: float, rng) -> HiddenLayer:
    """Weights from N(0, 1), biases from Uniform(bias_low, bias_high)."""
    if not bias_low < bias_high:
        raise ValueError(f"ELM bias range needs low < high, got ({bias_low}, {bias_high})")
    rng = as_generator(rng)
    W = rng.standard_normal((n_out, n_in))
    b = rng.uniform(bias_low, bias_high, size=n_out)
    return HiddenLayer(W, b)


def elm_layers(n_in: int, widths: Sequence[int], bias_range: tuple[float, float], rng) -> list[HiddenLayer]:
    rng = as_generator(rng)
    layers = []
    for width in widths:
        layers.append(elm_layer(n_in, width, bias_range[0], bias_range[1], rng))
        n_in = width
    return layers


def pair_to_params(x1, x2, consts: ActivationConstants = TANH_CONSTANTS) -> tuple[np.ndarray, float]:
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    diff = x2 - x1
    sq = float(diff @ diff)
    if sq == 0.0:
        raise DegeneratePairError("cannot build a neuron from two coincident points")
    w = consts.s1 * diff / sq
    return w, float(-(w @ x1) - consts.s2)


def pairs_to_layer(X1: np.ndarray, X2: np.ndarray, consts: ActivationConstants = TANH_CONSTANTS) -> HiddenLayer:
    """Vectorized ``pair_to_params`` over rows of ``X1`` and ``X2``."""
    diff = X2 - X1
    sq = np.einsum("ij,ij->i", diff, diff)
    if np.any(sq == 0.0):
        raise DegeneratePairError("cannot build a neuron from two coincident points")
    W = consts.s1 * diff / sq[:, None]
    b = -np.einsum("ij,ij->i", W, X1) - consts.s2
    return HiddenLayer(W, b)


def _n_pairs(K: int) -> int:
    return K * (K - 1) // 2


def draw_unique_pairs(K: int, n: int, rng, max_draws: Optional[int] = None, accept=None) -> np.ndarray:
    """Draw ``n`` distinct unordered index pairs ``(i, j)``, ``i != j``, uniformly.

    Duplicates are redrawn. ``accept`` optionally filters pairs (vectorized
    predicate over an ``(m, 2)`` array); rejected pairs are also redrawn.
    Raises SamplingExhaustedError once ``max_draws`` candidates have been
    consumed without collecting ``n`` pairs.
    """
    rng = as_generator(rng)
    if K < 2:
        raise SamplingExhaustedError(f"need at least 2 training points to draw pairs, got {K}")
    if n > _n_pairs(K):
        raise SamplingExhaustedError(f"requested {n} distinct pairs but only {_n_pairs(K)} exist among {K} points")
    if max_draws is None:
        max_draws = RETRY_FACTOR * max(n, 1)
    if n == _n_pairs(K) and accept is None:
        # every pair is needed; enumerate instead of waiting on the coupon collector
        i, j = np.triu_indices(K, k=1)
        return np.stack([i, j], axis=1)[rng.permutation(n)]

    seen: set[int] = set()
    out = np.empty((n, 2), dtype=np.int64)
    filled = 0
    drawn = 0
    while filled < n:
        if drawn >= max_draws:
            raise SamplingExhaustedError(
                f"could only collect {filled} of {n} distinct pairs after {drawn} draws"
            )
        m = min(2 * (n - filled) + 16, max_draws - drawn)
        i = rng.integers(0, K, size=m)
        j = rng.integers(0, K - 1, size=m)
        j = j + (j >= i)
        drawn += m
        cand = np.stack([np.minimum(i, j), np.maximum(i, j)], axis=1)
        ok = np.ones(m, dtype=bool) if accept is None else np.asarray(accept(cand), dtype=bool)
        for (a, c), good in zip(cand, ok):
            if not good:
                continue
            key = int(a) * K + int(c)
            if key in seen:
                continue
            seen.add(key)
            out[filled] = (a, c)
            filled += 1
            if filled == n:
                break
    return out


def _distinct_images(images: np.ndarray):
    def accept(pairs):
        diff = images[pairs[:, 1]] - images[pairs[:, 0]]
        return np.any(diff != 0.0, axis=1)

    return accept


def _layer_eps(layer_index: int, eps: Optional[float]) -> float:
    # distinct network inputs need no floor on the first layer
    if layer_index == 0:
        return 0.0
    return DEFAULT_EPS if eps is None else float(eps)


def uswim_layers(train_inputs, widths: Sequence[int], consts: ActivationConstants = TANH_CONSTANTS, rng=None) -> list[HiddenLayer]:
    """SWIM construction with index pairs drawn uniformly at random."""
    rng = as_generator(rng)
    images = np.asarray(train_inputs, dtype=np.float64)
    layers = []
    for width in widths:
        pairs = draw_unique_pairs(images.shape[0], width, rng, accept=_distinct_images(images))
        layer = pairs_to_layer(images[pairs[:, 0]], images[pairs[:, 1]], consts)
        layers.append(layer)
        images = np.tanh(images @ layer.W.T + layer.b)
    return layers


def swim_density(pairs, f_values, layer_inputs, eps: float = 0.0) -> np.ndarray:
    """Unnormalized SWIM sampling weights for index ``pairs``.

    The numerator is the max-norm of the function difference, the denominator
    the Euclidean distance of the layer inputs floored at ``eps``. Pairs whose
    layer inputs coincide get weight 0.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    f = np.asarray(f_values, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    X = np.asarray(layer_inputs, dtype=np.float64)
    if f.shape[0] != X.shape[0]:
        raise ValueError(f"{f.shape[0]} function values for {X.shape[0]} layer inputs")
    num = np.max(np.abs(f[pairs[:, 1]] - f[pairs[:, 0]]), axis=1)
    dist = np.linalg.norm(X[pairs[:, 1]] - X[pairs[:, 0]], axis=1)
    density = np.zeros(len(pairs))
    distinct = dist > 0.0
    density[distinct] = num[distinct] / np.maximum(dist[distinct], eps)
    return density


def default_pool_size(K: int, widths: Sequence[int]) -> int:
    return int(min(10 * sum(widths), _n_pairs(K)))


def swim_layers(
    train_inputs,
    f_values,
    widths: Sequence[int],
    consts: ActivationConstants = TANH_CONSTANTS,
    eps: Optional[float] = None,
    pool_size: Optional[int] = None,
    rng=None,
    density: Callable = swim_density,
) -> list[HiddenLayer]:
    """SWIM construction with pairs drawn proportionally to ``density``.

    For each layer a pool of distinct candidate pairs is drawn uniformly,
    weighted with ``density`` and then ``width`` pairs are drawn from the pool
    without replacement.
    """
    rng = as_generator(rng)
    images = np.asarray(train_inputs, dtype=np.float64)
    f_values = np.asarray(f_values, dtype=np.float64)
    K = images.shape[0]
    if f_values.shape[0] != K:
        raise ValueError(f"{f_values.shape[0]} function values for {K} training inputs")
    if pool_size is None:
        pool_size = default_pool_size(K, widths)
    layers = []
    for index, width in enumerate(widths):
        n_pool = int(min(max(pool_size, width), _n_pairs(K)))
        pool = draw_unique_pairs(K, n_pool, rng, accept=_distinct_images(images))
        weights = np.asarray(density(pool, f_values, images, _layer_eps(index, eps)), dtype=np.float64)
        total = weights.sum()
        if not total > 0.0:
            raise DegenerateDataError("all SWIM densities are zero; function values are constant on the candidate pairs")
        if np.count_nonzero(weights) < width:
            raise SamplingExhaustedError(
                f"only {np.count_nonzero(weights)} candidate pairs have positive density, layer needs {width}"
            )
        chosen = pool[rng.choice(n_pool, size=width, replace=False, p=weights / total)]
        layer = pairs_to_layer(images[chosen[:, 0]], images[chosen[:, 1]], consts)
        layers.append(layer)
        images = np.tanh(images @ layer.W.T + layer.b)
    return layers

"""Phase-space primitives: points, domain boxes, datasets and the symplectic matrix.

Batches of phase points are stored as arrays of shape ``(n, 2d)`` whose first
``d`` columns are positions ``q`` and last ``d`` columns are momenta ``p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = _frozen(np.atleast_1d(self.q))
        p = _frozen(np.atleast_1d(self.p))
        if q.ndim != 1 or q.shape != p.shape or q.size < 1:
            raise DimensionError(f"q and p must be vectors of equal length d >= 1, got {q.shape} and {p.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase point has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def d(self) -> int:
        return self.q.size

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_array(cls, x) -> "PhasePoint":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.size % 2:
            raise DimensionError(f"expected a vector of even length, got shape {x.shape}")
        d = x.size // 2
        return cls(x[:d], x[d:])


@dataclass(frozen=True)
class DomainBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen(np.atleast_1d(self.lower))
        hi = _frozen(np.atleast_1d(self.upper))
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size % 2:
            raise DimensionError("domain bounds must be vectors of equal, even length 2d")
        if not np.all(lo < hi):
            raise ValueError(f"domain box requires lower < upper in every coordinate, got {lo} and {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def d(self) -> int:
        return self.lower.size // 2

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def bounds_range(self) -> tuple[float, float]:
        """Smallest lower and largest upper bound over all coordinates."""
        return float(self.lower.min()), float(self.upper.max())

    @classmethod
    def from_intervals(cls, *intervals) -> "DomainBox":
        """``DomainBox.from_intervals((-1, 1), (-2, 2))`` for q in [-1, 1], p in [-2, 2]."""
        lo, hi = zip(*intervals)
        return cls(np.array(lo, float), np.array(hi, float))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)


@dataclass(frozen=True)
class Dataset:
    """Training data for the gradient system.

    ``values`` holds true Hamiltonian values at ``points`` when known; only
    supervised SWIM sampling needs them.
    """

    points: np.ndarray
    derivatives: np.ndarray
    anchor_point: np.ndarray
    anchor_value: float
    values: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        pts = _frozen(self.points)
        der = _frozen(self.derivatives)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] % 2:
            raise DimensionError(f"points must have shape (K, 2d) with K >= 1, got {pts.shape}")
        if der.shape != pts.shape:
            raise DimensionError(f"derivatives shape {der.shape} does not match points {pts.shape}")
        anchor = _frozen(self.anchor_point)
        if anchor.shape != (pts.shape[1],):
            raise DimensionError(f"anchor point must have length {pts.shape[1]}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "derivatives", der)
        object.__setattr__(self, "anchor_point", anchor)
        object.__setattr__(self, "anchor_value", float(self.anchor_value))
        if self.values is not None:
            vals = _frozen(self.values)
            if vals.shape != (pts.shape[0],):
                raise DimensionError("values must have one entry per point")
            object.__setattr__(self, "values", vals)

    @property
    def K(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1] // 2


def _split_dim(v: np.ndarray) -> int:
    if v.shape[-1] % 2:
        raise DimensionError(f"phase-space vectors need even length 2d, got {v.shape[-1]}")
    return v.shape[-1] // 2


def j_apply(g) -> np.ndarray:
    """Multiply by J = [[0, I], [-I, 0]] along the last axis: (g_q, g_p) -> (g_p, -g_q)."""
    g = np.asarray(g, dtype=np.float64)
    d = _split_dim(g)
    return np.concatenate([g[..., d:], -g[..., :d]], axis=-1)


def jinv_apply(v) -> np.ndarray:
    """Multiply by J^{-1} = -J along the last axis: (qdot, pdot) -> (-pdot, qdot)."""
    v = np.asarray(v, dtype=np.float64)
    d = _split_dim(v)
    return np.concatenate([-v[..., d:], v[..., :d]], axis=-1)


def symplectic_matrix(d: int) -> np.ndarray:
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def seed_streams(seed: int) -> dict[str, np.random.SeedSequence]:
    """Independent random streams derived from one root seed.

    The split is fixed: ``train`` and ``test`` drive dataset draws, ``stage1``
    drives first-pass hidden-layer sampling (ELM, U-SWIM, first A-SWIM stage)
    and ``stage2`` drives data-driven resampling (SWIM, second A-SWIM stage).
    """
    train, test, stage1, stage2 = np.random.SeedSequence(int(seed)).spawn(4)
    return {"train": train, "test": test, "stage1": stage1, "stage2": stage2}


def sample_domain(box: DomainBox, n: int, rng) -> np.ndarray:
    """Draw ``n`` points i.i.d. uniform over ``box``; returns shape ``(n, 2d)``."""
    if n < 1:
        raise ValueError(f"need n >= 1 points, got {n}")
    rng = as_generator(rng)
    return rng.uniform(box.lower, box.upper, size=(int(n), box.dim))


def make_dataset(system, box: DomainBox, n: int, rng) -> Dataset:
    """Uniform points over ``box`` with exact time derivatives from ``system``.

    The anchor is the first sampled point together with its true energy.
    """
    if system.dim != box.dim:
        raise DimensionError(f"system {system.name} has dimension {system.dim}, box has {box.dim}")
    X = sample_domain(box, n, rng)
    values = system.H(X)
    return Dataset(
        points=X,
        derivatives=system.vector_field(X),
        anchor_point=X[0],
        anchor_value=values[0],
        values=values,
    )

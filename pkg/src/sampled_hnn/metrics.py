"""Relative L2 error and multi-seed experiment statistics."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import DomainBox, as_generator, make_dataset, sample_domain, seed_streams
from .errors import DegenerateDataError, SampledHNNError
from .linsolve import FitConfig, train
from .network import forward

THREADS_ENV = "SAMPLED_HNN_THREADS"


def rel_l2(pred, truth) -> float:
    """``sqrt(sum((truth - pred)^2) / sum(truth^2))``."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"prediction shape {pred.shape} differs from truth {truth.shape}")
    denom = np.sum(truth**2)
    if not denom > 0:
        raise DegenerateDataError("relative L2 error is undefined for an all-zero reference")
    return float(np.sqrt(np.sum((truth - pred) ** 2) / denom))


class SeedFailure(SampledHNNError):
    def __init__(self, seed, cause):
        super().__init__(f"run with seed {seed} failed: {cause}")
        self.seed = seed


@dataclass(frozen=True)
class RunStats:
    seeds: tuple[int, ...]
    errors: tuple[float, ...]
    train_times: tuple[float, ...]
    residuals: tuple[float, ...] = ()

    def __post_init__(self):
        if not (len(self.seeds) == len(self.errors) == len(self.train_times)) or not self.seeds:
            raise ValueError("need one error and one timing per seed, and at least one seed")

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def min(self) -> float:
        return float(np.min(self.errors))

    @property
    def max(self) -> float:
        return float(np.max(self.errors))

    @property
    def mean_time(self) -> float:
        return float(np.mean(self.train_times))


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = requested or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def run_seed(system, config: FitConfig, seed: int, box: DomainBox, n_train: int, n_test: int):
    """Fresh train/test draw and one training run; returns ``(error, seconds, network)``."""
    streams = seed_streams(seed)
    dataset = make_dataset(system, box, n_train, as_generator(streams["train"]))
    X_test = sample_domain(box, n_test, as_generator(streams["test"]))
    net, elapsed = train(dataset, replace(config, seed=seed))
    return rel_l2(forward(net, X_test), system.H(X_test)), elapsed, net


def run_stats(
    system,
    config: FitConfig,
    seeds: Sequence[int],
    box: Optional[DomainBox] = None,
    n_train: int = 10000,
    n_test: int = 10000,
    workers: Optional[int] = None,
) -> RunStats:
    """Train once per seed and aggregate test errors.

    Each seed owns its data and model streams (see ``seed_streams``). When
    ``config`` leaves the ELM bias range unset it is taken from ``box``.
    """
    box = box or system.default_domain
    if config.elm_bias_range is None:
        config = replace(config, elm_bias_range=box.bounds_range())
    seeds = sorted(int(s) for s in seeds)
    if not seeds:
        raise ValueError("need at least one seed")

    def one(seed):
        try:
            err, elapsed, net = run_seed(system, config, seed, box, n_train, n_test)
        except SampledHNNError as exc:
            raise SeedFailure(seed, exc) from exc
        return err, elapsed, net.meta.get("residual", float("nan"))

    n_workers = worker_count(workers)
    if n_workers == 1:
        results = [one(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one, seeds))
    errors, times, residuals = zip(*results)
    return RunStats(tuple(seeds), tuple(errors), tuple(times), tuple(residuals))

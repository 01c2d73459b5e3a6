"""Command-line experiment runner.

Every config field can come from a JSON file (``--config``) using the field
names of ``ExperimentConfig``; flags given on the command line override the
file. Exit codes: 0 ok, 2 configuration or input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .core import DomainBox, as_generator, sample_domain, seed_streams
from .errors import CatalogError, ConfigError, NumericError, SampledHNNError, SchemaError
from .fdcorrect import corrected_H, make_flow_dataset, train_fd
from .hamiltonians import get_system
from .integrators import integrate
from .io import ExperimentRecord, append_records, load_model, save_model, stats_row, write_stats, write_trajectory
from .linsolve import SAMPLERS, SOLVER_MODES, FitConfig
from .metrics import SeedFailure, rel_l2, run_seed, run_stats, worker_count
from .network import forward, predict_gradH

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


@dataclass(frozen=True)
class ExperimentConfig:
    system: str = "single_pendulum"
    sampler: str = "a-swim"
    samplers: tuple[str, ...] = ()
    widths: tuple[int, ...] = (1000,)
    train_size: int = 10000
    test_size: int = 10000
    domain: Optional[tuple[tuple[float, float], ...]] = None
    reg: float = 1e-13
    solver_mode: str = "cutoff"
    seeds: tuple[int, ...] = (0,)
    f: Optional[float] = None
    fs: tuple[float, ...] = ()
    elm_bias: Optional[tuple[float, float]] = None
    hs: tuple[float, ...] = ()
    correct: bool = False
    workers: int = 1
    model: Optional[str] = None
    records: Optional[str] = None
    out: Optional[str] = None

    def __post_init__(self):
        for name in ("widths", "seeds", "samplers", "fs", "hs"):
            value = getattr(self, name)
            object.__setattr__(self, name, tuple(value) if isinstance(value, (list, tuple)) else (value,))
        for s in (self.sampler,) + self.samplers:
            if s not in SAMPLERS:
                raise ConfigError(f"--sampler must be one of {', '.join(SAMPLERS)}, got {s!r}", "sampler")
        if not self.widths or any(int(w) < 1 for w in self.widths):
            raise ConfigError(f"--width needs at least one positive width, got {list(self.widths)}", "widths")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.train_size < 2:
            raise ConfigError("--train-size must be at least 2", "train_size")
        if self.test_size < 1:
            raise ConfigError("--test-size must be at least 1", "test_size")
        if not self.reg >= 0:
            raise ConfigError("--reg must be nonnegative", "reg")
        if self.solver_mode not in SOLVER_MODES:
            raise ConfigError(f"--solver-mode must be one of {', '.join(SOLVER_MODES)}", "solver_mode")
        if not self.seeds:
            raise ConfigError("--seed needs at least one seed", "seeds")
        if any(not h > 0 for h in self.hs):
            raise ConfigError("--h values must be positive", "hs")
        if self.domain is not None:
            dom = tuple(tuple(float(v) for v in iv) for iv in self.domain)
            if any(len(iv) != 2 or not iv[0] < iv[1] for iv in dom):
                raise ConfigError("--domain needs LOW HIGH pairs with LOW < HIGH", "domain")
            object.__setattr__(self, "domain", dom)
        if self.elm_bias is not None and (len(self.elm_bias) != 2 or not self.elm_bias[0] < self.elm_bias[1]):
            raise ConfigError("--elm-bias needs LOW HIGH with LOW < HIGH", "elm_bias")

    def system_spec(self, f=None):
        f = self.f if f is None else f
        return get_system(self.system, f=f)

    def box(self, system) -> DomainBox:
        if self.domain is None:
            return system.default_domain
        if len(self.domain) != system.dim:
            raise ConfigError(f"--domain gives {len(self.domain)} intervals, system {system.name} needs {system.dim}", "domain")
        return DomainBox.from_intervals(*self.domain)

    def fit_config(self, sampler=None, widths=None, seed=None) -> FitConfig:
        return FitConfig(
            sampler=sampler or self.sampler,
            widths=widths or self.widths,
            reg=self.reg,
            seed=self.seeds[0] if seed is None else seed,
            solver_mode=self.solver_mode,
            elm_bias_range=self.elm_bias,
        )


CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def load_config_file(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read --config {path}: {exc}", "config") from exc
    if not isinstance(obj, dict):
        raise ConfigError("--config must hold a JSON object", "config")
    unknown = set(obj) - CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}", sorted(unknown)[0])
    return obj


def _pairs(values, flag):
    if values is None:
        return None
    if len(values) % 2:
        raise ConfigError(f"{flag} needs an even number of values (LOW HIGH pairs)", flag.lstrip("-").replace("-", "_"))
    return tuple((values[i], values[i + 1]) for i in range(0, len(values), 2))


def build_config(args) -> ExperimentConfig:
    """Merge defaults, the optional config file and explicit flags, in that order."""
    merged = load_config_file(args.config) if getattr(args, "config", None) else {}
    flags = {}
    for name in CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            flags[name] = value
    if "domain" in flags:
        flags["domain"] = _pairs(flags["domain"], "--domain")
    if "elm_bias" in flags:
        flags["elm_bias"] = tuple(flags["elm_bias"])
    merged.update(flags)
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(f"malformed config: {exc}", "config") from exc


def _freq(system):
    return system.params["f"] if system.name == "single_pendulum_freq" else None


def _records_path(cfg, default):
    return Path(cfg.records or default)


def _emit(msg):
    print(msg, flush=True)


def cmd_train(cfg: ExperimentConfig) -> int:
    system = cfg.system_spec()
    box = cfg.box(system)
    base = cfg.fit_config()
    if base.elm_bias_range is None:
        base = replace(base, elm_bias_range=box.bounds_range())
    model_path = Path(cfg.model or "model.json")
    records = []
    for seed in cfg.seeds:
        err, elapsed, net = run_seed(system, base, seed, box, cfg.train_size, cfg.test_size)
        path = model_path if len(cfg.seeds) == 1 else model_path.with_name(f"{model_path.stem}_seed{seed}{model_path.suffix}")
        save_model(net, path)
        records.append(ExperimentRecord(system.name, cfg.sampler, sum(cfg.widths), seed, err, elapsed,
                                        float(net.meta["residual"]), ExperimentRecord.now(), f=_freq(system)))
        _emit(f"seed {seed}: rel_l2 {err:.6e}  train {elapsed:.3f}s  model {path}")
    append_records(_records_path(cfg, "records.csv"), records)
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig) -> int:
    samplers = cfg.samplers or (cfg.sampler,)
    if cfg.fs:
        cells = [(s, cfg.widths, f) for s in samplers for f in cfg.fs]
    else:
        cells = [(s, (w,), cfg.f) for s in samplers for w in cfg.widths]

    def run_cell(cell):
        sampler, widths, f = cell
        system = cfg.system_spec(f)
        stats = run_stats(system, cfg.fit_config(sampler, widths), cfg.seeds, cfg.box(system),
                          cfg.train_size, cfg.test_size, workers=1)
        return stats_row(system.name, sampler, sum(widths), _freq(system), stats)

    n_workers = worker_count(cfg.workers)
    if n_workers == 1:
        rows = [run_cell(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(run_cell, cells))
    out = Path(cfg.out or "sweep.csv")
    write_stats(out, rows)
    for row in rows:
        _emit(f"{row['sampler']:>7} width {row['width']:>5} f {row['f'] or '-':>10}  mean {row['mean']}")
    _emit(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_stats(cfg: ExperimentConfig) -> int:
    system = cfg.system_spec()
    stats = run_stats(system, cfg.fit_config(), cfg.seeds, cfg.box(system), cfg.train_size, cfg.test_size,
                      workers=cfg.workers)
    row = stats_row(system.name, cfg.sampler, sum(cfg.widths), _freq(system), stats)
    if cfg.out:
        write_stats(cfg.out, [row])
    _emit(f"{cfg.sampler} on {system.name}: mean {stats.mean:.6e}  min {stats.min:.6e}  max {stats.max:.6e}  "
          f"time {stats.mean_time:.3f}s over {len(stats.seeds)} seeds")
    return EXIT_OK


def cmd_fd_train(cfg: ExperimentConfig) -> int:
    if not cfg.hs:
        raise ConfigError("fd-train needs at least one --h", "hs")
    system = cfg.system_spec()
    box = cfg.box(system)
    records = []
    for seed in cfg.seeds:
        streams = seed_streams(seed)
        X_test = sample_domain(box, cfg.test_size, as_generator(streams["test"]))
        truth = system.H(X_test)
        for h in cfg.hs:
            flow = make_flow_dataset(system, box, cfg.train_size, h, as_generator(streams["train"]))
            fit_cfg = cfg.fit_config(seed=seed)
            if fit_cfg.elm_bias_range is None:
                fit_cfg = replace(fit_cfg, elm_bias_range=box.bounds_range())
            net, elapsed = train_fd(flow, fit_cfg)
            preds = [(False, forward(net, X_test))]
            if cfg.correct:
                anchor = (flow.anchor_point, flow.anchor_value)
                preds.append((True, corrected_H(net, X_test, h, anchor=anchor)))
            for corrected, pred in preds:
                err = rel_l2(pred, truth)
                records.append(ExperimentRecord(system.name, cfg.sampler, sum(cfg.widths), seed, err, elapsed,
                                                float(net.meta["residual"]), ExperimentRecord.now(),
                                                f=_freq(system), h=h, corrected=corrected))
                _emit(f"seed {seed} h {h:g} {'corrected' if corrected else 'raw':>9}: rel_l2 {err:.6e}")
    append_records(_records_path(cfg, "fd_records.csv"), records)
    return EXIT_OK


def cmd_integrate(args) -> int:
    net = load_model(args.model)
    x0 = np.asarray(args.x0, dtype=np.float64)
    if x0.shape != (2 * net.d,):
        raise ConfigError(f"--x0 needs {2 * net.d} values for this model, got {x0.size}", "x0")
    if not args.h > 0:
        raise ConfigError("--h must be positive", "h")
    if args.steps < 0:
        raise ConfigError("--steps must be >= 0", "steps")
    traj = integrate(lambda x: predict_gradH(net, x), x0, args.h, args.steps, separable=args.separable)
    out = Path(args.out or "trajectory.csv")
    write_trajectory(out, traj.times, traj.states, forward(net, traj.states))
    _emit(f"wrote {len(traj)} rows to {out}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, many: bool = False):
    p.add_argument("--config", help="JSON file with config fields; flags override it")
    p.add_argument("--system", help="catalog system id")
    p.add_argument("--sampler", choices=SAMPLERS)
    if many:
        p.add_argument("--samplers", nargs="+", choices=SAMPLERS, help="samplers to sweep")
        p.add_argument("--f", dest="fs", nargs="+", type=float, help="frequencies to sweep (single_pendulum_freq)")
    else:
        p.add_argument("--f", type=float, help="frequency parameter for single_pendulum_freq")
    p.add_argument("--width", "--widths", dest="widths", nargs="*", type=int,
                   help="hidden widths (one layer each in sweep, stacked layers otherwise)")
    p.add_argument("--train-size", dest="train_size", type=int)
    p.add_argument("--test-size", dest="test_size", type=int)
    p.add_argument("--domain", nargs="+", type=float, metavar="BOUND", help="LOW HIGH per phase-space coordinate")
    p.add_argument("--reg", type=float, help="regularization or relative singular-value cutoff")
    p.add_argument("--solver-mode", dest="solver_mode", choices=SOLVER_MODES)
    p.add_argument("--seed", "--seeds", dest="seeds", nargs="+", type=int)
    p.add_argument("--elm-bias", dest="elm_bias", nargs=2, type=float, metavar=("LOW", "HIGH"))
    p.add_argument("--workers", type=int, help="worker threads (capped by SAMPLED_HNN_THREADS)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sampled-hnn", description="Sampled Hamiltonian network experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model per seed and append records")
    _add_common(p)
    p.add_argument("--model", help="model JSON path (seed suffix added for several seeds)")
    p.add_argument("--records", help="records CSV to append to")

    p = sub.add_parser("sweep", help="aggregate errors over seeds for a width or frequency grid")
    _add_common(p, many=True)
    p.add_argument("--out", help="output CSV")

    p = sub.add_parser("stats", help="aggregate errors over seeds for one configuration")
    _add_common(p)
    p.add_argument("--out", help="optional output CSV")

    p = sub.add_parser("fd-train", help="train on flow-map pairs, optionally with correction")
    _add_common(p)
    p.add_argument("--h", dest="hs", nargs="+", type=float, help="flow time steps")
    p.add_argument("--correct", action="store_true", help="also report corrected predictions")
    p.add_argument("--records", help="records CSV to append to")

    p = sub.add_parser("integrate", help="symplectic Euler with a saved model's gradient")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", nargs="+", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--separable", action="store_true", help="skip the implicit position solve")
    p.add_argument("--out", help="trajectory CSV")
    return parser


_COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "stats": cmd_stats, "fd-train": cmd_fd_train}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        if args.command == "integrate":
            return cmd_integrate(args)
        return _COMMANDS[args.command](build_config(args))
    except (ConfigError, CatalogError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, SeedFailure, SampledHNNError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

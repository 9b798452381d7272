"""Config-driven building blocks shared by the CLI and the experiment scripts."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import data as D
from .config import trial_seed
from .errors import ConfigError, DataError
from .reservoir import init_random, run_sequence
from .training import TrainConfig, evaluate, train
from .xai import layer_contribution

DEFAULT_NOISE = {"narma": 0.02, "sine-phase": 0.0, "trended-sine": 0.1}
DEFAULT_PERIOD = {"sine-phase": 200.0, "trended-sine": 25.0}
MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
VIDEO_TEST_FRACTION = 0.25


def data_seed(cfg):
    return cfg["data.seed"] if cfg["data.seed"] is not None else cfg["seed"]


def generate_series(cfg):
    """The full generated series for narma / sine-phase / trended-sine."""
    kind, T = cfg["data.kind"], cfg["data.T"]
    noise = cfg["data.noise_sd"] if cfg["data.noise_sd"] is not None else DEFAULT_NOISE.get(kind)
    period = cfg["data.period"] if cfg["data.period"] is not None else DEFAULT_PERIOD.get(kind)
    seed = data_seed(cfg)
    if kind == "narma":
        return D.gen_narma10(T, seed=seed, F=cfg["data.F"], noise_sd=noise)
    if kind == "sine-phase":
        return D.gen_sine_phase_task(T, cfg["data.phase_lag"], seed=seed, period=period, noise_sd=noise)
    if kind == "trended-sine":
        return D.gen_trended_sine(T, cfg["data.trend_slope"], noise, seed=seed, period=period)
    raise ConfigError(f"data.kind = {kind} is not a generator")


def _search_dirs(explicit):
    if explicit:
        return [Path(explicit)]
    dirs = []
    env = os.environ.get("ESNLENS_DATA_DIR")
    if env:
        dirs += [Path(env) / "mnist", Path(env)]
    dirs += [Path("data") / "mnist", Path.home() / ".esnlens" / "mnist", Path("/root/data/mnist")]
    return dirs


def find_mnist(explicit=None):
    """Directory holding the four IDX files (optionally gzipped)."""
    for d in _search_dirs(explicit):
        found = {}
        for split, names in MNIST_FILES.items():
            paths = []
            for name in names:
                for cand in (d / name, d / (name + ".gz")):
                    if cand.is_file():
                        paths.append(cand)
                        break
            if len(paths) == 2:
                found[split] = paths
        if len(found) == 2:
            return found
    tried = ", ".join(str(d) for d in _search_dirs(explicit))
    raise DataError(f"MNIST IDX files not found (searched: {tried}); set ESNLENS_DATA_DIR or data.path")


def load_datasets(cfg):
    """(train, test) datasets for the configured source."""
    kind = cfg["data.kind"]
    if kind in ("narma", "sine-phase", "trended-sine"):
        full = generate_series(cfg)
        return full.split_time(cfg["data.T"] - cfg["data.test_T"])
    if kind == "csv":
        cols = (cfg["data.input_cols"], cfg["data.target_cols"], cfg["data.normalize"])
        full = D.load_csv_series(cfg["data.path"], *cols)
        if cfg["data.test_path"]:
            return full, D.load_csv_series(cfg["data.test_path"], *cols)
        T = full.min_length
        if cfg["data.test_T"] >= T:
            raise ConfigError(f"data.test_T = {cfg['data.test_T']} leaves no training rows (series has {T})")
        return full.split_time(T - cfg["data.test_T"])
    if kind == "mnist":
        files = find_mnist(cfg["data.path"])
        tr = D.read_idx_images(*files["train"], limit=cfg["data.train_limit"])
        te = D.read_idx_images(*files["test"], limit=cfg["data.test_limit"])
        return tr, te
    if kind == "moving-dot":
        full = D.gen_moving_dot_videos(
            cfg["data.n_videos"], cfg["data.video_size"], cfg["data.frames"], seed=data_seed(cfg)
        )
        n_test = max(1, int(round(VIDEO_TEST_FRACTION * len(full))))
        idx = np.arange(len(full))
        return full.subset(idx[:-n_test]), full.subset(idx[-n_test:])
    raise ConfigError(f"unknown data.kind {kind!r}")


def train_config(cfg, dataset):
    return TrainConfig(
        ridge=cfg["train.ridge"],
        washout=cfg["train.washout"],
        task=dataset.task,
        pooling=cfg["train.pooling"],
        dtype=cfg["train.dtype"],
    )


def build_model(cfg, dataset, trial=0, overrides=None):
    """Untrained model for ``dataset``; ``overrides`` replaces model.* values (sweeps)."""
    p = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("model.")}
    p.update(overrides or {})
    classification = dataset.task == "classification"
    activation = p["readout_activation"]
    if activation == "auto":
        activation = "softmax" if classification else "identity"
    n_layers = int(p["n_layers"])
    alpha = p["alpha"] if len(p["alpha"]) == n_layers else p["alpha"][:1]
    return init_random(
        trial_seed(cfg["seed"], trial),
        n_layers,
        int(p["n_neurons"]),
        dataset.input_dim,
        dataset.n_classes if classification else dataset.output_dim,
        alpha,
        float(p["rho_max"]),
        density=p["density"],
        input_scaling=p["input_scaling"],
        feedback=p["feedback"],
        feedback_scaling=p["feedback_scaling"],
        readout_activation=activation,
        concat_input=p["concat_input"],
    )


def run_trial(cfg, train_ds, test_ds, trial=0, overrides=None):
    """Train and evaluate one model; returns (model, fit report, test metrics)."""
    tc = train_config(cfg, train_ds)
    model = build_model(cfg, train_ds, trial, overrides)
    model, report = train(model, train_ds, tc)
    return model, report, evaluate(model, test_ds, tc)


def sweep(cfg, train_ds, test_ds, jobs=None):
    """Per-trial rows for every sweep value; layer contribution for depth sweeps."""
    axis = cfg["sweep.axis"]
    values = cfg["sweep.values"]
    if not values:
        raise ConfigError("sweep.values is empty")
    cast = float if axis == "rho_max" else int
    tasks = [(cast(v), k) for v in values for k in range(cfg["sweep.repeats"])]
    for v, _ in tasks[:: cfg["sweep.repeats"]]:
        if axis == "rho_max" and not 0 < v < 1:
            raise ConfigError(f"rho_max sweep value {v} outside (0, 1)")
        if axis != "rho_max" and v < 1:
            raise ConfigError(f"{axis} sweep value {v} must be positive")

    def one(task):
        value, trial = task
        model, _, metrics = run_trial(cfg, train_ds, test_ds, trial, {axis: value})
        row = {"value": value, "trial": trial, "seed": trial_seed(cfg["seed"], trial)}
        row.update({k: v for k, v in metrics.items() if isinstance(v, float)})
        if axis == "n_layers" and value >= 2 and test_ds.task == "regression":
            u = test_ds[0][0]
            lc = layer_contribution(model, run_sequence(model, u))
            row["rp_difference"] = lc.mean_difference
        return row

    workers = max(1, jobs or os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, tasks))


def summarize(rows):
    """Mean and sample sd of every numeric metric per sweep value."""
    out = []
    metrics = [k for k in rows[0] if k not in ("value", "trial", "seed")]
    metrics += sorted({k for r in rows for k in r} - set(metrics) - {"value", "trial", "seed"})
    for value in dict.fromkeys(r["value"] for r in rows):
        group = [r for r in rows if r["value"] == value]
        entry = {"value": value, "n": len(group)}
        for m in metrics:
            vals = np.array([r[m] for r in group if m in r], dtype=float)
            if vals.size:
                entry[f"{m}_mean"] = float(vals.mean())
                entry[f"{m}_sd"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out.append(entry)
    return out

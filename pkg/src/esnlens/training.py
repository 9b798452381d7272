"""Readout fitting: design matrices, ridge / pseudo-inverse solves, metrics."""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigError, NumericError
from .reservoir import POOLINGS, apply_readout, pooled_features, run_sequence

TASKS = ("regression", "classification")
PINV_RIDGE = 1e-8


@dataclass
class TrainConfig:
    ridge: float = 1e-6
    washout: int | None = None
    task: str = "regression"
    pooling: str = "last"
    dtype: str = "float64"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.pooling not in POOLINGS:
            raise ConfigError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if not self.ridge >= 0:
            raise ConfigError(f"ridge coefficient must be >= 0, got {self.ridge}")
        if self.washout is None:
            self.washout = 50 if self.task == "regression" else 0
        if self.washout < 0:
            raise ConfigError("washout must be >= 0")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("dtype must be float32 or float64")


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _teacher(model, target):
    return target if model.feedback_weights is not None else None


def build_design_matrix(model, dataset, config):
    """Stack readout features Z and targets Y.

    Regression: one row per time step after the washout, features
    ``[x(t); u(t)]`` for a single layer or ``[x1(t); ...; xL(t)]`` for a stack.
    Classification: one pooled row per sequence with one-hot targets.
    """
    if len(dataset) == 0:
        raise ConfigError("empty dataset")
    if dataset.input_dim != model.input_dim:
        raise ConfigError(
            f"dataset input dimension {dataset.input_dim} != model input dimension {model.input_dim}"
        )
    if config.task == "classification":
        if dataset.task != "classification":
            raise ConfigError("classification training needs a labelled dataset")
        Z = pooled_features(model, dataset.inputs, config.pooling, dtype=config.dtype)
        return Z, one_hot(dataset.targets, model.output_dim)

    if config.washout >= dataset.min_length:
        raise ConfigError(
            f"washout {config.washout} must be shorter than the shortest sequence ({dataset.min_length})"
        )
    Zs, Ys = [], []
    for u, y in dataset:
        traj = run_sequence(model, u, teacher_outputs=_teacher(model, y))
        Zs.append(traj.features(model.concat_input)[config.washout :])
        Ys.append(np.asarray(y, dtype=np.float64).reshape(len(u), -1)[config.washout :])
    return np.vstack(Zs), np.vstack(Ys)


def _normal_residual(G, R, W_t):
    resid = G @ W_t - R
    return np.linalg.norm(resid) / max(np.linalg.norm(R), np.finfo(float).tiny)


def fit_ridge(Z, Y, ridge):
    """W_out (L x D) minimising ||Z W^T - Y||^2 + ridge ||W||^2 row by row.

    Solves ``(Z^T Z + ridge I) W^T = Z^T Y`` by Cholesky; falls back to an
    SVD of Z when the factorisation fails and ridge > 0.
    """
    Z = np.asarray(Z, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Z.ndim != 2 or Z.shape[0] < 1 or Z.shape[0] != Y.shape[0]:
        raise ConfigError(f"incompatible design {Z.shape} and targets {Y.shape}")
    if not ridge >= 0:
        raise ConfigError("ridge coefficient must be >= 0")
    D = Z.shape[1]
    G = Z.T @ Z
    G[np.diag_indices(D)] += ridge
    R = Z.T @ Y
    try:
        factor = scipy.linalg.cho_factor(G, lower=False, check_finite=False)
        W_t = scipy.linalg.cho_solve(factor, R, check_finite=False)
        ok = np.all(np.isfinite(W_t)) and _normal_residual(G, R, W_t) < 1e-8
    except np.linalg.LinAlgError:
        ok = False
    if not ok:
        if ridge == 0:
            raise NumericError(
                "normal equations are singular at ridge = 0; use a positive ridge coefficient"
            )
        U, s, Vt = np.linalg.svd(Z, full_matrices=False)
        W_t = Vt.T @ ((s / (s * s + ridge))[:, None] * (U.T @ Y))
    return np.ascontiguousarray(W_t.T)


def fit_pinv(Z, Y):
    """Moore-Penrose readout approximated as ridge with a 1e-8 coefficient."""
    return fit_ridge(Z, Y, PINV_RIDGE)


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------


def mse(pred, target):
    return float(np.mean((np.asarray(pred) - np.asarray(target)) ** 2))


def nrmse(pred, target):
    """RMSE divided by the standard deviation of the target."""
    target = np.asarray(target)
    sd = np.std(target)
    return float(np.sqrt(mse(pred, target)) / sd) if sd > 0 else float("inf")


def mae(pred, target):
    return float(np.mean(np.abs(np.asarray(pred) - np.asarray(target))))


def decode_classes(scores):
    """Argmax per row; ties go to the lowest class index."""
    return np.argmax(scores, axis=1)


def confusion_matrix(true, pred, n_classes):
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(true), np.asarray(pred)), 1)
    return cm


# --------------------------------------------------------------------------
# training / evaluation
# --------------------------------------------------------------------------


@dataclass
class FitReport:
    task: str
    rows: int
    feature_dim: int
    output_dim: int
    ridge: float
    washout: int
    pooling: str | None
    normal_residual: float
    metrics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_text(self):
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, dict):
                for sub, v in value.items():
                    lines.append(f"{key}.{sub} = {_fmt(v)}")
            else:
                lines.append(f"{key} = {_fmt(value)}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def train(model, dataset, config):
    """Fit the readout; returns (trained copy of model, FitReport).

    Reservoir weights are shared with the input model and never modified.
    """
    t0 = time.perf_counter()
    Z, Y = build_design_matrix(model, dataset, config)
    t1 = time.perf_counter()
    if config.task == "classification":
        W_out = fit_pinv(Z, Y)
        ridge = PINV_RIDGE
    else:
        W_out = fit_ridge(Z, Y, config.ridge)
        ridge = config.ridge
    t2 = time.perf_counter()
    trained = dataclasses.replace(model, readout_weights=W_out)

    G = Z.T @ Z
    G[np.diag_indices(G.shape[0])] += ridge
    residual = _normal_residual(G, Z.T @ Y, W_out.T)
    scores = Z @ W_out.T
    if config.task == "classification":
        metrics = {"accuracy": float(np.mean(decode_classes(scores) == dataset.targets))}
    else:
        metrics = {"mse": mse(scores, Y), "nrmse": nrmse(scores, Y), "mae": mae(scores, Y)}
    report = FitReport(
        task=config.task,
        rows=int(Z.shape[0]),
        feature_dim=int(Z.shape[1]),
        output_dim=int(Y.shape[1]),
        ridge=float(ridge),
        washout=int(config.washout),
        pooling=config.pooling if config.task == "classification" else None,
        normal_residual=float(residual),
        metrics=metrics,
        timings={"states_s": t1 - t0, "solve_s": t2 - t1},
    )
    return trained, report


def predict(model, dataset, config):
    """Regression: list of T x L outputs. Classification: (B, L) outputs."""
    if config.task == "classification":
        Z = pooled_features(model, dataset.inputs, config.pooling, dtype=config.dtype)
        return apply_readout(model, Z)
    outs = []
    for u, y in dataset:
        traj = run_sequence(model, u, teacher_outputs=_teacher(model, y))
        outs.append(apply_readout(model, traj.features(model.concat_input)))
    return outs


def evaluate(model, dataset, config):
    """Metrics dict; regression metrics skip the washout rows of each sequence."""
    preds = predict(model, dataset, config)
    if config.task == "classification":
        labels = decode_classes(preds)
        cm = confusion_matrix(dataset.targets, labels, model.output_dim)
        return {
            "accuracy": float(np.mean(labels == dataset.targets)),
            "n": int(len(labels)),
            "confusion": cm.tolist(),
        }
    w = config.washout
    P = np.vstack([p[w:] for p in preds])
    Y = np.vstack([np.asarray(y).reshape(len(p), -1)[w:] for p, (_, y) in zip(preds, dataset)])
    return {"mse": mse(P, Y), "nrmse": nrmse(P, Y), "mae": mae(P, Y), "n": int(len(Y))}

"""Run configuration: flat ``key = value`` files with section prefixes.

Example::

    # NARMA-10, single reservoir with output feedback
    seed = 1
    model.n_layers = 1
    model.n_neurons = 100
    model.alpha = 0.99
    model.rho_max = 0.95
    model.feedback = true
    data.kind = narma
    data.T = 12000
    data.test_T = 2000

Lines starting with ``#`` and blank lines are ignored. Unknown keys and
out-of-range values raise ConfigError before any computation starts.

Seeds: trial ``k`` of a run with seed ``s`` initialises its reservoir with
``trial_seed(s, k)``, the first 32-bit word of ``SeedSequence([s, k])``.
Single runs use trial 0, so a one-value sweep matches train + eval.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _strs(text):
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


UNSET = ("auto", "none", "")


def _opt_bool(text):
    return None if str(text).strip().lower() in UNSET else _bool(text)


def _opt_int(text):
    return None if str(text).strip().lower() in UNSET else int(text)


def _opt_float(text):
    return None if str(text).strip().lower() in UNSET else float(text)


def _opt_str(text):
    text = str(text).strip()
    return None if text.lower() in UNSET else text


@dataclass(frozen=True)
class Key:
    parse: object
    default: object
    check: object = None
    help: str = ""


def _in(*choices):
    def check(v):
        return v in choices, f"must be one of {', '.join(map(str, choices))}"

    return check


def _range(lo=None, hi=None, lo_open=False, hi_open=False):
    def ok(v):
        if lo is not None and (v <= lo if lo_open else v < lo):
            return False
        if hi is not None and (v >= hi if hi_open else v > hi):
            return False
        return True

    lb = "(" if lo_open else "["
    rb = ")" if hi_open else "]"
    msg = f"must lie in {lb}{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}{rb}"

    def check(v):
        if isinstance(v, list):
            return all(ok(x) for x in v) and len(v) > 0, msg
        return v is None or ok(v), msg

    return check


SCHEMA = {
    "seed": Key(int, 1, _range(0), "master seed"),
    "jobs": Key(_opt_int, None, _range(1), "worker threads (default: all cores)"),
    "model.n_layers": Key(int, 1, _range(1), "number of stacked reservoirs N_L"),
    "model.n_neurons": Key(int, 100, _range(1), "neurons per reservoir N"),
    "model.alpha": Key(_floats, [0.99], _range(0, 1, lo_open=True), "leaking rate, one value or one per layer"),
    "model.rho_max": Key(float, 0.95, _range(0, 1, True, True), "spectral radius bound"),
    "model.density": Key(float, 0.1, _range(0, 1, lo_open=True), "internal weight density"),
    "model.input_scaling": Key(float, 1.0, _range(0, lo_open=True), "first-layer input weight scale"),
    "model.feedback": Key(_bool, False, None, "output feedback (single layer only)"),
    "model.feedback_scaling": Key(float, 1.0, _range(0, lo_open=True), "feedback weight scale"),
    "model.readout_activation": Key(str, "auto", _in("auto", "identity", "softmax"), "auto: softmax for classification"),
    "model.concat_input": Key(_opt_bool, None, None, "append u(t) to readout features (auto: single layer)"),
    "train.ridge": Key(float, 1e-6, _range(0), "ridge coefficient lambda"),
    "train.washout": Key(_opt_int, None, _range(0), "discarded initial steps (auto: 50 / 0)"),
    "train.pooling": Key(str, "last", _in("last", "mean"), "sequence pooling for classification"),
    "train.dtype": Key(str, "float64", _in("float32", "float64"), "state dtype for batched classification"),
    "data.kind": Key(str, "narma", _in("narma", "sine-phase", "trended-sine", "csv", "mnist", "moving-dot"), "dataset source"),
    "data.path": Key(_opt_str, None, None, "CSV file, or IDX directory for mnist"),
    "data.test_path": Key(_opt_str, None, None, "separate test CSV (default: time split)"),
    "data.T": Key(int, 12000, _range(2), "generated series length"),
    "data.test_T": Key(int, 2000, _range(1), "trailing steps held out for testing"),
    "data.seed": Key(_opt_int, None, _range(0), "generator seed (default: master seed)"),
    "data.noise_sd": Key(_opt_float, None, _range(0), "generator noise (auto: per-kind default)"),
    "data.F": Key(float, 4.0, _range(0, lo_open=True), "NARMA input frequency"),
    "data.period": Key(_opt_float, None, _range(0, lo_open=True), "sinusoid period in samples (auto: per kind)"),
    "data.phase_lag": Key(int, 50, _range(0), "sine-phase lag in samples"),
    "data.trend_slope": Key(float, 5e-4, None, "trended-sine slope per sample"),
    "data.input_cols": Key(_strs, [], None, "CSV input columns"),
    "data.target_cols": Key(_strs, [], None, "CSV target columns"),
    "data.normalize": Key(_bool, False, None, "z-score CSV columns"),
    "data.train_limit": Key(_opt_int, None, _range(1), "use only the first n training images"),
    "data.test_limit": Key(_opt_int, None, _range(1), "use only the first n test images"),
    "data.n_videos": Key(int, 400, _range(2), "moving-dot clips (train + test)"),
    "data.video_size": Key(int, 8, _range(2), "moving-dot frame side"),
    "data.frames": Key(int, 10, _range(1), "moving-dot frames per clip"),
    "explain.technique": Key(str, "pm", _in("pm", "rp", "pae"), "explanation technique"),
    "explain.epsilon": Key(_opt_float, None, _range(0, lo_open=True), "PM tolerance (0.05) or RP threshold (auto)"),
    "explain.t0_start": Key(_opt_int, None, _range(0), "first T0 row of the test series (auto)"),
    "explain.t0_count": Key(int, 100, _range(1), "number of consecutive T0 values"),
    "explain.layers": Key(_ints, [1, 1], None, "RP layer pair l,l' (0 = input)"),
    "explain.window": Key(_ints, [], None, "RP window start,end over the test series"),
    "explain.blob_sizes": Key(_ints, [1, 2, 4, 8], _range(1), "PAE blob sides"),
    "explain.index": Key(int, 0, _range(0), "test item explained by PAE"),
    "explain.sites": Key(_ints, [], None, "PAE series cancellation times (default: all)"),
    "sweep.axis": Key(str, "n_neurons", _in("n_neurons", "n_layers", "rho_max"), "swept hyperparameter"),
    "sweep.values": Key(_floats, [], None, "values of the swept axis"),
    "sweep.repeats": Key(int, 10, _range(1), "trials per value"),
}


class RunConfig:
    """Validated flat configuration; read values with ``cfg["model.n_neurons"]``."""

    def __init__(self, values=None):
        self._values = {k: v.default for k, v in SCHEMA.items()}
        if values:
            self.update(values)

    def update(self, values):
        for key, raw in values.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            spec = SCHEMA[key]
            try:
                value = spec.parse(raw) if isinstance(raw, str) or spec.parse in (_floats, _ints, _strs) else raw
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from None
            if spec.check is not None:
                ok, msg = spec.check(value)
                if not ok:
                    raise ConfigError(f"{key} = {raw!r}: {msg}")
            self._values[key] = value
        return self

    def __getitem__(self, key):
        return self._values[key]

    def items(self):
        return sorted(self._values.items())

    def to_text(self, keys=None):
        """Config-file text; loading it back reproduces these values."""
        keys = sorted(self._values) if keys is None else keys
        return "".join(f"{k} = {_format(self._values[k])}\n" for k in keys)

    def validate(self):
        """Cross-key checks that single-key validation cannot see."""
        n_layers = self["model.n_layers"]
        alphas = self["model.alpha"]
        if len(alphas) not in (1, n_layers):
            raise ConfigError(f"model.alpha needs 1 or {n_layers} values, got {len(alphas)}")
        if self["model.feedback"] and n_layers != 1:
            raise ConfigError("model.feedback needs model.n_layers = 1")
        target = self["model.rho_max"] * 0.99
        for a in alphas:
            if 1.0 - a >= target:
                raise ConfigError(f"alpha {a} cannot meet rho_max {self['model.rho_max']}: 1 - alpha >= bound")
        kind = self["data.kind"]
        if kind in ("narma", "sine-phase", "trended-sine") and self["data.test_T"] >= self["data.T"]:
            raise ConfigError("data.test_T must be smaller than data.T")
        if kind == "csv":
            if not self["data.path"]:
                raise ConfigError("data.kind = csv needs data.path")
            if not self["data.input_cols"] or not self["data.target_cols"]:
                raise ConfigError("data.kind = csv needs data.input_cols and data.target_cols")
        if len(self["explain.layers"]) != 2:
            raise ConfigError("explain.layers needs two layer indices")
        if any(l < 0 or l > n_layers for l in self["explain.layers"]):
            raise ConfigError(f"explain.layers must lie in 0..{n_layers}")
        if self["explain.window"] and len(self["explain.window"]) != 2:
            raise ConfigError("explain.window needs start,end")
        return self


def _format(v):
    if isinstance(v, list):
        return ",".join(_format(x) for x in v)
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = value
    return values


def read_config_values(path):
    """Raw ``{key: text}`` pairs from a config file (only the keys it sets)."""
    path = Path(path)
    if not path.is_file():
        raise DataError("config file not found", path)
    return parse_config_text(path.read_text(), str(path))


def load_config(path):
    return RunConfig(read_config_values(path))


def trial_seed(seed, trial):
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1)[0])

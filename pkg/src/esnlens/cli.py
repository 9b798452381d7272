"""Command-line interface: ``esnlens {generate,train,eval,explain,sweep}``.

Every verb reads the same flat configuration (``--config FILE``, then
``--set key=value`` and per-key flags such as ``--model.n_neurons 50``).
Outputs are staged in a temporary directory and moved into ``--out`` only
when the command succeeds.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import shutil
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import pipeline
from .config import SCHEMA, RunConfig, read_config_values
from .data import save_csv_series
from .errors import ConfigError, DataError, EsnError
from .reservoir import run_sequence
from .serialization import load_model, save_model
from .training import evaluate, train
from .xai import (
    image_absence,
    layer_contribution,
    potential_memory,
    recurrence_plot,
    rp_mean,
    series_absence,
    video_absence,
)
from .xai.artifacts import write_absence, write_pm, write_rp

MODEL_FILE = "model.esn"
PAE_UPSCALE = 8
PM_EPSILON = 0.05


# --------------------------------------------------------------------------
# output staging
# --------------------------------------------------------------------------


@contextmanager
def staged_output(out):
    """Yield a scratch directory; on success move its files into ``out``."""
    out = Path(out)
    parent = out.parent if out.parent != Path("") else Path(".")
    parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=parent))
    try:
        yield scratch
        out.mkdir(parents=True, exist_ok=True)
        for item in sorted(scratch.iterdir()):
            target = out / item.name
            if target.is_dir() and not target.is_symlink():
                shutil.rmtree(target)
            os.replace(item, target)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def _write_text(path, text):
    Path(path).write_text(text)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _kv_text(mapping):
    lines = []
    for key, value in mapping.items():
        if isinstance(value, float):
            value = f"{value:.10g}"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# verbs
# --------------------------------------------------------------------------


def cmd_generate(cfg, out, jobs):
    if cfg["data.kind"] not in ("narma", "sine-phase", "trended-sine"):
        raise ConfigError("generate supports data.kind = narma, sine-phase or trended-sine")
    dataset = pipeline.generate_series(cfg)
    with staged_output(out) as tmp:
        save_csv_series(dataset, tmp / "dataset.csv")
        keys = ["seed"] + [k for k in SCHEMA if k.startswith("data.")]
        _write_text(tmp / "manifest.txt", cfg.to_text(keys))
    return f"wrote {Path(out) / 'dataset.csv'} ({dataset.min_length} rows)"


def cmd_train(cfg, out, jobs):
    train_ds, _ = pipeline.load_datasets(cfg)
    tc = pipeline.train_config(cfg, train_ds)
    model = pipeline.build_model(cfg, train_ds, trial=0)
    model, report = train(model, train_ds, tc)
    with staged_output(out) as tmp:
        save_model(model, tmp / MODEL_FILE)
        _write_text(tmp / "fit_report.txt", report.to_text())
        _write_text(tmp / "fit_report.json", report.to_json())
        _write_text(tmp / "config.txt", cfg.to_text())
        digest = _sha256(tmp / MODEL_FILE)
    metric = report.metrics.get("accuracy", report.metrics.get("nrmse"))
    name = "accuracy" if "accuracy" in report.metrics else "nrmse"
    return f"trained model {digest[:16]}; train {name} = {metric:.6g}"


def _load_for(cfg, model_path):
    if model_path is None:
        raise ConfigError("--model is required")
    return load_model(model_path)


def cmd_eval(cfg, out, jobs, model_path=None):
    model = _load_for(cfg, model_path)
    _, test_ds = pipeline.load_datasets(cfg)
    tc = pipeline.train_config(cfg, test_ds)
    metrics = evaluate(model, test_ds, tc)
    with staged_output(out) as tmp:
        flat = {k: v for k, v in metrics.items() if k != "confusion"}
        if "confusion" in metrics:
            cm = np.asarray(metrics["confusion"])
            np.savetxt(tmp / "confusion.csv", cm, fmt="%d", delimiter=",")
            flat["confusion_total"] = int(cm.sum())
        _write_text(tmp / "metrics.txt", _kv_text(flat))
        _write_json(tmp / "metrics.json", metrics)
    return _kv_text(flat).strip()


def _explain_pm(cfg, model, test_ds, tmp):
    u = test_ds[0][0]
    T = len(u)
    washout = pipeline.train_config(cfg, test_ds).washout
    count = cfg["explain.t0_count"]
    start = cfg["explain.t0_start"]
    if start is None:
        start = max(washout + 1, T // 2)
    t0 = np.arange(start, start + count)
    eps = cfg["explain.epsilon"] or PM_EPSILON
    report = potential_memory(model, u, t0, epsilon=eps, washout=washout)
    files = write_pm(report, tmp)
    conv = report.pm_values[report.converged]
    summary = {
        "t0_first": int(t0[0]),
        "t0_last": int(t0[-1]),
        "epsilon": eps,
        "pm_median": report.median(),
        "pm_max": int(conv.max()) if conv.size else -1,
        "not_converged": int((~report.converged).sum()),
    }
    return files, summary


def _explain_rp(cfg, model, test_ds, tmp):
    u = test_ds[0][0]
    traj = run_sequence(model, u)
    window = tuple(cfg["explain.window"]) or None
    l, lp = cfg["explain.layers"]
    rp = recurrence_plot(traj, l, lp, cfg["explain.epsilon"], window)
    files = write_rp(rp, tmp, stem=f"rp_{l}_{lp}")
    summary = {"layers": f"{l},{lp}", "epsilon": rp.epsilon, "rp_mean": rp_mean(rp), "window": f"{rp.window[0]},{rp.window[1]}"}
    if model.n_layers >= 2:
        lc = layer_contribution(model, traj, cfg["explain.epsilon"], window)
        with open(tmp / "layer_contribution.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["layer", "rp_mean", "epsilon", "difference_to_next"])
            for i, (m, e) in enumerate(zip(lc.layer_means, lc.epsilons), start=1):
                d = lc.differences[i - 1] if i <= len(lc.differences) else ""
                w.writerow([i, repr(m), repr(e), repr(d) if d != "" else ""])
        files.append("layer_contribution.csv")
        summary["rp_difference_mean"] = lc.mean_difference
    return files, summary


def _explain_pae(cfg, model, test_ds, tmp, jobs):
    kind = cfg["data.kind"]
    files, summary = [], {}
    if test_ds.task == "regression":
        u = test_ds[0][0]
        sites = cfg["explain.sites"] or None
        amap = series_absence(model, u, sites=sites, jobs=jobs)
        files += write_absence(amap, tmp, stem="pae_series")
        summary["sites"] = len(amap.sites)
        summary["max_abs_delta"] = float(np.max(np.abs(amap.deltas)))
        return files, summary
    idx = cfg["explain.index"]
    if idx >= len(test_ds):
        raise ConfigError(f"explain.index {idx} outside the {len(test_ds)}-item test set")
    tc = pipeline.train_config(cfg, test_ds)
    dtype = np.float32 if tc.dtype == "float32" else np.float64
    summary["label"] = int(test_ds.targets[idx])
    for b in cfg["explain.blob_sizes"]:
        if kind == "mnist":
            image = test_ds.meta["images"][idx]
            amap = image_absence(model, image, b, tc.pooling, jobs, dtype)
        elif kind == "moving-dot":
            video = test_ds.meta["videos"][idx]
            amap = video_absence(model, video, b, tc.pooling, jobs, dtype)
        else:
            raise ConfigError(f"pae on classification data needs mnist or moving-dot, got {kind}")
        files += write_absence(amap, tmp, stem=f"pae_b{b}", upscale=PAE_UPSCALE)
        summary[f"b{b}_max_abs_delta"] = float(np.max(np.abs(amap.deltas)))
    summary["predicted"] = int(np.argmax(amap.reference_output))
    return files, summary


def cmd_explain(cfg, out, jobs, model_path=None):
    model = _load_for(cfg, model_path)
    _, test_ds = pipeline.load_datasets(cfg)
    technique = cfg["explain.technique"]
    if technique in ("pm", "rp") and test_ds.task != "regression":
        raise ConfigError(f"{technique} needs a time-series dataset")
    with staged_output(out) as tmp:
        if technique == "pm":
            files, summary = _explain_pm(cfg, model, test_ds, tmp)
        elif technique == "rp":
            files, summary = _explain_rp(cfg, model, test_ds, tmp)
        else:
            files, summary = _explain_pae(cfg, model, test_ds, tmp, jobs)
        manifest = {"technique": technique, "model": str(model_path), "files": ",".join(files)}
        manifest.update(summary)
        _write_text(tmp / "manifest.txt", _kv_text(manifest))
    return _kv_text(summary).strip()


def cmd_sweep(cfg, out, jobs):
    train_ds, test_ds = pipeline.load_datasets(cfg)
    t = time.perf_counter()
    rows = pipeline.sweep(cfg, train_ds, test_ds, jobs)
    summary = pipeline.summarize(rows)
    with staged_output(out) as tmp:
        _write_rows(tmp / "trials.csv", rows)
        _write_rows(tmp / "summary.csv", summary)
        _write_text(tmp / "config.txt", cfg.to_text())
        if cfg["sweep.axis"] == "n_layers" and any("rp_difference" in r for r in rows):
            r = _correlation(rows, "rp_difference", "mae")
            _write_text(tmp / "correlation.txt", _kv_text({"pearson_rp_difference_mae": r}))
    lines = [f"{cfg['sweep.axis']} = {s['value']}: " + ", ".join(
        f"{k[:-5]} {s[k]:.5g} +- {s[k[:-5] + '_sd']:.3g}" for k in s if k.endswith("_mean")
    ) for s in summary]
    lines.append(f"{len(rows)} trials in {time.perf_counter() - t:.1f} s")
    return "\n".join(lines)


def _correlation(rows, xkey, ykey):
    pairs = [(r[xkey], r[ykey]) for r in rows if xkey in r and ykey in r]
    if len(pairs) < 3:
        return float("nan")
    x, y = np.array(pairs).T
    return float(np.corrcoef(x, y)[0, 1])


def _write_rows(path, rows):
    keys = list(dict.fromkeys(k for r in rows for k in r))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

VERBS = {
    "generate": (cmd_generate, "write a synthetic series as CSV plus a manifest"),
    "train": (cmd_train, "fit a model and write model.esn plus a fit report"),
    "eval": (cmd_eval, "score a saved model on the configured test split"),
    "explain": (cmd_explain, "potential memory, recurrence plots or pixel absence"),
    "sweep": (cmd_sweep, "repeat train + eval over values of one hyperparameter"),
}


def _add_common(p, suppress):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", action="append", default=argparse.SUPPRESS if suppress else [],
                   help="key = value config file (repeatable, later files win)")
    p.add_argument("--set", action="append", default=argparse.SUPPRESS if suppress else [],
                   metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--seed", default=default, help="master seed")
    p.add_argument("--jobs", default=default, help="worker threads")
    p.add_argument("--out", default=default, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="esnlens", description=__doc__.split("\n")[0])
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")
    for name, (_, help_text) in VERBS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_common(p, suppress=True)
        if name in ("eval", "explain"):
            p.add_argument("--model", help="model file written by train")
        group = p.add_argument_group("config keys")
        for key, spec in SCHEMA.items():
            if key in ("seed", "jobs"):
                continue
            group.add_argument(f"--{key}", dest=f"cfg:{key}", default=argparse.SUPPRESS, metavar="V",
                               help=f"{spec.help} (default: {spec.default})")
    return parser


def resolve_config(args):
    cfg = RunConfig()
    for path in args.config or []:
        cfg.update(read_config_values(path))
    values = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        values[key] = value
    for name, value in vars(args).items():
        if name.startswith("cfg:"):
            values[name[4:]] = value
    if args.seed is not None:
        values["seed"] = args.seed
    if args.jobs is not None:
        values["jobs"] = args.jobs
    cfg.update(values)
    return cfg.validate()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.out is None:
            raise ConfigError("--out is required")
        func = VERBS[args.verb][0]
        kwargs = {"model_path": args.model} if args.verb in ("eval", "explain") else {}
        message = func(cfg, args.out, cfg["jobs"], **kwargs)
    except EsnError as exc:
        print(f"esnlens: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"esnlens: error: {exc}", file=sys.stderr)
        return DataError.exit_code
    if message:
        print(message)
    return 0


if __name__ == "__main__":
    sys.exit(main())

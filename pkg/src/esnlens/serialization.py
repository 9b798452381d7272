"""Model container.

Layout::

    ESNLENS-MODEL v1\\n
    <one line of JSON: metadata and an array table>\\n
    <raw array bytes>

The JSON header (keys sorted, no whitespace) holds the model metadata and
``arrays``, a list of ``{"name", "shape", "dtype", "offset", "nbytes"}``
entries. ``offset`` counts from the first byte after the header line. Every
array is stored as little-endian float64 (``<f8``) in row-major order, so
saving the same model twice gives identical bytes and load(save(m)) == m.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError
from .reservoir import DeepEsnModel, ReservoirLayer

MAGIC = b"ESNLENS-MODEL v1\n"
DTYPE = "<f8"


def _arrays(model):
    out = []
    for i, layer in enumerate(model.layers, start=1):
        out.append((f"layer{i}.internal_weights", layer.internal_weights))
        out.append((f"layer{i}.input_weights", layer.input_weights))
    if model.feedback_weights is not None:
        out.append(("feedback_weights", model.feedback_weights))
    if model.readout_weights is not None:
        out.append(("readout_weights", model.readout_weights))
    return out


def to_bytes(model):
    table, blobs, offset = [], [], 0
    for name, arr in _arrays(model):
        data = np.ascontiguousarray(arr, dtype=DTYPE).tobytes(order="C")
        table.append({"name": name, "shape": list(arr.shape), "dtype": DTYPE, "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    header = {
        "format": "esnlens-model",
        "version": 1,
        "n_layers": model.n_layers,
        "leaking_rates": [layer.leaking_rate for layer in model.layers],
        "activations": [layer.activation for layer in model.layers],
        "output_dim": model.output_dim,
        "spectral_radius_bound": model.spectral_radius_bound,
        "readout_activation": model.readout_activation,
        "concat_input": bool(model.concat_input),
        "seed": model.seed,
        "hyperparameters": model.hyperparameters,
        "arrays": table,
    }
    line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + line + b"\n" + b"".join(blobs)


def from_bytes(raw, path=None, check_esp=True):
    if not raw.startswith(MAGIC):
        raise DataError("not an esnlens model file (bad magic line)", path)
    end = raw.find(b"\n", len(MAGIC))
    if end < 0:
        raise DataError("truncated header", path)
    try:
        header = json.loads(raw[len(MAGIC) : end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt header: {exc}", path) from None
    if header.get("version") != 1:
        raise DataError(f"unsupported model version {header.get('version')!r}", path)
    body = memoryview(raw)[end + 1 :]
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        start, nbytes = entry["offset"], entry["nbytes"]
        if entry["dtype"] != DTYPE or nbytes != 8 * count or start + nbytes > len(body):
            raise DataError(f"array {entry['name']} is truncated or malformed", path)
        arrays[entry["name"]] = (
            np.frombuffer(body[start : start + nbytes], dtype=DTYPE).reshape(shape).astype(np.float64)
        )
    try:
        layers = [
            ReservoirLayer(
                arrays[f"layer{i}.internal_weights"],
                arrays[f"layer{i}.input_weights"],
                header["leaking_rates"][i - 1],
                header["activations"][i - 1],
            )
            for i in range(1, header["n_layers"] + 1)
        ]
    except KeyError as exc:
        raise DataError(f"missing array {exc}", path) from None
    model = DeepEsnModel(
        layers=layers,
        output_dim=header["output_dim"],
        spectral_radius_bound=header["spectral_radius_bound"],
        readout_activation=header["readout_activation"],
        feedback_weights=arrays.get("feedback_weights"),
        readout_weights=arrays.get("readout_weights"),
        concat_input=header["concat_input"],
        seed=header["seed"],
        hyperparameters=header["hyperparameters"],
    )
    if check_esp:
        model.check_esp()
    return model


def atomic_write(path, data):
    """Write bytes via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def save_model(model, path):
    atomic_write(path, to_bytes(model))


def load_model(path, check_esp=True):
    path = Path(path)
    if not path.is_file():
        raise DataError("model file not found", path)
    return from_bytes(path.read_bytes(), path, check_esp)

"""Datasets: synthetic generators, CSV series, image/video encoders, IDX files."""

from __future__ import annotations

import csv
import gzip
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError, DataError, ShapeError

SAMPLES_PER_UNIT = 100


@dataclass(eq=False)
class SequenceDataset:
    """(input, target) pairs sharing one input dimensionality.

    ``inputs`` is either a list of T_i x K arrays or one (B, T, K) array.
    Regression targets are T_i x L arrays; classification targets are
    integer labels.
    """

    inputs: object
    targets: object
    task: str = "regression"
    n_classes: int | None = None
    normalization: dict | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in ("regression", "classification"):
            raise ConfigError(f"unknown task {self.task!r}")
        if len(self.inputs) != len(self.targets):
            raise ShapeError("inputs and targets differ in length")
        if len(self.inputs) == 0:
            raise DataError("dataset is empty")
        dims = {np.shape(x)[-1] for x in self._iter_inputs()}
        if len(dims) != 1:
            raise ShapeError(f"items disagree on input dimension: {sorted(dims)}")
        if self.task == "classification":
            self.targets = np.asarray(self.targets, dtype=np.int64)
            if self.n_classes is None:
                self.n_classes = int(self.targets.max()) + 1
            if self.targets.min() < 0 or self.targets.max() >= self.n_classes:
                raise DataError("class label out of range")
        else:
            outs = {np.shape(y)[-1] for y in self.targets}
            if len(outs) != 1:
                raise ShapeError("regression targets disagree on output dimension")

    def _iter_inputs(self):
        if isinstance(self.inputs, np.ndarray):
            return [self.inputs[0]]
        return self.inputs

    def __len__(self):
        return len(self.inputs)

    def __getitem__(self, i):
        return self.inputs[i], self.targets[i]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def input_dim(self):
        return int(np.shape(self.inputs[0])[-1])

    @property
    def output_dim(self):
        if self.task == "classification":
            return int(self.n_classes)
        return int(np.shape(self.targets[0])[-1])

    @property
    def min_length(self):
        if isinstance(self.inputs, np.ndarray):
            return self.inputs.shape[1]
        return min(len(x) for x in self.inputs)

    def subset(self, indices):
        indices = np.asarray(indices)
        if isinstance(self.inputs, np.ndarray):
            inputs = self.inputs[indices]
        else:
            inputs = [self.inputs[i] for i in indices]
        if isinstance(self.targets, np.ndarray) and self.task == "classification":
            targets = self.targets[indices]
        else:
            targets = [self.targets[i] for i in indices]
        return SequenceDataset(
            inputs, targets, self.task, self.n_classes, self.normalization, dict(self.meta)
        )

    def split_time(self, n_first):
        """Split a single-sequence regression dataset at row ``n_first``."""
        if len(self) != 1 or self.task != "regression":
            raise ConfigError("time split needs a single regression sequence")
        u, y = self[0]
        if not 0 < n_first < len(u):
            raise ConfigError(f"split point {n_first} outside 1..{len(u) - 1}")
        first = SequenceDataset([u[:n_first]], [y[:n_first]], normalization=self.normalization, meta=dict(self.meta))
        second = SequenceDataset([u[n_first:]], [y[n_first:]], normalization=self.normalization, meta=dict(self.meta))
        return first, second


# --------------------------------------------------------------------------
# synthetic series
# --------------------------------------------------------------------------


def sine_wave(n, period, start=0):
    """sin(2 pi t / period) for t = start .. start+n-1.

    The phase is reduced modulo the period before the sine is taken, so the
    sequence repeats bit for bit whenever the period is a whole number of
    samples.
    """
    t = np.arange(start, start + n, dtype=np.float64)
    return np.sin(2.0 * np.pi * np.mod(t, period) / period)


def gen_narma10(T, seed=None, F=4.0, noise_sd=0.02, samples_per_unit=SAMPLES_PER_UNIT, inputs=None):
    """Noisy sinusoid pushed through the tanh NARMA-10 system.

    The target at row t is the next output y(t+1). ``inputs`` overrides the
    generated drive (used to probe the recurrence directly).
    """
    if T <= 20:
        raise ConfigError("NARMA series needs T > 20")
    if inputs is None:
        u = sine_wave(T, samples_per_unit / F)
        if noise_sd:
            u = u + noise_sd * np.random.default_rng(seed).standard_normal(T)
    else:
        u = np.asarray(inputs, dtype=np.float64).ravel()
        if u.shape[0] != T:
            raise ShapeError(f"inputs must have length {T}")
    y = kernels.narma10(u)
    return SequenceDataset(
        [u[:, None]],
        [y[1:, None]],
        meta={
            "generator": "narma",
            "T": int(T),
            "seed": seed,
            "F": float(F),
            "noise_sd": float(noise_sd),
            "samples_per_unit": samples_per_unit,
        },
    )


def gen_sine_phase_task(T, phase_lag=50, seed=None, period=200, noise_sd=0.0):
    """Input sinusoid and the same sinusoid delayed by ``phase_lag`` samples."""
    if T < 1 or phase_lag < 0:
        raise ConfigError("T must be positive and phase_lag non-negative")
    full = sine_wave(T + phase_lag, period, start=-phase_lag)
    if noise_sd:
        full = full + noise_sd * np.random.default_rng(seed).standard_normal(T + phase_lag)
    u = full[phase_lag:]
    y = full[:T]
    return SequenceDataset(
        [u[:, None]],
        [y[:, None]],
        meta={
            "generator": "sine-phase",
            "T": int(T),
            "phase_lag": int(phase_lag),
            "period": period,
            "seed": seed,
            "noise_sd": float(noise_sd),
        },
    )


def gen_trended_sine(T, trend_slope=5e-4, noise_sd=0.1, seed=None, period=25, amplitude=1.0):
    """Noisy trended sinusoid as input, its noiseless version as target."""
    if T < 1:
        raise ConfigError("T must be positive")
    clean = amplitude * sine_wave(T, period) + trend_slope * np.arange(T)
    noisy = clean.copy()
    if noise_sd:
        noisy += noise_sd * np.random.default_rng(seed).standard_normal(T)
    return SequenceDataset(
        [noisy[:, None]],
        [clean[:, None]],
        meta={
            "generator": "trended-sine",
            "T": int(T),
            "trend_slope": float(trend_slope),
            "noise_sd": float(noise_sd),
            "seed": seed,
            "period": period,
        },
    )


def persistence_forecast(dataset):
    """Naive forecast: the next value equals the current one."""
    preds = []
    for _, y in dataset:
        p = np.empty_like(y)
        p[0] = 0.0
        p[1:] = y[:-1]
        preds.append(p)
    return preds


# --------------------------------------------------------------------------
# CSV series
# --------------------------------------------------------------------------


def _zscore(a):
    offset = a.mean(axis=0)
    scale = a.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (a - offset) / scale, offset, scale


def load_csv_series(path, input_cols, target_cols=(), normalize=False):
    """Read one multivariate series from a headed, comma-separated file.

    Columns are selected by header name. With ``normalize`` every selected
    column is z-scored; offsets and scales land in ``dataset.normalization``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", path)
    input_cols, target_cols = list(input_cols), list(target_cols)
    if not input_cols:
        raise ConfigError("at least one input column is required")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty file", path) from None
        index = {name: i for i, name in enumerate(header)}
        for name in input_cols + target_cols:
            if name not in index:
                raise DataError(f"missing column {name!r} (have {header})", path, 1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise DataError(f"non-numeric cell {bad!r}", path, lineno) from None
    if not rows:
        raise DataError("no data rows", path)
    table = np.asarray(rows, dtype=np.float64)
    u = table[:, [index[c] for c in input_cols]]
    y = table[:, [index[c] for c in target_cols]] if target_cols else np.zeros((len(u), 0))
    normalization = None
    if normalize:
        u, u_off, u_scale = _zscore(u)
        normalization = {"input": (u_off, u_scale)}
        if target_cols:
            y, y_off, y_scale = _zscore(y)
            normalization["target"] = (y_off, y_scale)
    meta = {"path": str(path), "input_cols": input_cols, "target_cols": target_cols}
    if not target_cols:
        y = np.zeros((len(u), 1))
    return SequenceDataset([u], [y], normalization=normalization, meta=meta)


def _is_float(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def denormalize(values, normalization, which="target"):
    offset, scale = normalization[which]
    return np.asarray(values) * scale + offset


def save_csv_series(dataset, path, input_names=None, target_names=None):
    """Write a single-sequence regression dataset in the CSV load format."""
    if len(dataset) != 1 or dataset.task != "regression":
        raise ConfigError("only single-sequence regression datasets export to CSV")
    u, y = dataset[0]
    input_names = input_names or [f"u{i}" for i in range(u.shape[1])]
    target_names = target_names or [f"y{i}" for i in range(y.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(input_names) + list(target_names))
        for row in np.hstack([u, y]):
            writer.writerow([repr(float(v)) for v in row])


# --------------------------------------------------------------------------
# images and video
# --------------------------------------------------------------------------


def encode_image_columns(image):
    """Column-major flattening: pixel (r, c) lands at step c * H + r.

    Returns a (H*W, 1) sequence.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"expected a 2-D grayscale image, got shape {image.shape}")
    return image.reshape(-1, order="F")[:, None]


def decode_image_columns(sequence, height, width):
    return np.asarray(sequence).reshape(width, height).T.copy()


def encode_image_batch(images):
    """(B, H, W) images to (B, H*W, 1) column-major sequences."""
    images = np.asarray(images)
    B = images.shape[0]
    return np.ascontiguousarray(images.transpose(0, 2, 1).reshape(B, -1))[:, :, None]


def to_grayscale(frames):
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 4:
        return frames.mean(axis=-1)
    return frames


def encode_video_pixels(video):
    """(F, H, W[, C]) frames to an F x (H*W) sequence, one channel per pixel.

    Channel k is pixel (k // W, k % W). Colour frames are averaged over their
    channels first.
    """
    if isinstance(video, (list, tuple)):
        shapes = {np.shape(f) for f in video}
        if len(shapes) != 1:
            raise ShapeError(f"frames differ in size: {sorted(shapes)}")
    frames = to_grayscale(video)
    if frames.ndim != 3:
        raise ShapeError(f"expected frames of shape (F, H, W[, C]), got {np.shape(video)}")
    F = frames.shape[0]
    return frames.reshape(F, -1)


def moving_dot_video(size=8, frames=10, direction=(0, 1), start=(0, 0), value=1.0):
    """A single bright pixel stepping by ``direction`` each frame (wrapping)."""
    video = np.zeros((frames, size, size))
    r, c = start
    dr, dc = direction
    for f in range(frames):
        video[f, (r + f * dr) % size, (c + f * dc) % size] = value
    return video


DOT_DIRECTIONS = ((0, 1), (0, -1), (1, 0), (-1, 0))


def gen_moving_dot_videos(n, size=8, frames=10, seed=None):
    """Labelled moving-dot clips; the label is the index into DOT_DIRECTIONS."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, len(DOT_DIRECTIONS), size=n)
    starts = rng.integers(0, size, size=(n, 2))
    videos = np.stack(
        [moving_dot_video(size, frames, DOT_DIRECTIONS[k], tuple(s)) for k, s in zip(labels, starts)]
    )
    inputs = videos.reshape(n, frames, size * size)
    return SequenceDataset(
        inputs,
        labels,
        task="classification",
        n_classes=len(DOT_DIRECTIONS),
        meta={"generator": "moving-dot", "size": size, "frames": frames, "videos": videos},
    )


# --------------------------------------------------------------------------
# IDX container
# --------------------------------------------------------------------------

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _open_bytes(path):
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx(path, expected_magic=None):
    """Parse a big-endian IDX file of unsigned bytes into an ndarray."""
    raw = _open_bytes(path)
    if len(raw) < 4:
        raise DataError("truncated header", path)
    magic = struct.unpack(">I", raw[:4])[0]
    if expected_magic is not None and magic != expected_magic:
        raise DataError(f"bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}", path)
    if magic >> 8 != 0x08:
        raise DataError(f"unsupported IDX element type in magic 0x{magic:08x}", path)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataError("truncated header", path)
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    count = math.prod(dims)
    if len(raw) - header < count:
        raise DataError(f"truncated data: need {count} bytes, have {len(raw) - header}", path)
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)


def read_idx_images(images_path, labels_path, limit=None, dtype=np.float32):
    """Image/label IDX pair to a classification dataset of column sequences.

    Pixels are scaled to [0, 1]. ``meta["images"]`` keeps the (B, H, W)
    arrays for explanation overlays.
    """
    images = read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.ndim != 3:
        raise DataError(f"image file must be 3-D, got {images.ndim}-D", images_path)
    if len(images) != len(labels):
        raise DataError(
            f"count mismatch: {len(images)} images vs {len(labels)} labels", labels_path
        )
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    scaled = images.astype(dtype) / dtype(255.0)
    return SequenceDataset(
        encode_image_batch(scaled),
        labels.astype(np.int64),
        task="classification",
        n_classes=10,
        meta={"images": scaled, "height": images.shape[1], "width": images.shape[2]},
    )

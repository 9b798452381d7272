"""Pixel-absence effect: output change when one input blob or time step is zeroed."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..data import encode_image_batch, to_grayscale
from ..errors import ConfigError, ShapeError, StateError
from ..reservoir import _as_inputs, apply_readout, pooled_features, readout, run_sequence

SITE_CHUNK = 64


@dataclass(eq=False)
class AbsenceMap:
    """Deltas per cancellation site.

    Image/video: ``deltas`` is (rows, cols, L) over the blob grid.
    Series: ``deltas`` is (T_sites, T, L); row s holds e(t; T_s) for every t.
    """

    kind: str
    deltas: np.ndarray
    blob_size: int
    reference_output: np.ndarray
    frame_shape: tuple | None = None
    sites: np.ndarray | None = None

    def pixel_map(self):
        """Expand an image/video grid to (H, W, L), one value per pixel."""
        if self.kind == "series":
            raise ConfigError("pixel_map applies to image or video maps")
        b = self.blob_size
        H, W = self.frame_shape
        full = np.repeat(np.repeat(self.deltas, b, axis=0), b, axis=1)
        return full[:H, :W]

    def class_map(self, target_class):
        return self.pixel_map()[:, :, target_class]


def blob_grid(height, width, blob_size):
    """Row/col slices tiling the frame with stride blob_size; edge blobs may be smaller."""
    if blob_size < 1:
        raise ConfigError(f"blob size must be >= 1, got {blob_size}")
    rows = [slice(r, min(r + blob_size, height)) for r in range(0, height, blob_size)]
    cols = [slice(c, min(c + blob_size, width)) for c in range(0, width, blob_size)]
    if not rows or not cols:
        raise ConfigError("empty site grid")
    return rows, cols


def _require_trained(model):
    if not model.trained:
        raise StateError("readout absent: pixel absence needs a trained model")


def _jobs(jobs):
    return max(1, int(jobs if jobs else os.cpu_count() or 1))


def _pooled_outputs(model, batch, pooling, dtype):
    return apply_readout(model, pooled_features(model, batch, pooling, dtype=dtype))


def _frame_sweep(model, frames, encode, blob_size, pooling, jobs, dtype):
    """Shared image/video logic; ``frames`` is (F, H, W), ``encode`` maps a stack to (B, T, K)."""
    _, H, W = frames.shape
    rows, cols = blob_grid(H, W, blob_size)
    ref = _pooled_outputs(model, encode(frames[None]), pooling, dtype)[0]
    L = ref.shape[0]
    deltas = np.zeros((len(rows), len(cols), L))
    live = []
    for i, rs in enumerate(rows):
        for j, cs in enumerate(cols):
            # an already-blank blob leaves the input unchanged: delta is exactly zero
            if np.any(frames[:, rs, cs]):
                live.append((i, j))

    def run(chunk):
        batch = np.repeat(frames[None], len(chunk), axis=0)
        for k, (i, j) in enumerate(chunk):
            batch[k, :, rows[i], cols[j]] = 0
        return _pooled_outputs(model, encode(batch), pooling, dtype)

    chunks = [live[s : s + SITE_CHUNK] for s in range(0, len(live), SITE_CHUNK)]
    with ThreadPoolExecutor(max_workers=_jobs(jobs)) as pool:
        results = list(pool.map(run, chunks))
    for chunk, out in zip(chunks, results):
        for (i, j), y in zip(chunk, out):
            deltas[i, j] = y - ref
    return deltas, ref


def image_absence(model, image, blob_size=1, pooling="mean", jobs=None, dtype=np.float64):
    """PAE for an H x W image read by the model through column encoding."""
    _require_trained(model)
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"image must be H x W, got shape {image.shape}")
    if model.input_dim != 1:
        raise ShapeError(f"column-encoded images need input dimension 1, model has {model.input_dim}")
    deltas, ref = _frame_sweep(
        model, image[None], lambda b: encode_image_batch(b[:, 0]), blob_size, pooling, jobs, dtype
    )
    return AbsenceMap("image", deltas, int(blob_size), ref, frame_shape=image.shape)


def video_absence(model, video, blob_size=1, pooling="mean", jobs=None, dtype=np.float64):
    """PAE for a (F, H, W) or (F, H, W, C) video; the blob is zeroed in every frame."""
    _require_trained(model)
    video = to_grayscale(np.asarray(video, dtype=np.float64))
    if video.ndim != 3:
        raise ShapeError(f"video must be F x H x W, got shape {video.shape}")
    F, H, W = video.shape
    if model.input_dim != H * W:
        raise ShapeError(f"video has {H * W} pixel channels, model expects {model.input_dim}")
    deltas, ref = _frame_sweep(
        model, video, lambda b: b.reshape(b.shape[0], F, H * W), blob_size, pooling, jobs, dtype
    )
    return AbsenceMap("video", deltas, int(blob_size), ref, frame_shape=(H, W))


def series_absence(model, inputs, sites=None, jobs=None):
    """PAE for a time series: zero u(T_s) and record e(t; T_s) for every t."""
    _require_trained(model)
    inputs = _as_inputs(model, inputs)
    T = inputs.shape[0]
    sites = np.arange(T) if sites is None else np.asarray(sites, dtype=np.int64).ravel()
    if sites.size == 0:
        raise ConfigError("empty site grid")
    if sites.min() < 0 or sites.max() >= T:
        raise ConfigError(f"cancellation times must lie in [0, {T})")
    ref = readout(model, run_sequence(model, inputs))

    def run(ts):
        if not np.any(inputs[ts]):
            return np.zeros_like(ref)
        pert = inputs.copy()
        pert[ts] = 0.0
        return readout(model, run_sequence(model, pert)) - ref

    with ThreadPoolExecutor(max_workers=_jobs(jobs)) as pool:
        deltas = np.stack(list(pool.map(run, sites.tolist())))
    return AbsenceMap("series", deltas, 1, ref, sites=sites)


def pixel_absence(model, data, kind=None, blob_size=1, pooling="mean", sites=None, jobs=None, dtype=np.float64):
    """Dispatch on ``kind`` ('image', 'video', 'series'); guessed from ndim when omitted."""
    data = np.asarray(data)
    if kind is None:
        if data.ndim == 1 or (data.ndim == 2 and data.shape[1] == model.input_dim):
            kind = "series"
        else:
            kind = {2: "image", 3: "video", 4: "video"}.get(data.ndim)
    if kind == "image":
        return image_absence(model, data, blob_size, pooling, jobs, dtype)
    if kind == "video":
        return video_absence(model, data, blob_size, pooling, jobs, dtype)
    if kind == "series":
        return series_absence(model, data, sites, jobs)
    raise ConfigError(f"unknown absence kind {kind!r}")

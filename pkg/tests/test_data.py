import gzip
import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import mnist_dir
from esnlens.data import (
    SequenceDataset,
    decode_image_columns,
    denormalize,
    encode_image_batch,
    encode_image_columns,
    encode_video_pixels,
    gen_moving_dot_videos,
    gen_narma10,
    gen_sine_phase_task,
    gen_trended_sine,
    load_csv_series,
    moving_dot_video,
    persistence_forecast,
    read_idx,
    read_idx_images,
    save_csv_series,
    sine_wave,
)
from esnlens.errors import ConfigError, DataError, ShapeError

# pure-python loop, seed 0, T = 10000 (frozen)
NARMA_MEAN = -0.31343334846637771
NARMA_VAR = 0.20919799455116375


# ---------------------------------------------------------------- NARMA


def test_narma_zero_input_first_output():
    ds = gen_narma10(50, noise_sd=0.0, inputs=np.zeros(50))
    y = ds.targets[0][:, 0]
    # row 9 holds y(10), the first output past the ten seeded zeros
    assert np.all(y[:9] == 0.0)
    assert y[9] == pytest.approx(math.tanh(0.1), abs=1e-15)
    assert math.tanh(0.1) == pytest.approx(0.0997, abs=1e-4)


def test_narma_outputs_bounded():
    y = gen_narma10(5000, seed=3).targets[0]
    assert np.all(np.abs(y) < 1)


def test_narma_frozen_statistics():
    # statistics over the target rows y(1) .. y(T)
    y = gen_narma10(10_000, seed=0).targets[0][:, 0]
    assert y.mean() == pytest.approx(NARMA_MEAN, abs=1e-12)
    assert y.var() == pytest.approx(NARMA_VAR, abs=1e-12)


def test_narma_seed_reproducible_bitwise():
    a = gen_narma10(2000, seed=11)
    b = gen_narma10(2000, seed=11)
    c = gen_narma10(2000, seed=12)
    assert np.array_equal(a.inputs[0], b.inputs[0]) and np.array_equal(a.targets[0], b.targets[0])
    assert not np.array_equal(a.inputs[0], c.inputs[0])


def test_narma_input_is_4_cycles_per_100_samples():
    u = gen_narma10(200, noise_sd=0.0).inputs[0][:, 0]
    np.testing.assert_allclose(u, np.sin(2 * np.pi * 4 * np.arange(200) / 100), atol=1e-12)


def test_narma_too_short():
    with pytest.raises(ConfigError):
        gen_narma10(20)


def test_persistence_forecast_shift():
    ds = gen_narma10(100, seed=0)
    p = persistence_forecast(ds)[0]
    assert p[0, 0] == 0.0 and np.array_equal(p[1:], ds.targets[0][:-1])


# ---------------------------------------------------------------- sinusoids


def test_sine_phase_lag_zero_is_identity():
    ds = gen_sine_phase_task(300, phase_lag=0)
    assert np.array_equal(ds.inputs[0], ds.targets[0])


def test_sine_phase_target_is_delayed_input():
    ds = gen_sine_phase_task(1000, phase_lag=50)
    u, y = ds.inputs[0][:, 0], ds.targets[0][:, 0]
    assert np.array_equal(y[50:], u[:-50])


def test_sine_phase_cross_correlation_peaks_at_50():
    ds = gen_sine_phase_task(2000, phase_lag=50, period=200)
    u, y = ds.inputs[0][:, 0], ds.targets[0][:, 0]
    lags = np.arange(0, 100)
    corr = [np.dot(y[k:], u[: len(u) - k]) / (len(u) - k) for k in lags]
    assert int(lags[np.argmax(corr)]) == 50


def test_sine_wave_repeats_exactly():
    s = sine_wave(500, 25)
    assert np.array_equal(s[:25], s[25:50]) and np.array_equal(s[:25], s[475:])


def test_trended_sine_zero_noise_input_equals_target():
    ds = gen_trended_sine(400, noise_sd=0.0)
    assert np.array_equal(ds.inputs[0], ds.targets[0])


def test_trended_sine_zero_slope_is_plain_sine():
    ds = gen_trended_sine(400, trend_slope=0.0, noise_sd=0.0, period=25)
    np.testing.assert_allclose(ds.targets[0][:, 0], np.sin(2 * np.pi * np.arange(400) / 25), atol=1e-12)


def test_trended_sine_noise_is_seeded():
    a = gen_trended_sine(200, seed=4)
    b = gen_trended_sine(200, seed=4)
    assert np.array_equal(a.inputs[0], b.inputs[0])
    resid = a.inputs[0] - a.targets[0]
    assert 0.05 < resid.std() < 0.15


# ---------------------------------------------------------------- dataset container


def test_dataset_invariants():
    with pytest.raises(ShapeError):
        SequenceDataset([np.zeros((3, 1)), np.zeros((3, 2))], [np.zeros((3, 1))] * 2)
    with pytest.raises(ShapeError):
        SequenceDataset([np.zeros((3, 1))] * 2, [np.zeros((3, 1)), np.zeros((3, 2))])
    with pytest.raises(DataError):
        SequenceDataset(np.zeros((2, 3, 1)), [0, 5], task="classification", n_classes=3)
    with pytest.raises(ShapeError):
        SequenceDataset([np.zeros((3, 1))], [])


def test_dataset_split_and_subset():
    ds = gen_narma10(100, seed=0)
    a, b = ds.split_time(60)
    assert len(a.inputs[0]) == 60 and len(b.inputs[0]) == 40
    cls = SequenceDataset(np.arange(12.0).reshape(4, 3, 1), [0, 1, 2, 1], task="classification")
    sub = cls.subset([1, 3])
    assert sub.targets.tolist() == [1, 1] and sub.n_classes == 3
    with pytest.raises(ConfigError):
        ds.split_time(100)


# ---------------------------------------------------------------- CSV


def write(path, text):
    path.write_text(text)
    return path


def test_csv_basic_selection(tmp_path):
    p = write(tmp_path / "s.csv", "a,b,c\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n13,14,15\n")
    ds = load_csv_series(p, ["a", "c"], ["b"])
    u, y = ds[0]
    assert u.shape == (5, 2) and y.shape == (5, 1)
    assert u[1].tolist() == [4.0, 6.0] and y[4, 0] == 14.0


@pytest.mark.parametrize(
    "body, line, fragment",
    [
        ("a,b\n1,2\n3,x\n", 3, "non-numeric"),
        ("a,b\n1,2\n3\n", 3, "fields"),
        ("a,b\n1,2\n3,4,5\n", 3, "fields"),
    ],
)
def test_csv_errors_carry_line_numbers(tmp_path, body, line, fragment):
    p = write(tmp_path / "bad.csv", body)
    with pytest.raises(DataError, match=fragment) as info:
        load_csv_series(p, ["a"], ["b"])
    assert info.value.line == line
    assert f"bad.csv:{line}:" in str(info.value)


def test_csv_missing_column_and_file(tmp_path):
    p = write(tmp_path / "s.csv", "a,b\n1,2\n")
    with pytest.raises(DataError, match="missing column 'z'"):
        load_csv_series(p, ["z"], ["b"])
    with pytest.raises(DataError, match="not found"):
        load_csv_series(tmp_path / "nope.csv", ["a"], ["b"])


def test_csv_normalization_and_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    raw = np.column_stack([rng.normal(3, 2, 50), rng.normal(-1, 0.1, 50), rng.normal(10, 5, 50)])
    p = tmp_path / "n.csv"
    p.write_text("a,b,c\n" + "".join(",".join(repr(float(v)) for v in row) + "\n" for row in raw))
    ds = load_csv_series(p, ["a", "b"], ["c"], normalize=True)
    u, y = ds[0]
    np.testing.assert_allclose(u.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(u.std(axis=0), 1.0, atol=1e-9)
    np.testing.assert_allclose(denormalize(u, ds.normalization, "input"), raw[:, :2], atol=1e-12)
    np.testing.assert_allclose(denormalize(y, ds.normalization), raw[:, 2:], atol=1e-12)


def test_csv_save_load_round_trip(tmp_path):
    ds = gen_narma10(60, seed=1)
    save_csv_series(ds, tmp_path / "r.csv")
    back = load_csv_series(tmp_path / "r.csv", ["u0"], ["y0"])
    assert np.array_equal(back.inputs[0], ds.inputs[0])
    assert np.array_equal(back.targets[0], ds.targets[0])


# ---------------------------------------------------------------- images


def test_column_encoding_2x2():
    seq = encode_image_columns(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert seq[:, 0].tolist() == [1.0, 3.0, 2.0, 4.0]


def test_column_encoding_length_784():
    assert encode_image_columns(np.zeros((28, 28))).shape == (784, 1)


@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.floats(0, 1)))
def test_column_encoding_invertible_and_indexed(img):
    H, W = img.shape
    seq = encode_image_columns(img)
    assert np.array_equal(decode_image_columns(seq, H, W), img)
    for r, c in [(0, 0), (H - 1, W - 1), (H // 2, W // 3)]:
        assert seq[c * H + r, 0] == img[r, c]


def test_batch_encoding_matches_single():
    imgs = np.random.default_rng(0).uniform(0, 1, (3, 5, 4))
    batch = encode_image_batch(imgs)
    for i in range(3):
        assert np.array_equal(batch[i], encode_image_columns(imgs[i]))


def test_column_encoding_rejects_3d():
    with pytest.raises(ShapeError):
        encode_image_columns(np.zeros((2, 2, 3)))


# ---------------------------------------------------------------- video


def test_single_frame_video_is_flattened_image():
    img = np.arange(12.0).reshape(1, 3, 4)
    seq = encode_video_pixels(img)
    assert seq.shape == (1, 12) and np.array_equal(seq[0], img[0].ravel())


def test_constant_video_channels_constant():
    seq = encode_video_pixels(np.full((6, 4, 4), 0.3))
    assert np.all(seq == 0.3)


def test_colour_video_luma_average():
    rgb = np.zeros((2, 2, 2, 3))
    rgb[..., 0] = 0.9
    np.testing.assert_allclose(encode_video_pixels(rgb), 0.3)


def test_moving_dot_one_channel_per_frame_advancing():
    video = moving_dot_video(8, 10, direction=(0, 1), start=(2, 0))
    seq = encode_video_pixels(video)
    assert seq.shape == (10, 64)
    for f in range(10):
        nz = np.flatnonzero(seq[f])
        assert len(nz) == 1
        assert nz[0] == 2 * 8 + (f % 8)
        assert video[f].ravel()[nz[0]] == 1.0


def test_heterogeneous_frames_rejected():
    with pytest.raises(ShapeError):
        encode_video_pixels([np.zeros((4, 4)), np.zeros((4, 5))])


def test_moving_dot_dataset_labels_match_motion():
    ds = gen_moving_dot_videos(20, size=8, frames=5, seed=0)
    assert ds.inputs.shape == (20, 5, 64)
    dirs = ((0, 1), (0, -1), (1, 0), (-1, 0))
    for x, label in zip(ds.inputs, ds.targets):
        p0 = divmod(int(np.flatnonzero(x[0])[0]), 8)
        p1 = divmod(int(np.flatnonzero(x[1])[0]), 8)
        step = ((p1[0] - p0[0]) % 8, (p1[1] - p0[1]) % 8)
        assert step == tuple(d % 8 for d in dirs[label])


# ---------------------------------------------------------------- IDX


def make_idx(tmp_path, images, labels, gz=False, img_magic=0x803, lbl_magic=0x801):
    images = np.asarray(images, dtype=np.uint8)
    ib = struct.pack(">IIII", img_magic, *images.shape) + images.tobytes()
    lb = struct.pack(">II", lbl_magic, len(labels)) + bytes(labels)
    ip, lp = tmp_path / "img.idx", tmp_path / "lbl.idx"
    if gz:
        ip, lp = ip.with_suffix(".gz"), lp.with_suffix(".gz")
        ip.write_bytes(gzip.compress(ib))
        lp.write_bytes(gzip.compress(lb))
    else:
        ip.write_bytes(ib)
        lp.write_bytes(lb)
    return ip, lp


@pytest.mark.parametrize("gz", [False, True])
def test_idx_synthetic_round_trip(tmp_path, gz):
    imgs = np.arange(2 * 3 * 4, dtype=np.uint8).reshape(2, 3, 4) * 10
    ip, lp = make_idx(tmp_path, imgs, [7, 2], gz=gz)
    ds = read_idx_images(ip, lp)
    assert len(ds) == 2 and ds.targets.tolist() == [7, 2]
    assert ds.inputs.shape == (2, 12, 1)
    np.testing.assert_allclose(
        decode_image_columns(ds.inputs[1], 3, 4), imgs[1] / 255.0, atol=1e-7
    )


def test_idx_bad_magic(tmp_path):
    ip, lp = make_idx(tmp_path, np.zeros((1, 2, 2)), [0], img_magic=0x801)
    with pytest.raises(DataError, match="bad magic"):
        read_idx_images(ip, lp)


def test_idx_truncated(tmp_path):
    ip, lp = make_idx(tmp_path, np.zeros((2, 4, 4)), [0, 1])
    ip.write_bytes(ip.read_bytes()[:-5])
    with pytest.raises(DataError, match="truncated"):
        read_idx_images(ip, lp)
    ip.write_bytes(b"\x00\x00")
    with pytest.raises(DataError, match="truncated"):
        read_idx(ip)


def test_idx_count_mismatch(tmp_path):
    ip, lp = make_idx(tmp_path, np.zeros((2, 2, 2)), [0, 1, 2])
    with pytest.raises(DataError, match="count mismatch"):
        read_idx_images(ip, lp)


def _hexdump_record(path, index, rows=28, cols=28):
    # independent reader: skip the 16-byte header by hand, read raw bytes
    with open(path, "rb") as fh:
        head = fh.read(16)
        fh.seek(16 + index * rows * cols)
        raw = fh.read(rows * cols)
    assert head[:4] == b"\x00\x00\x08\x03"
    return [[raw[r * cols + c] for c in range(cols)] for r in range(rows)]


@pytest.mark.skipif(mnist_dir() is None, reason="MNIST files not available")
def test_mnist_first_image_matches_byte_reader():
    root = mnist_dir()
    ds = read_idx_images(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte", dtype=np.float64)
    assert len(ds) == 60_000 and ds.inputs.shape[1] == 784
    assert ds.targets.max() < 10 and ds.targets.min() >= 0
    oracle = _hexdump_record(root / "train-images-idx3-ubyte", 0)
    img = decode_image_columns(ds.inputs[0], 28, 28)
    for r in range(28):
        for c in range(28):
            assert img[r, c] == oracle[r][c] / 255.0
    with open(root / "train-labels-idx1-ubyte", "rb") as fh:
        assert ds.targets[0] == fh.read(9)[8]

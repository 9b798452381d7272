"""Binary PGM (P5) / PPM (P6) writer and reader, maxval 255."""

import numpy as np


def _header(magic, width, height):
    return f"{magic}\n{width} {height}\n255\n".encode("ascii")


def write_pgm(path, image):
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"PGM needs a 2-D array, got shape {image.shape}")
    data = np.clip(image, 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(_header("P5", data.shape[1], data.shape[0]))
        fh.write(data.tobytes())


def write_ppm(path, image):
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"PPM needs an H x W x 3 array, got shape {image.shape}")
    data = np.clip(image, 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(_header("P6", data.shape[1], data.shape[0]))
        fh.write(data.tobytes())


def _tokens(raw, count):
    """First ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(raw) and not raw[end : end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    return tokens, pos + 1


def read_netpbm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    (magic, w, h, maxval), offset = _tokens(raw, 4)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ValueError("only maxval 255 is supported")
    if magic == b"P5":
        shape = (h, w)
    elif magic == b"P6":
        shape = (h, w, 3)
    else:
        raise ValueError(f"unsupported magic {magic!r}")
    return np.frombuffer(raw, dtype=np.uint8, count=int(np.prod(shape)), offset=offset).reshape(shape)


def binary_to_gray(matrix):
    """0 -> 0, 1 -> 255."""
    return np.asarray(matrix, dtype=np.uint8) * np.uint8(255)


def signed_to_rgb(values, scale=None):
    """Signed values on a black background: positive -> red, negative -> blue.

    Intensity is ``255 * |v| / scale`` with ``scale = max |v|`` unless given,
    so one scale can be shared across several maps.
    """
    values = np.asarray(values, dtype=np.float64)
    if scale is None:
        scale = float(np.max(np.abs(values))) if values.size else 0.0
    rgb = np.zeros(values.shape + (3,), dtype=np.uint8)
    if scale > 0:
        v = np.clip(values / scale, -1.0, 1.0)
        rgb[..., 0] = np.rint(255 * np.maximum(v, 0.0)).astype(np.uint8)
        rgb[..., 2] = np.rint(255 * np.maximum(-v, 0.0)).astype(np.uint8)
    return rgb


def upscale(image, factor):
    if factor <= 1:
        return np.asarray(image)
    image = np.repeat(np.asarray(image), factor, axis=0)
    return np.repeat(image, factor, axis=1)

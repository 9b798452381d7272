"""File writers for explanation results (CSV + Netpbm rasters)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .. import netpbm
from .memory import NOT_CONVERGED


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _num(v):
    return repr(float(v))


def write_pm(report, directory, stem="pm"):
    """``<stem>.csv`` (t0, pm, converged) and ``<stem>_trace.csv`` (t, outputs)."""
    directory = Path(directory)
    fh, w = _writer(directory / f"{stem}.csv")
    with fh:
        w.writerow(["t0", "pm", "converged"])
        for t0, pm in zip(report.t0_values, report.pm_values):
            w.writerow([int(t0), int(pm), int(pm != NOT_CONVERGED)])
    fh, w = _writer(directory / f"{stem}_trace.csv")
    with fh:
        L = report.output_trace.shape[1]
        w.writerow(["t", "zeroed"] + [f"y{j}" for j in range(L)] + [f"rest{j}" for j in range(L)])
        rest = [_num(v) for v in report.resting_output]
        for k, row in enumerate(report.output_trace):
            t = report.trace_start + k
            w.writerow([t, int(t > report.trace_t0)] + [_num(v) for v in row] + rest)
    return [f"{stem}.csv", f"{stem}_trace.csv"]


def write_rp(rp, directory, stem="rp"):
    """PGM raster (0 -> black, 1 -> white) plus the raw 0/1 matrix as CSV."""
    directory = Path(directory)
    netpbm.write_pgm(directory / f"{stem}.pgm", netpbm.binary_to_gray(rp.matrix))
    np.savetxt(directory / f"{stem}.csv", rp.matrix, fmt="%d", delimiter=",")
    return [f"{stem}.pgm", f"{stem}.csv"]


def write_absence(amap, directory, stem="pae", upscale=1):
    """One P6 heatmap per output class and a long-format delta CSV.

    Image/video CSV columns: row, col, class, delta (one row per pixel).
    Series CSV columns: t_cancel, t, output, delta.
    All class maps share one colour scale, the largest |delta| in the map.
    """
    directory = Path(directory)
    written = []
    if amap.kind == "series":
        fh, w = _writer(directory / f"{stem}.csv")
        with fh:
            w.writerow(["t_cancel", "t", "output", "delta"])
            for ts, block in zip(amap.sites, amap.deltas):
                for t, row in enumerate(block):
                    for j, v in enumerate(row):
                        w.writerow([int(ts), t, j, _num(v)])
        return [f"{stem}.csv"]
    pix = amap.pixel_map()
    scale = float(np.max(np.abs(pix))) if pix.size else 0.0
    for j in range(pix.shape[2]):
        name = f"{stem}_class{j}.ppm"
        rgb = netpbm.signed_to_rgb(pix[:, :, j], scale=scale)
        netpbm.write_ppm(directory / name, netpbm.upscale(rgb, upscale))
        written.append(name)
    fh, w = _writer(directory / f"{stem}.csv")
    with fh:
        w.writerow(["row", "col", "class", "delta"])
        H, W, L = pix.shape
        for r in range(H):
            for c in range(W):
                for j in range(L):
                    w.writerow([r, c, j, _num(pix[r, c, j])])
    written.append(f"{stem}.csv")
    return written

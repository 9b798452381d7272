"""Hot inner loops, each in a numba and a pure-numpy flavour.

The public functions dispatch on :func:`esnlens._accel.use_numba`. The two
flavours may sum in a different order, so they agree to rounding, not
bitwise (tests compare them at 1e-12).
"""

import numpy as np

from . import _accel
from ._accel import njit

TANH = 0
IDENTITY = 1

ACTIVATIONS = {"tanh": TANH, "identity": IDENTITY}


# --------------------------------------------------------------------------
# leaky reservoir recurrence for one layer, one sequence
# --------------------------------------------------------------------------


@njit(cache=True)
def _leaky_recurrence_nb(W, drive, alpha, x0, activation):
    T, N = drive.shape
    out = np.empty((T, N))
    x = x0.copy()
    keep = 1.0 - alpha
    for t in range(T):
        pre = np.dot(W, x)
        for i in range(N):
            acc = pre[i] + drive[t, i]
            if activation == 0:
                acc = np.tanh(acc)
            x[i] = keep * x[i] + alpha * acc
            out[t, i] = x[i]
    return out


def _leaky_recurrence_np(W, drive, alpha, x0, activation):
    T, N = drive.shape
    out = np.empty((T, N))
    x = x0.copy()
    keep = 1.0 - alpha
    for t in range(T):
        pre = W @ x + drive[t]
        if activation == TANH:
            np.tanh(pre, out=pre)
        x = keep * x + alpha * pre
        out[t] = x
    return out


def leaky_recurrence(W, drive, alpha, x0, activation=TANH):
    """Iterate ``x <- (1-alpha) x + alpha f(W x + drive[t])``.

    ``drive`` is the precomputed input contribution, one row per step; the
    returned array holds the state after each step.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    drive = np.ascontiguousarray(drive, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if _accel.use_numba():
        return _leaky_recurrence_nb(W, drive, float(alpha), x0, int(activation))
    return _leaky_recurrence_np(W, drive, float(alpha), x0, int(activation))


# --------------------------------------------------------------------------
# order-10 NARMA recurrence with tanh squashing
# --------------------------------------------------------------------------


@njit(cache=True)
def _narma10_nb(u):
    T = u.shape[0]
    y = np.zeros(T + 1)
    for t in range(9, T):
        window = 0.0
        for i in range(10):
            window += y[t - i]
        y[t + 1] = np.tanh(0.3 * y[t] + 0.05 * y[t] * window + 1.5 * u[t - 9] * u[t] + 0.1)
    return y


def _narma10_np(u):
    T = u.shape[0]
    y = np.zeros(T + 1)
    for t in range(9, T):
        window = 0.0
        for i in range(10):
            window += y[t - i]
        y[t + 1] = np.tanh(0.3 * y[t] + 0.05 * y[t] * window + 1.5 * u[t - 9] * u[t] + 0.1)
    return y


def narma10(u):
    """Response ``y[0..T]`` of the tanh NARMA-10 system to ``u[0..T-1]``.

    ``y[0..9]`` are zero; ``y[t+1]`` depends on ``y[t-9..t]``, ``u[t-9]`` and
    ``u[t]``.
    """
    u = np.ascontiguousarray(u, dtype=np.float64).ravel()
    if _accel.use_numba():
        return _narma10_nb(u)
    return _narma10_np(u)


# --------------------------------------------------------------------------
# pairwise Euclidean distances for recurrence plots
# --------------------------------------------------------------------------


@njit(cache=True)
def _pairwise_nb(A, B):
    n, d = A.shape
    m = B.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = A[i, k] - B[j, k]
                acc += diff * diff
            out[i, j] = np.sqrt(acc)
    return out


def _pairwise_np(A, B, chunk=256):
    n = A.shape[0]
    out = np.empty((n, B.shape[0]))
    for start in range(0, n, chunk):
        diff = A[start : start + chunk, None, :] - B[None, :, :]
        np.sqrt(np.einsum("ijk,ijk->ij", diff, diff), out=out[start : start + chunk])
    return out


def pairwise_distances(A, B):
    """Matrix of ``||A[i] - B[j]||_2``; rows of A and B are state vectors."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ValueError(f"incompatible shapes {A.shape} and {B.shape}")
    if _accel.use_numba():
        return _pairwise_nb(A, B)
    return _pairwise_np(A, B)

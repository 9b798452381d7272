"""Recurrence plots of reservoir states and the layer-usefulness score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import ConfigError, ShapeError

DEFAULT_EPSILON_FRACTION = 0.1


@dataclass(eq=False)
class RecurrencePlot:
    matrix: np.ndarray
    epsilon: float
    layer_pair: tuple
    window: tuple


def default_epsilon(distances, same_layer=True):
    """10% of the median pairwise distance (off-diagonal pairs when same_layer)."""
    if same_layer and distances.shape[0] == distances.shape[1] and distances.shape[0] > 1:
        values = distances[np.triu_indices(distances.shape[0], k=1)]
    else:
        values = distances.ravel()
    eps = DEFAULT_EPSILON_FRACTION * float(np.median(values))
    return eps if eps > 0 else np.finfo(float).eps


def _window(trajectory, window):
    T = trajectory.length
    if window is None:
        return 0, T
    start, end = int(window[0]), int(window[1])
    if not 0 <= start < end <= T:
        raise ConfigError(f"window {window} outside 0..{T}")
    return start, end


def recurrence_plot(trajectory, l=0, l_prime=None, epsilon=None, window=None):
    """Binary matrix R[t, t'] = ||s_l(t) - s_l'(t')|| < epsilon.

    Layer index 0 is the input signal, 1..N_L the reservoir layers. The
    window is a half-open (start, end) range of time steps.
    """
    if l_prime is None:
        l_prime = l
    start, end = _window(trajectory, window)
    A = trajectory.layer(l)[start:end]
    B = trajectory.layer(l_prime)[start:end]
    if A.shape[1] != B.shape[1]:
        raise ShapeError(
            f"cannot compare layer {l} (dim {A.shape[1]}) with layer {l_prime} (dim {B.shape[1]})"
        )
    D = kernels.pairwise_distances(A, B)
    if epsilon is None:
        epsilon = default_epsilon(D, same_layer=(l == l_prime))
    elif not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    return RecurrencePlot(
        matrix=(D < epsilon).astype(np.uint8),
        epsilon=float(epsilon),
        layer_pair=(int(l), int(l_prime)),
        window=(start, end),
    )


def rp_mean(rp):
    matrix = rp.matrix if isinstance(rp, RecurrencePlot) else np.asarray(rp)
    if matrix.size == 0:
        raise ConfigError("empty recurrence plot")
    return float(matrix.mean())


@dataclass
class LayerContribution:
    layer_means: list
    differences: list
    mean_difference: float
    epsilons: list


def layer_contribution(model, trajectory, epsilon=None, window=None):
    """|rp_mean(layer i) - rp_mean(layer i+1)| for consecutive reservoirs.

    Each layer's plot uses ``epsilon`` if given, else its own default.
    """
    if model.n_layers < 2:
        raise ConfigError("layer contribution needs at least two layers")
    means, eps_used = [], []
    for l in range(1, model.n_layers + 1):
        rp = recurrence_plot(trajectory, l, l, epsilon, window)
        means.append(rp_mean(rp))
        eps_used.append(rp.epsilon)
    diffs = [abs(a - b) for a, b in zip(means[:-1], means[1:])]
    return LayerContribution(means, diffs, float(np.mean(diffs)), eps_used)

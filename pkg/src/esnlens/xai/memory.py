"""Potential memory: steps needed to return to rest after the input is cut."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, StateError
from ..reservoir import _as_inputs, apply_readout, run_sequence, step_batch

NOT_CONVERGED = -1
REST_STEPS = 1000


@dataclass(eq=False)
class PotentialMemoryReport:
    t0_values: np.ndarray
    pm_values: np.ndarray
    epsilon: float
    output_trace: np.ndarray
    trace_start: int
    trace_t0: int
    resting_output: np.ndarray

    @property
    def converged(self):
        return self.pm_values != NOT_CONVERGED

    def median(self):
        ok = self.pm_values[self.converged]
        return float(np.median(ok)) if ok.size else float("nan")


def _features(model, states, u):
    blocks = list(states)
    if model.concat_input:
        blocks.append(u)
    return np.hstack(blocks)


def resting_output(model, steps=REST_STEPS):
    """Output after ``steps`` zero-input updates from the zero state."""
    states = [np.zeros((1, layer.size)) for layer in model.layers]
    u = np.zeros((1, model.input_dim))
    y = apply_readout(model, _features(model, states, u))
    for _ in range(steps):
        states = step_batch(model, states, u, y if model.feedback_weights is not None else None)
        y = apply_readout(model, _features(model, states, u))
    return y[0]


def potential_memory(model, inputs, t0_values, epsilon=0.05, washout=0, trace_before=100):
    """PM(T0) for each T0 (0-based row of the last non-zero input).

    Inputs after T0 are replaced by zeros and the model runs on; PM is the
    number of steps until ``||y(t) - y_rest|| < epsilon`` first holds, or
    NOT_CONVERGED if that never happens before the sequence ends.
    """
    if not model.trained:
        raise StateError("readout absent: potential memory needs a trained model")
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    inputs = _as_inputs(model, inputs)
    T = inputs.shape[0]
    t0_values = np.asarray(sorted(int(t) for t in t0_values), dtype=np.int64)
    if t0_values.size == 0:
        raise ConfigError("no T0 values given")
    if t0_values[0] <= washout or t0_values[-1] >= T - 1:
        raise ConfigError(f"T0 values must lie in ({washout}, {T - 1})")

    y_rest = resting_output(model)
    traj = run_sequence(model, inputs)
    base_out = apply_readout(model, traj.features(model.concat_input))

    B = len(t0_values)
    states = [s[t0_values].copy() for s in traj.per_layer_states]
    y_prev = base_out[t0_values] if model.feedback_weights is not None else None
    horizon = T - 1 - t0_values
    pm = np.full(B, NOT_CONVERGED, dtype=np.int64)
    zero_u = np.zeros((B, model.input_dim))
    last = B - 1
    trace = [base_out[max(0, t0_values[last] - trace_before) : t0_values[last] + 1]]
    for k in range(1, int(horizon.max()) + 1):
        states = step_batch(model, states, zero_u, y_prev)
        y = apply_readout(model, _features(model, states, zero_u))
        if y_prev is not None:
            y_prev = y
        if k <= horizon[last]:
            trace.append(y[last : last + 1])
        close = np.linalg.norm(y - y_rest, axis=1) < epsilon
        hit = (pm == NOT_CONVERGED) & close & (k <= horizon)
        pm[hit] = k
    return PotentialMemoryReport(
        t0_values=t0_values,
        pm_values=pm,
        epsilon=float(epsilon),
        output_trace=np.vstack(trace),
        trace_start=int(max(0, t0_values[last] - trace_before)),
        trace_t0=int(t0_values[last]),
        resting_output=y_rest,
    )

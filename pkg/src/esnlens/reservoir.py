"""Deep echo state network: construction, state updates and readout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, NumericError, ShapeError, StateError

ESP_MARGIN = 0.01
READOUT_ACTIVATIONS = ("identity", "softmax")


@dataclass(eq=False)
class ReservoirLayer:
    internal_weights: np.ndarray
    input_weights: np.ndarray
    leaking_rate: float
    activation: str = "tanh"

    def __post_init__(self):
        self.internal_weights = np.asarray(self.internal_weights, dtype=np.float64)
        self.input_weights = np.asarray(self.input_weights, dtype=np.float64)
        self.leaking_rate = float(self.leaking_rate)
        W, W_in = self.internal_weights, self.input_weights
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ShapeError(f"internal_weights must be square, got {W.shape}")
        if W_in.ndim != 2 or W_in.shape[0] != W.shape[0]:
            raise ShapeError(
                f"input_weights must have {W.shape[0]} rows, got shape {W_in.shape}"
            )
        if not 0.0 < self.leaking_rate <= 1.0:
            raise ConfigError(f"leaking_rate must be in (0, 1], got {self.leaking_rate}")
        if self.activation not in kernels.ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def size(self):
        return self.internal_weights.shape[0]

    @property
    def input_size(self):
        return self.input_weights.shape[1]

    def esp_matrix(self):
        """``(1 - alpha) I + alpha W``, whose spectral radius the ESP bounds."""
        a = self.leaking_rate
        return (1.0 - a) * np.eye(self.size) + a * self.internal_weights

    def equals(self, other):
        return (
            isinstance(other, ReservoirLayer)
            and self.leaking_rate == other.leaking_rate
            and self.activation == other.activation
            and np.array_equal(self.internal_weights, other.internal_weights)
            and np.array_equal(self.input_weights, other.input_weights)
        )


@dataclass(eq=False)
class DeepEsnModel:
    """Stack of reservoirs plus a linear readout.

    ``concat_input`` controls whether the raw input is appended to the state
    vector seen by the readout. It defaults to True for a single layer and
    False for stacks.
    """

    layers: list
    output_dim: int
    spectral_radius_bound: float
    readout_activation: str = "identity"
    feedback_weights: np.ndarray | None = None
    readout_weights: np.ndarray | None = None
    concat_input: bool | None = None
    seed: int | None = None
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("a model needs at least one layer")
        self.output_dim = int(self.output_dim)
        self.spectral_radius_bound = float(self.spectral_radius_bound)
        if self.output_dim < 1:
            raise ConfigError("output_dim must be positive")
        if not 0.0 < self.spectral_radius_bound < 1.0:
            raise ConfigError(
                f"spectral_radius_bound must be in (0, 1), got {self.spectral_radius_bound}"
            )
        if self.readout_activation not in READOUT_ACTIVATIONS:
            raise ConfigError(f"unknown readout activation {self.readout_activation!r}")
        if self.concat_input is None:
            self.concat_input = len(self.layers) == 1
        for l in range(1, len(self.layers)):
            prev, layer = self.layers[l - 1], self.layers[l]
            if layer.input_size != prev.size:
                raise ShapeError(
                    f"layer {l + 1} expects input of size {layer.input_size}, "
                    f"layer {l} has {prev.size} neurons"
                )
        if self.feedback_weights is not None:
            if len(self.layers) != 1:
                raise ConfigError("feedback is only supported for single-layer models")
            fb = np.asarray(self.feedback_weights, dtype=np.float64)
            if fb.shape != (self.layers[0].size, self.output_dim):
                raise ShapeError(
                    f"feedback_weights must be {(self.layers[0].size, self.output_dim)}, "
                    f"got {fb.shape}"
                )
            self.feedback_weights = fb
        if self.readout_weights is not None:
            self.set_readout(self.readout_weights)

    @property
    def n_layers(self):
        return len(self.layers)

    @property
    def input_dim(self):
        return self.layers[0].input_size

    @property
    def state_dim(self):
        return sum(layer.size for layer in self.layers)

    @property
    def feature_dim(self):
        return self.state_dim + (self.input_dim if self.concat_input else 0)

    @property
    def trained(self):
        return self.readout_weights is not None

    def set_readout(self, W_out):
        W_out = np.asarray(W_out, dtype=np.float64)
        if W_out.shape != (self.output_dim, self.feature_dim):
            raise ShapeError(
                f"readout_weights must be {(self.output_dim, self.feature_dim)}, got {W_out.shape}"
            )
        self.readout_weights = W_out

    def esp_radius(self):
        """Largest spectral radius of the per-layer ESP matrices."""
        return max(spectral_radius(layer.esp_matrix()) for layer in self.layers)

    def check_esp(self, tol=1e-6):
        radius = self.esp_radius()
        if not radius < self.spectral_radius_bound + tol:
            raise NumericError(
                f"echo state bound violated: {radius:.10g} >= {self.spectral_radius_bound}",
                estimate=radius,
            )
        return radius

    def zero_state(self):
        return [np.zeros(layer.size) for layer in self.layers]

    def equals(self, other):
        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(a, b)

        return (
            isinstance(other, DeepEsnModel)
            and self.n_layers == other.n_layers
            and all(a.equals(b) for a, b in zip(self.layers, other.layers))
            and self.output_dim == other.output_dim
            and self.spectral_radius_bound == other.spectral_radius_bound
            and self.readout_activation == other.readout_activation
            and self.concat_input == other.concat_input
            and self.seed == other.seed
            and self.hyperparameters == other.hyperparameters
            and same(self.feedback_weights, other.feedback_weights)
            and same(self.readout_weights, other.readout_weights)
        )

    def __eq__(self, other):
        return self.equals(other)

    __hash__ = None


@dataclass(eq=False)
class StateTrajectory:
    per_layer_states: list
    inputs: np.ndarray

    def __post_init__(self):
        lengths = {s.shape[0] for s in self.per_layer_states}
        if len(lengths) != 1 or self.inputs.shape[0] not in lengths:
            raise ShapeError("all trajectory matrices must share the same number of rows")

    @property
    def length(self):
        return self.inputs.shape[0]

    def layer(self, index):
        """States of layer ``index`` (1-based); 0 returns the inputs."""
        if index == 0:
            return self.inputs
        if not 1 <= index <= len(self.per_layer_states):
            raise ConfigError(
                f"layer index {index} out of range 0..{len(self.per_layer_states)}"
            )
        return self.per_layer_states[index - 1]

    def final_state(self):
        return [s[-1].copy() for s in self.per_layer_states]

    def features(self, concat_input):
        blocks = list(self.per_layer_states)
        if concat_input:
            blocks.append(self.inputs)
        return np.hstack(blocks)


# --------------------------------------------------------------------------
# spectral radius
# --------------------------------------------------------------------------


def _ritz(apply, n, p, tol, max_iter, Q=None, rng=None):
    """Block power iteration with Rayleigh-Ritz extraction.

    Returns (ritz values sorted by decreasing modulus, basis, converged, iterations).
    With ``p == n`` the projection is a similarity transform and the Ritz
    values are exact after one pass.
    """
    if p == n:
        # identity basis: eig sees the operator itself, and LAPACK balancing
        # returns exact zeros for permuted-triangular (nilpotent) blocks
        Q = np.eye(n)
    elif Q is None or Q.shape[1] != p:
        rng = rng if rng is not None else np.random.default_rng(0)
        start = rng.standard_normal((n, p))
        if Q is not None:
            start[:, : Q.shape[1]] = Q
        Q = np.linalg.qr(start)[0]
    prev = np.inf
    values = np.zeros(1)
    for it in range(1, max_iter + 1):
        Z = apply(Q)
        H = Q.T @ Z
        values, vectors = np.linalg.eig(H)
        order = np.argsort(-np.abs(values), kind="stable")
        values, vectors = values[order], vectors[:, order]
        rho = abs(values[0])
        if p == n:
            return values, Q, True, it
        r = Z @ vectors[:, 0] - values[0] * (Q @ vectors[:, 0])
        scale = max(rho, np.finfo(float).tiny)
        if np.linalg.norm(r) / scale < tol and abs(rho - prev) <= tol * scale:
            return values, Q, True, it
        prev = rho
        Q = np.linalg.qr(Z)[0]
    return values, Q, False, max_iter


def _dominant_ritz(apply, n, tol=1e-8, max_iter=10_000, block=32, Q=None):
    """Ritz values of an operator, widening the block when iteration stalls."""
    p = min(n, block if Q is None else Q.shape[1])
    budget = max_iter
    patience = 500
    rng = np.random.default_rng(0)
    while True:
        values, Q, ok, used = _ritz(apply, n, p, tol, min(patience, budget), Q, rng)
        budget -= used
        if ok:
            return values, Q
        if budget <= 0 or p == n:
            raise NumericError(
                f"spectral radius did not converge after {max_iter - budget} iterations",
                estimate=float(abs(values[0])),
            )
        p = min(n, 4 * p)


def spectral_radius(M, tol=1e-8, max_iter=10_000):
    """Largest absolute eigenvalue of a square matrix.

    Uses block power iteration (block of 32, Rayleigh-Ritz on the block), so a
    complex-conjugate dominant pair converges like a real one. If the block
    stalls the block is widened; raises NumericError carrying the last
    estimate when the iteration budget runs out.
    """
    if hasattr(M, "tocsr"):
        M = M.tocsr()
        dense_check = M.data
    else:
        M = np.asarray(M, dtype=np.float64)
        dense_check = M
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"spectral_radius needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(dense_check)):
        raise NumericError("matrix has non-finite entries")
    n = M.shape[0]
    if n == 0:
        raise ShapeError("empty matrix")
    if not np.any(dense_check):
        return 0.0
    values, _ = _dominant_ritz(lambda Q: M @ Q, n, tol=tol, max_iter=max_iter)
    return float(abs(values[0]))


def _scale_for_target(eigs, keep, alpha, target, floor=0.0):
    """Smallest s > 0 with max_j |keep + alpha s eigs_j| == target.

    Eigenvalues with modulus <= ``floor`` are treated as zero; returns None
    when none remain (W nilpotent to working precision).
    """
    eigs = eigs[np.abs(eigs) > floor]
    if eigs.size == 0:
        return None
    a = alpha**2 * np.abs(eigs) ** 2
    b = 2.0 * keep * alpha * eigs.real
    c = keep**2 - target**2
    roots = (-b + np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return float(np.min(roots))


def esp_scale(W, alpha, target, tol=1e-8):
    """Factor s such that rho((1-alpha) I + alpha s W) == target.

    ``(1-alpha) I + alpha s W`` shares its eigenvectors with W, so its
    eigenvalues are ``(1-alpha) + alpha s lambda_j``. The dominant Ritz values
    of the leaky matrix at the current s are mapped back to eigenvalues of W,
    s is re-solved in closed form, and this repeats until s is stationary.
    """
    keep = 1.0 - alpha
    if keep >= target:
        raise ConfigError(
            f"leaking rate {alpha} cannot satisfy the echo state bound: "
            f"1 - alpha = {keep} >= {target}"
        )
    n = W.shape[0]
    if not np.any(W):
        return 1.0
    # A nilpotent W (common for tiny sparse draws) has Ritz values of order
    # sqrt(eps) ||W|| from Jordan-block sensitivity; treat those as zero.
    floor = 1e-6 * np.linalg.norm(W)
    if alpha == 1.0:
        rho = spectral_radius(W, tol=tol)
        return target / rho if rho > floor else 1.0

    values, Q = _dominant_ritz(lambda X: W @ X, n, tol=tol)
    s = _scale_for_target(values, keep, alpha, target, floor)
    if s is None:
        return 1.0
    for _ in range(50):
        values, Q = _dominant_ritz(
            lambda X, s=s: keep * X + (alpha * s) * (W @ X), n, tol=tol, Q=Q
        )
        eigs = (values - keep) / (alpha * s)
        s_new = _scale_for_target(eigs, keep, alpha, target, floor)
        if s_new is None:
            return s
        if abs(s_new - s) <= 10 * tol * s:
            return s_new
        s = s_new
    raise NumericError("echo state rescaling did not settle", estimate=s)


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------


def _per_layer(value, n_layers, name):
    values = np.atleast_1d(np.asarray(value, dtype=np.float64)).tolist()
    if len(values) == 1:
        values = values * n_layers
    if len(values) != n_layers:
        raise ConfigError(f"{name} needs 1 or {n_layers} values, got {len(values)}")
    return values


def init_random(
    seed,
    n_layers,
    n_neurons,
    input_dim,
    output_dim,
    alpha,
    rho_max,
    density=0.1,
    input_scaling=1.0,
    feedback=False,
    feedback_scaling=1.0,
    readout_activation="identity",
    concat_input=None,
):
    """Random deep ESN whose leaky matrices sit at ``rho_max * (1 - 0.01)``.

    Internal weights are sparse uniform on [-1, 1] with the given density;
    input weights are dense uniform on [-1, 1], scaled by ``input_scaling``
    for the first layer. All draws come from ``numpy.random.default_rng(seed)``
    in layer order, so equal arguments give bitwise-equal weights.
    """
    n_layers, n_neurons = int(n_layers), int(n_neurons)
    input_dim, output_dim = int(input_dim), int(output_dim)
    if n_layers < 1 or n_neurons < 1 or input_dim < 1 or output_dim < 1:
        raise ConfigError("n_layers, n_neurons, input_dim and output_dim must be positive")
    if not 0.0 < rho_max < 1.0:
        raise ConfigError(f"rho_max must be in (0, 1), got {rho_max}")
    if not 0.0 < density <= 1.0:
        raise ConfigError(f"density must be in (0, 1], got {density}")
    if input_scaling <= 0:
        raise ConfigError("input_scaling must be positive")
    alphas = _per_layer(alpha, n_layers, "alpha")
    for a in alphas:
        if not 0.0 < a <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {a}")
    if feedback and n_layers != 1:
        raise ConfigError("feedback is only supported for single-layer models")

    target = rho_max * (1.0 - ESP_MARGIN)
    rng = np.random.default_rng(seed)
    layers = []
    for l, a in enumerate(alphas):
        mask = rng.random((n_neurons, n_neurons)) < density
        W = np.where(mask, rng.uniform(-1.0, 1.0, (n_neurons, n_neurons)), 0.0)
        k = input_dim if l == 0 else n_neurons
        W_in = rng.uniform(-1.0, 1.0, (n_neurons, k))
        if l == 0:
            W_in *= input_scaling
        try:
            W = esp_scale(W, a, target) * W
        except NumericError as exc:
            raise NumericError(f"layer {l + 1}: {exc}", estimate=exc.estimate) from exc
        except ConfigError as exc:
            raise ConfigError(f"layer {l + 1}: {exc}") from exc
        layers.append(ReservoirLayer(W, W_in, a))
    W_fb = None
    if feedback:
        W_fb = rng.uniform(-1.0, 1.0, (n_neurons, output_dim)) * feedback_scaling

    model = DeepEsnModel(
        layers=layers,
        output_dim=output_dim,
        spectral_radius_bound=rho_max,
        readout_activation=readout_activation,
        feedback_weights=W_fb,
        concat_input=concat_input,
        seed=None if seed is None else int(seed),
        hyperparameters={
            "density": float(density),
            "input_scaling": float(input_scaling),
            "feedback_scaling": float(feedback_scaling) if feedback else None,
        },
    )
    for l, layer in enumerate(model.layers):
        radius = spectral_radius(layer.esp_matrix())
        if not radius < rho_max:
            raise NumericError(
                f"layer {l + 1}: echo state bound violated after rescaling ({radius})",
                estimate=radius,
            )
    return model


# --------------------------------------------------------------------------
# dynamics
# --------------------------------------------------------------------------


def _activate(pre, activation):
    if activation == "tanh":
        return np.tanh(pre)
    return pre


def _check_state(model, state):
    if len(state) != model.n_layers:
        raise ShapeError(f"expected {model.n_layers} layer states, got {len(state)}")
    out = []
    for l, (x, layer) in enumerate(zip(state, model.layers)):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (layer.size,):
            raise ShapeError(f"layer {l + 1}: state must have shape ({layer.size},), got {x.shape}")
        out.append(x)
    return out


def step(model, state, u_next, y_prev=None):
    """One update of every layer; returns new state vectors (inputs untouched)."""
    state = _check_state(model, state)
    u = np.asarray(u_next, dtype=np.float64).reshape(-1)
    if u.shape[0] != model.input_dim:
        raise ShapeError(f"layer 1: input must have length {model.input_dim}, got {u.shape[0]}")
    new = []
    inp = u
    for l, (x, layer) in enumerate(zip(state, model.layers)):
        pre = layer.internal_weights @ x + layer.input_weights @ inp
        if l == 0 and model.feedback_weights is not None and y_prev is not None:
            y = np.asarray(y_prev, dtype=np.float64).reshape(-1)
            if y.shape[0] != model.output_dim:
                raise ShapeError(
                    f"layer 1: feedback output must have length {model.output_dim}, got {y.shape[0]}"
                )
            pre = pre + model.feedback_weights @ y
        a = layer.leaking_rate
        x_new = (1.0 - a) * x + a * _activate(pre, layer.activation)
        new.append(x_new)
        inp = x_new
    return new


def _as_inputs(model, inputs):
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim == 1:
        inputs = inputs[:, None] if model.input_dim == 1 else inputs[None, :]
    if inputs.ndim != 2 or inputs.shape[1] != model.input_dim:
        raise ShapeError(
            f"layer 1: inputs must be T x {model.input_dim}, got shape {inputs.shape}"
        )
    if inputs.shape[0] < 1:
        raise ConfigError("input sequence must have at least one step")
    return inputs


def run_sequence(model, inputs, initial_state=None, teacher_outputs=None):
    """Drive the model with a T x K input matrix and record every state.

    Layers are integrated one after the other over the whole sequence, which
    is exact because layer l at t+1 only needs layer l-1 at t+1. With
    feedback, ``teacher_outputs`` supply y(t) (teacher forcing); without them
    a trained model feeds back its own previous output.
    """
    inputs = _as_inputs(model, inputs)
    T = inputs.shape[0]
    state = model.zero_state() if initial_state is None else _check_state(model, initial_state)

    if model.feedback_weights is not None:
        if teacher_outputs is None:
            return _run_free(model, inputs, state)
        teacher = np.asarray(teacher_outputs, dtype=np.float64).reshape(T, -1)
        if teacher.shape[1] != model.output_dim:
            raise ShapeError(f"teacher outputs must be T x {model.output_dim}")
        y_prev = np.vstack([np.zeros((1, model.output_dim)), teacher[:-1]])
    else:
        y_prev = None

    per_layer = []
    layer_input = inputs
    for l, layer in enumerate(model.layers):
        drive = layer_input @ layer.input_weights.T
        if l == 0 and y_prev is not None:
            drive += y_prev @ model.feedback_weights.T
        states = kernels.leaky_recurrence(
            layer.internal_weights,
            drive,
            layer.leaking_rate,
            state[l],
            kernels.ACTIVATIONS[layer.activation],
        )
        per_layer.append(states)
        layer_input = states
    return StateTrajectory(per_layer, inputs)


def _run_free(model, inputs, state):
    if not model.trained:
        raise StateError("feedback model without teacher outputs needs a trained readout")
    T = inputs.shape[0]
    states = [np.empty((T, layer.size)) for layer in model.layers]
    y = np.zeros(model.output_dim)
    for t in range(T):
        state = step(model, state, inputs[t], y)
        for l, x in enumerate(state):
            states[l][t] = x
        z = np.concatenate(state + ([inputs[t]] if model.concat_input else []))
        y = _output_activation(model.readout_weights @ z, model.readout_activation)
    return StateTrajectory(states, inputs)


def softmax(scores, axis=-1):
    shifted = scores - np.max(scores, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def _output_activation(scores, activation):
    if activation == "softmax":
        return softmax(scores)
    return scores


def apply_readout(model, features):
    """``g(W_out z)`` for feature rows ``z`` (shape M x D)."""
    if not model.trained:
        raise StateError("readout absent: train the model first")
    features = np.asarray(features)
    if features.shape[-1] != model.feature_dim:
        raise ShapeError(f"features must have {model.feature_dim} columns, got {features.shape[-1]}")
    scores = features @ model.readout_weights.T.astype(features.dtype, copy=False)
    return _output_activation(np.asarray(scores, dtype=np.float64), model.readout_activation)


def readout(model, trajectory):
    """Per-step outputs (T x L) for a recorded trajectory."""
    return apply_readout(model, trajectory.features(model.concat_input))


# --------------------------------------------------------------------------
# batched dynamics (classification, perturbation sweeps)
# --------------------------------------------------------------------------

POOLINGS = ("last", "mean")


def pooled_features(model, inputs, pooling="mean", dtype=np.float64, chunk=2048):
    """Pooled readout features for a batch of equal-length sequences.

    ``inputs`` has shape (B, T, K). Every sequence starts from the zero
    state; ``pooling`` reduces each concatenated state trajectory to one row
    (the final step, or the time average). Returns (B, D) float64.
    """
    if pooling not in POOLINGS:
        raise ConfigError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
    dtype = np.dtype(dtype).type
    if model.feedback_weights is not None:
        raise ConfigError("batched runs do not support feedback")
    inputs = np.asarray(inputs)
    if inputs.ndim == 2:
        inputs = inputs[:, :, None]
    if inputs.ndim != 3 or inputs.shape[2] != model.input_dim:
        raise ShapeError(f"inputs must be B x T x {model.input_dim}, got {inputs.shape}")
    B, T, _ = inputs.shape
    out = np.empty((B, model.feature_dim))
    for start in range(0, B, chunk):
        block = inputs[start : start + chunk]
        out[start : start + block.shape[0]] = _pooled_block(model, block, pooling, dtype)
    return out


def _pooled_block(model, seq, pooling, dtype):
    b, T, K = seq.shape
    seq = seq.astype(dtype, copy=False)
    Ws = [layer.internal_weights.T.astype(dtype) for layer in model.layers]
    Wins = [layer.input_weights.T.astype(dtype) for layer in model.layers]
    alphas = [dtype(layer.leaking_rate) for layer in model.layers]
    keeps = [dtype(1.0) - a for a in alphas]
    tanh = [layer.activation == "tanh" for layer in model.layers]
    xs = [np.zeros((b, layer.size), dtype) for layer in model.layers]
    bufs = [np.empty((b, layer.size), dtype) for layer in model.layers]
    sums = [np.zeros((b, layer.size), dtype) for layer in model.layers]
    in_sum = np.zeros((b, K), dtype) if model.concat_input else None
    for t in range(T):
        inp = seq[:, t, :]
        if in_sum is not None:
            in_sum += inp
        for l in range(len(xs)):
            pre = bufs[l]
            np.matmul(xs[l], Ws[l], out=pre)
            if l == 0 and K == 1:
                pre += inp * Wins[0][0]
            else:
                pre += inp @ Wins[l]
            if tanh[l]:
                np.tanh(pre, out=pre)
            xs[l] *= keeps[l]
            pre *= alphas[l]
            xs[l] += pre
            if pooling == "mean":
                sums[l] += xs[l]
            inp = xs[l]
    if pooling == "mean":
        blocks = [s.astype(np.float64) / T for s in sums]
        if in_sum is not None:
            blocks.append(in_sum.astype(np.float64) / T)
    else:
        blocks = [x.astype(np.float64) for x in xs]
        if in_sum is not None:
            blocks.append(seq[:, -1, :].astype(np.float64))
    return np.hstack(blocks)


def step_batch(model, states, u, y_prev=None):
    """Batched ``step``: states are (B, N) per layer, ``u`` is (B, K)."""
    new = []
    inp = u
    for l, (x, layer) in enumerate(zip(states, model.layers)):
        pre = x @ layer.internal_weights.T + inp @ layer.input_weights.T
        if l == 0 and model.feedback_weights is not None and y_prev is not None:
            pre += y_prev @ model.feedback_weights.T
        a = layer.leaking_rate
        x_new = (1.0 - a) * x + a * _activate(pre, layer.activation)
        new.append(x_new)
        inp = x_new
    return new

"""From-scratch stacked LSTM: forward, backpropagation through time, Adam.

Cell recurrence (per layer, gate order i, f, g, o):

    i, f, o = sigmoid(W x + U h_prev + b)   (their slices)
    g       = relu(...)
    c       = f * c_prev + i * g
    h       = o * relu(c)

The stack is three layers (hidden size 32 by default) with identity residual
additions around layers 2 and 3, inverted dropout after each of those blocks
in train mode, and a dense head reading the last timestep. All math is float64
so the finite-difference gradient check is tight.

All forward/backward internals are batched over windows; batch size 1
recovers the single-window contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CacheMismatch, NonFiniteActivation


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def relu(x):
    return np.maximum(x, 0.0)


@dataclass
class LstmLayerParams:
    """One layer's weights: W (4h, d_in), U (4h, h), b (4h,)."""

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @property
    def d_in(self) -> int:
        return self.W.shape[1]


def count_params(d_in: int, h: int) -> int:
    """Trainable scalars in one LSTM layer: 4*((d_in + h)*h + h)."""
    return 4 * ((d_in + h) * h + h)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 10
    epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")


@dataclass
class LstmNetwork:
    """Stacked LSTM with dense (lat, lon) head."""

    layers: list[LstmLayerParams]
    dense_W: np.ndarray  # (out_dim, h)
    dense_b: np.ndarray  # (out_dim,)
    dropout_rate: float = 0.2
    residual: bool = True

    @property
    def hidden(self) -> int:
        return self.layers[0].hidden

    @property
    def input_dim(self) -> int:
        return self.layers[0].d_in

    @property
    def out_dim(self) -> int:
        return self.dense_b.shape[0]

    def param_arrays(self) -> list[np.ndarray]:
        arrays = []
        for layer in self.layers:
            arrays.extend([layer.W, layer.U, layer.b])
        arrays.extend([self.dense_W, self.dense_b])
        return arrays


def init_network(
    k: int = 4,
    hidden: int = 32,
    n_layers: int = 3,
    out_dim: int = 2,
    dropout_rate: float = 0.2,
    residual: bool = True,
    rng: np.random.Generator | None = None,
) -> LstmNetwork:
    """Glorot-uniform weights, zero biases except forget gate bias = 1."""
    rng = rng or np.random.default_rng(0)
    layers = []
    for li in range(n_layers):
        d_in = k if li == 0 else hidden
        lim_w = np.sqrt(6.0 / (d_in + 4 * hidden))
        lim_u = np.sqrt(6.0 / (hidden + 4 * hidden))
        b = np.zeros(4 * hidden)
        b[hidden : 2 * hidden] = 1.0  # forget gate
        layers.append(
            LstmLayerParams(
                W=rng.uniform(-lim_w, lim_w, size=(4 * hidden, d_in)),
                U=rng.uniform(-lim_u, lim_u, size=(4 * hidden, hidden)),
                b=b,
            )
        )
    lim_d = np.sqrt(6.0 / (hidden + out_dim))
    return LstmNetwork(
        layers=layers,
        dense_W=rng.uniform(-lim_d, lim_d, size=(out_dim, hidden)),
        dense_b=np.zeros(out_dim),
        dropout_rate=dropout_rate,
        residual=residual,
    )


@dataclass
class LayerCache:
    x: np.ndarray  # (B, m, d_in) layer input sequence
    i: np.ndarray  # gate activations, each (B, m, h)
    f: np.ndarray
    g: np.ndarray
    g_pre: np.ndarray
    o: np.ndarray
    c: np.ndarray


@dataclass
class ForwardCache:
    window: np.ndarray  # (B, m, k)
    layer_caches: list[LayerCache] = field(default_factory=list)
    block_inputs: list[np.ndarray] = field(default_factory=list)  # input to each block
    dropout_masks: list[np.ndarray | None] = field(default_factory=list)
    final_seq: np.ndarray | None = None  # (B, m, h) after last block
    prediction: np.ndarray | None = None  # (B, out_dim)


def _layer_forward(layer: LstmLayerParams, x: np.ndarray) -> tuple[np.ndarray, LayerCache]:
    B, m, _ = x.shape
    h = layer.hidden
    i_a = np.empty((B, m, h))
    f_a = np.empty((B, m, h))
    g_a = np.empty((B, m, h))
    gp_a = np.empty((B, m, h))
    o_a = np.empty((B, m, h))
    c_a = np.empty((B, m, h))
    h_seq = np.empty((B, m, h))
    h_prev = np.zeros((B, h))
    c_prev = np.zeros((B, h))
    for t in range(m):
        pre = x[:, t] @ layer.W.T + h_prev @ layer.U.T + layer.b
        i_t = sigmoid(pre[:, :h])
        f_t = sigmoid(pre[:, h : 2 * h])
        gp_t = pre[:, 2 * h : 3 * h]
        g_t = relu(gp_t)
        o_t = sigmoid(pre[:, 3 * h :])
        c_t = f_t * c_prev + i_t * g_t
        h_t = o_t * relu(c_t)
        i_a[:, t], f_a[:, t], g_a[:, t], gp_a[:, t], o_a[:, t] = i_t, f_t, g_t, gp_t, o_t
        c_a[:, t] = c_t
        h_seq[:, t] = h_t
        h_prev, c_prev = h_t, c_t
    return h_seq, LayerCache(x=x, i=i_a, f=f_a, g=g_a, g_pre=gp_a, o=o_a, c=c_a)


def forward_batch(
    net: LstmNetwork,
    windows: np.ndarray,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the stack on windows of shape (B, m, k); returns (B, out_dim) predictions."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3 or windows.shape[2] != net.input_dim:
        raise CacheMismatch(f"expected (B, m, {net.input_dim}) input, got {windows.shape}")
    cache = ForwardCache(window=windows)
    seq = windows
    for li, layer in enumerate(net.layers):
        cache.block_inputs.append(seq)
        out, lc = _layer_forward(layer, seq)
        cache.layer_caches.append(lc)
        if li > 0 and net.residual:
            out = out + seq
        mask = None
        if li > 0 and train and net.dropout_rate > 0:
            if rng is None:
                raise ValueError("train-mode forward with dropout needs an rng")
            keep = 1.0 - net.dropout_rate
            mask = (rng.random(out.shape) < keep) / keep
            out = out * mask
        cache.dropout_masks.append(mask)
        seq = out
    cache.final_seq = seq
    pred = seq[:, -1] @ net.dense_W.T + net.dense_b
    if not np.all(np.isfinite(pred)):
        raise NonFiniteActivation("non-finite prediction")
    cache.prediction = pred
    return pred, cache


def forward(
    net: LstmNetwork,
    window: np.ndarray,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Single-window convenience wrapper around forward_batch."""
    pred, cache = forward_batch(net, np.asarray(window)[None, ...], train=train, rng=rng)
    return pred[0], cache


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over output dims (and batch) of squared error."""
    return float(np.mean((pred - target) ** 2))


def _layer_backward(
    layer: LstmLayerParams, lc: LayerCache, d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """BPTT through one layer. d_out is dL/d(h_seq), shape (B, m, h).
    Returns (dX, dW, dU, db). ReLU derivative is 0 at the kink."""
    B, m, h = d_out.shape
    dW = np.zeros_like(layer.W)
    dU = np.zeros_like(layer.U)
    db = np.zeros_like(layer.b)
    dX = np.empty_like(lc.x)
    dh_next = np.zeros((B, h))
    dc_next = np.zeros((B, h))
    for t in range(m - 1, -1, -1):
        i_t, f_t, g_t, o_t, c_t = lc.i[:, t], lc.f[:, t], lc.g[:, t], lc.o[:, t], lc.c[:, t]
        c_prev = lc.c[:, t - 1] if t > 0 else np.zeros((B, h))
        h_prev = (
            lc.o[:, t - 1] * relu(lc.c[:, t - 1]) if t > 0 else np.zeros((B, h))
        )
        dh = d_out[:, t] + dh_next
        do = dh * relu(c_t)
        dc = dc_next + dh * o_t * (c_t > 0)
        dg = dc * i_t
        di = dc * g_t
        df = dc * c_prev
        dpre = np.concatenate(
            (
                di * i_t * (1 - i_t),
                df * f_t * (1 - f_t),
                dg * (lc.g_pre[:, t] > 0),
                do * o_t * (1 - o_t),
            ),
            axis=1,
        )
        dW += dpre.T @ lc.x[:, t]
        dU += dpre.T @ h_prev
        db += dpre.sum(axis=0)
        dX[:, t] = dpre @ layer.W
        dh_next = dpre @ layer.U
        dc_next = dc * f_t
    return dX, dW, dU, db


def backward(net: LstmNetwork, cache: ForwardCache, targets: np.ndarray) -> list[np.ndarray]:
    """Exact gradients of the batch-mean MSE loss, same ordering as
    net.param_arrays()."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    pred = cache.prediction
    if pred is None or pred.shape != targets.shape:
        raise CacheMismatch(f"prediction {None if pred is None else pred.shape} vs targets {targets.shape}")
    B, m, _ = cache.window.shape
    out_dim = net.out_dim
    # loss = mean over batch and output dims of (pred - target)^2
    d_pred = 2.0 * (pred - targets) / (B * out_dim)
    d_dense_W = d_pred.T @ cache.final_seq[:, -1]
    d_dense_b = d_pred.sum(axis=0)
    d_seq = np.zeros_like(cache.final_seq)
    d_seq[:, -1] = d_pred @ net.dense_W
    layer_grads: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = [None] * len(net.layers)
    for li in range(len(net.layers) - 1, -1, -1):
        mask = cache.dropout_masks[li]
        if mask is not None:
            d_seq = d_seq * mask
        d_block_out = d_seq
        dX, dW, dU, db = _layer_backward(net.layers[li], cache.layer_caches[li], d_block_out)
        if li > 0 and net.residual:
            dX = dX + d_block_out
        layer_grads[li] = (dW, dU, db)
        d_seq = dX
    grads: list[np.ndarray] = []
    for dW, dU, db in layer_grads:
        grads.extend([dW, dU, db])
    grads.extend([d_dense_W, d_dense_b])
    return grads


@dataclass
class AdamState:
    """Adaptive moment estimation state, one slot per parameter array."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_network(cls, net: LstmNetwork) -> "AdamState":
        arrays = net.param_arrays()
        return cls(m=[np.zeros_like(a) for a in arrays], v=[np.zeros_like(a) for a in arrays])

    def step(self, net: LstmNetwork, grads: list[np.ndarray], cfg: TrainConfig) -> None:
        self.t += 1
        b1, b2, eps = cfg.beta1, cfg.beta2, cfg.epsilon
        correction = np.sqrt(1 - b2**self.t) / (1 - b1**self.t)
        for param, grad, m, v in zip(net.param_arrays(), grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * grad
            v *= b2
            v += (1 - b2) * grad**2
            param -= cfg.learning_rate * correction * m / (np.sqrt(v) + eps)


def train_epoch(
    net: LstmNetwork,
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
    opt: AdamState,
) -> float:
    """One pass over all windows: shuffle, batch, Adam step per batch.
    Returns the mean per-window loss (computed before each update)."""
    n = len(inputs)
    if n == 0:
        raise ValueError("no training windows")
    order = rng.permutation(n)
    total = 0.0
    for start in range(0, n, cfg.batch_size):
        idx = order[start : start + cfg.batch_size]
        pred, cache = forward_batch(net, inputs[idx], train=True, rng=rng)
        total += float(np.sum(np.mean((pred - targets[idx]) ** 2, axis=1)))
        grads = backward(net, cache, targets[idx])
        opt.step(net, grads, cfg)
    return total / n


def evaluate_loss(net: LstmNetwork, inputs: np.ndarray, targets: np.ndarray) -> float:
    pred, _ = forward_batch(net, inputs, train=False)
    return mse_loss(pred, targets)


# Fed-back predictions are clamped to this band (scaled units; training data
# lives in [0, 1], the test horizon extends somewhat past it). Without the
# clamp a slightly expansive learned map turns the recursion into a positive
# feedback loop and the rollout diverges. Reported predictions stay raw.
FEEDBACK_MIN = -0.5
FEEDBACK_MAX = 1.5


def roll_step(net: LstmNetwork, window: np.ndarray, speed_course_fill=None):
    """One rollout step: predict, then push the prediction into the window.
    Returns (raw prediction, next window)."""
    pred, _ = forward_batch(net, window[None, ...], train=False)
    extra = window[-1, 2:] if speed_course_fill is None else np.asarray(speed_course_fill)
    fed_back = np.clip(pred[0], FEEDBACK_MIN, FEEDBACK_MAX)
    next_window = np.vstack((window[1:], np.concatenate((fed_back, extra))))
    return pred[0], next_window


def predict_sequence(
    net: LstmNetwork,
    seed_window: np.ndarray,
    steps: int,
    speed_course_fill=None,
) -> np.ndarray:
    """Recursive multi-step rollout in scaled units.

    Each predicted (lat, lon) becomes the position part of the newest row
    pushed into the sliding window; speed/course come from speed_course_fill
    (default: hold the window's last known values). Returns (steps, 2)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    window = np.array(seed_window, dtype=np.float64)
    preds = np.empty((steps, net.out_dim))
    for s in range(steps):
        preds[s], window = roll_step(net, window, speed_course_fill)
    return preds

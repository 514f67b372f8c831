"""Toy-scale bidirectional recurrent models mapping feature sequences to vocoder parameters.

Three cell kinds share one affine output layer combining the forward and
backward state sequences: a plain tanh recurrence, an LSTM, and a GRU.
Gradients are exact backpropagation through time, checked against finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CELL_VANILLA = "vanilla-bidirectional"
CELL_LSTM = "lstm"
CELL_GRU = "gru"
CELL_KINDS = (CELL_VANILLA, CELL_LSTM, CELL_GRU)

_GATES = {CELL_VANILLA: 1, CELL_LSTM: 4, CELL_GRU: 3}


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during gradient descent."""


@dataclass
class DirectionWeights:
    """One recurrence direction: input, recurrent, and bias blocks."""

    w_x: np.ndarray  # (gates*H, D)
    w_h: np.ndarray  # (gates*H, H)
    b: np.ndarray    # (gates*H,)


@dataclass
class SequenceModelParams:
    """Weights for a bidirectional sequence model with an affine output layer."""

    cell_kind: str
    input_dim: int
    hidden_dim: int
    output_dim: int
    fwd: DirectionWeights
    bwd: DirectionWeights
    w_fy: np.ndarray  # (O, H)
    w_by: np.ndarray  # (O, H)
    b_y: np.ndarray   # (O,)
    seed: int = 0

    def __post_init__(self):
        if self.cell_kind not in CELL_KINDS:
            raise ValueError(f"unknown cell kind: {self.cell_kind!r}")
        gates = _GATES[self.cell_kind]
        d, h, o = self.input_dim, self.hidden_dim, self.output_dim
        expected = {
            "fwd.w_x": (gates * h, d), "fwd.w_h": (gates * h, h), "fwd.b": (gates * h,),
            "bwd.w_x": (gates * h, d), "bwd.w_h": (gates * h, h), "bwd.b": (gates * h,),
            "w_fy": (o, h), "w_by": (o, h), "b_y": (o,),
        }
        for name, arr in self.items():
            if arr.shape != expected[name]:
                raise ValueError(f"{name} has shape {arr.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    def items(self):
        return [
            ("fwd.w_x", self.fwd.w_x), ("fwd.w_h", self.fwd.w_h), ("fwd.b", self.fwd.b),
            ("bwd.w_x", self.bwd.w_x), ("bwd.w_h", self.bwd.w_h), ("bwd.b", self.bwd.b),
            ("w_fy", self.w_fy), ("w_by", self.w_by), ("b_y", self.b_y),
        ]

    def copy(self) -> "SequenceModelParams":
        return SequenceModelParams(
            cell_kind=self.cell_kind, input_dim=self.input_dim,
            hidden_dim=self.hidden_dim, output_dim=self.output_dim,
            fwd=DirectionWeights(self.fwd.w_x.copy(), self.fwd.w_h.copy(), self.fwd.b.copy()),
            bwd=DirectionWeights(self.bwd.w_x.copy(), self.bwd.w_h.copy(), self.bwd.b.copy()),
            w_fy=self.w_fy.copy(), w_by=self.w_by.copy(), b_y=self.b_y.copy(),
            seed=self.seed)


@dataclass
class TrainingBatch:
    """Paired input/target sequences; each pair shares one length T."""

    inputs: list = field(default_factory=list)
    targets: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.inputs) != len(self.targets):
            raise ValueError("inputs and targets must pair up")
        self.inputs = [np.asarray(x, dtype=np.float64) for x in self.inputs]
        self.targets = [np.asarray(y, dtype=np.float64) for y in self.targets]
        for x, y in zip(self.inputs, self.targets):
            if x.shape[0] != y.shape[0]:
                raise ValueError("each input/target pair must share one sequence length")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def total_entries(self) -> int:
        return sum(y.size for y in self.targets)


def init_params(cell_kind: str, input_dim: int, hidden_dim: int,
                output_dim: int, seed: int = 0) -> SequenceModelParams:
    """Seeded uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for every block."""
    if cell_kind not in CELL_KINDS:
        raise ValueError(f"unknown cell kind: {cell_kind!r}")
    gates = _GATES[cell_kind]
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    def direction():
        return DirectionWeights(
            w_x=uniform((gates * hidden_dim, input_dim), input_dim),
            w_h=uniform((gates * hidden_dim, hidden_dim), hidden_dim),
            b=np.zeros(gates * hidden_dim))

    return SequenceModelParams(
        cell_kind=cell_kind, input_dim=input_dim, hidden_dim=hidden_dim,
        output_dim=output_dim, fwd=direction(), bwd=direction(),
        w_fy=uniform((output_dim, hidden_dim), hidden_dim),
        w_by=uniform((output_dim, hidden_dim), hidden_dim),
        b_y=np.zeros(output_dim), seed=seed)


def zeros_like_params(params: SequenceModelParams) -> SequenceModelParams:
    out = params.copy()
    for _, arr in out.items():
        arr[...] = 0.0
    return out


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _run_vanilla(weights: DirectionWeights, xs: np.ndarray):
    T = xs.shape[0]
    h_dim = weights.w_h.shape[1]
    h = np.zeros((T, h_dim))
    prev = np.zeros(h_dim)
    drive = xs @ weights.w_x.T + weights.b
    for t in range(T):
        prev = np.tanh(drive[t] + weights.w_h @ prev)
        h[t] = prev
    return h, {"h": h}


def _run_lstm(weights: DirectionWeights, xs: np.ndarray):
    T = xs.shape[0]
    h_dim = weights.w_h.shape[1]
    h = np.zeros((T, h_dim))
    cache = {"i": np.zeros((T, h_dim)), "f": np.zeros((T, h_dim)),
             "g": np.zeros((T, h_dim)), "o": np.zeros((T, h_dim)),
             "c": np.zeros((T, h_dim)), "tc": np.zeros((T, h_dim)), "h": h}
    prev_h = np.zeros(h_dim)
    prev_c = np.zeros(h_dim)
    drive = xs @ weights.w_x.T + weights.b
    for t in range(T):
        z = drive[t] + weights.w_h @ prev_h
        i = _sigmoid(z[:h_dim])
        f = _sigmoid(z[h_dim:2 * h_dim])
        g = np.tanh(z[2 * h_dim:3 * h_dim])
        o = _sigmoid(z[3 * h_dim:])
        c = f * prev_c + i * g
        tc = np.tanh(c)
        prev_h = o * tc
        h[t] = prev_h
        cache["i"][t], cache["f"][t], cache["g"][t], cache["o"][t] = i, f, g, o
        cache["c"][t], cache["tc"][t] = c, tc
        prev_c = c
    return h, cache


def _run_gru(weights: DirectionWeights, xs: np.ndarray):
    T = xs.shape[0]
    h_dim = weights.w_h.shape[1]
    h = np.zeros((T, h_dim))
    cache = {"r": np.zeros((T, h_dim)), "z": np.zeros((T, h_dim)),
             "n": np.zeros((T, h_dim)), "hh": np.zeros((T, h_dim)), "h": h}
    prev = np.zeros(h_dim)
    drive = xs @ weights.w_x.T + weights.b
    w_hr = weights.w_h[:h_dim]
    w_hz = weights.w_h[h_dim:2 * h_dim]
    w_hn = weights.w_h[2 * h_dim:]
    for t in range(T):
        r = _sigmoid(drive[t, :h_dim] + w_hr @ prev)
        z = _sigmoid(drive[t, h_dim:2 * h_dim] + w_hz @ prev)
        hh = w_hn @ prev
        n = np.tanh(drive[t, 2 * h_dim:] + r * hh)
        new = (1.0 - z) * n + z * prev
        h[t] = new
        cache["r"][t], cache["z"][t], cache["n"][t], cache["hh"][t] = r, z, n, hh
        prev = new
    return h, cache


_RUNNERS = {CELL_VANILLA: _run_vanilla, CELL_LSTM: _run_lstm, CELL_GRU: _run_gru}


def _run_direction(cell_kind: str, weights: DirectionWeights, xs: np.ndarray):
    return _RUNNERS[cell_kind](weights, xs)


def forward(params: SequenceModelParams, x: np.ndarray):
    """One sequence through the model.

    Returns (y, h_fwd, h_bwd): y[t] combines the forward state at t and the
    backward state at t through the affine output layer. Initial states are
    zero in both directions; the backward pass iterates t = T..1.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("input must be a non-empty (T, input_dim) sequence")
    if x.shape[1] != params.input_dim:
        raise ValueError(f"input dim {x.shape[1]} != model input dim {params.input_dim}")
    h_fwd, _ = _run_direction(params.cell_kind, params.fwd, x)
    h_bwd_rev, _ = _run_direction(params.cell_kind, params.bwd, x[::-1])
    h_bwd = h_bwd_rev[::-1]
    y = h_fwd @ params.w_fy.T + h_bwd @ params.w_by.T + params.b_y
    return y, h_fwd, h_bwd


def mse_loss(y, target) -> float:
    """Mean squared error over every scalar entry of the output sequences."""
    ys = y if isinstance(y, (list, tuple)) else [y]
    ts = target if isinstance(target, (list, tuple)) else [target]
    if len(ys) != len(ts):
        raise ValueError("prediction and target counts differ")
    total = 0.0
    count = 0
    for yy, tt in zip(ys, ts):
        yy = np.asarray(yy, dtype=np.float64)
        tt = np.asarray(tt, dtype=np.float64)
        if yy.shape != tt.shape:
            raise ValueError(f"shape mismatch: {yy.shape} vs {tt.shape}")
        total += float(np.sum((yy - tt) ** 2))
        count += yy.size
    if count == 0:
        raise ValueError("no entries to average")
    return total / count


def _backprop_vanilla(weights, xs, cache, dh_ext):
    T, h_dim = dh_ext.shape
    h = cache["h"]
    d_wx = np.zeros_like(weights.w_x)
    d_wh = np.zeros_like(weights.w_h)
    d_b = np.zeros_like(weights.b)
    carry = np.zeros(h_dim)
    for t in range(T - 1, -1, -1):
        dpre = (dh_ext[t] + carry) * (1.0 - h[t] ** 2)
        prev = h[t - 1] if t > 0 else np.zeros(h_dim)
        d_wx += np.outer(dpre, xs[t])
        d_wh += np.outer(dpre, prev)
        d_b += dpre
        carry = weights.w_h.T @ dpre
    return DirectionWeights(d_wx, d_wh, d_b)


def _backprop_lstm(weights, xs, cache, dh_ext):
    T, h_dim = dh_ext.shape
    d_wx = np.zeros_like(weights.w_x)
    d_wh = np.zeros_like(weights.w_h)
    d_b = np.zeros_like(weights.b)
    dh_carry = np.zeros(h_dim)
    dc_carry = np.zeros(h_dim)
    for t in range(T - 1, -1, -1):
        i, f, g, o = cache["i"][t], cache["f"][t], cache["g"][t], cache["o"][t]
        tc = cache["tc"][t]
        prev_h = cache["h"][t - 1] if t > 0 else np.zeros(h_dim)
        prev_c = cache["c"][t - 1] if t > 0 else np.zeros(h_dim)
        dh = dh_ext[t] + dh_carry
        dc = dh * o * (1.0 - tc ** 2) + dc_carry
        dpo = dh * tc * o * (1.0 - o)
        dpf = dc * prev_c * f * (1.0 - f)
        dpi = dc * g * i * (1.0 - i)
        dpg = dc * i * (1.0 - g ** 2)
        dc_carry = dc * f
        dz = np.concatenate([dpi, dpf, dpg, dpo])
        d_wx += np.outer(dz, xs[t])
        d_wh += np.outer(dz, prev_h)
        d_b += dz
        dh_carry = weights.w_h.T @ dz
    return DirectionWeights(d_wx, d_wh, d_b)


def _backprop_gru(weights, xs, cache, dh_ext):
    T, h_dim = dh_ext.shape
    d_wx = np.zeros_like(weights.w_x)
    d_wh = np.zeros_like(weights.w_h)
    d_b = np.zeros_like(weights.b)
    w_hr = weights.w_h[:h_dim]
    w_hz = weights.w_h[h_dim:2 * h_dim]
    w_hn = weights.w_h[2 * h_dim:]
    carry = np.zeros(h_dim)
    for t in range(T - 1, -1, -1):
        r, z, n, hh = cache["r"][t], cache["z"][t], cache["n"][t], cache["hh"][t]
        prev = cache["h"][t - 1] if t > 0 else np.zeros(h_dim)
        dh = dh_ext[t] + carry
        daz = dh * (prev - n) * z * (1.0 - z)
        dan = dh * (1.0 - z) * (1.0 - n ** 2)
        dar = dan * hh * r * (1.0 - r)
        da = np.concatenate([dar, daz, dan])
        d_wx += np.outer(da, xs[t])
        d_wh[:h_dim] += np.outer(dar, prev)
        d_wh[h_dim:2 * h_dim] += np.outer(daz, prev)
        d_wh[2 * h_dim:] += np.outer(dan * r, prev)
        d_b += da
        carry = (dh * z + w_hr.T @ dar + w_hz.T @ daz + w_hn.T @ (dan * r))
    return DirectionWeights(d_wx, d_wh, d_b)


_BACKPROPS = {CELL_VANILLA: _backprop_vanilla, CELL_LSTM: _backprop_lstm,
              CELL_GRU: _backprop_gru}


def _accumulate(target: DirectionWeights, grad: DirectionWeights):
    target.w_x += grad.w_x
    target.w_h += grad.w_h
    target.b += grad.b


def _gradients_and_loss(params: SequenceModelParams, batch: TrainingBatch):
    grads = zeros_like_params(params)
    n_total = batch.total_entries
    if n_total == 0:
        raise ValueError("empty batch")
    backprop = _BACKPROPS[params.cell_kind]
    sse = 0.0
    for xs, target in zip(batch.inputs, batch.targets):
        xs = np.asarray(xs, dtype=np.float64)
        h_fwd, cache_f = _run_direction(params.cell_kind, params.fwd, xs)
        h_bwd_rev, cache_b = _run_direction(params.cell_kind, params.bwd, xs[::-1])
        h_bwd = h_bwd_rev[::-1]
        y = h_fwd @ params.w_fy.T + h_bwd @ params.w_by.T + params.b_y
        diff = y - target
        with np.errstate(over="ignore"):
            sample_sse = float(np.sum(diff ** 2))
        if not (np.all(np.isfinite(diff)) and np.isfinite(sample_sse)):
            raise TrainingDivergedError("non-finite values in the forward pass")
        sse += sample_sse
        dy = 2.0 * diff / n_total
        grads.w_fy += dy.T @ h_fwd
        grads.w_by += dy.T @ h_bwd
        grads.b_y += dy.sum(axis=0)
        dh_f = dy @ params.w_fy
        dh_b = dy @ params.w_by
        _accumulate(grads.fwd, backprop(params.fwd, xs, cache_f, dh_f))
        _accumulate(grads.bwd, backprop(params.bwd, xs[::-1], cache_b, dh_b[::-1]))
    return grads, sse / n_total


def gradients(params: SequenceModelParams, batch: TrainingBatch) -> SequenceModelParams:
    """Exact loss gradients w.r.t. every parameter, as a parameter-shaped set."""
    grads, _ = _gradients_and_loss(params, batch)
    return grads


def train(params: SequenceModelParams, dataset: TrainingBatch, epochs: int,
          learning_rate: float, seed: int | None = None):
    """Full-batch plain gradient descent.

    When `seed` is given the parameter values are re-drawn from it (same
    shapes and cell kind), which makes the whole run a deterministic
    function of (dataset, epochs, learning_rate, seed). Returns the trained
    parameters and the per-epoch loss trace.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if seed is not None:
        params = init_params(params.cell_kind, params.input_dim,
                             params.hidden_dim, params.output_dim, seed)
    else:
        params = params.copy()
    trace = np.empty(epochs)
    for epoch in range(epochs):
        grads, loss = _gradients_and_loss(params, dataset)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"loss diverged at epoch {epoch}")
        trace[epoch] = loss
        for (_, p), (_, g) in zip(params.items(), grads.items()):
            p -= learning_rate * g
    return params, trace


def make_toy_dataset(n_samples: int = 4, seq_len: int = 20, input_dim: int = 8,
                     output_dim: int = 4, seed: int = 0) -> TrainingBatch:
    """Synthetic sequence-to-sequence data: sustained one-hot phone classes.

    Each sample holds one phone class for the whole sequence; inputs carry
    the one-hot class plus a position-in-utterance scalar, and the target is
    that class's parameter vector. Small data, smooth targets: a network of
    a few hidden units overfits it with plain gradient descent.
    """
    rng = np.random.default_rng(seed)
    n_classes = input_dim - 1
    class_targets = rng.uniform(-0.2, 0.2, size=(n_classes, output_dim))
    if n_samples <= n_classes:
        classes = rng.permutation(n_classes)[:n_samples]
    else:
        classes = rng.integers(0, n_classes, size=n_samples)
    inputs, targets = [], []
    pos = np.arange(seq_len) / max(seq_len - 1, 1)
    for c in classes:
        x = np.zeros((seq_len, input_dim))
        x[:, c] = 1.0
        x[:, -1] = pos
        inputs.append(x)
        targets.append(np.tile(class_targets[c], (seq_len, 1)))
    return TrainingBatch(inputs=inputs, targets=targets)


def save_model(params: SequenceModelParams, path) -> None:
    """Plain-text serialization: header lines then one row of values per matrix row."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"cell_kind {params.cell_kind}\n")
        fh.write(f"input_dim {params.input_dim}\n")
        fh.write(f"hidden_dim {params.hidden_dim}\n")
        fh.write(f"output_dim {params.output_dim}\n")
        fh.write(f"seed {params.seed}\n")
        for name, arr in params.items():
            mat = np.atleast_2d(arr)
            fh.write(f"param {name} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_model(path) -> SequenceModelParams:
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.rstrip("\n") for line in fh]
    header = {}
    pos = 0
    while pos < len(lines) and not lines[pos].startswith("param "):
        key, value = lines[pos].split(" ", 1)
        header[key] = value
        pos += 1
    arrays = {}
    while pos < len(lines):
        _, name, rows, _cols = lines[pos].split(" ")
        rows = int(rows)
        block = [np.array([float(v) for v in lines[pos + 1 + r].split()])
                 for r in range(rows)]
        arrays[name] = np.vstack(block)
        pos += 1 + rows

    def vec(name):
        return arrays[name].ravel()
    d, h, o = int(header["input_dim"]), int(header["hidden_dim"]), int(header["output_dim"])
    kind = header["cell_kind"]
    return SequenceModelParams(
        cell_kind=kind, input_dim=d, hidden_dim=h, output_dim=o,
        fwd=DirectionWeights(arrays["fwd.w_x"], arrays["fwd.w_h"], vec("fwd.b")),
        bwd=DirectionWeights(arrays["bwd.w_x"], arrays["bwd.w_h"], vec("bwd.b")),
        w_fy=arrays["w_fy"], w_by=arrays["w_by"], b_y=vec("b_y"),
        seed=int(header.get("seed", 0)))

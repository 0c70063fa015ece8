"""Dense ReLU networks in float64: forward, backprop, Adam and checkpoints.

Shared by the Q-network (linear head) and the behavior-cloning policy
(logistic head). Weights of layer ``i`` have shape ``(fan_in, fan_out)`` so
a batch forward is ``x @ W + b``.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidArgument, TruncatedFileError

HEAD_LINEAR = "linear"
HEAD_SQUASHED = "squashed"
_HEAD_CODES = {HEAD_LINEAR: 0, HEAD_SQUASHED: 1}
_HEAD_NAMES = {v: k for k, v in _HEAD_CODES.items()}

MAGIC = b"AGPL1"
FORMAT_VERSION = 1


@dataclass
class MLPParams:
    weights: list
    biases: list
    head: str = HEAD_LINEAR

    def __post_init__(self):
        if self.head not in _HEAD_CODES:
            raise InvalidArgument(f"unknown head kind {self.head!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise InvalidArgument("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise InvalidArgument(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise InvalidArgument(f"layer {i} input {w.shape[0]} != previous output")

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_inputs(self):
        return self.weights[0].shape[0]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[1]

    def arrays(self):
        return [*self.weights, *self.biases]

    def copy(self):
        return MLPParams([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.head)

    def zeros_like(self):
        return MLPParams([np.zeros_like(w) for w in self.weights],
                         [np.zeros_like(b) for b in self.biases], self.head)

    def equals(self, other):
        """Bitwise equality of all arrays and the head kind."""
        return (
            self.head == other.head
            and self.layer_sizes == other.layer_sizes
            and all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))
        )

    def is_finite(self):
        return all(np.isfinite(a).all() for a in self.arrays())

    @property
    def dtype(self):
        return self.weights[0].dtype

    def astype(self, dtype):
        """Copy with every array cast to ``dtype``."""
        return MLPParams([w.astype(dtype) for w in self.weights],
                         [b.astype(dtype) for b in self.biases], self.head)


def init(layer_sizes, head=HEAD_LINEAR, seed=0, dtype=np.float64):
    """He-uniform weights (variance 2/fan_in), zero biases.

    Weights are always drawn in float64 and then cast, so a float32 network
    starts from the rounded float64 one.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise InvalidArgument(f"invalid layer sizes {layer_sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return MLPParams(weights, biases, head)


def _sigmoid(z):
    # split by sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_batch(params, x):
    x = np.asarray(x, dtype=params.dtype)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.n_inputs:
        raise InvalidArgument(f"input shape {x.shape} does not match {params.n_inputs} features")
    return x, single


def _forward_cache(params, x):
    acts = [x]
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w
        z += b
        if i < last:
            np.maximum(z, 0.0, out=z)
        h = z
        acts.append(h)
    if params.head == HEAD_SQUASHED:
        acts[-1] = _sigmoid(acts[-1])
    return acts


def forward(params, x):
    """Network output for one input vector or a batch (rows)."""
    xb, single = _as_batch(params, x)
    out = _forward_cache(params, xb)[-1]
    return out[0] if single else out


def loss_and_grad(params, inputs, targets, mask=None, kind="squared_error"):
    """Batch-mean squared error and its gradient.

    ``loss = sum(mask * (out - targets)**2) / batch``. With a one-hot mask
    this is the TD regression on the taken action only; without a mask all
    output components count.
    """
    if kind != "squared_error":
        raise InvalidArgument(f"unsupported loss kind {kind!r}")
    x, _ = _as_batch(params, inputs)
    y = np.asarray(targets, dtype=x.dtype).reshape(len(x), -1)
    if len(x) == 0:
        raise InvalidArgument("empty batch")
    if y.shape != (len(x), params.n_outputs):
        raise InvalidArgument(f"targets shape {y.shape} != {(len(x), params.n_outputs)}")
    acts = _forward_cache(params, x)
    out = acts[-1]
    diff = out - y
    if mask is not None:
        mask = np.asarray(mask, dtype=x.dtype)
        if mask.shape != diff.shape:
            raise InvalidArgument(f"mask shape {mask.shape} != {diff.shape}")
        diff *= mask
    n = len(x)
    loss = float(np.sum(diff * diff) / n)

    delta = diff * x.dtype.type(2.0 / n)
    if params.head == HEAD_SQUASHED:
        delta *= out * (1.0 - out)
    gw = [None] * len(params.weights)
    gb = [None] * len(params.weights)
    for i in range(len(params.weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = delta @ params.weights[i].T
            delta *= acts[i] > 0.0
    return loss, MLPParams(gw, gb, params.head)


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, lr=1e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        arrays = params.arrays()
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays],
                   0, lr, beta1, beta2, eps)

    def copy(self):
        return AdamState([a.copy() for a in self.m], [a.copy() for a in self.v],
                         self.t, self.lr, self.beta1, self.beta2, self.eps)


def adam_update_(params, grads, state):
    """In-place Adam step on ``params`` and ``state``."""
    p_arrays, g_arrays = params.arrays(), grads.arrays()
    if len(p_arrays) != len(g_arrays) or len(p_arrays) != len(state.m):
        raise InvalidArgument("params, grads and optimizer state have different structure")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    step = state.lr / c1
    root_c2 = np.sqrt(c2)
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise InvalidArgument(f"shape mismatch {p.shape} / {g.shape} / {m.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        # lr * (m / c1) / (sqrt(v / c2) + eps), with fewer temporaries
        denom = np.sqrt(v)
        denom /= root_c2
        denom += state.eps
        upd = m * step
        upd /= denom
        p -= upd


def adam_step(params, grads, state):
    """Functional Adam step: returns ``(new_params, new_state)``, inputs untouched."""
    new_params, new_state = params.copy(), state.copy()
    adam_update_(new_params, grads, new_state)
    return new_params, new_state


@dataclass
class Normalizer:
    """Per-feature affine input scaling ``(x - offset) / scale``."""

    offset: np.ndarray
    scale: np.ndarray = field(default=None)

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=np.float64)
        self.scale = np.ones_like(self.offset) if self.scale is None else np.asarray(self.scale, dtype=np.float64)
        if self.offset.shape != self.scale.shape or self.offset.ndim != 1:
            raise InvalidArgument("offset and scale must be 1-D arrays of equal length")
        if not np.all(self.scale > 0):
            raise InvalidArgument("every scale must be > 0")

    @classmethod
    def identity(cls, n):
        return cls(np.zeros(n), np.ones(n))

    @classmethod
    def fit(cls, samples, min_scale=1e-6):
        x = np.asarray(samples, dtype=np.float64)
        scale = x.std(axis=0)
        scale[scale < min_scale] = 1.0
        return cls(x.mean(axis=0), scale)

    def __len__(self):
        return len(self.offset)

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.offset) / self.scale

    def equals(self, other):
        return np.array_equal(self.offset, other.offset) and np.array_equal(self.scale, other.scale)


def save_checkpoint(params, normalizer, metadata, path):
    """Write the binary checkpoint; see README for the layout."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<BB", FORMAT_VERSION, _HEAD_CODES[params.head]))
    sizes = params.layer_sizes
    buf.write(struct.pack("<I", len(sizes)))
    buf.write(struct.pack(f"<{len(sizes)}I", *sizes))
    for w, b in zip(params.weights, params.biases):
        buf.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    n_norm = 0 if normalizer is None else len(normalizer)
    buf.write(struct.pack("<I", n_norm))
    if n_norm:
        buf.write(np.ascontiguousarray(normalizer.offset, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(normalizer.scale, dtype="<f8").tobytes())
    meta = json.dumps(metadata or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)
    Path(path).write_bytes(buf.getvalue())


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise TruncatedFileError(f"checkpoint truncated at byte {len(self.data)} (needed {self.pos + n})")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, shape):
        count = int(np.prod(shape))
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)


def load_checkpoint(path, expect_head=None):
    """Read a checkpoint. Returns ``(params, normalizer_or_None, metadata)``."""
    r = _Reader(Path(path).read_bytes())
    if len(r.data) >= len(MAGIC) and r.data[:len(MAGIC)] != MAGIC:
        raise FormatError("not a checkpoint file (bad magic)")
    r.take(len(MAGIC))
    version, head_code = r.unpack("<BB")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    if head_code not in _HEAD_NAMES:
        raise FormatError(f"unknown head code {head_code}")
    head = _HEAD_NAMES[head_code]
    if expect_head is not None and head != expect_head:
        raise FormatError(f"checkpoint has a {head} head, expected {expect_head}")
    (n_sizes,) = r.unpack("<I")
    if n_sizes < 2 or n_sizes > 64:
        raise FormatError(f"implausible layer count {n_sizes}")
    sizes = r.unpack(f"<{n_sizes}I")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        weights.append(r.floats((fan_in, fan_out)))
        biases.append(r.floats((fan_out,)))
    (n_norm,) = r.unpack("<I")
    normalizer = None
    if n_norm:
        offset = r.floats((n_norm,))
        scale = r.floats((n_norm,))
        normalizer = Normalizer(offset, scale)
    (n_meta,) = r.unpack("<I")
    try:
        metadata = json.loads(r.take(n_meta).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad metadata block: {exc}") from None
    return MLPParams(weights, biases, head), normalizer, metadata


def numeric_grad(params, inputs, targets, mask=None, eps=1e-6):
    """Central finite-difference gradient of :func:`loss_and_grad`'s loss.

    Uses forward passes only. The loss difference is formed as
    ``sum(m * (o+ - o-) * (o+ + o- - 2y)) / batch``, algebraically equal to
    ``L(w + eps) - L(w - eps)`` but without subtracting two large losses.
    The probes run in extended precision where the platform has it, so the
    rounding left in ``o+ - o-`` stays well below tiny gradient components.
    """
    probe = params.astype(np.longdouble)
    x, _ = _as_batch(probe, inputs)
    y = np.asarray(targets, dtype=np.longdouble).reshape(len(x), -1)
    m = np.ones_like(y) if mask is None else np.asarray(mask, dtype=np.longdouble)
    grads = params.astype(np.float64).zeros_like()
    for arr, garr in zip(probe.arrays(), grads.arrays()):
        flat, gflat = arr.reshape(-1), garr.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            up = forward(probe, x)
            flat[k] = orig - eps
            down = forward(probe, x)
            flat[k] = orig
            dl = np.sum(m * (up - down) * (up + down - 2.0 * y)) / len(x)
            gflat[k] = dl / (2.0 * eps)
    return grads


def max_relative_error(analytic, numeric, floor=1e-8):
    """``max |a - n| / max(|a|, |n|, floor)`` over every parameter."""
    worst = 0.0
    for a, n in zip(analytic.arrays(), numeric.arrays()):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def gradcheck(params, inputs, targets, mask=None, eps=1e-6):
    """Max relative error between backprop and central differences."""
    _, analytic = loss_and_grad(params, inputs, targets, mask)
    return max_relative_error(analytic, numeric_grad(params, inputs, targets, mask, eps))


def gradcheck_random_nets(n_nets, seed=0, eps=1e-6):
    """Worst :func:`gradcheck` error over random small networks.

    Each network has 1 to 3 weight layers of 1 to 16 units, alternating
    linear and squashed heads, random biases, and a batch of 1 to 8 rows.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_nets):
        n_layers = int(rng.integers(1, 4))
        sizes = [int(v) for v in rng.integers(1, 17, size=n_layers + 1)]
        head = HEAD_SQUASHED if k % 2 else HEAD_LINEAR
        params = init(sizes, head, int(rng.integers(2**31)))
        for b in params.biases:
            b[:] = rng.normal(0.0, 0.1, b.shape)
        batch = int(rng.integers(1, 9))
        x = rng.normal(size=(batch, sizes[0]))
        y = rng.normal(size=(batch, sizes[-1]))
        worst = max(worst, gradcheck(params, x, y, eps=eps))
    return worst

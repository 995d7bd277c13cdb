"""Embedding -> stacked LSTM -> dense network with exact BPTT gradients.

Parameter layout (all row-major numpy arrays)::

    embedding   (V, E)
    W_k         (4H, in_k)   in_0 = E, in_k = H for k > 0
    U_k         (4H, H)
    b_k         (4H,)
    dense_W     (V, H)
    dense_b     (V,)

The 4H axis of every LSTM tensor is split into gate blocks in the order
input, forget, cell candidate, output::

    z = W x + U h + b = [z_i, z_f, z_g, z_o]
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
    c' = f * c + i * g
    h' = o * tanh(c')
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .rng import PortableRNG

GATES = ("i", "f", "g", "o")
DTYPES = {"float64": np.float64, "float32": np.float32}


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int = 256
    hidden_size: int = 1024
    num_layers: int = 3
    seq_len: int = 100
    dtype: str = "float64"

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "hidden_size", "num_layers", "seq_len"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.dtype not in DTYPES:
            raise ValueError(f"dtype must be one of {sorted(DTYPES)}, got {self.dtype!r}")

    @property
    def np_dtype(self):
        return DTYPES[self.dtype]

    def input_dim(self, layer: int) -> int:
        return self.embed_dim if layer == 0 else self.hidden_size

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Tensor names and shapes in canonical (serialization) order."""
    V, E, H = config.vocab_size, config.embed_dim, config.hidden_size
    shapes = {"embedding": (V, E)}
    for k in range(config.num_layers):
        shapes[f"W_{k}"] = (4 * H, config.input_dim(k))
        shapes[f"U_{k}"] = (4 * H, H)
        shapes[f"b_{k}"] = (4 * H,)
    shapes["dense_W"] = (V, H)
    shapes["dense_b"] = (V,)
    return shapes


def num_parameters(config: ModelConfig) -> int:
    return sum(math.prod(s) for s in param_shapes(config).values())


def init_params(config: ModelConfig, rng: PortableRNG) -> dict[str, np.ndarray]:
    """Uniform(-s, s) weights with s = 1/sqrt(fan_in); forget-gate bias +1, other biases 0.

    fan_in is V for the embedding table (one-hot lookup), the layer input size
    for W, H for U and for the dense layer.
    """
    H = config.hidden_size
    fan_in = {"embedding": config.vocab_size, "dense_W": H}
    for k in range(config.num_layers):
        fan_in[f"W_{k}"] = config.input_dim(k)
        fan_in[f"U_{k}"] = H
    params = {}
    for name, shape in param_shapes(config).items():
        if name in fan_in:
            s = 1.0 / math.sqrt(fan_in[name])
            params[name] = (rng.uniform(shape) * 2.0 - 1.0) * s
        else:
            params[name] = np.zeros(shape)
            if name.startswith("b_"):
                params[name][H:2 * H] = 1.0
        params[name] = params[name].astype(config.np_dtype)
    return params


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def log_softmax(logits, axis=-1):
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax(logits, axis=-1):
    shifted = np.exp(logits - logits.max(axis=axis, keepdims=True))
    return shifted / shifted.sum(axis=axis, keepdims=True)


@dataclass
class CellCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray


def _check_cell_shapes(x, h, c, W, U, b):
    four_h, in_dim = W.shape
    H = four_h // 4
    if four_h != 4 * H or U.shape != (four_h, H) or b.shape != (four_h,):
        raise ValueError(f"inconsistent LSTM parameter shapes W{W.shape} U{U.shape} b{b.shape}")
    if x.shape[-1] != in_dim:
        raise ValueError(f"input has size {x.shape[-1]}, layer expects {in_dim}")
    if h.shape[-1] != H or c.shape[-1] != H:
        raise ValueError(f"state has size {h.shape[-1]}/{c.shape[-1]}, layer expects {H}")


def _gates(z, c_prev):
    H = z.shape[-1] // 4
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:])
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    return i, f, g, o, c, tanh_c


def lstm_cell_forward(x, h, c, W, U, b):
    """One LSTM step. Works on a single vector or a batch of row vectors."""
    _check_cell_shapes(x, h, c, W, U, b)
    i, f, g, o, c_new, tanh_c = _gates(x @ W.T + h @ U.T + b, c)
    h_new = o * tanh_c
    return h_new, c_new, CellCache(x, h, c, i, f, g, o, tanh_c)


def _cell_dz(dh, dc, i, f, g, o, tanh_c, c_prev):
    dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dz = np.concatenate([
        dc * g * i * (1.0 - i),
        dc * c_prev * f * (1.0 - f),
        dc * i * (1.0 - g * g),
        dh * tanh_c * o * (1.0 - o),
    ], axis=-1)
    return dz, dc * f


def lstm_cell_backward(dh, dc, cache: CellCache, W, U):
    """Gradients of one step given upstream ``dh`` and ``dc``.

    Returns ``dx, dh_prev, dc_prev, dW, dU, db``; batch rows are summed into
    the parameter gradients.
    """
    dz, dc_prev = _cell_dz(dh, dc, cache.i, cache.f, cache.g, cache.o, cache.tanh_c, cache.c_prev)
    dz2 = dz.reshape(-1, dz.shape[-1])
    dW = dz2.T @ cache.x.reshape(-1, W.shape[1])
    dU = dz2.T @ cache.h_prev.reshape(-1, U.shape[1])
    return dz @ W, dz @ U, dc_prev, dW, dU, dz2.sum(axis=0)


@dataclass
class RecurrentState:
    h: list[np.ndarray]
    c: list[np.ndarray]

    @classmethod
    def zeros(cls, config: ModelConfig, batch: int = 1) -> "RecurrentState":
        shape = (batch, config.hidden_size)
        dt = config.np_dtype
        return cls([np.zeros(shape, dt) for _ in range(config.num_layers)],
                   [np.zeros(shape, dt) for _ in range(config.num_layers)])

    def copy(self) -> "RecurrentState":
        return RecurrentState([a.copy() for a in self.h], [a.copy() for a in self.c])


@dataclass
class LayerCache:
    x: np.ndarray       # (B, L, in)
    h: np.ndarray       # (B, L+1, H); h[:, 0] is the initial state
    c: np.ndarray       # (B, L+1, H)
    acts: dict = field(default_factory=dict)   # gate name -> (B, L, H), plus "tanh_c"


@dataclass
class ForwardCache:
    ids: np.ndarray
    params: dict
    config: ModelConfig
    layers: list[LayerCache]
    logits: np.ndarray


def _check_ids(ids, vocab_size):
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise ValueError(f"input ids must have shape (batch, time), got {ids.shape}")
    bad = np.argwhere((ids < 0) | (ids >= vocab_size))
    if len(bad):
        b, t = bad[0]
        raise ValueError(f"id {ids[b, t]} at (batch={b}, t={t}) outside [0, {vocab_size})")
    return ids.astype(np.int64)


def forward(ids, params: dict, config: ModelConfig, state: RecurrentState | None = None):
    """Logits of shape (B, L, V) for integer ids of shape (B, L).

    ``state`` defaults to zeros; the final state is returned alongside the cache.
    """
    ids = _check_ids(ids, config.vocab_size)
    B, L = ids.shape
    H = config.hidden_size
    x = params["embedding"][ids]
    dt = x.dtype
    if state is None:
        state = RecurrentState.zeros(config, B)
    layers = []
    for k in range(config.num_layers):
        W, U, b = params[f"W_{k}"], params[f"U_{k}"], params[f"b_{k}"]
        _check_cell_shapes(x, state.h[k], state.c[k], W, U, b)
        zx = x @ W.T + b
        hs = np.empty((B, L + 1, H), dt)
        cs = np.empty((B, L + 1, H), dt)
        hs[:, 0], cs[:, 0] = state.h[k], state.c[k]
        acts = {name: np.empty((B, L, H), dt) for name in GATES + ("tanh_c",)}
        for t in range(L):
            i, f, g, o, c, tanh_c = _gates(zx[:, t] + hs[:, t] @ U.T, cs[:, t])
            cs[:, t + 1] = c
            hs[:, t + 1] = o * tanh_c
            for name, a in zip(GATES + ("tanh_c",), (i, f, g, o, tanh_c)):
                acts[name][:, t] = a
        layers.append(LayerCache(x, hs, cs, acts))
        x = hs[:, 1:]
    logits = x @ params["dense_W"].T + params["dense_b"]
    final = RecurrentState([lc.h[:, -1].copy() for lc in layers], [lc.c[:, -1].copy() for lc in layers])
    return logits, ForwardCache(ids, params, config, layers, logits), final


def step(ids, params: dict, config: ModelConfig, state: RecurrentState):
    """Advance every batch row by one character; returns logits (B, V) and the new state."""
    ids = _check_ids(np.asarray(ids).reshape(-1, 1), config.vocab_size)[:, 0]
    x = params["embedding"][ids]
    new = RecurrentState([], [])
    for k in range(config.num_layers):
        h, c, _ = lstm_cell_forward(x, state.h[k], state.c[k],
                                    params[f"W_{k}"], params[f"U_{k}"], params[f"b_{k}"])
        new.h.append(h)
        new.c.append(c)
        x = h
    return x @ params["dense_W"].T + params["dense_b"], new


def cross_entropy(logits, targets) -> float:
    """Mean over all positions of -log softmax(logits)[target]."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.shape[:-1] != targets.shape:
        raise ValueError(f"logits {logits.shape} and targets {targets.shape} disagree")
    logp = log_softmax(logits)
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)
    return float(-picked.mean())


def backward(cache: ForwardCache | None, targets) -> dict[str, np.ndarray]:
    """Gradients of :func:`cross_entropy` with respect to every parameter."""
    if cache is None:
        raise RuntimeError("backward needs the cache returned by forward")
    params, config = cache.params, cache.config
    targets = np.asarray(targets, dtype=np.int64)
    B, L = cache.ids.shape
    H = config.hidden_size
    grads = {}

    dlogits = softmax(cache.logits)
    np.put_along_axis(dlogits, targets[..., None],
                      np.take_along_axis(dlogits, targets[..., None], axis=-1) - 1.0, axis=-1)
    dlogits /= B * L
    top = cache.layers[-1].h[:, 1:]
    grads["dense_W"] = dlogits.reshape(-1, config.vocab_size).T @ top.reshape(-1, H)
    grads["dense_b"] = dlogits.reshape(-1, config.vocab_size).sum(axis=0)
    dx = dlogits @ params["dense_W"]          # gradient w.r.t. top-layer h[1:]

    for k in reversed(range(config.num_layers)):
        lc = cache.layers[k]
        W, U = params[f"W_{k}"], params[f"U_{k}"]
        a = lc.acts
        dz = np.empty((B, L, 4 * H), dx.dtype)
        dh_next = np.zeros((B, H), dx.dtype)
        dc_next = np.zeros((B, H), dx.dtype)
        for t in reversed(range(L)):
            dz_t, dc_next = _cell_dz(dx[:, t] + dh_next, dc_next, a["i"][:, t], a["f"][:, t],
                                     a["g"][:, t], a["o"][:, t], a["tanh_c"][:, t], lc.c[:, t])
            dz[:, t] = dz_t
            dh_next = dz_t @ U
        dz2 = dz.reshape(-1, 4 * H)
        grads[f"W_{k}"] = dz2.T @ lc.x.reshape(-1, W.shape[1])
        grads[f"U_{k}"] = dz2.T @ lc.h[:, :-1].reshape(-1, H)
        grads[f"b_{k}"] = dz2.sum(axis=0)
        dx = dz @ W

    dE = np.zeros_like(params["embedding"])
    np.add.at(dE, cache.ids.ravel(), dx.reshape(-1, config.embed_dim))
    grads["embedding"] = dE
    return {name: grads[name] for name in param_shapes(config)}


def loss_and_grads(ids, targets, params, config):
    logits, cache, _ = forward(ids, params, config)
    return cross_entropy(logits, targets), backward(cache, targets)


def assert_finite(arrays: dict, what: str = "tensor") -> None:
    for name, a in arrays.items():
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"non-finite values in {what} {name!r}")

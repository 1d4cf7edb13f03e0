"""Vertex-convolution network with hand-written gradients.

Grids come in as ``(M, c)`` or batched ``(B, M, c)`` float64 arrays. A
convolution layer slides one shared ``(m, c_out, c_in)`` filter down the
ordered rows with stride 1 and no padding, so each layer removes ``m - 1``
rows. Several branches with different filter sizes read the same grid;
their flattened outputs are concatenated and fed to dense -> ReLU ->
dropout -> affine -> softmax.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, InvalidParameter, NumericalError


@dataclass
class ConvLayerParams:
    W: np.ndarray  # (m, c_out, c_in)
    b: np.ndarray  # (c_out,)

    @property
    def filter_size(self) -> int:
        return self.W.shape[0]

    @property
    def in_channels(self) -> int:
        return self.W.shape[2]

    @property
    def out_channels(self) -> int:
        return self.W.shape[1]


@dataclass
class NetworkParams:
    branches: list  # list of lists of ConvLayerParams
    dense_W: np.ndarray  # (features, units)
    dense_b: np.ndarray
    head_W: np.ndarray  # (units, classes)
    head_b: np.ndarray

    def __post_init__(self):
        sizes = [layers[0].filter_size for layers in self.branches]
        if len(set(sizes)) != len(sizes):
            raise InvalidParameter(f"branch filter sizes must be distinct, got {sizes}")

    def named_tensors(self) -> list:
        """``(name, array)`` pairs in a fixed order; arrays are live views."""
        out = []
        for bi, layers in enumerate(self.branches):
            for li, layer in enumerate(layers):
                out.append((f"branch{bi}.layer{li}.W", layer.W))
                out.append((f"branch{bi}.layer{li}.b", layer.b))
        out += [("dense.W", self.dense_W), ("dense.b", self.dense_b),
                ("head.W", self.head_W), ("head.b", self.head_b)]
        return out

    def tensors(self) -> list:
        return [t for _, t in self.named_tensors()]

    def map(self, fn) -> "NetworkParams":
        """New params with ``fn`` applied to every tensor, structure kept."""
        return NetworkParams(
            [[ConvLayerParams(fn(l.W), fn(l.b)) for l in layers] for layers in self.branches],
            fn(self.dense_W), fn(self.dense_b), fn(self.head_W), fn(self.head_b),
        )

    def copy(self) -> "NetworkParams":
        return self.map(np.array)

    def zeros_like(self) -> "NetworkParams":
        return self.map(np.zeros_like)

    @classmethod
    def from_tensors(cls, template: "NetworkParams", tensors) -> "NetworkParams":
        it = iter(tensors)
        return template.map(lambda _: next(it))

    @property
    def num_parameters(self) -> int:
        return sum(t.size for t in self.tensors())


# Gradients use the same container as the parameters they belong to.
GradientTape = NetworkParams


def relu(x):
    return np.maximum(x, 0.0)


def _patches(X, m):
    """``(..., rows, m * c_in)`` windows; entry ``[e, j * c_in + s]`` is ``X[e + j, s]``."""
    win = np.lib.stride_tricks.sliding_window_view(X, m, axis=-2)  # (..., rows, c_in, m)
    win = np.swapaxes(win, -1, -2)
    return win.reshape(win.shape[:-2] + (m * X.shape[-1],))


def _filter_matrix(W):
    m, c_out, c_in = W.shape
    return W.transpose(0, 2, 1).reshape(m * c_in, c_out)


def _conv_preact(X, W, b, return_patches=False):
    P = _patches(X, W.shape[0])
    lead = P.shape[:-1]
    P = P.reshape(-1, P.shape[-1])
    out = P @ _filter_matrix(W)
    out += b
    out = out.reshape(lead + (W.shape[1],))
    return (out, P) if return_patches else out


def _check_conv(X, params):
    if X.shape[-1] != params.in_channels:
        raise InvalidParameter(
            f"grid has {X.shape[-1]} channels, filter expects {params.in_channels}"
        )
    if X.shape[-2] < params.filter_size:
        raise InvalidParameter(
            f"{X.shape[-2]} rows cannot hold a filter of size {params.filter_size}"
        )


def vertex_conv_forward(X, params: ConvLayerParams) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    _check_conv(X, params)
    return relu(_conv_preact(X, params.W, params.b))


def vertex_conv_backward(X, params: ConvLayerParams, upstream):
    """Gradients of ``sum(upstream * vertex_conv_forward(X, params))``.

    Returns ``(grad_X, ConvLayerParams(grad_W, grad_b))``. The ReLU slope at
    exactly zero is taken as 0.
    """
    X = np.asarray(X, dtype=np.float64)
    _check_conv(X, params)
    pre = _conv_preact(X, params.W, params.b)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != pre.shape:
        raise InvalidParameter(f"upstream gradient {upstream.shape} != output {pre.shape}")
    return _conv_backward_from_pre(X, params, pre, upstream)


def _conv_backward_from_pre(X, params, pre, upstream, patches=None, input_grad=True):
    g = upstream * (pre > 0)
    m, c_out, c_in = params.W.shape
    rows = pre.shape[-2]
    g2 = g.reshape(-1, c_out)
    P = _patches(X, m).reshape(-1, m * c_in) if patches is None else patches
    grad_W = (P.T @ g2).reshape(m, c_in, c_out).transpose(0, 2, 1)
    grad_b = g2.sum(axis=0)
    if not input_grad:
        return None, ConvLayerParams(np.ascontiguousarray(grad_W), grad_b)
    dP = (g2 @ _filter_matrix(params.W).T).reshape(g.shape[:-1] + (m, c_in))
    grad_X = np.zeros_like(X)
    for j in range(m):
        grad_X[..., j:j + rows, :] += dP[..., j, :]
    return grad_X, ConvLayerParams(np.ascontiguousarray(grad_W), grad_b)


def stack_branch(X, layers) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    rows = X.shape[-2]
    for t, layer in enumerate(layers):
        rows -= layer.filter_size - 1
        if rows < 1:
            raise InvalidParameter(f"layer {t} leaves no rows (input had {X.shape[-2]} rows)")
    for layer in layers:
        X = vertex_conv_forward(X, layer)
    return X


def branch_output_rows(M: int, filter_sizes) -> int:
    return M - sum(m - 1 for m in filter_sizes)


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_network(M: int, c: int, num_classes: int, rng, channels: int = 32,
                 filter_sizes=(3, 5, 7, 9), layers_per_branch: int = 3,
                 dense_units: int = 64) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    branches = []
    features = 0
    for m in filter_sizes:
        rows = branch_output_rows(M, [m] * layers_per_branch)
        if rows < 1:
            raise InvalidParameter(
                f"{layers_per_branch} layers of size {m} do not fit in {M} rows"
            )
        layers = []
        c_in = c
        for _ in range(layers_per_branch):
            W = _glorot(rng, (m, channels, c_in), m * c_in, m * channels)
            layers.append(ConvLayerParams(W, np.zeros(channels)))
            c_in = channels
        branches.append(layers)
        features += rows * channels
    dense_W = _glorot(rng, (features, dense_units), features, dense_units)
    head_W = _glorot(rng, (dense_units, num_classes), dense_units, num_classes)
    return NetworkParams(branches, dense_W, np.zeros(dense_units), head_W, np.zeros(num_classes))


def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(z):
    return np.exp(log_softmax(z))


@dataclass
class _Cache:
    X: np.ndarray
    branch_inputs: list = field(default_factory=list)  # per branch, per layer input
    branch_preacts: list = field(default_factory=list)
    branch_patches: list = field(default_factory=list)
    flat: np.ndarray = None
    dense_pre: np.ndarray = None
    mask: np.ndarray = None
    hidden: np.ndarray = None
    logits: np.ndarray = None


def _forward(X, params, dropout_rate, training, rng):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    expected_c = params.branches[0][0].in_channels
    if X.ndim != 3 or X.shape[-1] != expected_c:
        raise InvalidParameter(f"expected grids of shape (M, {expected_c}), got {X.shape}")
    cache = _Cache(X)
    flats = []
    for layers in params.branches:
        inputs, pres, patches = [], [], []
        h = X
        for layer in layers:
            _check_conv(h, layer)
            inputs.append(h)
            pre, P = _conv_preact(h, layer.W, layer.b, return_patches=True)
            pres.append(pre)
            patches.append(P)
            h = relu(pre)
        cache.branch_inputs.append(inputs)
        cache.branch_preacts.append(pres)
        cache.branch_patches.append(patches)
        flats.append(h.reshape(h.shape[0], -1))
    flat = np.concatenate(flats, axis=1)
    if flat.shape[1] != params.dense_W.shape[0]:
        raise InvalidParameter(
            f"branches produce {flat.shape[1]} features, dense layer expects {params.dense_W.shape[0]}"
        )
    cache.flat = flat
    cache.dense_pre = flat @ params.dense_W + params.dense_b
    hidden = relu(cache.dense_pre)
    if training and dropout_rate > 0:
        if rng is None:
            raise InvalidParameter("training with dropout needs an rng")
        keep = 1.0 - dropout_rate
        cache.mask = (rng.random(hidden.shape) < keep) / keep
        hidden = hidden * cache.mask
    cache.hidden = hidden
    cache.logits = hidden @ params.head_W + params.head_b
    return cache


def forward(X, params: NetworkParams, dropout_rate: float = 0.0, training: bool = False,
            rng=None) -> np.ndarray:
    """Class probabilities for one grid ``(M, c)`` or a batch ``(B, M, c)``."""
    cache = _forward(X, params, dropout_rate, training, rng)
    probs = softmax(cache.logits)
    return probs[0] if np.ndim(X) == 2 else probs


def feature_length(params: NetworkParams) -> int:
    return params.dense_W.shape[0]


def loss_and_gradients(X, y, params: NetworkParams, dropout_rate: float = 0.0, rng=None):
    """Mean cross-entropy over a batch and its gradient for every parameter.

    Dropout is active whenever ``dropout_rate > 0``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size == 0 or X.size == 0:
        raise EmptyInput("empty batch")
    if X.ndim == 2:
        X = X[None]
    if X.shape[0] != y.size:
        raise InvalidParameter(f"{X.shape[0]} grids but {y.size} labels")
    cache = _forward(X, params, dropout_rate, dropout_rate > 0, rng)
    B = y.size
    logp = log_softmax(cache.logits)
    loss = float(-logp[np.arange(B), y].mean())

    d_logits = np.exp(logp)
    d_logits[np.arange(B), y] -= 1.0
    d_logits /= B
    grads = params.zeros_like()
    grads.head_W = cache.hidden.T @ d_logits
    grads.head_b = d_logits.sum(axis=0)
    d_hidden = d_logits @ params.head_W.T
    if cache.mask is not None:
        d_hidden = d_hidden * cache.mask
    d_dense = d_hidden * (cache.dense_pre > 0)
    grads.dense_W = cache.flat.T @ d_dense
    grads.dense_b = d_dense.sum(axis=0)
    d_flat = d_dense @ params.dense_W.T

    offset = 0
    for bi, layers in enumerate(params.branches):
        last = cache.branch_preacts[bi][-1]
        width = last.shape[1] * last.shape[2]
        d_h = d_flat[:, offset:offset + width].reshape(last.shape)
        offset += width
        for li in range(len(layers) - 1, -1, -1):
            d_h, g = _conv_backward_from_pre(
                cache.branch_inputs[bi][li], layers[li], cache.branch_preacts[bi][li], d_h,
                patches=cache.branch_patches[bi][li], input_grad=li > 0,
            )
            grads.branches[bi][li] = g
    return loss, grads


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros(cls, params: NetworkParams) -> "AdamState":
        return cls([np.zeros_like(p) for p in params.tensors()],
                   [np.zeros_like(p) for p in params.tensors()], 0)


def adam_step(params: NetworkParams, grads: NetworkParams, state: AdamState,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    g_list = grads.tensors()
    for name, g in grads.named_tensors():
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in {name}")
    t = state.t + 1
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params.tensors(), g_list, state.m, state.v):
        if m.shape != p.shape or g.shape != p.shape:
            raise InvalidParameter(f"optimizer state {m.shape} does not match parameter {p.shape}")
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return NetworkParams.from_tensors(params, new_p), AdamState(new_m, new_v, t)


def predict(X, params: NetworkParams, batch_size: int = 256) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = []
    for s in range(0, X.shape[0], batch_size):
        out.append(np.argmax(forward(X[s:s + batch_size], params), axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)

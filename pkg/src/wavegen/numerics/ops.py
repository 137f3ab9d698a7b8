"""Differentiable primitives.

Arrays are row-major float64.  The only implicit broadcasting is a
last-axis vector (bias, layer-norm gain) against a batch of rows, and a
2-D weight matrix against a batch of row blocks in ``matmul``.
"""
from __future__ import annotations

import numpy as np

from ..exceptions import ConfigurationError, ShapeError
from .tape import Tensor, as_tensor, make_result

MASK_VALUE = -1e30


def _swap(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def _sum_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return g.reshape(-1, *shape).sum(axis=0)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a[..., m, k] @ b[k, n]`` or batched ``a[..., m, k] @ b[..., k, n]``."""
    a, b = as_tensor(a), as_tensor(b)
    A, B = a.data, b.data
    if A.ndim < 2 or B.ndim < 2 or A.shape[-1] != B.shape[-2]:
        raise ShapeError(f"matmul: cannot multiply shapes {A.shape} and {B.shape}")
    if B.ndim > 2 and B.shape[:-2] != A.shape[:-2]:
        raise ShapeError(f"matmul: batch dims differ between {A.shape} and {B.shape}")
    out = A @ B

    def backward(g):
        ga = g @ _swap(B)
        if B.ndim == 2 and A.ndim > 2:
            k, n = B.shape
            gb = A.reshape(-1, k).T @ g.reshape(-1, n)
        else:
            gb = _swap(A) @ g
        return ga, gb

    return make_result(out, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may also be a vector over the last axis of ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    if b.shape != a.shape and b.shape != a.shape[-1:]:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} do not agree")
    out = a.data + b.data
    bshape = b.shape
    return make_result(out, (a, b), lambda g: (g, _sum_to(g, bshape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if b.shape != a.shape:
        raise ShapeError(f"sub: shapes {a.shape} and {b.shape} do not agree")
    return make_result(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if b.shape != a.shape:
        raise ShapeError(f"mul: shapes {a.shape} and {b.shape} do not agree")
    A, B = a.data, b.data
    return make_result(A * B, (a, b), lambda g: (g * B, g * A))


def scale(a: Tensor, c: float) -> Tensor:
    a = as_tensor(a)
    return make_result(a.data * c, (a,), lambda g: (g * c,))


def total(a: Tensor) -> Tensor:
    """Sum of all elements, as a scalar."""
    a = as_tensor(a)
    shape = a.shape
    return make_result(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    pos = x.data > 0
    return make_result(np.where(pos, x.data, 0.0), (x,), lambda g: (g * pos,))


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return make_result(y, (x,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    z = x.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(z))
    y = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return make_result(y, (x,), lambda g: (g * y * (1.0 - y),))


def softmax(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis.

    ``mask`` is an additive constant over the trailing two axes (``MASK_VALUE``
    at disallowed entries); masked entries come out as exact zeros.
    """
    x = as_tensor(x)
    z = x.data
    if np.isnan(z).any():
        raise ValueError("softmax: NaN in input")
    if mask is not None:
        if mask.shape != z.shape[-mask.ndim:]:
            raise ShapeError(f"softmax: mask {mask.shape} does not fit input {z.shape}")
        z = z + mask
    else:
        z = z.copy()
    z -= z.max(axis=-1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=-1, keepdims=True)
    y = z

    def backward(g):
        gy = g * y
        gy -= y * gy.sum(axis=-1, keepdims=True)
        return (gy,)

    return make_result(y, (x,), backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    if eps <= 0:
        raise ConfigurationError(f"layer_norm: eps must be positive, got {eps}")
    E = x.shape[-1]
    if E < 2:
        raise ShapeError("layer_norm: feature width must be at least 2")
    if gain.shape != (E,) or bias.shape != (E,):
        raise ShapeError(f"layer_norm: gain/bias {gain.shape}/{bias.shape} vs width {E}")
    X = x.data
    mu = X.mean(axis=-1, keepdims=True)
    xc = X - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data
    G = gain.data

    def backward(g):
        gx_hat = g * G
        m1 = gx_hat.mean(axis=-1, keepdims=True)
        m2 = (gx_hat * xhat).mean(axis=-1, keepdims=True)
        gx = inv * (gx_hat - m1 - xhat * m2)
        return gx, _sum_to(g * xhat, (E,)), _sum_to(g, (E,))

    return make_result(out, (x, gain, bias), backward)


def _check_levels(levels: np.ndarray, vocab: int) -> np.ndarray:
    levels = np.asarray(levels)
    if not np.issubdtype(levels.dtype, np.integer):
        raise ShapeError(f"expected integer levels, got dtype {levels.dtype}")
    if levels.size and (levels.min() < 0 or levels.max() >= vocab):
        raise ShapeError(f"levels outside 0..{vocab - 1}")
    return levels.astype(np.intp, copy=False)


def embedding(levels: np.ndarray, table: Tensor) -> Tensor:
    """Row lookup ``table[levels]`` (equivalent to one-hot @ table)."""
    table = as_tensor(table)
    V, E = table.shape
    idx = _check_levels(levels, V)
    out = table.data[idx]

    def backward(g):
        gt = np.zeros((V, E))
        np.add.at(gt, idx.ravel(), g.reshape(-1, E))
        return (gt,)

    return make_result(out, (table,), backward)


def causal_embedding(levels: np.ndarray, kernel: Tensor) -> Tensor:
    """Width-2 causal convolution over one-hot levels.

    ``out[t] = kernel[1][levels[t]] + kernel[0][levels[t-1]]``, with nothing
    contributed before the first sample.
    """
    kernel = as_tensor(kernel)
    if kernel.ndim != 3 or kernel.shape[0] != 2:
        raise ShapeError(f"causal_embedding: kernel must be [2, V, F], got {kernel.shape}")
    _, V, F = kernel.shape
    idx = _check_levels(levels, V)
    K = kernel.data
    out = K[1][idx]
    out[..., 1:, :] += K[0][idx[..., :-1]]

    def backward(g):
        gk = np.zeros_like(K)
        np.add.at(gk[1], idx.ravel(), g.reshape(-1, F))
        np.add.at(gk[0], idx[..., :-1].ravel(), g[..., 1:, :].reshape(-1, F))
        return (gk,)

    return make_result(out, (kernel,), backward)


def conv1d(x: Tensor, kernel: Tensor, *, stride: int = 1, dilation: int = 1,
           pad: tuple[int, int] = (0, 0)) -> Tensor:
    """1-D convolution over the second-to-last (time) axis.

    ``x`` is ``[..., T, C_in]``, ``kernel`` is ``[W, C_in, C_out]``, and
    ``y[o] = sum_j x_pad[o*stride + j*dilation] @ kernel[j]`` with zero padding.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if stride < 1 or dilation < 1:
        raise ConfigurationError(f"conv1d: stride={stride}, dilation={dilation} must be >= 1")
    if kernel.ndim != 3 or x.ndim < 2 or kernel.shape[1] != x.shape[-1]:
        raise ShapeError(f"conv1d: input {x.shape} incompatible with kernel {kernel.shape}")
    W, C_in, C_out = kernel.shape
    T = x.shape[-2]
    left, right = pad
    span = (W - 1) * dilation + 1
    T_pad = T + left + right
    n_out = (T_pad - span) // stride + 1 if T_pad >= span else 0
    lead = x.shape[:-2]
    X, K = x.data, kernel.data
    if left or right:
        Xp = np.zeros(lead + (T_pad, C_in))
        Xp[..., left:left + T, :] = X
    else:
        Xp = X
    out = np.zeros(lead + (n_out, C_out))
    taps = []
    for j in range(W):
        start = j * dilation
        sl = slice(start, start + stride * (n_out - 1) + 1, stride) if n_out else slice(0, 0)
        taps.append(sl)
        out += Xp[..., sl, :] @ K[j]

    def backward(g):
        gxp = np.zeros_like(Xp)
        gk = np.zeros_like(K)
        g2 = g.reshape(-1, C_out)
        for j, sl in enumerate(taps):
            gxp[..., sl, :] += g @ K[j].T
            gk[j] = Xp[..., sl, :].reshape(-1, C_in).T @ g2
        return gxp[..., left:left + T, :], gk

    return make_result(out, (x, kernel), backward)


def causal_dilated_conv1d(x: Tensor, kernel: Tensor, dilation: int) -> Tensor:
    """Width-2 causal conv: ``y[t] = x[t - dilation] @ k[0] + x[t] @ k[1]``.

    Output length equals input length; the left side is zero padded, so
    ``y[t]`` never sees samples after ``t``.
    """
    if dilation < 1:
        raise ConfigurationError(f"dilation must be >= 1, got {dilation}")
    kernel = as_tensor(kernel)
    if kernel.ndim != 3 or kernel.shape[0] != 2:
        raise ShapeError(f"causal conv kernel must be [2, C_in, C_out], got {kernel.shape}")
    x = as_tensor(x)
    X, K = x.data, kernel.data
    T = X.shape[-2]
    out = X @ K[1]
    if dilation < T:
        out[..., dilation:, :] += X[..., :-dilation, :] @ K[0]

    def backward(g):
        gx = g @ K[1].T
        C_in, C_out = K.shape[1:]
        gk = np.empty_like(K)
        gk[1] = X.reshape(-1, C_in).T @ g.reshape(-1, C_out)
        if dilation < T:
            gx[..., :-dilation, :] += g[..., dilation:, :] @ K[0].T
            gk[0] = X[..., :-dilation, :].reshape(-1, C_in).T @ g[..., dilation:, :].reshape(-1, C_out)
        else:
            gk[0] = 0.0
        return gx, gk

    return make_result(out, (x, kernel), backward)


def mean_time(x: Tensor) -> Tensor:
    """Average over the time axis: ``[..., T, C] -> [..., C]``."""
    x = as_tensor(x)
    T = x.shape[-2]
    out = x.data.mean(axis=-2)
    shape = x.shape

    def backward(g):
        return (np.broadcast_to(g[..., None, :] / T, shape).copy(),)

    return make_result(out, (x,), backward)


def repeat_time(x: Tensor, T: int) -> Tensor:
    """Broadcast ``[..., C]`` to ``[..., T, C]``."""
    x = as_tensor(x)
    out = np.repeat(x.data[..., None, :], T, axis=-2)
    return make_result(out, (x,), lambda g: (g.sum(axis=-2),))


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the last axis."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[:-1] != b.shape[:-1]:
        raise ShapeError(f"concat: leading dims differ, {a.shape} vs {b.shape}")
    n = a.shape[-1]
    out = np.concatenate([a.data, b.data], axis=-1)
    return make_result(out, (a, b), lambda g: (g[..., :n], g[..., n:]))


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    old = x.shape
    return make_result(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    inv = tuple(np.argsort(axes))
    return make_result(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inv),))


def swap_last(x: Tensor) -> Tensor:
    x = as_tensor(x)
    return make_result(_swap(x.data), (x,), lambda g: (_swap(g),))


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; callers skip this op entirely in eval mode."""
    if not 0.0 <= rate < 1.0:
        raise ConfigurationError(f"dropout rate must be in [0, 1), got {rate}")
    x = as_tensor(x)
    if rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return make_result(x.data * keep, (x,), lambda g: (g * keep,))


def log_softmax(z: np.ndarray) -> np.ndarray:
    """Plain (non-recorded) stable log-softmax over the last axis."""
    m = z.max(axis=-1, keepdims=True)
    s = z - m
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean over positions of ``-log softmax(logits)[target]``."""
    logits = as_tensor(logits)
    Z = logits.data
    V = Z.shape[-1]
    tgt = _check_levels(targets, V)
    if tgt.shape != Z.shape[:-1]:
        raise ShapeError(f"cross_entropy: targets {tgt.shape} vs logits {Z.shape}")
    flat = Z.reshape(-1, V)
    t = tgt.ravel()
    lsm = log_softmax(flat)
    n = flat.shape[0]
    loss = -lsm[np.arange(n), t].sum() / n

    def backward(g):
        p = np.exp(lsm)
        p[np.arange(n), t] -= 1.0
        return ((g / n) * p.reshape(Z.shape),)

    return make_result(np.asarray(loss), (logits,), backward)


def causal_self_attention(q: Tensor, k: Tensor, v: Tensor, block: int = 256,
                          return_weights: bool = False):
    """``softmax(q k^T + causal_mask) v`` over ``[..., T, d]`` inputs.

    Queries are processed in blocks; a block starting at row ``r0`` only
    scores keys ``< r1`` (its last row + 1), with the additive mask applied
    inside the diagonal sub-block.  Entries above the diagonal are exact
    zeros either way, so this equals the dense masked softmax while doing
    roughly half the work.  ``q`` is expected to be pre-scaled.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if not (q.shape == k.shape and q.shape[:-1] == v.shape[:-1]):
        raise ShapeError(f"attention: q {q.shape}, k {k.shape}, v {v.shape} disagree")
    Q, K, V = q.data, k.data, v.data
    if np.isnan(Q).any() or np.isnan(K).any():
        raise ValueError("attention: NaN in queries or keys")
    T = Q.shape[-2]
    out = np.empty(Q.shape[:-1] + (V.shape[-1],))
    probs = []
    for r0 in range(0, T, block):
        r1 = min(r0 + block, T)
        s = Q[..., r0:r1, :] @ _swap(K[..., :r1, :])
        s[..., :, r0:r1] += np.triu(np.full((r1 - r0, r1 - r0), MASK_VALUE), k=1)
        s -= s.max(axis=-1, keepdims=True)
        np.exp(s, out=s)
        s /= s.sum(axis=-1, keepdims=True)
        out[..., r0:r1, :] = s @ V[..., :r1, :]
        probs.append((r0, r1, s))

    def backward(g):
        gq = np.empty_like(Q)
        gk = np.zeros_like(K)
        gv = np.zeros_like(V)
        for r0, r1, p in probs:
            gb = g[..., r0:r1, :]
            gv[..., :r1, :] += _swap(p) @ gb
            gs = gb @ _swap(V[..., :r1, :])
            gs -= (gs * p).sum(axis=-1, keepdims=True)
            gs *= p
            gq[..., r0:r1, :] = gs @ K[..., :r1, :]
            gk[..., :r1, :] += _swap(gs) @ Q[..., r0:r1, :]
        return gq, gk, gv

    result = make_result(out, (q, k, v), backward)
    if not return_weights:
        return result
    weights = np.zeros(Q.shape[:-1] + (T,))
    for r0, r1, p in probs:
        weights[..., r0:r1, :r1] = p
    return result, weights

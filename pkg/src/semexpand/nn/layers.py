"""Forward/backward primitives for the from-scratch classifiers.

Every forward returns (output, cache); the matching backward consumes the
upstream gradient plus that cache. Arrays are float64 throughout so finite
difference checks resolve below 1e-4 relative error.
"""

from __future__ import annotations

import numpy as np


def glorot_uniform(rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def dense_forward(x, w, b):
    return x @ w + b, x


def dense_backward(dout, x, w):
    dx = dout @ w.T
    dw = x.T @ dout
    db = dout.sum(axis=0)
    return dx, dw, db


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def conv1d_forward(x, w, b, kernel_width: int):
    """Valid 1-D convolution along the sequence axis.

    x: (B, L, C); w: (kernel_width * C, F); b: (F,). Output (B, L-k+1, F).
    Each window is flattened (time-major, then channel) to match w's layout.
    """
    batch, length, channels = x.shape
    out_len = length - kernel_width + 1
    if out_len < 1:
        raise ValueError(f"sequence length {length} shorter than kernel {kernel_width}")
    windows = np.lib.stride_tricks.sliding_window_view(x, kernel_width, axis=1)
    # (B, out_len, C, k) -> (B, out_len, k*C)
    cols = windows.transpose(0, 1, 3, 2).reshape(batch, out_len, kernel_width * channels)
    out = cols @ w + b
    return out, (cols, x.shape)


def conv1d_backward(dout, cache, w, kernel_width: int):
    cols, x_shape = cache
    batch, length, channels = x_shape
    out_len = dout.shape[1]
    dw = cols.reshape(-1, cols.shape[-1]).T @ dout.reshape(-1, dout.shape[-1])
    db = dout.sum(axis=(0, 1))
    dcols = (dout @ w.T).reshape(batch, out_len, kernel_width, channels)
    dx = np.zeros(x_shape)
    for j in range(kernel_width):
        dx[:, j : j + out_len, :] += dcols[:, :, j, :]
    return dx, dw, db


def maxpool1d_forward(x, width: int):
    """Non-overlapping max pooling along the sequence axis; floor on odd tails."""
    batch, length, channels = x.shape
    pooled_len = length // width
    if pooled_len < 1:
        raise ValueError(f"sequence length {length} shorter than pool width {width}")
    blocks = x[:, : pooled_len * width, :].reshape(batch, pooled_len, width, channels)
    idx = blocks.argmax(axis=2)
    out = np.take_along_axis(blocks, idx[:, :, None, :], axis=2).squeeze(2)
    return out, (idx, x.shape, width)


def maxpool1d_backward(dout, cache):
    idx, x_shape, width = cache
    batch, length, channels = x_shape
    pooled_len = length // width
    dblocks = np.zeros((batch, pooled_len, width, channels))
    np.put_along_axis(dblocks, idx[:, :, None, :], dout[:, :, None, :], axis=2)
    dx = np.zeros(x_shape)
    dx[:, : pooled_len * width, :] = dblocks.reshape(batch, pooled_len * width, channels)
    return dx


def softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, labels):
    """Mean negative log likelihood of the true classes."""
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, 1e-300)).mean())


def softmax_cross_entropy_grad(probs, labels):
    """d(mean cross-entropy)/d(logits) for softmax outputs."""
    grad = probs.copy()
    grad[np.arange(len(labels)), labels] -= 1.0
    return grad / len(labels)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_forward(x, w, b, hidden: int):
    """Single-layer LSTM over (B, L, C) input.

    w: (C + hidden, 4*hidden) with gate blocks ordered input, forget, cell,
    output; b likewise. Returns the full hidden sequence (B, L, hidden).
    """
    batch, length, _ = x.shape
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    h_seq = np.zeros((batch, length, hidden))
    caches = []
    for t in range(length):
        xh = np.concatenate([x[:, t, :], h], axis=1)
        z = xh @ w + b
        i = _sigmoid(z[:, :hidden])
        f = _sigmoid(z[:, hidden : 2 * hidden])
        g = np.tanh(z[:, 2 * hidden : 3 * hidden])
        o = _sigmoid(z[:, 3 * hidden :])
        c_prev = c
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        h_seq[:, t, :] = h
        caches.append((xh, i, f, g, o, c_prev, tanh_c))
    return h_seq, caches


def lstm_backward(dh_seq, caches, w, hidden: int):
    """Backpropagation through time; returns (dw, db)."""
    batch, length, _ = dh_seq.shape
    dw = np.zeros_like(w)
    db = np.zeros(w.shape[1])
    dh_next = np.zeros((batch, hidden))
    dc_next = np.zeros((batch, hidden))
    for t in reversed(range(length)):
        xh, i, f, g, o, c_prev, tanh_c = caches[t]
        dh = dh_seq[:, t, :] + dh_next
        do = dh * tanh_c
        dc = dh * o * (1.0 - tanh_c**2) + dc_next
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g**2),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dw += xh.T @ dz
        db += dz.sum(axis=0)
        dxh = dz @ w.T
        dh_next = dxh[:, -hidden:]
        dc_next = dc * f
    return dw, db


def masked_mean_forward(h_seq, mask):
    """Mean of hidden states over valid positions only.

    Examples with zero valid positions pool to zero; the returned
    ``valid_rows`` flags them so the caller can special-case the output.
    """
    counts = mask.sum(axis=1)
    valid_rows = counts > 0
    safe = np.where(valid_rows, counts, 1.0)
    pooled = (h_seq * mask[:, :, None]).sum(axis=1) / safe[:, None]
    return pooled, (mask, safe, valid_rows)


def masked_mean_backward(dpooled, cache, length: int):
    mask, safe, valid_rows = cache
    dprm = dpooled * valid_rows[:, None] / safe[:, None]
    return mask[:, :, None] * dprm[:, None, :]

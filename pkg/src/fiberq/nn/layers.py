"""Layers with explicit forward/backward passes.

Every layer owns its parameters and gradient buffers; ``backward``
accumulates into the buffers and returns the gradient with respect to
the layer input.  All arithmetic is plain numpy, so a fixed seed and
data order give bit-identical training runs.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit as _sigmoid


def glorot_uniform(rng, n_in, n_out, dtype):
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, (n_in, n_out)).astype(dtype)


def orthogonal(rng, n, dtype):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    # fix signs so the factorization (and hence the init) is unique
    return (q * np.sign(np.diag(r))).astype(dtype)


class Layer:
    def params(self) -> dict:
        return {}

    def grads(self) -> dict:
        return {}

    def zero_grads(self):
        for g in self.grads().values():
            g[...] = 0

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError


class Flatten(Layer):
    """(B, M, F) -> (B, M*F), row-major (time index varies slowest)."""

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._shape)


class Dense(Layer):
    def __init__(self, n_in, n_out, rng=None, dtype=np.float32):
        if rng is None:
            rng = np.random.default_rng(0)
        self.w = glorot_uniform(rng, n_in, n_out, dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.w.shape[0]:
            raise ValueError(f"expected (B, {self.w.shape[0]}) input, "
                             f"got {x.shape}")
        self._x = x
        return x @ self.w + self.b

    def backward(self, grad_out):
        self.dw += self._x.T @ grad_out
        self.db += grad_out.sum(axis=0)
        return grad_out @ self.w.T


class Tanh(Layer):
    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad_out):
        return grad_out * (1.0 - self._y ** 2)


class Softmax(Layer):
    """Row softmax with max subtraction; rows sum to one."""

    def forward(self, x):
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        self._y = e / e.sum(axis=1, keepdims=True)
        return self._y

    def backward(self, grad_out):
        y = self._y
        inner = np.sum(grad_out * y, axis=1, keepdims=True)
        return y * (grad_out - inner)


class BiLSTM(Layer):
    """One bidirectional LSTM layer over the time axis of (B, M, F).

    Outputs the forward and backward hidden states concatenated per
    time step: (B, M, 2 * n_hidden).  Initial states are zero.  Gate
    kernels are stored column-blocked as [input, forget, cell, output];
    input kernels are Glorot-uniform, recurrent kernels orthogonal per
    gate block, biases zero except the forget gate at one.
    """

    def __init__(self, n_in, n_hidden, rng=None, dtype=np.float32):
        if rng is None:
            rng = np.random.default_rng(0)
        self.n_in = n_in
        self.n_hidden = n_hidden
        self._p = {}
        self._g = {}
        for d in ("fw", "bw"):
            wx = glorot_uniform(rng, n_in, 4 * n_hidden, dtype)
            wh = np.concatenate([orthogonal(rng, n_hidden, dtype)
                                 for _ in range(4)], axis=1)
            b = np.zeros(4 * n_hidden, dtype=dtype)
            b[n_hidden:2 * n_hidden] = 1.0
            self._p[f"wx_{d}"] = wx
            self._p[f"wh_{d}"] = wh
            self._p[f"b_{d}"] = b
        for name, p in self._p.items():
            self._g[name] = np.zeros_like(p)

    def params(self):
        return dict(self._p)

    def grads(self):
        return dict(self._g)

    def _run(self, x, d, reverse):
        B, M, _ = x.shape
        H = self.n_hidden
        wx, wh, b = self._p[f"wx_{d}"], self._p[f"wh_{d}"], self._p[f"b_{d}"]
        h = np.zeros((B, H), dtype=x.dtype)
        c = np.zeros((B, H), dtype=x.dtype)
        hs = np.empty((B, M, H), dtype=x.dtype)
        cache = []
        order = range(M - 1, -1, -1) if reverse else range(M)
        for t in order:
            z = x[:, t, :] @ wx + h @ wh + b
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = _sigmoid(z[:, 3 * H:])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            cache.append((t, h, c, i, f, g, o, tc))
            h = o * tc
            c = c_new
            hs[:, t, :] = h
        return hs, cache

    def forward(self, x):
        if x.ndim != 3 or x.shape[2] != self.n_in:
            raise ValueError(f"expected (B, M, {self.n_in}) input, "
                             f"got {x.shape}")
        self._x = x
        hs_fw, self._cache_fw = self._run(x, "fw", reverse=False)
        hs_bw, self._cache_bw = self._run(x, "bw", reverse=True)
        return np.concatenate([hs_fw, hs_bw], axis=2)

    def _backprop(self, grad_hs, d, cache):
        x = self._x
        H = self.n_hidden
        wx, wh = self._p[f"wx_{d}"], self._p[f"wh_{d}"]
        dwx, dwh, db = (self._g[f"wx_{d}"], self._g[f"wh_{d}"],
                        self._g[f"b_{d}"])
        dx = np.zeros_like(x)
        dh_next = np.zeros((x.shape[0], H), dtype=x.dtype)
        dc_next = np.zeros_like(dh_next)
        for (t, h_prev, c_prev, i, f, g, o, tc) in reversed(cache):
            dh = grad_hs[:, t, :] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc ** 2) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dz = np.concatenate([di * i * (1.0 - i),
                                 df * f * (1.0 - f),
                                 dg * (1.0 - g ** 2),
                                 do * o * (1.0 - o)], axis=1)
            dwx += x[:, t, :].T @ dz
            dwh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, t, :] += dz @ wx.T
            dh_next = dz @ wh.T
        return dx

    def backward(self, grad_out):
        H = self.n_hidden
        dx = self._backprop(grad_out[:, :, :H], "fw", self._cache_fw)
        dx += self._backprop(grad_out[:, :, H:], "bw", self._cache_bw)
        return dx

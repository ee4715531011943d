"""Bias-corrected Adam over a flat list of parameter arrays."""

from __future__ import annotations

import numpy as np


class Adam:
    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def _ensure_state(self, params):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        """Update parameters in place from matching gradient arrays."""
        if len(params) != len(grads):
            raise ValueError("params/grads length mismatch")
        self._ensure_state(params)
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / correction1
            v_hat = v / correction2
            p -= (self.learning_rate * m_hat
                  / (np.sqrt(v_hat) + self.eps)).astype(p.dtype, copy=False)

    def state_dict(self):
        return {
            "learning_rate": self.learning_rate,
            "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "t": self.t,
            "m": [m.copy() for m in (self.m or [])],
            "v": [v.copy() for v in (self.v or [])],
        }

    def load_state_dict(self, state):
        self.learning_rate = state["learning_rate"]
        self.beta1 = state["beta1"]
        self.beta2 = state["beta2"]
        self.eps = state["eps"]
        self.t = state["t"]
        self.m = [m.copy() for m in state["m"]] or None
        self.v = [v.copy() for v in state["v"]] or None

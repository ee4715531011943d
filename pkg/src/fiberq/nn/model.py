"""Sequential layer container with snapshot/restore support."""

from __future__ import annotations

import numpy as np


class Sequential:
    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def _named(self, getter):
        out = []
        for i, layer in enumerate(self.layers):
            for name in sorted(getter(layer)):
                out.append((f"layer{i}.{name}", getter(layer)[name]))
        return out

    def param_items(self):
        return self._named(lambda l: l.params())

    def param_list(self):
        return [p for _, p in self.param_items()]

    def grad_list(self):
        return [g for _, g in self._named(lambda l: l.grads())]

    def param_count(self) -> int:
        return int(sum(p.size for p in self.param_list()))

    def predict(self, x, batch_size=8192):
        """Forward pass in chunks; output rows stack in input order."""
        outputs = [self.forward(x[start:start + batch_size])
                   for start in range(0, len(x), batch_size)]
        return np.concatenate(outputs, axis=0)

    def snapshot(self):
        return [p.copy() for p in self.param_list()]

    def restore(self, snapshot):
        params = self.param_list()
        if len(params) != len(snapshot):
            raise ValueError("snapshot does not match model topology")
        for p, s in zip(params, snapshot):
            p[...] = s

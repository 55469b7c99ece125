"""Parameters and gradient-descent optimizers."""

import numpy as np

from ..errors import VoxelflowError
from .tensor import Tensor


class MissingGradient(VoxelflowError):
    pass


class Parameter:
    """Named trainable tensor; grad is filled by the training loop."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name, value):
        self.name = name
        self.value = value
        self.grad = None

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={tuple(self.value.shape)})"


def _require_grads(params):
    for p in params:
        if p.grad is None:
            raise MissingGradient(p.name)
        if p.grad.shape != p.value.shape:
            raise MissingGradient(f"{p.name}: grad shape {tuple(p.grad.shape)} != value shape {tuple(p.value.shape)}")


class Sgd:
    """v <- momentum*v + g; p <- p - lr*v."""

    def __init__(self, lr, momentum=0.0):
        self.lr = np.float32(lr)
        self.momentum = np.float32(momentum)
        self._velocity = {}

    def step(self, params):
        _require_grads(params)
        for p in params:
            g = p.grad.data
            v = self._velocity.get(p.name)
            v = g.copy() if v is None else self.momentum * v + g
            self._velocity[p.name] = v
            p.value = Tensor(p.value.data - self.lr * v)
            p.grad = None


class Adam:
    """Adam with bias correction; grads are cleared after each step."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = np.float32(lr)
        self.beta1 = np.float32(beta1)
        self.beta2 = np.float32(beta2)
        self.eps = np.float32(eps)
        self.step_count = 0
        self._m = {}
        self._v = {}

    def step(self, params):
        _require_grads(params)
        self.step_count += 1
        t = self.step_count
        c1 = np.float32(1.0 - float(self.beta1) ** t)
        c2 = np.float32(1.0 - float(self.beta2) ** t)
        for p in params:
            g = p.grad.data
            m = self._m.get(p.name)
            v = self._v.get(p.name)
            m = (1 - self.beta1) * g if m is None else self.beta1 * m + (1 - self.beta1) * g
            v = (1 - self.beta2) * (g * g) if v is None else self.beta2 * v + (1 - self.beta2) * (g * g)
            self._m[p.name] = m
            self._v[p.name] = v
            m_hat = m / c1
            v_hat = v / c2
            p.value = Tensor(p.value.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
            p.grad = None

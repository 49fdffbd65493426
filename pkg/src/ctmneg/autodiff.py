"""Minimal reverse-mode autodiff on float64 numpy arrays.

Supports exactly the operations the topic model's computation graph needs
(affine maps, softplus, softmax, elementwise arithmetic, reductions,
concatenation, clamping). Gradients are accumulated by a tape walk in
reverse topological order.
"""

from __future__ import annotations

import numpy as np


class NumericsError(RuntimeError):
    """Raised when a forward or backward pass produces NaN/Inf."""


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Tensor:
    """A node in the computation graph: value, gradient slot, backward rule."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph construction helpers -------------------------------------

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    @staticmethod
    def _node(data, parents, backward) -> "Tensor":
        out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def _accum(self, grad: np.ndarray):
        grad = _unbroadcast(grad, self.data.shape)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = Tensor._lift(other)
        out = Tensor._node(self.data + other.data, (self, other), None)

        def backward(g):
            self._accum(g)
            other._accum(g)

        out._backward = backward
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor._node(-self.data, (self,), None)
        out._backward = lambda g: self._accum(-g)
        return out

    def __sub__(self, other):
        return self + (-Tensor._lift(other))

    def __rsub__(self, other):
        return Tensor._lift(other) + (-self)

    def __mul__(self, other):
        other = Tensor._lift(other)
        out = Tensor._node(self.data * other.data, (self, other), None)

        def backward(g):
            self._accum(g * other.data)
            other._accum(g * self.data)

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Tensor._lift(other)
        out = Tensor._node(self.data / other.data, (self, other), None)

        def backward(g):
            self._accum(g / other.data)
            other._accum(-g * self.data / (other.data * other.data))

        out._backward = backward
        return out

    def __pow__(self, exponent: float):
        out = Tensor._node(self.data ** exponent, (self,), None)
        out._backward = lambda g: self._accum(
            g * exponent * self.data ** (exponent - 1)
        )
        return out

    def __matmul__(self, other):
        other = Tensor._lift(other)
        out = Tensor._node(self.data @ other.data, (self, other), None)

        def backward(g):
            a, b = self.data, other.data
            if a.ndim == 1 and b.ndim == 2:
                self._accum(g @ b.T)
                other._accum(np.outer(a, g))
            elif a.ndim == 2 and b.ndim == 2:
                self._accum(g @ b.T)
                other._accum(a.T @ g)
            else:
                raise ValueError(f"unsupported matmul shapes {a.shape} @ {b.shape}")

        out._backward = backward
        return out

    # -- elementwise nonlinearities ---------------------------------------

    def exp(self):
        y = np.exp(self.data)
        out = Tensor._node(y, (self,), None)
        out._backward = lambda g: self._accum(g * y)
        return out

    def log(self):
        out = Tensor._node(np.log(self.data), (self,), None)
        out._backward = lambda g: self._accum(g / self.data)
        return out

    def sqrt(self):
        y = np.sqrt(self.data)
        out = Tensor._node(y, (self,), None)
        out._backward = lambda g: self._accum(g / (2.0 * y))
        return out

    def softplus(self):
        out = Tensor._node(np.logaddexp(0.0, self.data), (self,), None)
        out._backward = lambda g: self._accum(g * _stable_sigmoid(self.data))
        return out

    def clamp_min(self, floor: float):
        out = Tensor._node(np.maximum(self.data, floor), (self,), None)
        out._backward = lambda g: self._accum(g * (self.data > floor))
        return out

    def relu(self):
        return self.clamp_min(0.0)

    def softmax(self, axis: int = -1):
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=axis, keepdims=True)
        out = Tensor._node(y, (self,), None)

        def backward(g):
            dot = (g * y).sum(axis=axis, keepdims=True)
            self._accum(y * (g - dot))

        out._backward = backward
        return out

    # -- reductions & shape ops -------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor._node(self.data.sum(axis=axis, keepdims=keepdims), (self,), None)

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accum(np.broadcast_to(g, self.data.shape).copy())

        out._backward = backward
        return out

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    @staticmethod
    def concat(parts: list["Tensor"], axis: int = -1) -> "Tensor":
        datas = [p.data for p in parts]
        out = Tensor._node(np.concatenate(datas, axis=axis), tuple(parts), None)
        sizes = [d.shape[axis] for d in datas]

        def backward(g):
            offset = 0
            for part, size in zip(parts, sizes):
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(offset, offset + size)
                part._accum(g[tuple(idx)])
                offset += size

        out._backward = backward
        return out

    # -- backward pass ------------------------------------------------------

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable leaf's .grad."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    def check_finite(self, context: str = "") -> "Tensor":
        if not np.all(np.isfinite(self.data)):
            raise NumericsError(f"non-finite values detected {context}".strip())
        return self

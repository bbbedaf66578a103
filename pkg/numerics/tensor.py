"""Tensor with a recording tape and reverse-mode automatic differentiation.

Every operation on tensors that require gradients records its parents and a closure
that maps the output gradient to parent gradients. <backward> walks the recorded graph
in reverse topological order and then drops it, so a tape serves exactly one backward pass.
"""
from __future__ import annotations

import contextlib
import re
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from einops import rearrange as _rearrange


_GRAD_ENABLED = True
_PATTERN_TOKEN = re.compile(r'\([^)]*\)|\.\.\.|\S+')


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (evaluation, greedy decoding)."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum <grad> over the axes numpy broadcasting added or stretched to reach <shape>."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _as_tensor(value) -> "Tensor":
    return value if isinstance(value, Tensor) else Tensor(value)


class Tensor:
    """Dense float64 array that optionally participates in the gradient tape.

    Leaves created with requires_grad=True own a zero-initialised <grad> buffer of the same
    shape; intermediate results get theirs during <backward>.
    """

    def __init__(self, data, requires_grad: bool = False, _parents: Sequence["Tensor"] = (), _op: str = ''):
        self.data = np.asarray(data, dtype=np.float64)
        if any(size <= 0 for size in self.data.shape):
            raise ValueError('tensor dimensions must be positive, got shape %s' % (self.data.shape,))
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = np.zeros_like(self.data) if self.requires_grad and not _parents else None
        self._parents: Tuple[Tensor, ...] = tuple(_parents)
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self._op = _op

    def __repr__(self):
        return 'Tensor(shape=%s, requires_grad=%s, op=%r)' % (self.shape, self.requires_grad, self._op)

    # *** properties ***
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    # *** tape recording ***
    @staticmethod
    def _make(data: np.ndarray, parents: Sequence["Tensor"], backward_fn, op: str) -> "Tensor":
        tracked = _GRAD_ENABLED and any(p.requires_grad for p in parents)
        if not tracked:
            return Tensor(data)
        out = Tensor(data, requires_grad=True, _parents=parents, _op=op)
        out._backward = backward_fn
        return out

    def _accumulate(self, grad: np.ndarray):
        if not self.requires_grad:
            return
        grad = _unbroadcast(grad, self.shape)
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + grad

    # *** elementwise arithmetic ***
    def __add__(self, other):
        other = _as_tensor(other)

        def _backward(g):
            self._accumulate(g)
            other._accumulate(g)
        return Tensor._make(self.data + other.data, (self, other), _backward, 'add')

    __radd__ = __add__

    def __neg__(self):
        return Tensor._make(-self.data, (self,), lambda g: self._accumulate(-g), 'neg')

    def __sub__(self, other):
        return self + (-_as_tensor(other))

    def __rsub__(self, other):
        return _as_tensor(other) + (-self)

    def __mul__(self, other):
        other = _as_tensor(other)

        def _backward(g):
            self._accumulate(g * other.data)
            other._accumulate(g * self.data)
        return Tensor._make(self.data * other.data, (self, other), _backward, 'mul')

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tensor(other)

        def _backward(g):
            self._accumulate(g / other.data)
            other._accumulate(-g * self.data / (other.data ** 2))
        return Tensor._make(self.data / other.data, (self, other), _backward, 'div')

    def __matmul__(self, other):
        other = _as_tensor(other)
        a, b = self.data, other.data

        def _backward(g):
            if self.requires_grad:
                ga = g @ np.swapaxes(b, -1, -2) if b.ndim > 1 else np.multiply.outer(g, b)
                self._accumulate(ga)
            if other.requires_grad:
                gb = np.swapaxes(a, -1, -2) @ g if a.ndim > 1 else np.multiply.outer(a, g)
                other._accumulate(gb)
        return Tensor._make(a @ b, (self, other), _backward, 'matmul')

    # *** unary ***
    def exp(self):
        out_data = np.exp(self.data)
        return Tensor._make(out_data, (self,), lambda g: self._accumulate(g * out_data), 'exp')

    def log(self):
        return Tensor._make(np.log(self.data), (self,), lambda g: self._accumulate(g / self.data), 'log')

    def relu(self):
        positive = self.data > 0
        return Tensor._make(np.where(positive, self.data, 0.0), (self,),
                            lambda g: self._accumulate(g * positive), 'relu')

    # *** reductions ***
    def sum(self, axis=None, keepdims=False):
        def _backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.shape))
        return Tensor._make(self.data.sum(axis=axis, keepdims=keepdims), (self,), _backward, 'sum')

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else np.prod([self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # *** movement ***
    def reshape(self, *shape):
        return Tensor._make(self.data.reshape(*shape), (self,),
                            lambda g: self._accumulate(g.reshape(self.shape)), 'reshape')

    def swapaxes(self, axis1, axis2):
        return Tensor._make(np.swapaxes(self.data, axis1, axis2), (self,),
                            lambda g: self._accumulate(np.swapaxes(g, axis1, axis2)), 'swapaxes')

    def rearrange(self, pattern: str, **axes_lengths):
        """einops rearrange; the backward pass applies the reversed pattern.

        Axis sizes readable from either side are passed to the reversed pattern, so a merge such
        as '... h l d -> ... l (h d)' can be undone without the caller naming h.
        """
        left, right = (side.strip() for side in pattern.split('->'))
        inverse = '%s -> %s' % (right, left)
        out = _rearrange(self.data, pattern, **axes_lengths)
        lengths = {**_axis_lengths(right, out.shape), **_axis_lengths(left, self.shape), **axes_lengths}
        return Tensor._make(out, (self,),
                            lambda g: self._accumulate(_rearrange(g, inverse, **lengths)), 'rearrange')

    def __getitem__(self, index):
        def _backward(g):
            full = np.zeros_like(self.data)
            np.add.at(full, index, g)
            self._accumulate(full)
        return Tensor._make(self.data[index], (self,), _backward, 'getitem')


def concatenate(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def _backward(g):
        for t, start, stop in zip(tensors, bounds[:-1], bounds[1:]):
            t._accumulate(np.take(g, np.arange(start, stop), axis=axis))
    return Tensor._make(np.concatenate([t.data for t in tensors], axis=axis), tensors, _backward, 'concatenate')


def _topological_order(root: Tensor):
    order, visited, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited and parent.requires_grad:
                stack.append((parent, False))
    return order


def backward(loss: Tensor):
    """Populate d(loss)/d(leaf) in every reachable leaf that requires gradients, then drop the tape."""
    if loss.data.size != 1:
        raise ValueError('backward requires a scalar loss, got shape %s' % (loss.shape,))
    if not loss.requires_grad:
        raise ValueError('loss does not depend on any tensor that requires gradients')
    order = _topological_order(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)
    for node in order:
        if not node.is_leaf:
            node._backward = None
            node._parents = ()
            node.grad = None


def _axis_lengths(side: str, shape) -> dict:
    """Sizes of the ungrouped named axes of one side of an einops pattern."""
    tokens = _PATTERN_TOKEN.findall(side)
    if '...' in tokens:
        cut = tokens.index('...')
        placed = list(zip(tokens[:cut], shape[:cut]))
        after = tokens[cut + 1:]
        placed += list(zip(after, shape[len(shape) - len(after):])) if after else []
    else:
        placed = list(zip(tokens, shape))
    return {token: size for token, size in placed if token.isidentifier()}

"""Composite operations with hand-derived (fused) backward passes."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .tensor import Tensor, _as_tensor


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = x @ weight
    return out + bias if bias is not None else out


def relu(x: Tensor) -> Tensor:
    return x.relu()


def softmax(x: Tensor, axis: int = -1, mask: Optional[np.ndarray] = None) -> Tensor:
    """Numerically stable softmax; positions where <mask> is False get exactly zero weight.

    <mask> broadcasts against <x>. Every slice along <axis> must keep at least one position.
    """
    x = _as_tensor(x)
    if x.shape[axis] == 0:
        raise ValueError('softmax over an empty axis')
    logits = x.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), logits.shape)
        if not mask.any(axis=axis).all():
            raise ValueError('softmax mask leaves a row with no admissible position')
        logits = np.where(mask, logits, -np.inf)
    shifted = logits - logits.max(axis=axis, keepdims=True)
    weights = np.exp(shifted)
    weights /= weights.sum(axis=axis, keepdims=True)

    def _backward(g):
        x._accumulate(weights * (g - (g * weights).sum(axis=axis, keepdims=True)))
    return Tensor._make(weights, (x,), _backward, 'softmax')


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean and unit population variance, then apply gain and bias."""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    dim = x.shape[-1]
    if gain.shape != (dim,) or bias.shape != (dim,):
        raise ValueError('layer_norm gain/bias must have shape (%d,), got %s and %s' % (dim, gain.shape, bias.shape))
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    variance = (centered ** 2).mean(axis=-1, keepdims=True)
    if eps == 0 and np.any(variance == 0):
        raise ValueError('layer_norm with eps=0 on a zero-variance row')
    inv_std = 1.0 / np.sqrt(variance + eps)
    normalized = centered * inv_std
    out = normalized * gain.data + bias.data

    def _backward(g):
        bias._accumulate(g.reshape(-1, dim).sum(axis=0))
        gain._accumulate((g * normalized).reshape(-1, dim).sum(axis=0))
        if x.requires_grad:
            g_norm = g * gain.data
            x._accumulate(inv_std / dim * (dim * g_norm
                                           - g_norm.sum(axis=-1, keepdims=True)
                                           - normalized * (g_norm * normalized).sum(axis=-1, keepdims=True)))
    return Tensor._make(out, (x, gain, bias), _backward, 'layer_norm')


def cross_entropy_masked(logits: Tensor, targets, mask, reduction: str = 'mean') -> Tensor:
    """Negative log-likelihood of <targets> under softmax(<logits>) over positions where <mask> holds.

    logits: (..., K, W); targets and mask: (..., K). reduction 'mean' divides by the number of
    unmasked positions, 'sum' returns the total.
    """
    logits = _as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    vocab = logits.shape[-1]
    if targets.shape != logits.shape[:-1] or mask.shape != targets.shape:
        raise ValueError('targets/mask shape %s/%s does not match logits %s' % (targets.shape, mask.shape, logits.shape))
    count = int(mask.sum())
    if count == 0:
        raise ValueError('cross_entropy_masked needs at least one unmasked position')
    live = targets[mask]
    if np.any(live < 0) or np.any(live >= vocab):
        raise ValueError('target index out of range [0, %d)' % vocab)

    safe_targets = np.where(mask, targets, 0)
    shifted = logits.data - logits.data.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1))
    picked = np.take_along_axis(shifted, safe_targets[..., None], axis=-1)[..., 0]
    nll = np.where(mask, log_norm - picked, 0.0)
    scale = 1.0 / count if reduction == 'mean' else 1.0
    total = nll.sum() * scale

    def _backward(g):
        probs = np.exp(shifted - log_norm[..., None])
        np.put_along_axis(probs, safe_targets[..., None],
                          np.take_along_axis(probs, safe_targets[..., None], axis=-1) - 1.0, axis=-1)
        logits._accumulate(g * scale * probs * mask[..., None])
    return Tensor._make(np.asarray(total), (logits,), _backward, 'cross_entropy')


def embedding(table: Tensor, indices) -> Tensor:
    """Gather rows of <table>; gradients scatter-add back into the gathered rows."""
    indices = np.asarray(indices, dtype=np.int64)
    rows = table.shape[0]
    if indices.size and (indices.min() < 0 or indices.max() >= rows):
        raise ValueError('token index out of range [0, %d)' % rows)
    return table[indices]


def dropout(x: Tensor, p: float, rng, training: bool) -> Tensor:
    if not training or p == 0.0:
        return x
    keep = rng.uniform(0.0, 1.0, x.shape) >= p
    return x * (keep / (1.0 - p))

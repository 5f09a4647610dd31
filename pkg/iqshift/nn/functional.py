#! /usr/bin/env python3
"""
Forward and backward kernels for the layer set, batched over the first axis.

Sequence tensors are N x C x L, vectors N x F. Every forward returns (y, cache)
and every backward takes the upstream gradient plus that cache; a missing cache
is rejected. Reductions always run over ascending sample index.
"""

import os
import logging

from typing import (
    Optional,
    Dict,
    Tuple,
)

import numpy as np

from ..exceptions import RejectedInput
from .tensor import Tensor, TRAIN, INFER, checkMode

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

Cache = Dict[str, Tensor]

SELU_LAMBDA: float = 1.05070098735548
SELU_ALPHA: float = 1.67326324235437


def _needCache(cache: Optional[Cache], where: str) -> Cache:
    if cache is None:
        raise RejectedInput(f"{where}: backward called without a forward cache")
    return cache


def _need3d(x: Tensor, where: str) -> None:
    if x.ndim != 3:
        raise RejectedInput(f"{where}: expected N x C x L, got shape {x.shape}")


# conv


def conv1dForward(
    x: Tensor,
    w: Tensor,
    b: Tensor,
) -> Tuple[Tensor, Cache]:
    """Stride 1 cross-correlation with zero padding (K-1)/2 on each side."""
    _need3d(x, "conv1d")
    cOut, cIn, k = w.shape
    if k % 2 != 1:
        raise RejectedInput(f"conv1d: kernel width {k} must be odd")
    if x.shape[1] != cIn:
        raise RejectedInput(f"conv1d: input has {x.shape[1]} channels, kernel expects {cIn}")
    if b.shape != (cOut,):
        raise RejectedInput(f"conv1d: bias shape {b.shape} does not match {cOut} output channels")

    n, _, length = x.shape
    pad = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))

    y = np.zeros((n, cOut, length), dtype=x.dtype)
    for j in range(k):
        y += np.matmul(w[:, :, j], xp[:, :, j : j + length])
    y += b[None, :, None]
    return y, {"xp": xp, "w": w}


def conv1dBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tuple[Tensor, Tensor, Tensor]:
    """Returns (dx, dw, db)."""
    c = _needCache(cache, "conv1d")
    xp, w = c["xp"], c["w"]
    cOut, cIn, k = w.shape
    n, _, length = dy.shape
    pad = (k - 1) // 2

    db = dy.sum(axis=(0, 2))
    dw = np.zeros_like(w)
    dxp = np.zeros_like(xp)
    for j in range(k):
        window = xp[:, :, j : j + length]
        dw[:, :, j] = np.tensordot(dy, window, axes=([0, 2], [0, 2]))
        dxp[:, :, j : j + length] += np.matmul(w[:, :, j].T, dy)

    dx = dxp[:, :, pad : pad + length]
    return np.ascontiguousarray(dx), dw, db


# batch norm


def batchnormForward(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    runningMean: Tensor,
    runningVar: Tensor,
    mode: str,
    eps: float = 1e-5,
    momentum: float = 0.1,
) -> Tuple[Tensor, Cache, Tensor, Tensor]:
    """
    Per-channel normalization over batch and length.

    Returns (y, cache, newRunningMean, newRunningVar); INFER returns the running
    statistics unchanged and never looks at the batch statistics.
    """
    _need3d(x, "batchnorm")
    checkMode(mode)
    if gamma.shape != (x.shape[1],):
        raise RejectedInput(f"batchnorm: {gamma.shape[0]} channels configured, input has {x.shape[1]}")

    if mode == INFER:
        invStd = 1.0 / np.sqrt(runningVar + eps)
        xhat = (x - runningMean[None, :, None]) * invStd[None, :, None]
        y = gamma[None, :, None] * xhat + beta[None, :, None]
        return y.astype(x.dtype), {"xhat": xhat, "invStd": invStd, "gamma": gamma, "mode": np.array(0)}, runningMean, runningVar

    count = x.shape[0] * x.shape[2]
    if count < 2:
        raise RejectedInput("batchnorm: TRAIN mode needs more than one value per channel")

    mean = x.mean(axis=(0, 2))
    centred = x - mean[None, :, None]
    var = (centred * centred).mean(axis=(0, 2))
    invStd = 1.0 / np.sqrt(var + eps)
    xhat = centred * invStd[None, :, None]
    y = gamma[None, :, None] * xhat + beta[None, :, None]

    unbiased = var * (count / (count - 1))
    newMean = ((1.0 - momentum) * runningMean + momentum * mean).astype(runningMean.dtype)
    newVar = ((1.0 - momentum) * runningVar + momentum * unbiased).astype(runningVar.dtype)

    return y.astype(x.dtype), {"xhat": xhat, "invStd": invStd, "gamma": gamma, "mode": np.array(1)}, newMean, newVar


def batchnormBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tuple[Tensor, Tensor, Tensor]:
    """Returns (dx, dgamma, dbeta)."""
    c = _needCache(cache, "batchnorm")
    xhat, invStd, gamma = c["xhat"], c["invStd"], c["gamma"]

    dbeta = dy.sum(axis=(0, 2))
    dgamma = (dy * xhat).sum(axis=(0, 2))
    dxhat = dy * gamma[None, :, None]

    if int(c["mode"]) == 0:
        # running statistics are constants
        dx = dxhat * invStd[None, :, None]
        return dx.astype(dy.dtype), dgamma, dbeta

    count = dy.shape[0] * dy.shape[2]
    sumDxhat = dxhat.sum(axis=(0, 2))
    sumDxhatXhat = (dxhat * xhat).sum(axis=(0, 2))
    dx = (invStd / count)[None, :, None] * (count * dxhat - sumDxhat[None, :, None] - xhat * sumDxhatXhat[None, :, None])
    return dx.astype(dy.dtype), dgamma, dbeta


# activations


def reluForward(x: Tensor) -> Tuple[Tensor, Cache]:
    return np.maximum(x, 0).astype(x.dtype), {"x": x}


def reluBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tensor:
    c = _needCache(cache, "relu")
    return dy * (c["x"] > 0)


def seluForward(x: Tensor) -> Tuple[Tensor, Cache]:
    neg = SELU_ALPHA * np.expm1(np.minimum(x, 0))
    y = SELU_LAMBDA * np.where(x > 0, x, neg)
    return y.astype(x.dtype), {"x": x}


def seluBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tensor:
    x = _needCache(cache, "selu")["x"]
    slope = SELU_LAMBDA * np.where(x > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(x, 0)))
    return (dy * slope).astype(dy.dtype)


def dropoutForward(
    x: Tensor,
    rate: float,
    mode: str,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[Tensor, Cache]:
    """Inverted dropout: kept units are scaled by 1/(1-rate), INFER is the identity."""
    checkMode(mode)
    if not 0.0 <= rate < 1.0:
        raise RejectedInput(f"dropout rate {rate} must be in [0, 1)")

    if mode == INFER or rate == 0.0:
        return x, {}
    if rng is None:
        raise RejectedInput("dropout in TRAIN mode needs a random generator")

    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * mask, {"mask": mask}


def dropoutBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tensor:
    c = _needCache(cache, "dropout")
    if "mask" not in c:
        return dy
    return dy * c["mask"]


# pooling


def maxpool1dForward(x: Tensor) -> Tuple[Tensor, Cache]:
    """Width 2, stride 2; ties go to the first position."""
    _need3d(x, "maxpool1d")
    n, ch, length = x.shape
    if length % 2 != 0:
        raise RejectedInput(f"maxpool1d: length {length} is odd")

    pairs = x.reshape(n, ch, length // 2, 2)
    idx = np.argmax(pairs, axis=3)
    y = np.take_along_axis(pairs, idx[..., None], axis=3)[..., 0]
    return y, {"idx": idx, "shape": np.array(x.shape)}


def maxpool1dBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tensor:
    c = _needCache(cache, "maxpool1d")
    n, ch, length = (int(v) for v in c["shape"])
    dx = np.zeros((n, ch, length // 2, 2), dtype=dy.dtype)
    np.put_along_axis(dx, c["idx"][..., None], dy[..., None], axis=3)
    return dx.reshape(n, ch, length)


def globalAvgPoolForward(x: Tensor) -> Tuple[Tensor, Cache]:
    _need3d(x, "global_avgpool")
    return x.mean(axis=2), {"length": np.array(x.shape[2])}


def globalAvgPoolBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tensor:
    length = int(_needCache(cache, "global_avgpool")["length"])
    return np.repeat(dy[:, :, None] / length, length, axis=2).astype(dy.dtype)


def flattenForward(x: Tensor) -> Tuple[Tensor, Cache]:
    return x.reshape(x.shape[0], -1), {"shape": np.array(x.shape)}


def flattenBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tensor:
    shape = tuple(int(v) for v in _needCache(cache, "flatten")["shape"])
    return dy.reshape(shape)


# dense


def fcForward(
    x: Tensor,
    w: Tensor,
    b: Tensor,
) -> Tuple[Tensor, Cache]:
    """y = x W^T + b with W of shape M x F."""
    if x.ndim != 2 or x.shape[1] != w.shape[1] or b.shape != (w.shape[0],):
        raise RejectedInput(f"fc: input {x.shape} does not fit weights {w.shape} and bias {b.shape}")
    return x @ w.T + b[None, :], {"x": x, "w": w}


def fcBackward(
    dy: Tensor,
    cache: Optional[Cache],
) -> Tuple[Tensor, Tensor, Tensor]:
    c = _needCache(cache, "fc")
    dx = dy @ c["w"]
    dw = dy.T @ c["x"]
    db = dy.sum(axis=0)
    return dx, dw, db


# loss


def softmax(logits: Tensor) -> Tensor:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmaxXent(
    logits: Tensor,
    labels: np.ndarray,
) -> Tuple[float, Tensor]:
    """Mean cross-entropy over the batch and its gradient (softmax - onehot) / N."""
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise RejectedInput(f"softmax_xent: logits {logits.shape} and labels {labels.shape} disagree")
    n, classes = logits.shape
    labels = labels.astype(np.int64)
    if n == 0 or labels.min() < 0 or labels.max() >= classes:
        raise RejectedInput(f"softmax_xent: labels must lie in [0, {classes})")

    z = logits - logits.max(axis=1, keepdims=True)
    logSum = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(logSum - z[rows, labels]))

    grad = np.exp(z - logSum[:, None])
    grad[rows, labels] -= 1.0
    grad /= n
    return loss, grad.astype(logits.dtype)

import os
import logging

from typing import (
    Callable,
    Dict,
    Optional,
)

import numpy as np

from .tensor import Tensor, Shape, TRAIN
from .layers import Layer

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

STEP: float = 1e-5
TOLERANCE: float = 1e-4


def numericGradient(
    f: Callable[[Tensor], float],
    x: Tensor,
    step: float = STEP,
) -> Tensor:
    # central differences, x is perturbed in place and restored
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + step
        up = f(x)
        flat[i] = keep - step
        down = f(x)
        flat[i] = keep
        gf[i] = (up - down) / (2.0 * step)
    return g


def relativeError(
    analytic: Tensor,
    numeric: Tensor,
) -> float:
    num = float(np.linalg.norm(analytic - numeric))
    den = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-12)
    return num / den


def gradientCheck(
    f: Callable[[Tensor], float],
    x: Tensor,
    analytic: Tensor,
    step: float = STEP,
) -> float:
    return relativeError(analytic, numericGradient(f, x, step))


def checkLayer(
    layer: Layer,
    inShape: Shape,
    seed: int = 0,
    batch: int = 2,
    mode: str = TRAIN,
) -> Dict[str, float]:
    """
    Finite-difference check of one layer in 64-bit: the input gradient and every
    trainable parameter gradient, for the scalar loss sum(y * r) with random r.
    """
    rng = np.random.default_rng(seed)
    layer.initialize(rng, "float64")
    for p in layer.params():
        if p.trainable:
            p.data = p.data + rng.normal(0.0, 0.1, size=p.shape)

    x = rng.normal(0.0, 1.0, size=(batch,) + tuple(inShape))
    outShape = layer.outputShape(inShape)
    r = rng.normal(0.0, 1.0, size=(batch,) + tuple(outShape))
    dropSeed = int(rng.integers(0, 2**31))

    def loss(_: Optional[Tensor] = None) -> float:
        y = layer.forward(x, mode, np.random.default_rng(dropSeed))
        return float(np.sum(y * r))

    rr: Dict[str, float] = {}
    layer.forward(x, mode, np.random.default_rng(dropSeed))
    for p in layer.params():
        p.zeroGrad()
    dx = layer.backward(r)
    rr["input"] = gradientCheck(loss, x, dx)

    for i, p in enumerate(layer.params()):
        if not p.trainable or p.grad is None:
            continue
        rr[f"{i}.{p.name}"] = gradientCheck(loss, p.data, p.grad)

    msg = f"gradient check {layer.kind}: {rr}"
    log.debug(msg)
    return rr

import os
import logging

from typing import (
    Optional,
    Tuple,
)

import numpy as np

from ..exceptions import RejectedInput

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

# a tensor is a contiguous numpy array; the engine never broadcasts implicitly
Tensor = np.ndarray
Shape = Tuple[int, ...]

TRAIN: str = "TRAIN"
INFER: str = "INFER"
MODES = (TRAIN, INFER)

DTYPES = ("float32", "float64")


def checkMode(mode: str) -> str:
    if mode not in MODES:
        raise RejectedInput(f"mode {mode} is not one of {MODES}")
    return mode


def checkDtype(dtype: str) -> str:
    if str(dtype) not in DTYPES:
        raise RejectedInput(f"precision {dtype} is not one of {DTYPES}")
    return str(dtype)


def expectShape(
    x: Tensor,
    shape: Shape,
    where: str,
) -> None:
    # shape excludes the batch dimension
    if tuple(x.shape[1:]) != tuple(shape):
        raise RejectedInput(f"{where}: expected N x {shapeText(shape)}, got {tuple(x.shape)}")


def shapeText(shape: Shape) -> str:
    return " × ".join(str(d) for d in shape)


class Param:
    """
    One named parameter tensor with its gradient.

    Buffers (batch norm running statistics) are Params with trainable=False:
    they are checkpointed but the optimizer never touches them.
    """

    def __init__(
        self,
        name: str,
        data: Tensor,
        trainable: bool = True,
    ) -> None:
        self.name = name
        self.data = data
        self.trainable = trainable
        self.grad: Optional[Tensor] = None

    @property
    def shape(self) -> Shape:
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def zeroGrad(self) -> None:
        self.grad = None

    def accumulate(self, g: Tensor) -> None:
        if g.shape != self.data.shape:
            raise RejectedInput(f"gradient shape {g.shape} does not match {self.name} {self.data.shape}")
        self.grad = g if self.grad is None else self.grad + g

    def astype(self, dtype: str) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=dtype)
        if self.grad is not None:
            self.grad = self.grad.astype(dtype)

    def __repr__(self) -> str:
        return f"Param({self.name}, {self.shape}, trainable={self.trainable})"


def heUniform(
    rng: np.random.Generator,
    shape: Shape,
    fanIn: int,
    dtype: str = "float32",
) -> Tensor:
    limit = np.sqrt(6.0 / fanIn)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)

import os
import logging

from typing import (
    List,
    Dict,
    Any,
)

import numpy as np

from ..exceptions import RejectedInput
from .tensor import Param, Tensor

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


class OptimizerState:
    """Classical momentum: v = momentum * v - lr * g, then w = w + v."""

    def __init__(
        self,
        params: List[Param],
        lr: float = 0.01,
        momentum: float = 0.9,
    ) -> None:
        if lr < 0:
            raise RejectedInput(f"learning rate {lr} is negative")
        if not 0.0 <= momentum < 1.0:
            raise RejectedInput(f"momentum {momentum} must be in [0, 1)")

        self.params = [p for p in params if p.trainable]
        self.lr = lr
        self.momentum = momentum
        self.velocity: List[Tensor] = [np.zeros_like(p.data) for p in self.params]
        self.steps = 0

    def step(self) -> None:
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise RejectedInput(f"gradient of {p.name} has shape {g.shape}, parameter {p.data.shape}")

            v = self.velocity[i]
            v *= v.dtype.type(self.momentum)
            v -= v.dtype.type(self.lr) * g.astype(v.dtype)
            p.data = p.data + v
        self.steps += 1

    def zeroGrad(self) -> None:
        for p in self.params:
            p.zeroGrad()

    def astype(self, dtype: str) -> None:
        self.velocity = [np.ascontiguousarray(v, dtype=dtype) for v in self.velocity]

    def stateDict(self) -> Dict[str, Any]:
        return {"lr": self.lr, "momentum": self.momentum, "steps": self.steps}

    def loadVelocity(
        self,
        velocity: List[Tensor],
        steps: int,
    ) -> None:
        if len(velocity) != len(self.params) or any(v.shape != p.data.shape for v, p in zip(velocity, self.params)):
            raise RejectedInput("velocity tensors do not mirror the parameters")
        self.velocity = [np.array(v, dtype=p.data.dtype) for v, p in zip(velocity, self.params)]
        self.steps = steps


def sgdmStep(
    params: List[Param],
    state: OptimizerState,
) -> OptimizerState:
    # the state must own exactly these parameters
    if [id(p) for p in params if p.trainable] != [id(p) for p in state.params]:
        raise RejectedInput("optimizer state does not belong to these parameters")
    state.step()
    return state

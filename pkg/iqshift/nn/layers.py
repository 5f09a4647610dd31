import os
import logging

from typing import (
    Optional,
    List,
    Tuple,
    Sequence,
)

import numpy as np

from ..exceptions import RejectedInput
from . import functional as F
from .tensor import (
    Tensor,
    Shape,
    Param,
    TRAIN,
    heUniform,
    shapeText,
)

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

TraceRow = Tuple[str, Shape]


class Layer:
    """
    Base of every layer: a table label, parameters, static shape inference,
    forward that keeps its cache and backward that accumulates parameter gradients.
    """

    kind: str = "layer"

    def __init__(self, label: str) -> None:
        self.label = label
        self.cache: Optional[F.Cache] = None

    def params(self) -> List[Param]:
        return []

    def children(self) -> List["Layer"]:
        return []

    def outputShape(self, inShape: Shape) -> Shape:
        return inShape

    def initialize(self, rng: np.random.Generator, dtype: str) -> None:
        for p in self.params():
            p.astype(dtype)

    def forward(
        self,
        x: Tensor,
        mode: str,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        raise NotImplementedError

    def backward(self, dy: Tensor) -> Tensor:
        raise NotImplementedError

    def hyper(self) -> str:
        return ""

    def specLines(
        self,
        inShape: Shape,
        indent: int = 0,
    ) -> List[str]:
        out = self.outputShape(inShape)
        h = self.hyper()
        line = f"{'  ' * indent}{self.kind}{'(' + h + ')' if h else ''} -> {shapeText(out)}"
        return [line]

    def leaves(self) -> List["Layer"]:
        return [self]


class Conv1d(Layer):
    kind = "conv1d"

    def __init__(
        self,
        cIn: int,
        cOut: int,
        kernel: int = 23,
        label: Optional[str] = None,
    ) -> None:
        if kernel % 2 != 1:
            raise RejectedInput(f"conv1d kernel width {kernel} must be odd")
        super().__init__(label or ("1 × 1 Conv" if kernel == 1 else "Conv"))
        self.cIn, self.cOut, self.kernel = cIn, cOut, kernel
        self.w = Param("w", np.zeros((cOut, cIn, kernel), dtype=np.float32))
        self.b = Param("b", np.zeros(cOut, dtype=np.float32))

    def params(self) -> List[Param]:
        return [self.w, self.b]

    def hyper(self) -> str:
        return f"{self.cIn}->{self.cOut},K={self.kernel}"

    def outputShape(self, inShape: Shape) -> Shape:
        if len(inShape) != 2 or inShape[0] != self.cIn:
            raise RejectedInput(f"conv1d expects {self.cIn} × L input, got {shapeText(inShape)}")
        return (self.cOut, inShape[1])

    def initialize(self, rng: np.random.Generator, dtype: str) -> None:
        self.w.data = heUniform(rng, self.w.shape, self.cIn * self.kernel, dtype)
        self.b.data = np.zeros(self.cOut, dtype=dtype)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache = F.conv1dForward(x, self.w.data, self.b.data)
        return y

    def backward(self, dy: Tensor) -> Tensor:
        dx, dw, db = F.conv1dBackward(dy, self.cache)
        self.w.accumulate(dw)
        self.b.accumulate(db)
        return dx


class BatchNorm1d(Layer):
    kind = "batchnorm"

    def __init__(
        self,
        channels: int,
        eps: float = 1e-5,
        momentum: float = 0.1,
        label: str = "Batch Normalization",
    ) -> None:
        super().__init__(label)
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.gamma = Param("gamma", np.ones(channels, dtype=np.float32))
        self.beta = Param("beta", np.zeros(channels, dtype=np.float32))
        self.runningMean = Param("running_mean", np.zeros(channels, dtype=np.float32), trainable=False)
        self.runningVar = Param("running_var", np.ones(channels, dtype=np.float32), trainable=False)

    def params(self) -> List[Param]:
        return [self.gamma, self.beta, self.runningMean, self.runningVar]

    def hyper(self) -> str:
        return f"{self.channels}"

    def outputShape(self, inShape: Shape) -> Shape:
        if len(inShape) != 2 or inShape[0] != self.channels:
            raise RejectedInput(f"batchnorm expects {self.channels} × L input, got {shapeText(inShape)}")
        return inShape

    def initialize(self, rng: np.random.Generator, dtype: str) -> None:
        self.gamma.data = np.ones(self.channels, dtype=dtype)
        self.beta.data = np.zeros(self.channels, dtype=dtype)
        self.runningMean.data = np.zeros(self.channels, dtype=dtype)
        self.runningVar.data = np.ones(self.channels, dtype=dtype)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache, m, v = F.batchnormForward(
            x,
            self.gamma.data,
            self.beta.data,
            self.runningMean.data,
            self.runningVar.data,
            mode,
            eps=self.eps,
            momentum=self.momentum,
        )
        if mode == TRAIN:
            self.runningMean.data = m
            self.runningVar.data = v
        return y

    def backward(self, dy: Tensor) -> Tensor:
        dx, dgamma, dbeta = F.batchnormBackward(dy, self.cache)
        self.gamma.accumulate(dgamma)
        self.beta.accumulate(dbeta)
        return dx


class ReLU(Layer):
    kind = "relu"

    def __init__(self, label: str = "ReLU") -> None:
        super().__init__(label)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache = F.reluForward(x)
        return y

    def backward(self, dy: Tensor) -> Tensor:
        return F.reluBackward(dy, self.cache)


class SELU(Layer):
    kind = "selu"

    def __init__(self, label: str = "SELU") -> None:
        super().__init__(label)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache = F.seluForward(x)
        return y

    def backward(self, dy: Tensor) -> Tensor:
        return F.seluBackward(dy, self.cache)


class Dropout(Layer):
    kind = "dropout"

    def __init__(
        self,
        rate: float,
        label: Optional[str] = None,
    ) -> None:
        if not 0.0 <= rate < 1.0:
            raise RejectedInput(f"dropout rate {rate} must be in [0, 1)")
        super().__init__(label or f"Drop({rate * 100:g}%)")
        self.rate = rate

    def hyper(self) -> str:
        return f"{self.rate:g}"

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache = F.dropoutForward(x, self.rate, mode, rng)
        return y

    def backward(self, dy: Tensor) -> Tensor:
        return F.dropoutBackward(dy, self.cache)


class MaxPool1d(Layer):
    kind = "maxpool"

    def __init__(self, label: str = "Maximum Pooling") -> None:
        super().__init__(label)

    def outputShape(self, inShape: Shape) -> Shape:
        if len(inShape) != 2 or inShape[1] % 2 != 0:
            raise RejectedInput(f"maxpool expects C × L input with even L, got {shapeText(inShape)}")
        return (inShape[0], inShape[1] // 2)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache = F.maxpool1dForward(x)
        return y

    def backward(self, dy: Tensor) -> Tensor:
        return F.maxpool1dBackward(dy, self.cache)


class GlobalAvgPool1d(Layer):
    kind = "avgpool"

    def __init__(self, label: str = "Average Pooling") -> None:
        super().__init__(label)

    def outputShape(self, inShape: Shape) -> Shape:
        if len(inShape) != 2:
            raise RejectedInput(f"average pooling expects C × L input, got {shapeText(inShape)}")
        return (inShape[0],)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache = F.globalAvgPoolForward(x)
        return y

    def backward(self, dy: Tensor) -> Tensor:
        return F.globalAvgPoolBackward(dy, self.cache)


class Flatten(Layer):
    kind = "flatten"

    def __init__(self, label: str = "Flatten") -> None:
        super().__init__(label)

    def outputShape(self, inShape: Shape) -> Shape:
        return (int(np.prod(inShape)),)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache = F.flattenForward(x)
        return y

    def backward(self, dy: Tensor) -> Tensor:
        return F.flattenBackward(dy, self.cache)


class Dense(Layer):
    kind = "fc"

    def __init__(
        self,
        fIn: int,
        fOut: int,
        label: str = "FC",
    ) -> None:
        super().__init__(label)
        self.fIn, self.fOut = fIn, fOut
        self.w = Param("w", np.zeros((fOut, fIn), dtype=np.float32))
        self.b = Param("b", np.zeros(fOut, dtype=np.float32))

    def params(self) -> List[Param]:
        return [self.w, self.b]

    def hyper(self) -> str:
        return f"{self.fIn}->{self.fOut}"

    def outputShape(self, inShape: Shape) -> Shape:
        if tuple(inShape) != (self.fIn,):
            raise RejectedInput(f"fc expects a {self.fIn} vector, got {shapeText(inShape)}")
        return (self.fOut,)

    def initialize(self, rng: np.random.Generator, dtype: str) -> None:
        self.w.data = heUniform(rng, self.w.shape, self.fIn, dtype)
        self.b.data = np.zeros(self.fOut, dtype=dtype)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        y, self.cache = F.fcForward(x, self.w.data, self.b.data)
        return y

    def backward(self, dy: Tensor) -> Tensor:
        dx, dw, db = F.fcBackward(dy, self.cache)
        self.w.accumulate(dw)
        self.b.accumulate(db)
        return dx


class Sequential(Layer):
    kind = "sequential"

    def __init__(
        self,
        layers: Sequence[Layer],
        label: str = "Sequential",
    ) -> None:
        super().__init__(label)
        self.layers: List[Layer] = list(layers)

    def children(self) -> List[Layer]:
        return list(self.layers)

    def params(self) -> List[Param]:
        rr: List[Param] = []
        for layer in self.layers:
            rr.extend(layer.params())
        return rr

    def leaves(self) -> List[Layer]:
        rr: List[Layer] = []
        for layer in self.layers:
            rr.extend(layer.leaves())
        return rr

    def outputShape(self, inShape: Shape) -> Shape:
        shape = inShape
        for layer in self.layers:
            shape = layer.outputShape(shape)
        return shape

    def trace(self, inShape: Shape) -> List[TraceRow]:
        rr: List[TraceRow] = []
        shape = inShape
        for layer in self.layers:
            shape = layer.outputShape(shape)
            rr.append((layer.label, shape))
        return rr

    def initialize(self, rng: np.random.Generator, dtype: str) -> None:
        for layer in self.layers:
            layer.initialize(rng, dtype)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        for layer in self.layers:
            x = layer.forward(x, mode, rng)
        return x

    def backward(self, dy: Tensor) -> Tensor:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def specLines(self, inShape: Shape, indent: int = 0) -> List[str]:
        rr = [f"{'  ' * indent}{self.kind}[{self.label}] -> {shapeText(self.outputShape(inShape))}"]
        shape = inShape
        for layer in self.layers:
            rr.extend(layer.specLines(shape, indent + 1))
            shape = layer.outputShape(shape)
        return rr


class Block(Sequential):
    """A labelled group of layers that makes one row of a layout table."""

    kind = "block"


class ResidualUnit(Layer):
    """Two conv/BN/ReLU stages whose output is added to the unit input."""

    kind = "residual_unit"

    def __init__(
        self,
        channels: int = 32,
        kernel: int = 23,
        bnEps: float = 1e-5,
        bnMomentum: float = 0.1,
        label: str = "Residual Unit",
    ) -> None:
        super().__init__(label)
        self.channels = channels
        self.branch = Sequential(
            [
                Conv1d(channels, channels, kernel),
                BatchNorm1d(channels, bnEps, bnMomentum),
                ReLU("ReLU_1"),
                Conv1d(channels, channels, kernel),
                BatchNorm1d(channels, bnEps, bnMomentum),
                ReLU("ReLU_2"),
            ],
            label="branch",
        )

    def children(self) -> List[Layer]:
        return [self.branch]

    def params(self) -> List[Param]:
        return self.branch.params()

    def leaves(self) -> List[Layer]:
        return self.branch.leaves()

    def outputShape(self, inShape: Shape) -> Shape:
        out = self.branch.outputShape(inShape)
        if tuple(out) != tuple(inShape):
            raise RejectedInput(f"residual addition needs equal shapes, branch {shapeText(out)} vs input {shapeText(inShape)}")
        return out

    def trace(self, inShape: Shape) -> List[TraceRow]:
        rr = self.branch.trace(inShape)
        rr.append(("Addition(Input, ReLU_2)", self.outputShape(inShape)))
        return rr

    def initialize(self, rng: np.random.Generator, dtype: str) -> None:
        self.branch.initialize(rng, dtype)

    def forward(self, x: Tensor, mode: str, rng: Optional[np.random.Generator] = None) -> Tensor:
        return x + self.branch.forward(x, mode, rng)

    def backward(self, dy: Tensor) -> Tensor:
        return dy + self.branch.backward(dy)

    def specLines(self, inShape: Shape, indent: int = 0) -> List[str]:
        rr = [f"{'  ' * indent}{self.kind}[{self.label}] -> {shapeText(self.outputShape(inShape))}"]
        rr.extend(self.branch.specLines(inShape, indent + 1)[1:])
        return rr

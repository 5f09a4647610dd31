import os
import logging

from typing import (
    Optional,
    List,
    Dict,
    Tuple,
    Any,
    Sequence,
)

import numpy as np

from ..exceptions import RejectedInput, ModelSpecMismatch
from ..nn import functional as F
from ..nn.tensor import (
    Tensor,
    Shape,
    Param,
    INFER,
    checkDtype,
    expectShape,
    shapeText,
)
from ..nn.layers import Layer

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

INPUT_SHAPE: Shape = (2, 1024)


class ModelGraph:
    """
    An ordered list of labelled entries (single layers or blocks), each one a row
    of the layout table, plus the declared input shape and the class list.

    The graph owns its parameter store; the final softmax is applied by the loss
    and by predictProba, never inside forward.
    """

    def __init__(
        self,
        kind: str,
        entries: Sequence[Layer],
        numClasses: int,
        classNames: Optional[Sequence[str]] = None,
        inputShape: Shape = INPUT_SHAPE,
    ) -> None:
        if numClasses < 2:
            raise RejectedInput(f"a classifier needs at least 2 classes, got {numClasses}")
        if classNames is not None and len(classNames) != numClasses:
            raise RejectedInput(f"{len(classNames)} class names for {numClasses} outputs")

        self.kind = kind
        self.entries: List[Layer] = list(entries)
        self.numClasses = numClasses
        self.classNames: List[str] = list(classNames) if classNames is not None else [f"class{i}" for i in range(numClasses)]
        self.inputShape: Shape = tuple(inputShape)
        self.dtype = "float32"
        self.initialized = False
        # description of the training dataset, filled by the trainer
        self.trainData: Dict[str, Any] = {}

        out = self.outputShape()
        if out != (numClasses,):
            raise RejectedInput(f"graph ends in {shapeText(out)}, expected {numClasses} outputs")

    # static structure

    def outputShape(self) -> Shape:
        shape = self.inputShape
        for e in self.entries:
            shape = e.outputShape(shape)
        return tuple(shape)

    def shapeTrace(self) -> List[Tuple[str, str]]:
        rr = [("Input", shapeText(self.inputShape))]
        shape = self.inputShape
        for e in self.entries:
            shape = e.outputShape(shape)
            rr.append((e.label, shapeText(shape)))
        return rr

    def traceText(self) -> str:
        return "\n".join(f"{label}\t{shape}" for label, shape in self.shapeTrace())

    def leafTrace(self) -> List[Tuple[str, str]]:
        rr: List[Tuple[str, str]] = []
        shape = self.inputShape
        for e in self.entries:
            for leaf in e.leaves():
                # residual units keep their shape, so leaves chain without the additions
                shape = leaf.outputShape(shape)
                rr.append((leaf.kind, shapeText(shape)))
        return rr

    def specText(self) -> str:
        rr = [f"model {self.kind} classes={self.numClasses} input={shapeText(self.inputShape)}"]
        shape = self.inputShape
        for e in self.entries:
            rr.extend(e.specLines(shape, 1))
            shape = e.outputShape(shape)
        return "\n".join(rr)

    # parameters

    def params(self) -> List[Param]:
        rr: List[Param] = []
        for e in self.entries:
            rr.extend(e.params())
        return rr

    def namedParams(self) -> List[Tuple[str, Param]]:
        rr: List[Tuple[str, Param]] = []

        def walk(layer: Layer, prefix: str) -> None:
            kids = layer.children()
            if not kids:
                for p in layer.params():
                    rr.append((f"{prefix}.{p.name}", p))
                return
            for i, k in enumerate(kids):
                walk(k, f"{prefix}.{i}")

        for i, e in enumerate(self.entries):
            walk(e, str(i))
        return rr

    def trainableParams(self) -> List[Param]:
        return [p for p in self.params() if p.trainable]

    def parameterCount(self) -> int:
        return sum(p.size for p in self.trainableParams())

    def initialize(
        self,
        seed: int = 0,
        dtype: str = "float32",
    ) -> "ModelGraph":
        self.dtype = checkDtype(dtype)
        rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
        for e in self.entries:
            e.initialize(rng, self.dtype)
        self.initialized = True

        msg = f"initialized {self.kind}: {self.parameterCount()} trainable parameters, {self.dtype}, seed {seed}"
        log.debug(msg)
        return self

    def astype(self, dtype: str) -> None:
        self.dtype = checkDtype(dtype)
        for p in self.params():
            p.astype(self.dtype)

    def zeroGrad(self) -> None:
        for p in self.params():
            p.zeroGrad()

    def stateTensors(self) -> List[Tuple[str, Tensor]]:
        return [(n, p.data) for n, p in self.namedParams()]

    def loadState(self, tensors: Sequence[Tuple[str, Tensor]]) -> None:
        named = self.namedParams()
        if [n for n, _ in named] != [n for n, _ in tensors]:
            raise ModelSpecMismatch("checkpoint tensors do not match the model parameter listing")
        for (name, p), (_, t) in zip(named, tensors):
            if tuple(t.shape) != p.shape:
                raise ModelSpecMismatch(f"{name}: checkpoint shape {t.shape}, model {p.shape}")
            p.data = np.array(t, dtype=self.dtype)
        self.initialized = True

    # compute

    def forward(
        self,
        x: Tensor,
        mode: str,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        expectShape(x, self.inputShape, self.kind)
        x = x.astype(self.dtype, copy=False)
        for e in self.entries:
            x = e.forward(x, mode, rng)
        return x

    def backward(self, dLogits: Tensor) -> Tensor:
        d = dLogits
        for e in reversed(self.entries):
            d = e.backward(d)
        return d

    def predictProba(
        self,
        x: Tensor,
        batchSize: int = 512,
    ) -> Tensor:
        rr: List[Tensor] = []
        for start in range(0, x.shape[0], batchSize):
            logits = self.forward(x[start : start + batchSize], INFER)
            rr.append(F.softmax(logits.astype(np.float64)))
        if not rr:
            return np.zeros((0, self.numClasses))
        return np.concatenate(rr)

    def predict(
        self,
        x: Tensor,
        batchSize: int = 512,
    ) -> np.ndarray:
        return np.argmax(self.predictProba(x, batchSize), axis=1)

    def __repr__(self) -> str:
        return f"ModelGraph({self.kind}, classes={self.numClasses}, params={self.parameterCount()})"

import os
import logging

from typing import (
    Optional,
    Sequence,
    List,
)

from ..exceptions import RejectedInput
from ..nn.layers import (
    Layer,
    Block,
    Conv1d,
    BatchNorm1d,
    ReLU,
    Dropout,
    Dense,
    MaxPool1d,
    GlobalAvgPool1d,
)
from .modelGraph import ModelGraph, INPUT_SHAPE

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

CHANNELS = (16, 24, 32, 48, 64, 96)
KERNEL: int = 23


def buildCnn(
    numClasses: int,
    classNames: Optional[Sequence[str]] = None,
    bnEps: float = 1e-5,
    bnMomentum: float = 0.1,
) -> ModelGraph:
    """Six conv/BN/ReLU blocks, pooling after the first five, global average, one FC."""
    if numClasses < 2:
        raise RejectedInput(f"cnn needs at least 2 classes, got {numClasses}")

    entries: List[Layer] = []
    cIn = INPUT_SHAPE[0]
    for i, cOut in enumerate(CHANNELS):
        entries += [Conv1d(cIn, cOut, KERNEL), BatchNorm1d(cOut, bnEps, bnMomentum), ReLU()]
        if i < len(CHANNELS) - 1:
            entries.append(MaxPool1d())
        cIn = cOut

    entries.append(GlobalAvgPool1d())
    entries.append(Block([Dropout(0.0), Dense(CHANNELS[-1], numClasses)], label="Drop(0%)/FC/SoftMax"))

    return ModelGraph("cnn", entries, numClasses, classNames)

import os
import logging

from typing import (
    Optional,
    Sequence,
)

from ..exceptions import RejectedInput
from ..nn.layers import (
    Block,
    Conv1d,
    BatchNorm1d,
    ReLU,
    SELU,
    Dropout,
    Dense,
    Flatten,
    MaxPool1d,
    ResidualUnit,
)
from .modelGraph import ModelGraph, INPUT_SHAPE

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

STACKS: int = 6
CHANNELS: int = 32
KERNEL: int = 23
HIDDEN: int = 128
DROPOUT: float = 0.5


def buildResidualUnit(
    channels: int = CHANNELS,
    kernel: int = KERNEL,
    bnEps: float = 1e-5,
    bnMomentum: float = 0.1,
) -> ResidualUnit:
    return ResidualUnit(channels, kernel, bnEps, bnMomentum)


def buildResidualStack(
    cIn: int,
    channels: int = CHANNELS,
    kernel: int = KERNEL,
    bnEps: float = 1e-5,
    bnMomentum: float = 0.1,
) -> Block:
    # 1x1 conv maps the input channels onto the stack width
    return Block(
        [
            Conv1d(cIn, channels, 1),
            BatchNorm1d(channels, bnEps, bnMomentum),
            ReLU(),
            buildResidualUnit(channels, kernel, bnEps, bnMomentum),
            buildResidualUnit(channels, kernel, bnEps, bnMomentum),
            MaxPool1d(),
        ],
        label="Residual Stack",
    )


def buildResnet(
    numClasses: int,
    classNames: Optional[Sequence[str]] = None,
    bnEps: float = 1e-5,
    bnMomentum: float = 0.1,
) -> ModelGraph:
    if numClasses < 2:
        raise RejectedInput(f"resnet needs at least 2 classes, got {numClasses}")

    entries = []
    cIn = INPUT_SHAPE[0]
    for _ in range(STACKS):
        entries.append(buildResidualStack(cIn, bnEps=bnEps, bnMomentum=bnMomentum))
        cIn = CHANNELS

    flat = CHANNELS * (INPUT_SHAPE[1] >> STACKS)
    entries.append(Block([Flatten(), Dropout(DROPOUT), Dense(flat, HIDDEN), SELU()], label="Drop(50%)/FC/SELU"))
    entries.append(Block([Dropout(DROPOUT), Dense(HIDDEN, HIDDEN), SELU()], label="Drop(50%)/FC/SELU"))
    entries.append(Block([Dropout(DROPOUT), Dense(HIDDEN, numClasses)], label="Drop(50%)/FC/SoftMax"))

    return ModelGraph("resnet", entries, numClasses, classNames)

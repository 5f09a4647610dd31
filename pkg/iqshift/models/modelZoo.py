import os
import logging

from typing import (
    Callable,
    Dict,
    Optional,
    Sequence,
    List,
)

from ..exceptions import RejectedInput
from .modelGraph import ModelGraph
from .resnet import buildResnet
from .cnn import buildCnn

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

BUILDERS: Dict[str, Callable[..., ModelGraph]] = {
    "resnet": buildResnet,
    "cnn": buildCnn,
}


def modelKinds() -> List[str]:
    return sorted(BUILDERS.keys())


def buildModel(
    kind: str,
    numClasses: int,
    classNames: Optional[Sequence[str]] = None,
    bnEps: float = 1e-5,
    bnMomentum: float = 0.1,
) -> ModelGraph:
    builder = BUILDERS.get(kind)
    if builder is None:
        raise RejectedInput(f"unknown model kind '{kind}', choose one of {modelKinds()}")

    model = builder(numClasses, classNames, bnEps=bnEps, bnMomentum=bnMomentum)
    msg = f"built {kind} for {numClasses} classes: {model.parameterCount()} trainable parameters"
    log.debug(msg)
    return model

import os
import logging
import dataclasses

from typing import (
    List,
    Union,
)

import numpy as np

from ..exceptions import RejectedInput
from ..siggen.frameMeta import FrameMeta

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


@dataclasses.dataclass
class LabeledFrame:
    iq: np.ndarray  # 2 x frame_len, row 0 = I, row 1 = Q
    meta: FrameMeta

    def complexSamples(self) -> np.ndarray:
        return self.iq[0].astype(np.float64) + 1j * self.iq[1].astype(np.float64)


def framePower(iq: np.ndarray) -> float:
    iq = np.asarray(iq, dtype=np.float64)
    return float(np.sum(iq * iq) / iq.shape[-1])


def _normalizeArray(iq: np.ndarray) -> np.ndarray:
    iq = np.asarray(iq, dtype=np.float64)
    if not np.all(np.isfinite(iq)):
        raise RejectedInput("frame holds NaN or Inf")
    p = framePower(iq)
    if p <= 0.0:
        raise RejectedInput("cannot normalize an all-zero frame")
    return iq * (1.0 / np.sqrt(p))


def normalizeUnitPower(frame: Union[LabeledFrame, np.ndarray]) -> Union[LabeledFrame, np.ndarray]:
    """Scale both rows by one positive scalar so that (1/L) sum(I^2 + Q^2) = 1, in 64-bit."""
    if isinstance(frame, LabeledFrame):
        return LabeledFrame(iq=_normalizeArray(frame.iq), meta=frame.meta)
    return _normalizeArray(frame)


def normalizeBatch(iq: np.ndarray) -> np.ndarray:
    # N x 2 x L, one scale per frame, float64 result
    iq = np.asarray(iq, dtype=np.float64)
    p = np.sum(iq * iq, axis=(1, 2)) / iq.shape[-1]
    if np.any(p <= 0.0) or not np.all(np.isfinite(p)):
        raise RejectedInput("batch holds an all-zero or non-finite frame")
    return iq / np.sqrt(p)[:, None, None]


def sliceToArray(
    x: np.ndarray,
    frameLen: int = 1024,
) -> np.ndarray:
    # complex long signal -> k x 2 x frameLen, frame k sample j = x[k * frameLen + j]
    x = np.asarray(x)
    if frameLen < 1 or x.size == 0 or x.size % frameLen != 0:
        raise RejectedInput(f"signal length {x.size} is not a multiple of frame length {frameLen}")
    k = x.size // frameLen
    frames = x.reshape(k, frameLen)
    return np.stack([frames.real, frames.imag], axis=1).astype(np.float64)


def sliceLongSignal(
    x: np.ndarray,
    meta: FrameMeta,
    frameLen: int = 1024,
) -> List[LabeledFrame]:
    return [LabeledFrame(iq=iq, meta=meta) for iq in sliceToArray(x, frameLen)]

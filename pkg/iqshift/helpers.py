import os
import logging

from typing import (
    Optional,
    List,
)

import numpy as np

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


def dbToLinear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def meanPower(x: np.ndarray) -> float:
    # mean |x|^2 per complex sample
    return float(np.mean(np.abs(x) ** 2))


def featureWords() -> List[str]:
    # IQSHIFT=DETERMINISTIC[:WORD...]
    return str(os.getenv("IQSHIFT", "")).upper().split(":")


def isDeterministicEnv() -> bool:
    return "DETERMINISTIC" in featureWords()


def defaultOutDir(
    fallback: str = ".",
) -> str:
    return str(os.getenv("IQSHIFT_OUT") or fallback)


def resolveOutPath(
    path: Optional[str],
    defaultName: str,
) -> str:
    # relative or missing paths land in $IQSHIFT_OUT when it is set
    if path is None:
        return os.path.join(defaultOutDir(), defaultName)
    if os.path.isabs(path):
        return path
    return os.path.join(defaultOutDir(), path)


def setVerbose(verbose: bool) -> None:
    if verbose is True:
        os.putenv("LOGLEVEL", "DEBUG")
        os.environ["LOGLEVEL"] = "DEBUG"
        logging.basicConfig(level="DEBUG")
        logging.getLogger().setLevel("DEBUG")

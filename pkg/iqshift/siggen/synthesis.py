import os
import logging

import numpy as np
import scipy.signal

from ..exceptions import RejectedInput
from ..helpers import dbToLinear, meanPower
from .frameMeta import FrameMeta
from .modulationClass import mapSymbols
from .srrc import srrcTaps, DEFAULT_SPAN_SYMBOLS
from .generatorProfile import TOTAL, INBAND

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))


def symbolsNeeded(
    length: int,
    sps: int,
    spanSymbols: int = DEFAULT_SPAN_SYMBOLS,
) -> int:
    # the steady state of the filtered stream holds (n - 1 - span) * sps + 1 samples
    return spanSymbols + 1 + -(-(length - 1) // sps)


def applyCfo(
    x: np.ndarray,
    cfo: float,
) -> np.ndarray:
    n = np.arange(x.size)
    return np.asarray(x, dtype=np.complex128) * np.exp(2j * np.pi * cfo * n)


def synthesizeClean(
    meta: FrameMeta,
    nSymbols: int,
    rng: np.random.Generator,
    length: int = 1024,
    spanSymbols: int = DEFAULT_SPAN_SYMBOLS,
) -> np.ndarray:
    """
    bits -> symbols -> upsample by sps -> SRRC -> CFO rotation -> power scaling.

    Only the steady-state part of the filter output is returned; its power is set to
    10^(powerScaleDb/10) measured over the returned samples.
    """
    sps = int(meta.sps)
    need = symbolsNeeded(length, sps, spanSymbols)
    if nSymbols < need:
        raise RejectedInput(f"{nSymbols} symbols cannot fill {length} steady-state samples at sps={sps}, need {need}")

    bits = rng.integers(0, 2, size=nSymbols * meta.cls.bitsPerSymbol)
    symbols = mapSymbols(bits, meta.cls)

    taps = srrcTaps(meta.rolloff, sps, spanSymbols)
    shaped = scipy.signal.upfirdn(taps, symbols, up=sps)

    start = taps.size - 1  # first sample where the whole filter overlaps symbols
    x = np.asarray(shaped[start : start + length], dtype=np.complex128)

    if meta.cfo != 0.0:
        x = applyCfo(x, meta.cfo)

    p = meanPower(x)
    if p <= 0.0:
        raise RejectedInput("synthesized segment has no energy")
    return x * np.sqrt(dbToLinear(meta.powerScaleDb) / p)


def noiseVariance(
    signalPower: float,
    snrDb: float,
    convention: str,
    rolloff: float,
    sps: int,
) -> float:
    sigma2 = signalPower / dbToLinear(snrDb)
    if convention == TOTAL:
        return sigma2
    if convention == INBAND:
        # only the fraction (1 + rolloff) / sps of the noise falls in the occupied band
        return sigma2 * (sps / (1.0 + rolloff))
    raise RejectedInput(f"unknown SNR convention '{convention}'")


def addNoise(
    x: np.ndarray,
    snrDb: float,
    convention: str,
    rolloff: float,
    sps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.size == 0:
        raise RejectedInput("cannot add noise to an empty signal")
    if not np.isfinite(snrDb):
        raise RejectedInput(f"snr {snrDb} is not finite")

    sigma2 = noiseVariance(meanPower(x), snrDb, convention, rolloff, sps)
    noise = rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
    return x + np.sqrt(sigma2 / 2.0) * noise


def measuredSnrDb(
    clean: np.ndarray,
    noisy: np.ndarray,
) -> float:
    return float(10.0 * np.log10(meanPower(clean) / meanPower(noisy - clean)))

"""Square-root raised-cosine pulse shaping: the pulse, its FIR taps and the symbol-spaced ISI of the matched pair."""

import os
import logging
import functools

import numpy as np

from ..exceptions import RejectedInput

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

DEFAULT_SPAN_SYMBOLS: int = 64


def srrcPulse(
    t: np.ndarray,
    rolloff: float,
) -> np.ndarray:
    """
    Unit-energy square-root raised-cosine pulse, t in symbol periods.

    The removable singularities at t = 0 and |t| = 1/(4 rolloff) take their closed-form limits.
    """
    t = np.asarray(t, dtype=np.float64)
    b = float(rolloff)
    h = np.zeros_like(t)

    atZero = np.isclose(t, 0.0, rtol=0.0, atol=1e-12)
    atEdge = np.isclose(np.abs(4.0 * b * t), 1.0, rtol=0.0, atol=1e-9)
    rest = ~(atZero | atEdge)

    h[atZero] = 1.0 - b + 4.0 * b / np.pi
    h[atEdge] = (b / np.sqrt(2.0)) * ((1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * b)) + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * b)))

    tr = t[rest]
    num = np.sin(np.pi * tr * (1.0 - b)) + 4.0 * b * tr * np.cos(np.pi * tr * (1.0 + b))
    den = np.pi * tr * (1.0 - (4.0 * b * tr) ** 2)
    h[rest] = num / den
    return h


@functools.lru_cache(maxsize=64)
def _srrcTaps(
    rolloff: float,
    sps: int,
    spanSymbols: int,
) -> np.ndarray:
    n = np.arange(spanSymbols * sps + 1) - (spanSymbols * sps) // 2
    h = srrcPulse(n / float(sps), rolloff)

    # the self-convolution sampled at the center equals sum(h^2); make it one
    h = h / np.sqrt(np.sum(h * h))
    h.setflags(write=False)

    msg = f"srrc taps: rolloff={rolloff} sps={sps} span={spanSymbols} len={h.size}"
    log.debug(msg)
    return h


def srrcTaps(
    rolloff: float,
    sps: int,
    spanSymbols: int = DEFAULT_SPAN_SYMBOLS,
) -> np.ndarray:
    if not 0.0 < rolloff <= 1.0:
        raise RejectedInput(f"rolloff {rolloff} outside (0, 1]")
    if sps < 2:
        raise RejectedInput(f"sps {sps} must be at least 2")
    if spanSymbols < 2 or spanSymbols % 2 != 0:
        raise RejectedInput(f"span {spanSymbols} must be a positive even number of symbols")

    return _srrcTaps(float(rolloff), int(sps), int(spanSymbols))


def nyquistIsi(
    taps: np.ndarray,
    sps: int,
) -> np.ndarray:
    # |r[center + m*sps]| for m = 1 .. span-1 where r = taps (*) taps
    r = np.convolve(taps, taps)
    center = (r.size - 1) // 2
    spanSymbols = (taps.size - 1) // sps
    lags = center + sps * np.arange(1, spanSymbols)
    return np.abs(r[lags])

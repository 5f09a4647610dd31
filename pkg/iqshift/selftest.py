#! /usr/bin/env python3
"""
Property suites that run without pytest: `iqshift selftest`.

gradients   finite-difference checks of every layer kind on random small instances (64-bit)
losses      softmax cross-entropy identities and gradient
dsp         SRRC Nyquist ISI, SNR calibration in both conventions, CFO inverse, profile B offset
arithmetic  slicing, dataset sizes and partition counts
"""

import os
import time
import logging

from typing import (
    Callable,
    Dict,
    List,
    Optional,
    Tuple,
)

import numpy as np

from .exceptions import SelftestFailed, RejectedInput
from .nn import functional as F
from .nn.gradcheck import checkLayer, gradientCheck, TOLERANCE
from .nn.layers import (
    Layer,
    Conv1d,
    BatchNorm1d,
    ReLU,
    SELU,
    Dropout,
    MaxPool1d,
    GlobalAvgPool1d,
    Flatten,
    Dense,
    ResidualUnit,
)
from .nn.tensor import Shape, TRAIN, INFER
from .siggen.srrc import srrcTaps, nyquistIsi
from .siggen.frameMeta import FrameMeta
from .siggen.modulationClass import ModulationClass
from .siggen.generatorProfile import PROFILE_B, TOTAL, INBAND, snrOffsetEstimate
from .siggen.synthesis import synthesizeClean, addNoise, measuredSnrDb, symbolsNeeded, applyCfo
from .siggen.generator import fullScaleCounts
from .datastore.labeledFrame import sliceToArray, normalizeUnitPower, framePower
from .datastore.dataset import cellSplitCounts, DEFAULT_FRACTIONS

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

INSTANCES: int = 20

Check = Tuple[str, Callable[[], bool]]


def _layerCases() -> List[Tuple[str, Callable[[], Layer], Shape, str]]:
    return [
        ("conv1d", lambda: Conv1d(3, 2, 5), (3, 8), TRAIN),
        ("conv1d_1x1", lambda: Conv1d(2, 3, 1), (2, 6), TRAIN),
        ("batchnorm_train", lambda: BatchNorm1d(3), (3, 8), TRAIN),
        ("batchnorm_infer", lambda: BatchNorm1d(3), (3, 8), INFER),
        ("relu", lambda: ReLU(), (3, 8), TRAIN),
        ("selu", lambda: SELU(), (3, 8), TRAIN),
        ("dropout", lambda: Dropout(0.5), (3, 8), TRAIN),
        ("maxpool", lambda: MaxPool1d(), (3, 8), TRAIN),
        ("global_avgpool", lambda: GlobalAvgPool1d(), (3, 8), TRAIN),
        ("flatten", lambda: Flatten(), (3, 4), TRAIN),
        ("fc", lambda: Dense(5, 3), (5,), TRAIN),
        ("residual_unit", lambda: ResidualUnit(2, 3), (2, 8), TRAIN),
    ]


def gradientChecks(instances: int = INSTANCES) -> List[Check]:
    rr: List[Check] = []
    for name, make, shape, mode in _layerCases():

        def run(make: Callable[[], Layer] = make, shape: Shape = shape, mode: str = mode) -> bool:
            worst = 0.0
            for seed in range(instances):
                errors = checkLayer(make(), shape, seed=seed, mode=mode)
                worst = max(worst, max(errors.values()))
            return worst < TOLERANCE

        rr.append((f"gradient:{name}", run))
    return rr


def _softmaxGradient() -> bool:
    for seed in range(INSTANCES):
        rng = np.random.default_rng(seed)
        logits = rng.normal(size=(4, 6))
        labels = rng.integers(0, 6, size=4)
        _, g = F.softmaxXent(logits, labels)
        if gradientCheck(lambda z: F.softmaxXent(z, labels)[0], logits, g) >= TOLERANCE:
            return False
    return True


def lossChecks() -> List[Check]:
    return [
        ("loss:uniform_ln6", lambda: abs(F.softmaxXent(np.zeros((3, 6)), np.array([0, 2, 5]))[0] - np.log(6.0)) < 1e-12),
        ("loss:saturated", lambda: F.softmaxXent(np.array([[1000.0, 0, 0, 0, 0, 0]]), np.array([0]))[0] < 1e-6),
        ("loss:rows_sum_to_one", lambda: bool(np.allclose(F.softmax(np.random.default_rng(1).normal(size=(5, 6))).sum(axis=1), 1.0, atol=1e-6))),
        ("loss:gradient", _softmaxGradient),
    ]


def _isiAll() -> bool:
    for rolloff in (0.2, 0.35, 0.5):
        for sps in (8, 10, 12):
            if float(np.max(nyquistIsi(srrcTaps(rolloff, sps), sps))) >= 1e-3:
                return False
    return True


def _snrCalibration(convention: str) -> bool:
    length = 32768
    for k, snr in enumerate((0.0, 10.0)):
        rng = np.random.default_rng(100 + k)
        meta = FrameMeta(ModulationClass.QPSK, snr, 0.35, 0.0, 8, 0.0, 0, "A" if convention == TOTAL else "B")
        clean = synthesizeClean(meta, symbolsNeeded(length, 8), rng, length=length)
        noisy = addNoise(clean, snr, convention, meta.rolloff, meta.sps, rng)
        measured = measuredSnrDb(clean, noisy)
        if convention == INBAND:
            measured += 10.0 * np.log10(meta.sps / (1.0 + meta.rolloff))
        if abs(measured - snr) > 0.3:
            return False
    return True


def _cfoInverse() -> bool:
    rng = np.random.default_rng(7)
    for cfo in (-0.05, 0.0013, 0.25):
        x = rng.normal(size=1024) + 1j * rng.normal(size=1024)
        if float(np.max(np.abs(applyCfo(applyCfo(x, cfo), -cfo) - x))) > 1e-9:
            return False
    return True


def dspChecks() -> List[Check]:
    return [
        ("dsp:srrc_nyquist_isi", _isiAll),
        ("dsp:snr_total", lambda: _snrCalibration(TOTAL)),
        ("dsp:snr_inband", lambda: _snrCalibration(INBAND)),
        ("dsp:cfo_inverse", _cfoInverse),
        ("dsp:profile_b_offset", lambda: abs(snrOffsetEstimate(PROFILE_B) - 8.0) <= 1.5),
        ("dsp:unit_power", lambda: abs(framePower(normalizeUnitPower(np.random.default_rng(3).normal(size=(2, 1024)))) - 1.0) < 1e-9),  # type: ignore
    ]


def arithmeticChecks() -> List[Check]:
    counts = fullScaleCounts()
    return [
        ("arith:slice_32768", lambda: sliceToArray(np.zeros(32768, dtype=complex) + 1.0).shape == (32, 2, 1024)),
        ("arith:dataset_a", lambda: counts["A_frames"] == 2555904),
        ("arith:dataset_b", lambda: counts["B_frames"] == 3584000),
        ("arith:partition_4096", lambda: cellSplitCounts(4096, DEFAULT_FRACTIONS) == (3072, 512, 512)),
    ]


CHECK_GROUPS: Dict[str, Callable[[], List[Check]]] = {
    "gradient": gradientChecks,
    "loss": lossChecks,
    "dsp": dspChecks,
    "arith": arithmeticChecks,
}


def allChecks() -> List[Check]:
    return gradientChecks() + lossChecks() + dspChecks() + arithmeticChecks()


def selectChecks(groups: List[str]) -> List[Check]:
    unknown = [g for g in groups if g not in CHECK_GROUPS]
    if unknown or not groups:
        raise RejectedInput(f"selftest groups {unknown or groups} are not in {sorted(CHECK_GROUPS)}")
    rr: List[Check] = []
    for g in groups:
        rr += CHECK_GROUPS[g]()
    return rr


def runSelftest(checks: Optional[List[Check]] = None) -> Dict[str, bool]:
    """Run every check; raise SelftestFailed naming the failures."""
    checks = checks or allChecks()
    rr: Dict[str, bool] = {}
    t0 = time.time()
    for name, check in checks:
        try:
            ok = bool(check())
        except Exception as e:
            msg = f"{name} raised {type(e).__name__}: {e}"
            log.warning(msg)
            ok = False
        rr[name] = ok
        msg = f"{'ok  ' if ok else 'FAIL'} {name}"
        log.info(msg)

    failed = [k for k, v in rr.items() if not v]
    msg = f"selftest: {len(rr) - len(failed)}/{len(rr)} passed in {time.time() - t0:.1f}s"
    log.info(msg)
    if failed:
        raise SelftestFailed(failed)
    return rr

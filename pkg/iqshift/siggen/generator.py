import os
import time
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

from ..exceptions import RejectedInput
from ..procFunc import ProcFunc
from ..datastore.dataset import Dataset, META_DTYPE
from ..datastore.manifest import DatasetManifest, CLASS_LIST_NOTE
from ..datastore.labeledFrame import normalizeBatch, sliceToArray
from .frameMeta import FrameMeta
from .modulationClass import ModulationClass, ALL_CLASSES
from .generatorProfile import GeneratorProfile, PROFILE_A, PROFILE_B, INBAND, snrOffsetEstimate
from .synthesis import synthesizeClean, addNoise, symbolsNeeded

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

SIGNALS_PER_CHUNK: int = 64

# (position in the class list, snr index, snr in dB, index inside the cell)
WorkItem = Tuple[int, int, float, int]


def frameSeed(
    masterSeed: int,
    classIndex: int,
    snrIndex: int,
    frameIndex: int,
) -> int:
    # counter-style key: the seed depends on the coordinates only, not on generation order
    ss = np.random.SeedSequence(entropy=int(masterSeed), spawn_key=(int(classIndex), int(snrIndex), int(frameIndex)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def frameRng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def synthesizeSignal(
    profile: GeneratorProfile,
    cls: ModulationClass,
    snrDb: float,
    seed: int,
) -> Tuple[np.ndarray, np.ndarray, FrameMeta]:
    """One noisy signal of profile.signalLen samples; returns (noisy, clean, meta)."""
    rng = frameRng(seed)
    params = profile.drawFrameParams(rng)
    meta = FrameMeta(
        cls=cls,
        snrDb=float(snrDb),
        seed=int(seed),
        profileId=profile.profileId,
        **params,
    )

    nSymbols = symbolsNeeded(profile.signalLen, meta.sps, profile.spanSymbols)
    clean = synthesizeClean(meta, nSymbols, rng, length=profile.signalLen, spanSymbols=profile.spanSymbols)
    noisy = addNoise(clean, meta.snrDb, profile.snrConvention, meta.rolloff, meta.sps, rng)
    return noisy, clean, meta


def _generateChunk(job: Tuple[Dict[str, Any], List[str], int, List[WorkItem]]) -> Tuple[np.ndarray, np.ndarray]:
    profileDict, names, masterSeed, items = job
    profile = GeneratorProfile.fromDict(profileDict)
    classes = [ModulationClass.fromName(n) for n in names]
    fps = profile.framesPerSignal

    iq = np.zeros((len(items) * fps, 2, profile.frameLen), dtype=np.float32)
    meta = np.zeros(len(items) * fps, dtype=META_DTYPE)

    for k, (classPos, snrIndex, snrDb, frameIndex) in enumerate(items):
        cls = classes[classPos]
        seed = frameSeed(masterSeed, cls.index, snrIndex, frameIndex)
        noisy, _, fm = synthesizeSignal(profile, cls, snrDb, seed)

        rows = slice(k * fps, (k + 1) * fps)
        iq[rows] = normalizeBatch(sliceToArray(noisy, profile.frameLen)).astype(np.float32)
        meta["cls"][rows] = classPos
        meta["snr"][rows] = fm.snrDb
        meta["rolloff"][rows] = fm.rolloff
        meta["cfo"][rows] = fm.cfo
        meta["sps"][rows] = fm.sps
        meta["power"][rows] = fm.powerScaleDb
        meta["seed"][rows] = fm.seed

    return iq, meta


def _workItems(
    nClasses: int,
    snrGridDb: Sequence[float],
    framesPerCell: int,
) -> List[WorkItem]:
    rr: List[WorkItem] = []
    for c in range(nClasses):
        for s, snr in enumerate(snrGridDb):
            for i in range(framesPerCell):
                rr.append((c, s, float(snr), i))
    return rr


def generateDataset(
    profile: GeneratorProfile,
    classes: Optional[Sequence[ModulationClass]] = None,
    snrGridDb: Optional[Sequence[float]] = None,
    framesPerCell: int = 250,
    masterSeed: int = 0,
    workers: int = 1,
) -> Dataset:
    """
    Synthesize |classes| x |grid| x framesPerCell signals.

    Profile A signals are frames; profile B signals are long signals that are sliced
    into framesPerSignal frames each, every slice keeping its parent's metadata.
    Identical arguments give byte-identical datasets for any worker count.
    """
    profile = profile.validate()
    classList = list(classes) if classes is not None else list(ALL_CLASSES)
    grid = [float(s) for s in (snrGridDb if snrGridDb is not None else profile.snrGridDb)]

    if framesPerCell < 1:
        raise RejectedInput(f"frames per cell {framesPerCell} must be at least 1")
    if len(grid) == 0:
        raise RejectedInput("the SNR grid is empty")
    if len(classList) == 0 or len(set(classList)) != len(classList):
        raise RejectedInput("the class list must be non-empty and without duplicates")

    items = _workItems(len(classList), grid, framesPerCell)
    names = [c.name for c in classList]
    pDict = profile.toDict()
    jobs = [(pDict, names, int(masterSeed), items[i : i + SIGNALS_PER_CHUNK]) for i in range(0, len(items), SIGNALS_PER_CHUNK)]

    msg = f"generate profile {profile.profileId}: {len(classList)} classes x {len(grid)} snrs x {framesPerCell} signals, {len(jobs)} chunks, {workers} workers"
    log.info(msg)

    t0 = time.time()
    results = ProcFunc(workers=workers).orderedMap(_generateChunk, jobs)
    iq = np.concatenate([r[0] for r in results])
    meta = np.concatenate([r[1] for r in results])

    msg = f"generated {iq.shape[0]} frames in {time.time() - t0:.1f}s"
    log.info(msg)

    offset = snrOffsetEstimate(profile) if profile.snrConvention == INBAND else None
    manifest = DatasetManifest(
        profileId=profile.profileId,
        classes=names,
        snrGridDb=grid,
        frameCount=int(iq.shape[0]),
        masterSeed=int(masterSeed),
        frameLen=profile.frameLen,
        snrConvention=profile.snrConvention,
        framesPerCell=int(framesPerCell) * profile.framesPerSignal,
        framesPerSignal=profile.framesPerSignal,
        profile=pDict,
        snrOffsetDb=offset,
        notes=[CLASS_LIST_NOTE],
    )
    return Dataset(iq, meta, manifest)


def expectedFrameCount(
    profile: GeneratorProfile,
    nClasses: int,
    nSnrs: int,
    framesPerCell: int,
) -> int:
    return nClasses * nSnrs * framesPerCell * profile.framesPerSignal


# full-size source datasets: A has 24 classes and 4096 frames per (class, SNR) cell over its grid,
# B is a pool of 112,000 long signals with no per-cell layout
FULL_SCALE_A_CLASSES: int = 24
FULL_SCALE_A_FRAMES_PER_CELL: int = 4096
FULL_SCALE_B_LONG_SIGNALS: int = 112000


def fullScaleCounts(
    profileA: GeneratorProfile = PROFILE_A,
    profileB: GeneratorProfile = PROFILE_B,
) -> Dict[str, int]:
    # by formula from the profiles, nothing is generated
    return {
        "A_frames": expectedFrameCount(profileA, FULL_SCALE_A_CLASSES, len(profileA.snrGridDb), FULL_SCALE_A_FRAMES_PER_CELL),
        "B_long_signals": FULL_SCALE_B_LONG_SIGNALS,
        "B_frames_per_signal": profileB.framesPerSignal,
        "B_frames": expectedFrameCount(profileB, 1, 1, FULL_SCALE_B_LONG_SIGNALS),
    }
